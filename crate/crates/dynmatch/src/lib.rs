pub mod amm;
pub mod estimator;
pub mod graph;
pub mod oracles;
pub mod prf;
pub mod streaming;
pub mod sublinear;
