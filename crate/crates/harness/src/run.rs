//! Stream replay against the estimator with exact-oracle checkpoints.

use dynmatch::estimator::{DynamicEstimator, EstimatorConfig, Mode, TradeoffParams};
use dynmatch::graph::{DynamicGraph, SimpleGraph, StreamItem, UpdateStream};
use dynmatch::oracles;
use thiserror::Error;

use crate::report::{ratio_bound, standard_deviations, Report, ReportMeta, Row};

/// Largest n for which general-mode checkpoints run the blossom oracle.
pub const GENERAL_ORACLE_CAP: usize = 1024;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("exact oracle cadence requested for n = {n} above the cap {cap}")]
    OracleCap { n: usize, cap: usize },
    #[error(transparent)]
    Estimator(#[from] dynmatch::estimator::EstimatorError),
}

/// Exact μ of the live graph: Hopcroft–Karp when a side split is known,
/// blossom otherwise.
pub fn exact_mu(g: &DynamicGraph, left: Option<usize>) -> usize {
    let s = SimpleGraph::from(g);
    match left {
        Some(l) => {
            let side: Vec<bool> = (0..s.n()).map(|v| v < l).collect();
            oracles::hopcroft_karp(&s, &side).len()
        }
        None => oracles::blossom(&s).len(),
    }
}

pub fn ratio(mu: usize, nu: f64) -> Option<f64> {
    if mu == 0 {
        Some(1.0)
    } else if nu > 0.0 {
        Some(mu as f64 / nu)
    } else {
        None
    }
}

/// Replays `stream`, emitting a row at every `q` marker and every
/// `oracle_every` updates; rows on the oracle cadence carry exact μ.
pub fn run(
    stream: &UpdateStream,
    mut cfg: EstimatorConfig,
    oracle_every: u64,
) -> Result<Report, RunError> {
    let n = stream.vertex_count();
    if cfg.left.is_none() {
        cfg.left = stream.left;
    }
    let left = stream.left.or(cfg.left);
    if oracle_every > 0 && left.is_none() && n > GENERAL_ORACLE_CAP {
        return Err(RunError::OracleCap {
            n,
            cap: GENERAL_ORACLE_CAP,
        });
    }
    let mut est = DynamicEstimator::new(n, cfg.clone())?;
    let mut rows = Vec::new();
    let mut updates = 0u64;
    let row = |est: &DynamicEstimator, updates: u64, with_mu: bool, error: Option<String>| {
        let nu = est.estimate();
        let mu_exact = with_mu.then(|| exact_mu(est.graph(), left));
        Row {
            update: updates,
            nu,
            mu_exact,
            ratio: mu_exact.and_then(|m| ratio(m, nu)),
            probes: est.ops(),
            backlog: est.backlog(),
            error,
        }
    };
    for item in &stream.items {
        match item {
            StreamItem::Query => {
                let on_cadence = oracle_every > 0 && updates > 0 && updates % oracle_every == 0;
                if !on_cadence {
                    rows.push(row(&est, updates, false, None));
                }
            }
            StreamItem::Update(ev) => {
                let err = est.apply(ev).err().map(|e| e.to_string());
                updates += 1;
                let on_cadence = oracle_every > 0 && updates % oracle_every == 0;
                if err.is_some() || on_cadence {
                    rows.push(row(&est, updates, on_cadence, err));
                }
            }
        }
    }
    let tradeoff = (cfg.mode == Mode::Tradeoff)
        .then(|| TradeoffParams::new(cfg.alpha).ok())
        .flatten();
    let meta = ReportMeta {
        format: crate::report::FORMAT.into(),
        n,
        left,
        updates,
        oracle_every,
        ratio_bound: ratio_bound(&cfg),
        tradeoff,
        config: cfg,
        deviations: standard_deviations(),
    };
    Ok(Report { meta, rows })
}
