//! Random search for directions with more than one local maximizer of
//! `B(·, F_u)` on the positive side.

use super::{bbar_eval, normalize_direction, trial_seed};
use crate::beta::BetaSystem;
use crate::error::{Error, Result};
use crate::maximize::LocalOptimum;
use crate::rng::{gaussian_vec, seeded};

#[derive(Debug, Clone)]
pub struct ScanTrial {
    pub index: usize,
    /// Seed passed to the evaluation of this trial.
    pub seed: u64,
    /// The normalized direction.
    pub u: Vec<f64>,
    pub value: f64,
    pub n_local: usize,
    pub optima: Vec<LocalOptimum>,
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub zsize: usize,
    pub starts: usize,
    pub seed: u64,
    pub trials: Vec<ScanTrial>,
    /// Indices of trials with `n_local > 1`.
    pub flagged: Vec<usize>,
}

/// Samples `trials` random directions on `|Z| = zsize` and records the number
/// of distinct local maximizers found for each.
pub fn conjecture_scan(beta: &BetaSystem, zsize: usize, trials: usize, starts: usize, seed: u64) -> Result<ScanReport> {
    if beta.len() != zsize {
        return Err(Error::DimensionMismatch { expected: zsize, got: beta.len() });
    }
    if zsize < 2 || trials == 0 {
        return Err(Error::InvalidArgument("need |Z| >= 2 and at least one trial".into()));
    }
    let mut rng = seeded(seed);
    let mut out = Vec::with_capacity(trials);
    for index in 0..trials {
        let u = loop {
            let g = gaussian_vec(&mut rng, zsize, 1.0);
            let m = g.iter().sum::<f64>() / zsize as f64;
            if let Ok(u) = normalize_direction(&g.iter().map(|x| x - m).collect::<Vec<_>>()) {
                break u;
            }
        };
        let s = trial_seed(seed, index);
        let r = bbar_eval(beta, &u, starts, s)?;
        out.push(ScanTrial { index, seed: s, u: u.u, value: r.value, n_local: r.n_local, optima: r.local_maxima });
    }
    let flagged = out.iter().filter(|t| t.n_local > 1).map(|t| t.index).collect();
    Ok(ScanReport { zsize, starts, seed, trials: out, flagged })
}
