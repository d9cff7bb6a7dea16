//! The subcommands, each producing a versioned report.

use bregmax::bbar::{bbar_classical, bbar_eval, conjecture_scan, maximize_bbar, normalize_direction, psi, BbarResult};
use bregmax::beta::{BetaSystem, Generator};
use bregmax::family::{Instance, Pm};
use bregmax::maximize::{check_positive_gap, maximize_divergence, LocalOptimum};
use bregmax::projection::{h_energy, rb_project};
use bregmax::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliResult;
use crate::report::{finish, Output};

/// Tolerance on `|bbar_eval - closed form|` for classical systems.
pub const CLASSICAL_ORACLE_TOL: f64 = 1e-4;
/// Criticality residual accepted at a reported local maximizer.
pub const CRITICALITY_TOL: f64 = 1e-6;
/// Agreement between multistart and support enumeration.
pub const ENUMERATION_AGREEMENT_TOL: f64 = 1e-5;

fn labels_of(inst: &Instance, members: &[usize]) -> Vec<String> {
    members.iter().map(|&z| inst.labels()[z].clone()).collect()
}

pub fn beta_json(beta: &BetaSystem) -> Value {
    if let Some(nu) = beta.classical_reference() {
        return json!({"kind": "classical", "nu": nu});
    }
    let alpha: Option<Vec<f64>> = beta
        .generators()
        .iter()
        .map(|g| match g {
            Generator::EntropyQuadratic { alpha } => Some(*alpha),
            _ => None,
        })
        .collect();
    match alpha {
        Some(alpha) => json!({"kind": "entropy_quadratic", "alpha": alpha}),
        None => json!({"kind": "custom"}),
    }
}

#[derive(Serialize)]
struct OptimumRecord {
    weights: Vec<f64>,
    support: Vec<String>,
    value: f64,
    residual: f64,
}

fn optimum_record(inst: &Instance, o: &LocalOptimum) -> OptimumRecord {
    OptimumRecord {
        weights: o.pm.weights().to_vec(),
        support: labels_of(inst, &o.pm.support()),
        value: o.value,
        residual: o.residual,
    }
}

#[derive(Serialize)]
struct ProjectReport {
    p: Vec<f64>,
    pi: Vec<f64>,
    theta: Option<Vec<f64>>,
    face: Vec<String>,
    value: f64,
    dual_gap: f64,
}

pub fn cmd_project(inst: &Instance, p: &Pm) -> CliResult<Output> {
    let r = rb_project(inst, p)?;
    let body = ProjectReport {
        p: p.weights().to_vec(),
        pi: r.pi.weights().to_vec(),
        theta: r.theta,
        face: labels_of(inst, &r.face.members),
        value: r.value,
        dual_gap: r.dual_gap,
    };
    Ok(finish("project", &body, true))
}

#[derive(Serialize)]
struct DivergenceReport {
    value: f64,
    energy_p: f64,
    energy_pi: f64,
    pi: Vec<f64>,
    /// Normalized `P - Π_P`, absent for members of the closure.
    direction: Option<Vec<f64>>,
}

pub fn cmd_divergence(inst: &Instance, p: &Pm) -> CliResult<Output> {
    let r = rb_project(inst, p)?;
    let direction = match psi(inst, p) {
        Ok(u) => Some(u.u),
        Err(Error::MemberOfClosure) => None,
        Err(e) => return Err(e.into()),
    };
    let body = DivergenceReport {
        value: r.value,
        energy_p: h_energy(inst.beta(), p),
        energy_pi: h_energy(inst.beta(), &r.pi),
        pi: r.pi.weights().to_vec(),
        direction,
    };
    Ok(finish("divergence", &body, true))
}

#[derive(Serialize)]
struct GapRecord {
    holds: bool,
    constant: Option<f64>,
    reason: Option<String>,
}

#[derive(Serialize)]
struct MaximizeReport {
    starts: usize,
    seed: u64,
    global_value: f64,
    global_argmax: Vec<f64>,
    global_support: Vec<String>,
    multistart_value: f64,
    enumeration_value: Option<f64>,
    local_optima: Vec<OptimumRecord>,
    positive_gap: Vec<GapRecord>,
}

pub fn cmd_maximize(inst: &Instance, starts: usize, seed: u64) -> CliResult<Output> {
    let r = maximize_divergence(inst, starts, seed)?;
    let mut passed = true;
    let mut gaps = Vec::new();
    for o in &r.local_optima {
        passed &= o.residual <= CRITICALITY_TOL;
        gaps.push(match check_positive_gap(inst, &o.pm) {
            Ok((holds, c)) => GapRecord { holds, constant: Some(c), reason: None },
            Err(e @ Error::ViolatedNecessaryCondition(_)) => {
                GapRecord { holds: false, constant: None, reason: Some(e.to_string()) }
            }
            Err(e) => return Err(e.into()),
        });
    }
    passed &= gaps.iter().all(|g| g.holds);
    if let Some(ev) = r.enumeration_value {
        passed &= (ev - r.multistart_value).abs() <= ENUMERATION_AGREEMENT_TOL;
    }
    let body = MaximizeReport {
        starts: r.starts,
        seed: r.seed,
        global_value: r.global_value,
        global_argmax: r.global_argmax.weights().to_vec(),
        global_support: labels_of(inst, &r.global_argmax.support()),
        multistart_value: r.multistart_value,
        enumeration_value: r.enumeration_value,
        local_optima: r.local_optima.iter().map(|o| optimum_record(inst, o)).collect(),
        positive_gap: gaps,
    };
    Ok(finish("maximize", &body, passed))
}

#[derive(Serialize)]
struct BbarRecord {
    direction: Option<Vec<f64>>,
    value: f64,
    argmax: Option<Vec<f64>>,
    base: Option<Vec<f64>>,
    n_local: usize,
    local_maxima: Vec<OptimumRecord>,
}

fn bbar_record(inst: &Instance, u: Vec<f64>, r: &BbarResult) -> BbarRecord {
    BbarRecord {
        direction: Some(u),
        value: r.value,
        argmax: Some(r.argmax.weights().to_vec()),
        base: Some(r.base.weights().to_vec()),
        n_local: r.n_local,
        local_maxima: r.local_maxima.iter().map(|o| optimum_record(inst, o)).collect(),
    }
}

#[derive(Serialize)]
struct BbarReport {
    starts: usize,
    seed: u64,
    #[serde(flatten)]
    result: BbarRecord,
    closed_form: Option<f64>,
    closed_form_error: Option<f64>,
    evaluations: Option<usize>,
    trivial_kernel: bool,
}

/// Largest `|⟨f_i, u⟩|` over the statistic rows.
pub fn kernel_residual(inst: &Instance, u: &[f64]) -> f64 {
    inst.rows().iter().map(|r| r.iter().zip(u).map(|(a, b)| a * b).sum::<f64>().abs()).fold(0.0, f64::max)
}

/// With `u`, evaluates `B̄(u)` (and the closed form for classical systems);
/// without, maximizes `B̄` over the kernel space.
pub fn cmd_bbar(inst: &Instance, u: Option<&[f64]>, starts: usize, seed: u64) -> CliResult<Output> {
    let Some(raw) = u else {
        let body = match maximize_bbar(inst, starts, seed) {
            Ok(m) => BbarReport {
                starts,
                seed,
                result: bbar_record(inst, m.direction.u.clone(), &m.result),
                closed_form: None,
                closed_form_error: None,
                evaluations: Some(m.evaluations),
                trivial_kernel: false,
            },
            Err(Error::TrivialKernel) => BbarReport {
                starts,
                seed,
                result: BbarRecord {
                    direction: None,
                    value: 0.0,
                    argmax: None,
                    base: None,
                    n_local: 0,
                    local_maxima: vec![],
                },
                closed_form: None,
                closed_form_error: None,
                evaluations: Some(0),
                trivial_kernel: true,
            },
            Err(e) => return Err(e.into()),
        };
        return Ok(finish("bbar", &body, true));
    };
    let dir = normalize_direction(raw)?;
    let res = kernel_residual(inst, &dir.u);
    let scale = inst.rows().iter().flatten().fold(1.0_f64, |m, v| m.max(v.abs()));
    if res > 1e-8 * scale {
        return Err(Error::NotInKernel(res).into());
    }
    let r = bbar_eval(inst.beta(), &dir, starts, seed)?;
    let closed_form = match bbar_classical(inst.beta(), &dir) {
        Ok(v) => Some(v),
        Err(Error::NonClassicalSystem) => None,
        Err(e) => return Err(e.into()),
    };
    let closed_form_error = closed_form.map(|c| (c - r.value).abs());
    let passed = closed_form_error.is_none_or(|e| e <= CLASSICAL_ORACLE_TOL);
    let body = BbarReport {
        starts,
        seed,
        result: bbar_record(inst, dir.u.clone(), &r),
        closed_form,
        closed_form_error,
        evaluations: None,
        trivial_kernel: false,
    };
    Ok(finish("bbar", &body, passed))
}

#[derive(Serialize)]
struct TrialRecord {
    index: usize,
    seed: u64,
    u: Vec<f64>,
    value: f64,
    n_local: usize,
    optima: Vec<OptimumRecord>,
}

#[derive(Serialize)]
struct ScanReportBody {
    zsize: usize,
    trials: usize,
    starts: usize,
    seed: u64,
    beta: Value,
    /// Trials with more than one local maximizer, with everything needed to
    /// rerun them through `bbar -u`.
    flagged: Vec<TrialRecord>,
    n_local: Vec<usize>,
    values: Vec<f64>,
}

/// Random directions on `Z` of the instance, using its generators. The
/// report is evidence only and always passes.
pub fn cmd_conjecture_scan(inst: &Instance, trials: usize, starts: usize, seed: u64) -> CliResult<Output> {
    let r = conjecture_scan(inst.beta(), inst.n(), trials, starts, seed)?;
    let flagged = r
        .flagged
        .iter()
        .map(|&i| {
            let t = &r.trials[i];
            TrialRecord {
                index: t.index,
                seed: t.seed,
                u: t.u.clone(),
                value: t.value,
                n_local: t.n_local,
                optima: t.optima.iter().map(|o| optimum_record(inst, o)).collect(),
            }
        })
        .collect();
    let body = ScanReportBody {
        zsize: r.zsize,
        trials,
        starts: r.starts,
        seed: r.seed,
        beta: beta_json(inst.beta()),
        flagged,
        n_local: r.trials.iter().map(|t| t.n_local).collect(),
        values: r.trials.iter().map(|t| t.value).collect(),
    };
    Ok(finish("conjecture-scan", &body, true))
}
