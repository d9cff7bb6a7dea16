//! Bregman divergences and the reverse projection onto the closure of a
//! family.

use nalgebra::{DMatrix, DVector};

use crate::beta::BetaSystem;
use crate::error::{Error, Result};
use crate::family::{facial_set, DualPoint, FacialSet, Instance, Pm, ReducedFamily};
use crate::numerics::{dot, norm2, Tolerances};

const MAX_NEWTON: usize = 200;
const ARMIJO: f64 = 1e-4;
const HESS_REG: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ProjectionResult {
    pub pi: Pm,
    /// Parameter of `pi` in the full family; `None` when `pi` lies on a
    /// proper face of the closure.
    pub theta: Option<Vec<f64>>,
    pub face: FacialSet,
    /// `B(P, E)`.
    pub value: f64,
    /// Disagreement between the primal value and the dual evaluation.
    pub dual_gap: f64,
}

fn check_nonneg(v: &[f64]) -> Result<()> {
    match v.iter().enumerate().find(|(_, x)| !(**x >= 0.0 && x.is_finite())) {
        Some((index, &value)) => Err(Error::NegativeInput { index, value }),
        None => Ok(()),
    }
}

/// `B(u, v) = Σ_z β_z(u) - β_z(v) - l_z(v)(u - v)`; `+∞` when some `v(z) = 0 < u(z)`.
pub fn bregman_div(sys: &BetaSystem, u: &[f64], v: &[f64]) -> Result<f64> {
    for w in [u, v] {
        if w.len() != sys.len() {
            return Err(Error::DimensionMismatch { expected: sys.len(), got: w.len() });
        }
        check_nonneg(w)?;
    }
    let mut total = 0.0;
    for z in 0..sys.len() {
        let (a, b) = (u[z], v[z]);
        if b == 0.0 {
            if a > 0.0 {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        total += sys.value(z, a) - sys.value(z, b) - sys.derivative(z, b) * (a - b);
    }
    Ok(total.max(0.0))
}

/// `H(P) = Σ_z β_z(P(z))`.
pub fn h_energy(sys: &BetaSystem, p: &Pm) -> f64 {
    h_of_weights(sys, p.weights())
}

pub(crate) fn h_of_weights(sys: &BetaSystem, w: &[f64]) -> f64 {
    w.iter().enumerate().map(|(z, &x)| sys.value(z, x)).sum()
}

/// Optimum of the reduced dual `θ ↦ ⟨θ, m⟩ - Υ(θ)`.
#[derive(Debug, Clone)]
pub(crate) struct DualSolution {
    pub theta: Vec<f64>,
    pub point: DualPoint,
    /// `⟨θ, m⟩ - Υ(θ)` at the optimum.
    pub dual_value: f64,
}

fn dual_objective(beta: &BetaSystem, rf: &ReducedFamily, theta: &[f64], m: &[f64], pt: &DualPoint) -> f64 {
    dot(theta, m) - pt.upsilon(beta, &rf.members)
}

fn newton_step(h: DMatrix<f64>, grad: &[f64]) -> Vec<f64> {
    let k = grad.len();
    let g = DVector::from_column_slice(grad);
    if let Some(ch) = h.clone().cholesky() {
        return ch.solve(&g).iter().copied().collect();
    }
    let scale = 1.0 + h.diagonal().amax();
    let reg = h + DMatrix::identity(k, k) * (HESS_REG * scale);
    match reg.cholesky() {
        Some(ch) => ch.solve(&g).iter().copied().collect(),
        None => grad.to_vec(),
    }
}

/// Damped Newton ascent of the dual of the reduced family towards the
/// moment `m`.
pub(crate) fn solve_dual(
    beta: &BetaSystem,
    rf: &ReducedFamily,
    m: &[f64],
    warm: Option<&DualSolution>,
    tol: &Tolerances,
) -> Result<DualSolution> {
    if let Some(w) = warm {
        if let Ok(s) = newton(beta, rf, m, w.theta.clone(), Some(w.point.lambda), tol) {
            return Ok(s);
        }
    }
    newton(beta, rf, m, vec![0.0; rf.k()], None, tol)
}

fn newton(
    beta: &BetaSystem,
    rf: &ReducedFamily,
    m: &[f64],
    mut theta: Vec<f64>,
    hint: Option<f64>,
    tol: &Tolerances,
) -> Result<DualSolution> {
    let k = rf.k();
    let mut pt = rf.point(beta, &theta, hint, tol)?;
    let mut obj = dual_objective(beta, rf, &theta, m, &pt);
    let mut gn = f64::INFINITY;
    for _ in 0..=MAX_NEWTON {
        let mu = pt.moment(&rf.stats, k);
        let grad: Vec<f64> = m.iter().zip(&mu).map(|(a, b)| a - b).collect();
        gn = norm2(&grad);
        if gn <= tol.grad_norm {
            let sol = DualSolution { theta, point: pt, dual_value: obj };
            return Ok(polish(beta, rf, m, sol, gn, tol));
        }
        let step = newton_step(pt.hessian(&rf.stats, k), &grad);
        let slope = dot(&grad, &step);
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-20 {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, b)| a + t * b).collect();
            if let Ok(p2) = rf.point(beta, &cand, Some(pt.lambda), tol) {
                let o2 = dual_objective(beta, rf, &cand, m, &p2);
                let sufficient = o2 >= obj + ARMIJO * t * slope;
                // near the optimum the objective is flat to rounding; fall back
                // to the gradient norm
                let flat = o2 >= obj - 1e-13 * (1.0 + obj.abs()) && {
                    let mu2 = p2.moment(&rf.stats, k);
                    norm2(&m.iter().zip(&mu2).map(|(a, b)| a - b).collect::<Vec<_>>()) < gn
                };
                if o2.is_finite() && (sufficient || flat) {
                    theta = cand;
                    pt = p2;
                    obj = o2;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    // stalled at rounding level
    if gn <= 100.0 * tol.grad_norm {
        return Ok(DualSolution { theta, point: pt, dual_value: obj });
    }
    Err(Error::NonConvergence { iterations: MAX_NEWTON, grad_norm: gn })
}

/// Full Newton steps past the tolerance while they still shrink the
/// gradient, so that `H(P) - H(Π_P)` is accurate to rounding.
fn polish(
    beta: &BetaSystem,
    rf: &ReducedFamily,
    m: &[f64],
    mut sol: DualSolution,
    mut gn: f64,
    tol: &Tolerances,
) -> DualSolution {
    let k = rf.k();
    for _ in 0..3 {
        let mu = sol.point.moment(&rf.stats, k);
        let grad: Vec<f64> = m.iter().zip(&mu).map(|(a, b)| a - b).collect();
        let step = newton_step(sol.point.hessian(&rf.stats, k), &grad);
        let cand: Vec<f64> = sol.theta.iter().zip(&step).map(|(a, b)| a + b).collect();
        let Ok(p2) = rf.point(beta, &cand, Some(sol.point.lambda), tol) else {
            break;
        };
        let mu2 = p2.moment(&rf.stats, k);
        let g2 = norm2(&m.iter().zip(&mu2).map(|(a, b)| a - b).collect::<Vec<_>>());
        if !(g2 < 0.5 * gn) {
            break;
        }
        gn = g2;
        sol.dual_value = dual_objective(beta, rf, &cand, m, &p2);
        sol.theta = cand;
        sol.point = p2;
    }
    sol
}

/// The rB-projection `Π_P` and `B(P, E)`.
pub fn rb_project(inst: &Instance, p: &Pm) -> Result<ProjectionResult> {
    if p.len() != inst.n() {
        return Err(Error::DimensionMismatch { expected: inst.n(), got: p.len() });
    }
    let face = facial_set(inst, &p.support())?;
    let rf = ReducedFamily::new(inst, &face.members);
    Ok(project_on_face(inst, p, face, &rf, None)?.0)
}

/// Projection when the face and its reduced family are already known.
pub(crate) fn project_on_face(
    inst: &Instance,
    p: &Pm,
    face: FacialSet,
    rf: &ReducedFamily,
    warm: Option<&DualSolution>,
) -> Result<(ProjectionResult, DualSolution)> {
    let beta = inst.beta();
    let m = rf.moment_of(p.weights());
    let sol = solve_dual(beta, rf, &m, warm, &inst.tol)?;
    let mut w = vec![0.0; inst.n()];
    for (&z, &v) in rf.members.iter().zip(&sol.point.p) {
        w[z] = v;
    }
    let pi = Pm::from_unnormalized(w)?;
    let hp = h_energy(beta, p);
    let value = (hp - h_energy(beta, &pi)).max(0.0);
    let off_face: f64 =
        (0..inst.n()).filter(|z| rf.members.binary_search(z).is_err()).map(|z| beta.value(z, 0.0)).sum();
    let dual_gap = (value - (hp - off_face - sol.dual_value)).abs();
    let theta = (face.members.len() == inst.n()).then(|| rf.full_theta(&sol.theta, inst.d()));
    Ok((ProjectionResult { pi, theta, face, value, dual_gap }, sol))
}

/// `B(P, E)`.
pub fn div_from_family(inst: &Instance, p: &Pm) -> Result<f64> {
    Ok(rb_project(inst, p)?.value)
}
