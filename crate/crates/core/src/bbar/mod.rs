//! Kernel directions, the codimension-one families `F_u`, and the function
//! `B̄(u) = max { B(P, F_u) : P on the closed positive side of u }`.

mod fiber;
mod scan;

pub use scan::{conjecture_scan, ScanReport, ScanTrial};

use crate::ascent::ascend;
use crate::beta::BetaSystem;
use crate::error::{Error, Result};
use crate::family::{kernel_basis, Instance, Pm, ReducedFamily};
use crate::maximize::{cluster, LocalOptimum};
use crate::numerics::{dot, nelder_mead, norm2, orthocomplement_basis, NelderMeadOptions, Tolerances};
use crate::projection::{h_of_weights, rb_project};
use crate::rng::{derive_seed, gaussian_vec, seeded};

use fiber::Fiber;

/// Largest `|Z|` for which every facial subfamily of `F_u` gets its own start.
pub const FACE_START_CAP: usize = 8;

const MAX_FIBER_ITER: usize = 500;
const SIDE_THRESHOLD: f64 = 1e-10;

/// A nonzero `u` with `Σ u = 0`, scaled so that `Σ u⁺ = Σ u⁻ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub u: Vec<f64>,
    pub u_plus: Vec<f64>,
    pub u_minus: Vec<f64>,
}

impl Direction {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

pub fn normalize_direction(raw: &[f64]) -> Result<Direction> {
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("direction has non-finite entries".into()));
    }
    let sp: f64 = raw.iter().filter(|v| **v > 0.0).sum();
    let sm: f64 = -raw.iter().filter(|v| **v < 0.0).sum::<f64>();
    if sp == 0.0 && sm == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let sum = sp - sm;
    if sp == 0.0 || sm == 0.0 || sum.abs() > 1e-10 * (sp + sm).max(1.0) {
        return Err(Error::NonKernelSum(sum));
    }
    let u: Vec<f64> = raw.iter().map(|&v| if v > 0.0 { v / sp } else { v / sm }).collect();
    let u_plus = u.iter().map(|v| v.max(0.0)).collect();
    let u_minus = u.iter().map(|v| (-v).max(0.0)).collect();
    Ok(Direction { u, u_plus, u_minus })
}

/// `F_u`: statistic rows spanning the orthocomplement of `{u, 1}`, so that
/// the kernel space of the family is exactly `ℝu`.
pub fn family_from_direction(beta: &BetaSystem, u: &Direction) -> Result<Instance> {
    let n = u.len();
    if n < 2 {
        return Err(Error::InvalidArgument("directions need |Z| >= 2".into()));
    }
    if beta.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: beta.len() });
    }
    let b = orthocomplement_basis(&[u.u.clone(), vec![1.0; n]], n);
    let rows: Vec<Vec<f64>> = (0..b.nrows()).map(|i| b.row(i).iter().copied().collect()).collect();
    Instance::unlabeled(&rows, beta.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Boundary,
    Minus,
}

/// Sign of `⟨P - Π_{F_u, P}, u⟩`.
pub fn classify_side(inst_u: &Instance, p: &Pm, u: &Direction) -> Result<Side> {
    let proj = rb_project(inst_u, p)?;
    let diff: Vec<f64> = p.weights().iter().zip(proj.pi.weights()).map(|(a, b)| a - b).collect();
    let s = dot(&diff, &u.u);
    Ok(if s > SIDE_THRESHOLD {
        Side::Plus
    } else if s < -SIDE_THRESHOLD {
        Side::Minus
    } else {
        Side::Boundary
    })
}

#[derive(Debug, Clone)]
pub struct BbarResult {
    /// `B̄(u)`.
    pub value: f64,
    pub argmax: Pm,
    /// `Π_{F_u, argmax}`.
    pub base: Pm,
    /// Number of distinct local maximizers found.
    pub n_local: usize,
    /// The distinct local maximizers, best first.
    pub local_maxima: Vec<LocalOptimum>,
}

struct Candidate {
    argmax: Vec<f64>,
    base: Vec<f64>,
    value: f64,
    residual: f64,
}

/// Fiber ascent over `supp(u⁺)` from `w0` (restricted and renormalized).
fn fiber_ascent(beta: &BetaSystem, u: &Direction, w0: &[f64], tol: Tolerances) -> Result<Candidate> {
    let mut f = Fiber::new(beta, &u.u, tol);
    let mut w = vec![0.0; u.len()];
    let mass: f64 = f.plus.iter().map(|&z| w0[z]).sum();
    for &z in &f.plus {
        w[z] = if mass > 0.0 { (w0[z] / mass).max(1e-9) } else { 1.0 / f.plus.len() as f64 };
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    let r = ascend(&mut f, &w, MAX_FIBER_ITER)?;
    let fp = f.point(&r.weights)?;
    Ok(Candidate { argmax: r.weights, base: fp.q, value: fp.value, residual: r.residual })
}

/// `H(q + t_max u) - H(q)` at the member `q` of a facial subfamily with
/// parameter `theta`, together with the endpoint `q + t_max u` and `q`.
fn endpoint(inst_u: &Instance, rf: &ReducedFamily, u: &Direction, theta: &[f64]) -> Option<(f64, Vec<f64>, Vec<f64>)> {
    let beta = inst_u.beta();
    let pt = rf.point(beta, theta, None, &inst_u.tol).ok()?;
    let mut q = vec![0.0; u.len()];
    for (&z, &v) in rf.members.iter().zip(&pt.p) {
        q[z] = v;
    }
    let (arg, t_max) = (0..u.len())
        .filter(|&z| u.u[z] < 0.0)
        .map(|z| (z, q[z] / -u.u[z]))
        .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    if arg == usize::MAX {
        return None;
    }
    let mut p: Vec<f64> = q.iter().zip(&u.u).map(|(a, b)| (a + t_max * b).max(0.0)).collect();
    p[arg] = 0.0;
    let value = h_of_weights(beta, &p) - h_of_weights(beta, &q);
    value.is_finite().then_some((value, p, q))
}

/// Subsets `supp(u) ∪ T` with `T` ranging over the zeros of `u`.
fn facial_subfamilies(u: &Direction) -> Vec<Vec<usize>> {
    let zeros: Vec<usize> = (0..u.len()).filter(|&z| u.u[z] == 0.0).collect();
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << zeros.len()) {
        let mut s: Vec<usize> = (0..u.len()).filter(|&z| u.u[z] != 0.0).collect();
        s.extend(zeros.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, &z)| z));
        s.sort_unstable();
        out.push(s);
    }
    out
}

fn search_on_face(
    inst_u: &Instance,
    u: &Direction,
    members: &[usize],
    theta0: &[f64],
    tol: Tolerances,
) -> Result<Option<Candidate>> {
    let rf = ReducedFamily::new(inst_u, members);
    let theta0: Vec<f64> = theta0.iter().take(rf.k()).copied().collect();
    let opts = NelderMeadOptions { initial_step: 1.0, max_evals: 400 * (rf.k() + 1), ..Default::default() };
    let nm = nelder_mead(|th| endpoint(inst_u, &rf, u, th).map_or(f64::INFINITY, |(v, _, _)| -v), &theta0, &opts);
    let Some((nm_value, p, q)) = endpoint(inst_u, &rf, u, &nm.x) else {
        return Ok(None);
    };
    // a start whose endpoint underflows is simply dropped
    let Ok(polished) = fiber_ascent(inst_u.beta(), u, &p, tol) else {
        return Ok(None);
    };
    if nm_value > polished.value + 1e-9 {
        // the fiber ascent could not match the raw search point; keep the latter
        return Ok(Some(Candidate { argmax: p, base: q, value: nm_value, residual: f64::NAN }));
    }
    Ok(Some(polished))
}

/// `B̄(u)` for the family built on `inst_u`; see [`bbar_eval`].
pub fn bbar_eval_on(inst_u: &Instance, u: &Direction, starts: usize, seed: u64) -> Result<BbarResult> {
    let beta = inst_u.beta();
    let tol = inst_u.tol;
    let n = u.len();
    let plus: Vec<usize> = (0..n).filter(|&z| u.u[z] > 0.0).collect();
    let mut cands = vec![fiber_ascent(beta, u, &Pm::uniform_on(n, &plus).into_weights(), tol)?];
    if starts > 0 {
        let mut rng = seeded(seed);
        let d = inst_u.d();
        for _ in 0..starts {
            let th = gaussian_vec(&mut rng, d, 2.0);
            if let Some(c) = search_on_face(inst_u, u, &(0..n).collect::<Vec<_>>(), &th, tol)? {
                cands.push(c);
            }
        }
        if n <= FACE_START_CAP {
            for members in facial_subfamilies(u).into_iter().filter(|m| m.len() < n) {
                if let Some(c) = search_on_face(inst_u, u, &members, &vec![0.0; d], tol)? {
                    cands.push(c);
                }
            }
        }
    }
    let mut optima = Vec::with_capacity(cands.len());
    for c in &cands {
        optima.push(LocalOptimum {
            pm: Pm::from_unnormalized(c.argmax.clone())?,
            value: c.value,
            residual: c.residual,
        });
    }
    let local_maxima = cluster(optima, tol.cluster_tv);
    let best = &local_maxima[0];
    let base = cands
        .iter()
        .find(|c| c.value == best.value && Pm::from_unnormalized(c.argmax.clone()).is_ok_and(|p| p == best.pm))
        .map(|c| c.base.clone())
        .expect("best optimum comes from a candidate");
    Ok(BbarResult {
        value: best.value,
        argmax: best.pm.clone(),
        base: Pm::from_unnormalized(base)?,
        n_local: local_maxima.len(),
        local_maxima,
    })
}

/// `B̄(u)`: a deterministic fiber ascent over `supp(u⁺)` plus `starts`
/// derivative-free searches over the parameters of `F_u` and of its facial
/// subfamilies, each refined by the fiber ascent.
pub fn bbar_eval(beta: &BetaSystem, u: &Direction, starts: usize, seed: u64) -> Result<BbarResult> {
    let inst_u = family_from_direction(beta, u)?;
    bbar_eval_on(&inst_u, u, starts, seed)
}

fn ln_1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Closed form of `B̄` for classical generators:
/// `ln(1 + exp(Σ_z u(z) ln(|u(z)| / ν(z))))` on the normalized `u`.
pub fn bbar_classical(beta: &BetaSystem, u: &Direction) -> Result<f64> {
    let nu = beta.classical_reference().ok_or(Error::NonClassicalSystem)?;
    if nu.len() != u.len() {
        return Err(Error::DimensionMismatch { expected: nu.len(), got: u.len() });
    }
    let dbar: f64 = u.u.iter().zip(&nu).filter(|(x, _)| **x != 0.0).map(|(x, v)| x * (x.abs() / v).ln()).sum();
    Ok(ln_1p_exp(dbar))
}

#[derive(Debug, Clone)]
pub struct BbarMax {
    pub direction: Direction,
    pub value: f64,
    pub result: BbarResult,
    /// Number of `B̄` evaluations spent by the search.
    pub evaluations: usize,
}

fn combine(basis: &[Vec<f64>], coef: &[f64]) -> Vec<f64> {
    let mut u = vec![0.0; basis[0].len()];
    for (b, c) in basis.iter().zip(coef) {
        u.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
    }
    u
}

/// Maximizes `B̄` over `N(f) \ {0}`: Nelder-Mead in gnomonic charts of the
/// unit sphere of `N(f)` around random centers, then a full evaluation of
/// the best direction.
pub fn maximize_bbar(inst: &Instance, starts: usize, seed: u64) -> Result<BbarMax> {
    let basis = kernel_basis(inst);
    let k = basis.len();
    if k == 0 {
        return Err(Error::TrivialKernel);
    }
    let beta = inst.beta();
    let tol = inst.tol;
    let mut evaluations = 0usize;
    let quick = |coef: &[f64], evaluations: &mut usize| -> f64 {
        *evaluations += 1;
        let Ok(u) = normalize_direction(&combine(&basis, coef)) else {
            return f64::NEG_INFINITY;
        };
        let plus: Vec<usize> = (0..u.len()).filter(|&z| u.u[z] > 0.0).collect();
        fiber_ascent(beta, &u, &Pm::uniform_on(u.len(), &plus).into_weights(), tol)
            .map_or(f64::NEG_INFINITY, |c| c.value)
    };

    let mut best: (f64, Vec<f64>) = (f64::NEG_INFINITY, vec![]);
    let consider = |coef: Vec<f64>, v: f64, best: &mut (f64, Vec<f64>)| {
        if v > best.0 {
            *best = (v, coef);
        }
    };
    if k == 1 {
        for s in [1.0, -1.0] {
            let v = quick(&[s], &mut evaluations);
            consider(vec![s], v, &mut best);
        }
    } else {
        let mut rng = seeded(seed);
        let mut centers: Vec<Vec<f64>> = Vec::new();
        for i in 0..k {
            for s in [1.0, -1.0] {
                let mut c = vec![0.0; k];
                c[i] = s;
                centers.push(c);
            }
        }
        for _ in 0..starts {
            let g = gaussian_vec(&mut rng, k, 1.0);
            let nrm = norm2(&g);
            centers.push(g.into_iter().map(|x| x / nrm).collect());
        }
        let opts = NelderMeadOptions { initial_step: 0.3, max_evals: 150 * k, f_tol: 1e-12, x_tol: 1e-9 };
        for c in centers {
            let tangent = orthocomplement_basis(std::slice::from_ref(&c), k);
            let to_coef = |x: &[f64]| -> Vec<f64> {
                let mut v = c.clone();
                for (i, xi) in x.iter().enumerate() {
                    v.iter_mut().zip(tangent.row(i).iter()).for_each(|(a, b)| *a += xi * b);
                }
                let nrm = norm2(&v);
                v.into_iter().map(|a| a / nrm).collect()
            };
            let r = nelder_mead(|x| -quick(&to_coef(x), &mut evaluations), &vec![0.0; k - 1], &opts);
            consider(to_coef(&r.x), -r.value, &mut best);
        }
    }
    let direction = normalize_direction(&combine(&basis, &best.1))?;
    let result = bbar_eval_on(&family_from_direction(beta, &direction)?, &direction, starts, seed)?;
    Ok(BbarMax { value: result.value, direction, result, evaluations })
}

/// `Ψ(P)`: the normalized direction `P - Π_P`.
pub fn psi(inst: &Instance, p: &Pm) -> Result<Direction> {
    let proj = rb_project(inst, p)?;
    if p.tv_distance(&proj.pi) <= 1e-9 {
        return Err(Error::MemberOfClosure);
    }
    let diff: Vec<f64> = p.weights().iter().zip(proj.pi.weights()).map(|(a, b)| a - b).collect();
    let shift = diff.iter().sum::<f64>() / diff.len() as f64;
    normalize_direction(&diff.iter().map(|d| d - shift).collect::<Vec<_>>())
}

#[derive(Debug, Clone)]
pub struct PhiResult {
    pub pm: Pm,
    /// Set when more than one local maximizer was found, in which case `pm`
    /// is the best of them.
    pub ambiguous: bool,
}

/// `Φ(u)`: the maximizer of `B(·, F_u)` on the positive side of `u`.
pub fn phi(inst: &Instance, u: &Direction, starts: usize, seed: u64) -> Result<PhiResult> {
    if u.len() != inst.n() {
        return Err(Error::DimensionMismatch { expected: inst.n(), got: u.len() });
    }
    let au: f64 = inst.rows().iter().map(|r| dot(r, &u.u).abs()).fold(0.0, f64::max);
    if au > 1e-8 {
        return Err(Error::NotInKernel(au));
    }
    let r = bbar_eval(inst.beta(), u, starts, seed)?;
    Ok(PhiResult { pm: r.argmax, ambiguous: r.n_local > 1 })
}

pub(crate) fn trial_seed(seed: u64, trial: usize) -> u64 {
    derive_seed(seed, trial as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rank;
    use crate::projection::div_from_family;
    use crate::rng::dirichlet_uniform;
    use rand::Rng;
    use std::f64::consts::LN_2;

    #[test]
    fn normalization() {
        assert_eq!(normalize_direction(&[2.0, -2.0, 0.0]).unwrap().u, vec![1.0, -1.0, 0.0]);
        assert_eq!(normalize_direction(&[1.0, -0.5, -0.5]).unwrap().u, vec![1.0, -0.5, -0.5]);
        let d = normalize_direction(&[3.0, -1.0, -2.0]).unwrap();
        assert!((d.u[1] + 1.0 / 3.0).abs() < 1e-16 && (d.u[2] + 2.0 / 3.0).abs() < 1e-16);
        assert_eq!(normalize_direction(&[0.0, 0.0]), Err(Error::ZeroDirection));
        assert!(matches!(normalize_direction(&[1.0, -0.5]), Err(Error::NonKernelSum(_))));
    }

    #[test]
    fn direction_families() {
        let beta2 = BetaSystem::make_classical(&[1.0, 1.0]).unwrap();
        let u2 = normalize_direction(&[1.0, -1.0]).unwrap();
        assert_eq!(family_from_direction(&beta2, &u2).unwrap().d(), 0);
        let beta3 = BetaSystem::make_classical(&[1.0; 3]).unwrap();
        let u3 = normalize_direction(&[1.0, -0.5, -0.5]).unwrap();
        let inst = family_from_direction(&beta3, &u3).unwrap();
        assert_eq!(inst.d(), 1);
        let row = &inst.rows()[0];
        assert!(row[0].abs() < 1e-12 && (row[1] + row[2]).abs() < 1e-12);
        let kb = kernel_basis(&inst);
        assert_eq!(kb.len(), 1);
        assert_eq!(rank(&[kb[0].clone(), u3.u.clone()], 3), 1);
    }

    #[test]
    fn named_values() {
        let beta2 = BetaSystem::make_classical(&[1.0, 1.0]).unwrap();
        let r = bbar_eval(&beta2, &normalize_direction(&[1.0, -1.0]).unwrap(), 4, 1).unwrap();
        assert!((r.value - LN_2).abs() < 1e-10);
        assert_eq!(r.argmax, Pm::delta(2, 0));
        let beta3 = BetaSystem::make_classical(&[1.0; 3]).unwrap();
        let u3 = normalize_direction(&[1.0, -0.5, -0.5]).unwrap();
        let r = bbar_eval(&beta3, &u3, 4, 1).unwrap();
        assert!((r.value - 3f64.ln()).abs() < 1e-10);
        assert_eq!(r.argmax, Pm::delta(3, 0));
        assert!((bbar_classical(&beta3, &u3).unwrap() - 3f64.ln()).abs() < 1e-14);
        let u4 = normalize_direction(&[0.5, 0.5, -0.5, -0.5]).unwrap();
        let beta4 = BetaSystem::make_classical(&[1.0; 4]).unwrap();
        assert!((bbar_classical(&beta4, &u4).unwrap() - LN_2).abs() < 1e-14);
    }

    #[test]
    fn scale_invariance() {
        let beta = BetaSystem::make_entropy_quadratic(&[1.0, 2.0, 0.5, 0.0]).unwrap();
        let raw = [0.3, -0.7, 0.9, -0.5];
        let a = bbar_eval(&beta, &normalize_direction(&raw).unwrap(), 2, 5).unwrap();
        for lambda in [4.0, 0.125] {
            let scaled: Vec<f64> = raw.iter().map(|x| x * lambda).collect();
            let b = bbar_eval(&beta, &normalize_direction(&scaled).unwrap(), 2, 5).unwrap();
            assert_eq!(a.value, b.value);
        }
    }

    #[test]
    fn classical_closed_form_random() {
        let mut rng = seeded(21);
        for n in 2..=6 {
            let nu: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
            let beta = BetaSystem::make_classical(&nu).unwrap();
            for _ in 0..3 {
                let g = gaussian_vec(&mut rng, n, 1.0);
                let m = g.iter().sum::<f64>() / n as f64;
                let u = normalize_direction(&g.iter().map(|x| x - m).collect::<Vec<_>>()).unwrap();
                let r = bbar_eval(&beta, &u, 2, 3).unwrap();
                let exact = bbar_classical(&beta, &u).unwrap();
                assert!((r.value - exact).abs() < 1e-8, "{} vs {exact}", r.value);
                assert_eq!(r.n_local, 1);
                let inst_u = family_from_direction(&beta, &u).unwrap();
                assert_eq!(classify_side(&inst_u, &r.argmax, &u).unwrap(), Side::Plus);
            }
        }
    }

    #[test]
    fn fiber_identity_and_sides() {
        let beta = BetaSystem::make_entropy_quadratic(&[1.0, 0.5, 2.0, 1.0]).unwrap();
        let u = normalize_direction(&[0.4, -0.6, 0.6, -0.4]).unwrap();
        let inst_u = family_from_direction(&beta, &u).unwrap();
        let q = crate::family::pm_of_theta(&inst_u, &[0.3, -0.2]).unwrap();
        let t_max = (0..4).filter(|&z| u.u[z] < 0.0).map(|z| q[z] / -u.u[z]).fold(f64::INFINITY, f64::min);
        for frac in [0.2, 0.6, 0.95] {
            let t = frac * t_max;
            let plus = Pm::from_unnormalized(q.weights().iter().zip(&u.u).map(|(a, b)| a + t * b).collect()).unwrap();
            let r = rb_project(&inst_u, &plus).unwrap();
            assert!(r.pi.tv_distance(&q) < 1e-8);
            assert_eq!(classify_side(&inst_u, &plus, &u).unwrap(), Side::Plus);
            let minus =
                Pm::from_unnormalized(q.weights().iter().zip(&u.u).map(|(a, b)| a - 0.5 * t * b).collect()).unwrap();
            assert_eq!(classify_side(&inst_u, &minus, &u).unwrap(), Side::Minus);
        }
        assert_eq!(classify_side(&inst_u, &q, &u).unwrap(), Side::Boundary);
    }

    #[test]
    fn basis_independence() {
        let beta = BetaSystem::make_entropy_quadratic(&[0.5, 1.0, 2.0, 0.2, 1.0]).unwrap();
        let u = normalize_direction(&[0.5, -0.2, 0.3, -0.4, -0.2]).unwrap();
        let inst_a = family_from_direction(&beta, &u).unwrap();
        // rotate the statistic by a fixed orthogonal matrix
        let rows = inst_a.rows();
        let (c, s) = (0.6_f64, 0.8_f64);
        let rotated = vec![
            rows[0].iter().zip(&rows[1]).map(|(a, b)| c * a - s * b).collect(),
            rows[0].iter().zip(&rows[1]).map(|(a, b)| s * a + c * b).collect(),
            rows[2].iter().map(|a| -a).collect::<Vec<f64>>(),
        ];
        let inst_b = Instance::unlabeled(&rotated, beta.clone()).unwrap();
        let a = bbar_eval_on(&inst_a, &u, 3, 9).unwrap();
        let b = bbar_eval_on(&inst_b, &u, 3, 9).unwrap();
        assert!((a.value - b.value).abs() < 1e-7);
    }

    #[test]
    fn independence_bbar() {
        let inst = Instance::unlabeled(
            &[vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 1.0, 0.0, 1.0]],
            BetaSystem::make_classical(&[1.0; 4]).unwrap(),
        )
        .unwrap();
        let m = maximize_bbar(&inst, 4, 2).unwrap();
        assert!((m.value - LN_2).abs() < 1e-9);
        let expected = [0.5, -0.5, -0.5, 0.5];
        let flipped: Vec<f64> = expected.iter().map(|x| -x).collect();
        assert!(
            m.direction.u == expected.to_vec() || m.direction.u == flipped || {
                m.direction.u.iter().zip(&expected).all(|(a, b)| (a - b).abs() < 1e-9)
                    || m.direction.u.iter().zip(&flipped).all(|(a, b)| (a - b).abs() < 1e-9)
            }
        );
        let full = Instance::unlabeled(&[vec![0.0, 1.0]], BetaSystem::make_classical(&[1.0, 1.0]).unwrap()).unwrap();
        assert!(matches!(maximize_bbar(&full, 2, 0), Err(Error::TrivialKernel)));
    }

    #[test]
    fn point_family_bbar_maximum() {
        let inst = Instance::unlabeled(&[], BetaSystem::make_classical(&[1.0; 3]).unwrap()).unwrap();
        let m = maximize_bbar(&inst, 8, 4).unwrap();
        assert!((m.value - 3f64.ln()).abs() < 1e-6, "{}", m.value);
    }

    #[test]
    fn psi_phi_round_trip() {
        let inst = Instance::unlabeled(
            &[vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 1.0, 0.0, 1.0]],
            BetaSystem::make_classical(&[1.0; 4]).unwrap(),
        )
        .unwrap();
        let p = Pm::new(vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let u = psi(&inst, &p).unwrap();
        for (a, b) in u.u.iter().zip([0.5, -0.5, -0.5, 0.5]) {
            assert!((a - b).abs() < 1e-9);
        }
        let back = phi(&inst, &u, 4, 1).unwrap();
        assert!(back.pm.tv_distance(&p) < 1e-8);
        assert!(!back.ambiguous);
        assert!(matches!(psi(&inst, &Pm::uniform(4)), Err(Error::MemberOfClosure)));
    }

    #[test]
    fn inequalities_on_random_pairs() {
        let beta = BetaSystem::make_entropy_quadratic(&[1.0, 0.3, 2.0, 0.7, 1.1]).unwrap();
        let inst = Instance::unlabeled(&[vec![0.0, 1.0, 2.0, 1.0, 0.0]], beta).unwrap();
        let mut rng = seeded(8);
        let kb = kernel_basis(&inst);
        for _ in 0..20 {
            let p = Pm::from_unnormalized(dirichlet_uniform(&mut rng, 5)).unwrap();
            let b = div_from_family(&inst, &p).unwrap();
            let u = psi(&inst, &p).unwrap();
            assert!(bbar_eval(inst.beta(), &u, 0, 0).unwrap().value >= b - 1e-7);
            let coef = gaussian_vec(&mut rng, kb.len(), 1.0);
            let v = normalize_direction(&combine(&kb, &coef)).unwrap();
            let r = phi(&inst, &v, 0, 0).unwrap();
            let bb = bbar_eval(inst.beta(), &v, 0, 0).unwrap().value;
            assert!(div_from_family(&inst, &r.pm).unwrap() >= bb - 1e-7);
        }
    }
}
