//! Bregman families `E_f = {P_θ}` on a finite set.
//!
//! `P_θ(z) = e_z(⟨θ, f(z)⟩ - Λ(θ))` where `Λ(θ)` normalizes the measure. The
//! potential `Υ(θ) = Λ(θ) + Σ_z β*_z(⟨θ, f(z)⟩ - Λ(θ))` is convex with
//! gradient `μ(P_θ)`.

use nalgebra::DMatrix;

use crate::beta::{BetaSystem, Generator};
use crate::error::{Error, Result};
use crate::numerics::{
    dot, lp_solve, orthocomplement_basis, orthonormal_span, solve_decreasing_root_with, LpProblem, Tolerances,
};

/// Weights at or below this are outside the support.
pub const SUPPORT_EPS: f64 = 1e-12;

/// Accepted deviation of an input pm's total mass from one.
const PM_SUM_TOL: f64 = 1e-9;

/// A probability measure on `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pm {
    weights: Vec<f64>,
}

impl Pm {
    /// Validates nonnegativity and total mass, then renormalizes exactly.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidPm("empty weight vector".into()));
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::NegativeInput { index, value });
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > PM_SUM_TOL {
            return Err(Error::InvalidPm(format!("weights sum to {s}")));
        }
        Ok(Self::renormalized(weights))
    }

    /// Scales nonnegative weights with positive total to unit mass.
    pub fn from_unnormalized(weights: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::NegativeInput { index, value });
        }
        if !(weights.iter().sum::<f64>() > 0.0) {
            return Err(Error::InvalidPm("zero total mass".into()));
        }
        Ok(Self::renormalized(weights))
    }

    fn renormalized(mut weights: Vec<f64>) -> Self {
        weights.iter_mut().for_each(|w| {
            if *w <= SUPPORT_EPS {
                *w = 0.0
            }
        });
        let s: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= s);
        Self { weights }
    }

    pub fn uniform(n: usize) -> Self {
        Self { weights: vec![1.0 / n as f64; n] }
    }

    pub fn delta(n: usize, z: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[z] = 1.0;
        Self { weights }
    }

    pub fn uniform_on(n: usize, subset: &[usize]) -> Self {
        let mut weights = vec![0.0; n];
        for &z in subset {
            weights[z] = 1.0 / subset.len() as f64;
        }
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&z| self.weights[z] > SUPPORT_EPS).collect()
    }

    pub fn tv_distance(&self, other: &Pm) -> f64 {
        0.5 * self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

impl std::ops::Index<usize> for Pm {
    type Output = f64;
    fn index(&self, z: usize) -> &f64 {
        &self.weights[z]
    }
}

/// A subset of `Z` whose image under `f` spans a face of the convex support.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FacialSet {
    pub members: Vec<usize>,
}

/// A finite set `Z`, a statistic `f: Z → R^d` and a generator system.
#[derive(Debug, Clone)]
pub struct Instance {
    labels: Vec<String>,
    /// `columns[z] = f(z)`.
    columns: Vec<Vec<f64>>,
    d: usize,
    beta: BetaSystem,
    pub tol: Tolerances,
}

impl Instance {
    /// `rows` is the `d × |Z|` design matrix given row by row.
    pub fn new(labels: Vec<String>, rows: &[Vec<f64>], beta: BetaSystem) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidInstance("Z must be nonempty".into()));
        }
        if beta.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: beta.len() });
        }
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInstance("statistic has non-finite entries".into()));
            }
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != n {
            return Err(Error::InvalidInstance("labels are not unique".into()));
        }
        let d = rows.len();
        let columns = (0..n).map(|z| rows.iter().map(|r| r[z]).collect()).collect();
        Ok(Self { labels, columns, d, beta, tol: Tolerances::default() })
    }

    /// Instance with labels `0, 1, ...`.
    pub fn unlabeled(rows: &[Vec<f64>], beta: BetaSystem) -> Result<Self> {
        let labels = (0..beta.len()).map(|i| i.to_string()).collect();
        Self::new(labels, rows, beta)
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn n(&self) -> usize {
        self.columns.len()
    }

    /// Statistic dimension `d`.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn beta(&self) -> &BetaSystem {
        &self.beta
    }

    pub fn column(&self, z: usize) -> &[f64] {
        &self.columns[z]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.d).map(|i| self.columns.iter().map(|c| c[i]).collect()).collect()
    }

    pub fn design(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.n(), |i, z| self.columns[z][i])
    }

    /// Dimension of the family: affine dimension of `{f(z)}`.
    pub fn family_dim(&self) -> usize {
        let c0 = &self.columns[0];
        let diffs: Vec<Vec<f64>> =
            self.columns[1..].iter().map(|c| c.iter().zip(c0).map(|(a, b)| a - b).collect()).collect();
        orthonormal_span(&diffs, self.d).len()
    }

    /// The instance on a subset of `Z` (in the given order).
    pub fn restrict(&self, members: &[usize]) -> Instance {
        Instance {
            labels: members.iter().map(|&z| self.labels[z].clone()).collect(),
            columns: members.iter().map(|&z| self.columns[z].clone()).collect(),
            d: self.d,
            beta: self.beta.restrict(members),
            tol: self.tol,
        }
    }

    fn scores(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: theta.len() });
        }
        Ok(self.columns.iter().map(|c| dot(c, theta)).collect())
    }
}

/// Everything needed about `P_θ` once `Λ(θ)` is known.
#[derive(Debug, Clone)]
pub(crate) struct DualPoint {
    pub lambda: f64,
    /// `r_z = ⟨θ, f(z)⟩ - Λ(θ)`.
    pub r: Vec<f64>,
    /// `P_θ(z) = e_z(r_z)`.
    pub p: Vec<f64>,
    /// `e'_z(r_z)`.
    pub dp: Vec<f64>,
}

/// Solves `Σ_z e_z(s_z - r) = 1` over `members` and evaluates the family
/// member. `scores[i]` belongs to `members[i]`.
pub(crate) fn dual_point(
    beta: &BetaSystem,
    members: &[usize],
    scores: &[f64],
    hint: Option<f64>,
    tol: &Tolerances,
) -> Result<DualPoint> {
    let hint = hint.unwrap_or_else(|| scores.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let lambda = solve_decreasing_root_with(
        |r| {
            let mut v = 0.0;
            let mut dv = 0.0;
            for (&z, &s) in members.iter().zip(scores) {
                let (e, de) = beta.link_with_derivative(z, s - r);
                v += e;
                dv -= de;
            }
            (v, dv)
        },
        1.0,
        hint,
        tol,
    )?;
    let r: Vec<f64> = scores.iter().map(|s| s - lambda).collect();
    let (p, dp) = members.iter().zip(&r).map(|(&z, &rz)| beta.link_with_derivative(z, rz)).unzip();
    Ok(DualPoint { lambda, r, p, dp })
}

impl DualPoint {
    pub fn upsilon(&self, beta: &BetaSystem, members: &[usize]) -> f64 {
        let conj: f64 = members
            .iter()
            .zip(self.r.iter().zip(&self.p))
            .map(|(&z, (&r, &p))| match beta.generator(z) {
                // β*(r) = r e(r) - β(e(r)) without a second inversion
                Generator::EntropyQuadratic { .. } => r * p - beta.value(z, p),
                _ => beta.conjugate(z, r),
            })
            .sum();
        self.lambda + conj
    }

    /// `Σ_z P_θ(z) stats[z]`.
    pub fn moment(&self, stats: &[Vec<f64>], k: usize) -> Vec<f64> {
        let mut m = vec![0.0; k];
        for (p, s) in self.p.iter().zip(stats) {
            m.iter_mut().zip(s).for_each(|(mi, si)| *mi += p * si);
        }
        m
    }

    /// `∇Λ = Σ e' f / Σ e'`.
    pub fn lambda_grad(&self, stats: &[Vec<f64>], k: usize) -> Vec<f64> {
        let w: f64 = self.dp.iter().sum();
        let mut g = vec![0.0; k];
        for (dp, s) in self.dp.iter().zip(stats) {
            g.iter_mut().zip(s).for_each(|(gi, si)| *gi += dp * si / w);
        }
        g
    }

    /// `Σ_z e'_z(r_z) (f(z) - ∇Λ)(f(z) - ∇Λ)ᵀ`.
    pub fn hessian(&self, stats: &[Vec<f64>], k: usize) -> DMatrix<f64> {
        let gl = self.lambda_grad(stats, k);
        let mut h = DMatrix::zeros(k, k);
        for (dp, s) in self.dp.iter().zip(stats) {
            let c: Vec<f64> = s.iter().zip(&gl).map(|(a, b)| a - b).collect();
            for i in 0..k {
                for j in 0..k {
                    h[(i, j)] += dp * c[i] * c[j];
                }
            }
        }
        h
    }
}

fn all_members(inst: &Instance) -> Vec<usize> {
    (0..inst.n()).collect()
}

fn full_point(inst: &Instance, theta: &[f64]) -> Result<DualPoint> {
    let s = inst.scores(theta)?;
    dual_point(&inst.beta, &all_members(inst), &s, None, &inst.tol)
}

/// `Λ(θ)`.
pub fn lambda_of_theta(inst: &Instance, theta: &[f64]) -> Result<f64> {
    Ok(full_point(inst, theta)?.lambda)
}

/// `P_θ`.
pub fn pm_of_theta(inst: &Instance, theta: &[f64]) -> Result<Pm> {
    Pm::from_unnormalized(full_point(inst, theta)?.p)
}

/// `μ(P) = Σ_z f(z) P(z)`.
pub fn moment_map(inst: &Instance, p: &Pm) -> Vec<f64> {
    let mut m = vec![0.0; inst.d];
    for (w, c) in p.weights().iter().zip(&inst.columns) {
        m.iter_mut().zip(c).for_each(|(mi, ci)| *mi += w * ci);
    }
    m
}

/// `Υ(θ)`.
pub fn upsilon(inst: &Instance, theta: &[f64]) -> Result<f64> {
    Ok(full_point(inst, theta)?.upsilon(&inst.beta, &all_members(inst)))
}

/// `∇Υ(θ) = μ(P_θ)`.
pub fn upsilon_grad(inst: &Instance, theta: &[f64]) -> Result<Vec<f64>> {
    Ok(full_point(inst, theta)?.moment(&inst.columns, inst.d))
}

/// Hessian of `Υ` at `θ`; positive semidefinite.
pub fn upsilon_hess(inst: &Instance, theta: &[f64]) -> Result<DMatrix<f64>> {
    Ok(full_point(inst, theta)?.hessian(&inst.columns, inst.d))
}

/// Orthonormal basis (rows) of `N(f) = {u : Σ_z f(z) u(z) = 0, Σ_z u(z) = 0}`.
pub fn kernel_basis(inst: &Instance) -> Vec<Vec<f64>> {
    let mut rows = inst.rows();
    rows.push(vec![1.0; inst.n()]);
    let b = orthocomplement_basis(&rows, inst.n());
    (0..b.nrows()).map(|i| b.row(i).iter().copied().collect()).collect()
}

/// Smallest facial set containing `subset`.
///
/// With `m` the mean of `f` over `subset`, `z` belongs to the face iff some
/// pm `Q` with `A Q = m` puts positive mass on `z`.
pub fn facial_set(inst: &Instance, subset: &[usize]) -> Result<FacialSet> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let n = inst.n();
    if let Some(&z) = subset.iter().find(|&&z| z >= n) {
        return Err(Error::InvalidArgument(format!("index {z} outside Z")));
    }
    let mut in_subset = vec![false; n];
    subset.iter().for_each(|&z| in_subset[z] = true);
    if inst.d == 0 {
        return Ok(FacialSet { members: (0..n).collect() });
    }
    let k = subset.iter().filter(|&&z| in_subset[z]).count() as f64;
    let mut target = vec![0.0; inst.d];
    for z in (0..n).filter(|&z| in_subset[z]) {
        target.iter_mut().zip(&inst.columns[z]).for_each(|(t, c)| *t += c / k);
    }
    let mut eq_matrix = inst.rows();
    eq_matrix.push(vec![1.0; n]);
    let mut eq_rhs = target;
    eq_rhs.push(1.0);
    let mut members = Vec::new();
    for z in 0..n {
        if in_subset[z] {
            members.push(z);
            continue;
        }
        let mut objective = vec![0.0; n];
        objective[z] = 1.0;
        let lp = LpProblem { objective, eq_matrix: eq_matrix.clone(), eq_rhs: eq_rhs.clone(), lower_bounds: vec![] };
        if lp_solve(&lp, inst.tol.lp_feas)?.value > inst.tol.lp_feas {
            members.push(z);
        }
    }
    Ok(FacialSet { members })
}

/// A family restricted to a facial set and reparametrized by an orthonormal
/// basis of the directions in which the statistic actually varies, so that
/// the potential is strictly convex in the reduced parameter.
#[derive(Debug, Clone)]
pub(crate) struct ReducedFamily {
    pub members: Vec<usize>,
    /// `k × d`, orthonormal rows.
    pub basis: Vec<Vec<f64>>,
    /// Reduced statistic per member (length `k`).
    pub stats: Vec<Vec<f64>>,
}

impl ReducedFamily {
    pub fn new(inst: &Instance, members: &[usize]) -> Self {
        let c0 = inst.column(members[0]);
        let diffs: Vec<Vec<f64>> =
            members[1..].iter().map(|&z| inst.column(z).iter().zip(c0).map(|(a, b)| a - b).collect()).collect();
        let basis = orthonormal_span(&diffs, inst.d());
        let stats = members
            .iter()
            .map(|&z| {
                let c: Vec<f64> = inst.column(z).iter().zip(c0).map(|(a, b)| a - b).collect();
                basis.iter().map(|b| dot(b, &c)).collect()
            })
            .collect();
        Self { members: members.to_vec(), basis, stats }
    }

    pub fn k(&self) -> usize {
        self.basis.len()
    }

    pub fn point(&self, beta: &BetaSystem, theta: &[f64], hint: Option<f64>, tol: &Tolerances) -> Result<DualPoint> {
        let scores: Vec<f64> = self.stats.iter().map(|s| dot(s, theta)).collect();
        dual_point(beta, &self.members, &scores, hint, tol)
    }

    /// Reduced moment of a weight vector over all of `Z`.
    pub fn moment_of(&self, weights: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.k()];
        for (&z, s) in self.members.iter().zip(&self.stats) {
            m.iter_mut().zip(s).for_each(|(mi, si)| *mi += weights[z] * si);
        }
        m
    }

    /// Parameter of the unreduced family on the same members.
    pub fn full_theta(&self, theta: &[f64], d: usize) -> Vec<f64> {
        let mut t = vec![0.0; d];
        for (b, th) in self.basis.iter().zip(theta) {
            t.iter_mut().zip(b).for_each(|(ti, bi)| *ti += th * bi);
        }
        t
    }
}
