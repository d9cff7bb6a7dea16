//! Maximization of `B(·, E)` over the probability simplex.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::ascent::{ascend, residual, Eval, SimplexObjective};
use crate::error::{Error, Result};
use crate::family::{facial_set, FacialSet, Instance, Pm, ReducedFamily, SUPPORT_EPS};
use crate::numerics::solve_decreasing_root;
use crate::projection::{h_of_weights, project_on_face, rb_project, DualSolution};
use crate::rng::{dirichlet_uniform, seeded};

/// Largest `|Z|` for which all small supports are enumerated.
pub const ENUMERATION_CAP: usize = 8;

const MAX_ASCENT_ITER: usize = 1000;

/// Values below this count as "inside the closure".
const ZERO_VALUE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LocalOptimum {
    pub pm: Pm,
    pub value: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct MaxReport {
    pub global_value: f64,
    pub global_argmax: Pm,
    /// Distinct optima, best first.
    pub local_optima: Vec<LocalOptimum>,
    pub starts: usize,
    pub seed: u64,
    /// Best value among the random and deterministic starts.
    pub multistart_value: f64,
    /// Best value over the enumerated supports, when enumeration ran.
    pub enumeration_value: Option<f64>,
}

struct FaceData {
    face: FacialSet,
    rf: ReducedFamily,
    warm: Option<DualSolution>,
}

/// `P ↦ H(P) - H(Π_P)` with per-support caches.
pub(crate) struct DivergenceObjective<'a> {
    inst: &'a Instance,
    faces: HashMap<Vec<usize>, FaceData>,
}

impl<'a> DivergenceObjective<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        Self { inst, faces: HashMap::new() }
    }
}

impl SimplexObjective for DivergenceObjective<'_> {
    fn eval(&mut self, w: &[f64], active: &[usize]) -> Result<Eval> {
        let inst = self.inst;
        if !self.faces.contains_key(active) {
            let face = facial_set(inst, active)?;
            let rf = ReducedFamily::new(inst, &face.members);
            self.faces.insert(active.to_vec(), FaceData { face, rf, warm: None });
        }
        let fd = self.faces.get_mut(active).expect("inserted above");
        let p = Pm::from_unnormalized(w.to_vec())?;
        let (proj, sol) = project_on_face(inst, &p, fd.face.clone(), &fd.rf, fd.warm.as_ref())?;
        let beta = inst.beta();
        let value = h_of_weights(beta, w) - h_of_weights(beta, proj.pi.weights());
        let idx: Vec<usize> =
            active.iter().map(|z| fd.rf.members.binary_search(z).expect("support inside face")).collect();
        let grad: Vec<f64> =
            active.iter().zip(&idx).map(|(&z, &i)| beta.derivative(z, w[z]) - sol.point.r[i]).collect();
        let k = fd.rf.k();
        let mut hess = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            active.len(),
            active.iter().map(|&z| beta.second_derivative(z, w[z])),
        ));
        if k > 0 {
            let hu = sol.point.hessian(&fd.rf.stats, k);
            let c = DMatrix::from_fn(k, active.len(), |a, j| fd.rf.stats[idx[j]][a]);
            if let Some(ch) = hu.cholesky() {
                hess -= c.transpose() * ch.solve(&c);
            }
        }
        fd.warm = Some(sol);
        Ok(Eval { value, grad, hess: Some(hess) })
    }
}

fn vertex_and_midpoint_starts(n: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..n).map(|z| Pm::delta(n, z).into_weights()).collect();
    for a in 0..n {
        for b in a + 1..n {
            out.push(Pm::uniform_on(n, &[a, b]).into_weights());
        }
    }
    out
}

fn subsets_up_to(n: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u32..(1u32 << n) {
        if mask.count_ones() as usize <= max_size {
            out.push((0..n).filter(|z| mask & (1 << z) != 0).collect());
        }
    }
    out
}

fn lexicographic(a: &Pm, b: &Pm) -> std::cmp::Ordering {
    for (x, y) in a.weights().iter().zip(b.weights()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Deduplicates by total variation (keeping the better value) and sorts best
/// first, ties broken lexicographically.
pub(crate) fn cluster(mut items: Vec<LocalOptimum>, radius: f64) -> Vec<LocalOptimum> {
    items.sort_by(|a, b| b.value.total_cmp(&a.value).then_with(|| lexicographic(&a.pm, &b.pm)));
    let mut out: Vec<LocalOptimum> = Vec::new();
    for it in items {
        if out.iter().all(|o| o.pm.tv_distance(&it.pm) > radius) {
            out.push(it);
        }
    }
    out
}

/// Multistart ascent plus, for small `Z`, exhaustive refinement over all
/// supports of size at most `dim(E) + 1`.
pub fn maximize_divergence(inst: &Instance, starts: usize, seed: u64) -> Result<MaxReport> {
    if starts == 0 {
        return Err(Error::InvalidArgument("starts must be at least 1".into()));
    }
    let n = inst.n();
    let mut rng = seeded(seed);
    let mut obj = DivergenceObjective::new(inst);
    let mut run = |w: &[f64]| -> Result<LocalOptimum> {
        let r = ascend(&mut obj, w, MAX_ASCENT_ITER)?;
        let pm = Pm::from_unnormalized(r.weights)?;
        Ok(LocalOptimum { pm, value: r.value.max(0.0), residual: r.residual })
    };

    let mut found = Vec::new();
    let mut initial: Vec<Vec<f64>> = (0..starts).map(|_| dirichlet_uniform(&mut rng, n)).collect();
    initial.extend(vertex_and_midpoint_starts(n));
    for w in &initial {
        found.push(run(w)?);
    }
    let multistart_value = found.iter().map(|o| o.value).fold(0.0, f64::max);

    let mut enumeration_value = None;
    if n <= ENUMERATION_CAP {
        let mut best = 0.0_f64;
        for s in subsets_up_to(n, inst.family_dim() + 1) {
            let o = run(Pm::uniform_on(n, &s).weights())?;
            best = best.max(o.value);
            found.push(o);
        }
        enumeration_value = Some(best);
    }

    let positive: Vec<LocalOptimum> = found.iter().filter(|o| o.value > ZERO_VALUE).cloned().collect();
    let pool = if positive.is_empty() { found } else { positive };
    let mut local_optima = cluster(pool, inst.tol.cluster_tv);
    for o in &mut local_optima {
        o.residual = criticality_residual(inst, &o.pm)?;
    }
    let best = &local_optima[0];
    Ok(MaxReport {
        global_value: best.value,
        global_argmax: best.pm.clone(),
        local_optima: local_optima.clone(),
        starts,
        seed,
        multistart_value,
        enumeration_value,
    })
}

fn in_closure(p: &Pm, pi: &Pm) -> bool {
    p.tv_distance(pi) <= 1e-9
}

/// `max_{z ∈ supp P} |l_z(P(z)) - l_z(Π_P(z)) - c̄|`; zero for members of the closure.
pub fn criticality_residual(inst: &Instance, p: &Pm) -> Result<f64> {
    let proj = rb_project(inst, p)?;
    if in_closure(p, &proj.pi) {
        return Ok(0.0);
    }
    let beta = inst.beta();
    let g: Vec<f64> =
        p.support().into_iter().map(|z| beta.derivative(z, p[z]) - beta.derivative(z, proj.pi[z])).collect();
    Ok(residual(&g))
}

/// Necessary conditions at a local maximizer: with `u = P - Π_P`,
/// `supp(u⁺) = supp(P)`, and the constant `c` solving
/// `Σ_{z ∈ supp P} e_z(l_z(Π_P(z)) + c) = 1` is positive.
pub fn check_positive_gap(inst: &Instance, p: &Pm) -> Result<(bool, f64)> {
    let proj = rb_project(inst, p)?;
    if in_closure(p, &proj.pi) {
        return Ok((true, 0.0));
    }
    let beta = inst.beta();
    let supp = p.support();
    let plus: Vec<usize> = (0..inst.n()).filter(|&z| p[z] - proj.pi[z] > SUPPORT_EPS).collect();
    if plus != supp {
        return Err(Error::ViolatedNecessaryCondition(format!("supp(u+) = {plus:?} differs from supp(P) = {supp:?}")));
    }
    let base: Vec<f64> = supp.iter().map(|&z| beta.derivative(z, proj.pi[z])).collect();
    // Σ e(base + c) is increasing in c; solve in r = -c
    let r = solve_decreasing_root(
        |r| supp.iter().zip(&base).map(|(&z, &b)| beta.link(z, b - r)).sum(),
        1.0,
        0.0,
        &inst.tol,
    )?;
    let c = -r;
    if !(c > 0.0) {
        return Err(Error::ViolatedNecessaryCondition(format!("gap constant c = {c} is not positive")));
    }
    Ok((true, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beta::BetaSystem;
    use crate::numerics::fd_gradient;
    use crate::projection::div_from_family;
    use std::f64::consts::LN_2;

    fn independence(beta: BetaSystem) -> Instance {
        Instance::unlabeled(&[vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 1.0, 0.0, 1.0]], beta).unwrap()
    }

    #[test]
    fn full_family_has_zero_maximum() {
        let inst = Instance::unlabeled(
            &[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            BetaSystem::make_classical(&[0.3, 1.0, 2.0]).unwrap(),
        )
        .unwrap();
        let r = maximize_divergence(&inst, 4, 1).unwrap();
        assert!(r.global_value < 1e-10);
    }

    #[test]
    fn point_family_maximum_at_vertex() {
        let inst = Instance::unlabeled(&[], BetaSystem::make_classical(&[1.0 / 3.0; 3]).unwrap()).unwrap();
        let r = maximize_divergence(&inst, 8, 3).unwrap();
        assert!((r.global_value - 3f64.ln()).abs() < 1e-9);
        assert_eq!(r.global_argmax.support().len(), 1);
        assert_eq!(r.local_optima.len(), 3);
    }

    #[test]
    fn independence_maximum() {
        let inst = independence(BetaSystem::make_classical(&[1.0; 4]).unwrap());
        let r = maximize_divergence(&inst, 16, 7).unwrap();
        assert!((r.global_value - LN_2).abs() < 1e-9, "{}", r.global_value);
        assert!((r.multistart_value - r.enumeration_value.unwrap()).abs() < 1e-9);
        let diag = Pm::new(vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let anti = Pm::new(vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        assert!(r.global_argmax.tv_distance(&diag) < 1e-6 || r.global_argmax.tv_distance(&anti) < 1e-6);
        for o in &r.local_optima {
            assert!(o.residual <= 1e-6);
            let (ok, c) = check_positive_gap(&inst, &o.pm).unwrap();
            assert!(ok && c > 0.0);
        }
    }

    #[test]
    fn criticality_and_gap_conditions() {
        let inst = independence(BetaSystem::make_classical(&[1.0; 4]).unwrap());
        let diag = Pm::new(vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!(criticality_residual(&inst, &diag).unwrap() < 1e-9);
        assert_eq!(criticality_residual(&inst, &Pm::uniform(4)).unwrap(), 0.0);
        assert_eq!(check_positive_gap(&inst, &Pm::uniform(4)).unwrap(), (true, 0.0));
        let perturbed = Pm::new(vec![0.45, 0.05, 0.0, 0.5]).unwrap();
        assert!(matches!(check_positive_gap(&inst, &perturbed), Err(Error::ViolatedNecessaryCondition(_))));
        let interior = Pm::new(vec![0.4, 0.1, 0.2, 0.3]).unwrap();
        assert!(criticality_residual(&inst, &interior).unwrap() > 1e-3);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let beta = BetaSystem::make_entropy_quadratic(&[0.5, 1.0, 2.0, 0.3, 1.5]).unwrap();
        let inst = Instance::unlabeled(&[vec![0.0, 1.0, 2.0, 1.0, 0.5]], beta).unwrap();
        let w = [0.1, 0.3, 0.15, 0.25, 0.2];
        let active: Vec<usize> = (0..5).collect();
        let mut obj = DivergenceObjective::new(&inst);
        let ev = obj.eval(&w, &active).unwrap();
        // directional derivatives along tangent directions
        let f = |x: &[f64]| {
            let mut full = w.to_vec();
            for i in 0..4 {
                full[i] += x[i];
            }
            full[4] -= x.iter().sum::<f64>();
            div_from_family(&inst, &Pm::from_unnormalized(full).unwrap()).unwrap()
        };
        let fd = fd_gradient(f, &[0.0; 4], 1e-6);
        for (i, d) in fd.iter().enumerate() {
            let exact = ev.grad[i] - ev.grad[4];
            assert!((exact - d).abs() < 1e-6, "{i}: {exact} vs {d}");
        }
        // tangent Hessian against differences of the gradient
        let h = ev.hess.unwrap();
        let e = 1e-6;
        let mut w2 = w;
        w2[0] += e;
        w2[4] -= e;
        let g2 = obj.eval(&w2, &active).unwrap().grad;
        let fd_dir = ((g2[1] - g2[4]) - (ev.grad[1] - ev.grad[4])) / e;
        let exact = (h[(1, 0)] - h[(1, 4)]) - (h[(4, 0)] - h[(4, 4)]);
        assert!((fd_dir - exact).abs() < 1e-4 * exact.abs().max(1.0), "{fd_dir} vs {exact}");
    }
}
