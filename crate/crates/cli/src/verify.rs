//! Numerical verification suite: module invariants plus the relations
//! between maximizers of `B(·, E)` and of `B̄`.
//!
//! Every check draws from its own seed, derived from the run seed and the
//! check's position in [`CHECK_NAMES`], so any single check can be rerun.

use bregmax::bbar::{
    bbar_classical, bbar_eval, bbar_eval_on, classify_side, family_from_direction, maximize_bbar, normalize_direction,
    psi, Direction, Side,
};
use bregmax::beta::BetaSystem;
use bregmax::family::{
    facial_set, kernel_basis, lambda_of_theta, moment_map, pm_of_theta, upsilon, upsilon_grad, upsilon_hess, Instance,
    Pm, SUPPORT_EPS,
};
use bregmax::maximize::{check_positive_gap, maximize_divergence, MaxReport};
use bregmax::numerics::fd_gradient;
use bregmax::projection::{bregman_div, div_from_family, h_energy, rb_project};
use bregmax::rng::{derive_seed, dirichlet_uniform, gaussian_vec, seeded};
use bregmax::Error;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::commands::{CLASSICAL_ORACLE_TOL, CRITICALITY_TOL, ENUMERATION_AGREEMENT_TOL};
use crate::error::CliResult;
use crate::oracle::brute_force_facial_set;
use crate::report::{finish, Output};

/// Every check the suite runs, in report order.
pub const CHECK_NAMES: &[&str] = &[
    "beta_inverse_pair",
    "beta_convexity",
    "legendre_identity",
    "legendre_grid",
    "lambda_residual",
    "pm_normalization",
    "upsilon_gradient",
    "upsilon_hessian_psd",
    "kernel_orthogonality",
    "facial_set_closure",
    "facial_set_brute_force",
    "divergence_nonnegative",
    "moment_match",
    "support_law",
    "dual_gap",
    "energy_identity",
    "idempotence",
    "h_minimality",
    "projection_infimum",
    "max_criticality",
    "positive_gap",
    "small_support",
    "multistart_vs_enumeration",
    "global_equivalence",
    "bbar_positive_side",
    "argmax_support",
    "fiber_identity",
    "basis_independence",
    "bbar_classical_oracle",
    "inequality_psi",
    "inequality_phi",
    "roundtrip_phi_psi",
    "roundtrip_psi_phi",
    "equality_at_maximizers",
];

/// Largest `|Z|` for which facial sets are compared with brute force.
pub const BRUTE_FORCE_CAP: usize = 6;
pub const EQUIVALENCE_TOL: f64 = 1e-3;
pub const INEQUALITY_TOL: f64 = 1e-7;

const SAMPLES: usize = 50;
const PROJECTION_SAMPLES: usize = 30;
const FIBER_SAMPLES: usize = 200;
const BBAR_SAMPLES: usize = 8;
/// Starts for each sampled `B̄` evaluation.
const BBAR_STARTS: usize = 8;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: &'static str,
    pub instances: usize,
    /// `null` when a sample errored.
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

struct Check {
    rec: CheckRecord,
}

impl Check {
    fn new(name: &'static str, tolerance: f64, seed: u64) -> Self {
        assert!(CHECK_NAMES.contains(&name), "unlisted check {name}");
        let rec = CheckRecord {
            name,
            instances: 0,
            max_violation: 0.0,
            tolerance,
            passed: true,
            seeds: vec![seed],
            note: None,
        };
        Self { rec }
    }

    fn record(&mut self, violation: f64) {
        self.rec.instances += 1;
        if violation.is_nan() {
            self.rec.max_violation = f64::INFINITY;
        } else {
            self.rec.max_violation = self.rec.max_violation.max(violation);
        }
        if !(violation <= self.rec.tolerance) {
            self.rec.passed = false;
        }
    }

    fn fail(&mut self, e: impl std::fmt::Display) {
        self.rec.instances += 1;
        self.rec.max_violation = f64::INFINITY;
        self.rec.passed = false;
        if self.rec.note.is_none() {
            self.rec.note = Some(e.to_string());
        }
    }

    fn note(&mut self, s: &str) {
        self.rec.note.get_or_insert_with(|| s.to_string());
    }

    /// Records `r`'s violation, or its error as a failure.
    fn result(&mut self, r: bregmax::Result<f64>) {
        match r {
            Ok(v) => self.record(v),
            Err(e) => self.fail(e),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub starts: usize,
    pub n: usize,
    pub d: usize,
    pub max_divergence: f64,
    pub max_bbar: f64,
    pub checks: Vec<CheckRecord>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Suite<'a> {
    inst: &'a Instance,
    seed: u64,
    checks: Vec<CheckRecord>,
}

impl Suite<'_> {
    fn start(&self, name: &'static str, tolerance: f64) -> (Check, ChaCha8Rng) {
        let index = CHECK_NAMES.iter().position(|n| *n == name).expect("listed check");
        let s = derive_seed(self.seed, index as u64);
        (Check::new(name, tolerance, s), seeded(s))
    }

    fn push(&mut self, c: Check) {
        self.checks.push(c.rec);
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_r(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-5.0..5.0)
}

/// A Dirichlet pm on a random nonempty support.
fn random_pm(rng: &mut ChaCha8Rng, n: usize) -> Pm {
    let mut supp: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.7)).collect();
    if supp.is_empty() {
        supp.push(rng.random_range(0..n));
    }
    let w = dirichlet_uniform(rng, supp.len());
    let mut full = vec![0.0; n];
    for (&z, x) in supp.iter().zip(w) {
        full[z] = x;
    }
    Pm::from_unnormalized(full).expect("dirichlet weights are a pm")
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Direction {
    loop {
        let g = gaussian_vec(rng, n, 1.0);
        let m = g.iter().sum::<f64>() / n as f64;
        if let Ok(u) = normalize_direction(&g.iter().map(|x| x - m).collect::<Vec<_>>()) {
            return u;
        }
    }
}

/// A random nonzero element of `N(f)`, if the kernel is nontrivial.
fn random_kernel_direction(rng: &mut ChaCha8Rng, basis: &[Vec<f64>]) -> Option<Direction> {
    if basis.is_empty() {
        return None;
    }
    loop {
        let c = gaussian_vec(rng, basis.len(), 1.0);
        let mut u = vec![0.0; basis[0].len()];
        for (b, ci) in basis.iter().zip(&c) {
            u.iter_mut().zip(b).for_each(|(x, y)| *x += ci * y);
        }
        let m = u.iter().sum::<f64>() / u.len() as f64;
        if let Ok(d) = normalize_direction(&u.iter().map(|x| x - m).collect::<Vec<_>>()) {
            return Some(d);
        }
    }
}

/// `sup_x (r x - β(x))` by a log-spaced grid and golden-section refinement.
pub fn legendre_sup(beta: &BetaSystem, z: usize, r: f64) -> f64 {
    let g = |x: f64| r * x - beta.value(z, x);
    let (lo, hi, steps) = (-40.0_f64, 15.0_f64, 5500);
    let xs: Vec<f64> = (0..=steps).map(|i| (lo + (hi - lo) * i as f64 / steps as f64).exp()).collect();
    let best = (0..xs.len()).max_by(|&a, &b| g(xs[a]).total_cmp(&g(xs[b]))).expect("nonempty grid");
    let mut a = if best == 0 { 0.0 } else { xs[best - 1] };
    let mut b = xs[(best + 1).min(steps)];
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if g(c) > g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    g(0.5 * (a + b)).max(g(0.0))
}

fn beta_checks(s: &mut Suite) {
    let beta = s.inst.beta();
    let n = s.inst.n();

    let (mut c, mut rng) = s.start("beta_inverse_pair", 1e-8);
    for z in 0..n {
        for _ in 0..SAMPLES {
            let r = random_r(&mut rng);
            let x = beta.link(z, r);
            c.record((beta.derivative(z, x) - r).abs());
        }
    }
    s.push(c);

    let (mut c, mut rng) = s.start("beta_convexity", 0.0);
    for z in 0..n {
        for _ in 0..SAMPLES {
            let x1 = rng.random_range(1e-3..10.0);
            let x2 = x1 + rng.random_range(1e-3..10.0);
            c.record(if beta.derivative(z, x1) < beta.derivative(z, x2) { 0.0 } else { 1.0 });
        }
    }
    s.push(c);

    let (mut c, mut rng) = s.start("legendre_identity", 1e-9);
    for z in 0..n {
        for _ in 0..SAMPLES {
            let r = random_r(&mut rng);
            let e = beta.link(z, r);
            let lhs = beta.value(z, e);
            let rhs = r * e - beta.conjugate(z, r);
            c.record((lhs - rhs).abs() / lhs.abs().max(1.0));
        }
    }
    s.push(c);

    let (mut c, mut rng) = s.start("legendre_grid", 1e-6);
    for z in 0..n {
        for _ in 0..10 {
            let r = random_r(&mut rng);
            let conj = beta.conjugate(z, r);
            c.record((legendre_sup(beta, z, r) - conj).abs() / conj.abs().max(1.0));
        }
    }
    s.push(c);
}

fn family_checks(s: &mut Suite) {
    let inst = s.inst;
    let beta = inst.beta();
    let (n, d) = (inst.n(), inst.d());
    let cols: Vec<Vec<f64>> = (0..n).map(|z| inst.column(z).to_vec()).collect();

    let (mut c, mut rng) = s.start("lambda_residual", 1e-10);
    for _ in 0..SAMPLES {
        let th = gaussian_vec(&mut rng, d, 1.0);
        c.result(lambda_of_theta(inst, &th).map(|lam| {
            let total: f64 =
                (0..n).map(|z| beta.link(z, cols[z].iter().zip(&th).map(|(a, b)| a * b).sum::<f64>() - lam)).sum();
            (total - 1.0).abs()
        }));
    }
    s.push(c);

    let (mut c, mut rng) = s.start("pm_normalization", 1e-10);
    for _ in 0..SAMPLES {
        let th = gaussian_vec(&mut rng, d, 1.0);
        c.result(pm_of_theta(inst, &th).map(|p| {
            if p.weights().iter().all(|&x| x > 0.0) {
                (p.weights().iter().sum::<f64>() - 1.0).abs()
            } else {
                f64::INFINITY
            }
        }));
    }
    s.push(c);

    let (mut c, mut rng) = s.start("upsilon_gradient", 1e-5);
    if d == 0 {
        c.note("no parameters");
    }
    for _ in 0..if d == 0 { 0 } else { SAMPLES } {
        let th = gaussian_vec(&mut rng, d, 1.0);
        c.result(upsilon_grad(inst, &th).map(|g| {
            let fd = fd_gradient(|t| upsilon(inst, t).unwrap_or(f64::NAN), &th, inst.tol.fd_step);
            let scale = g.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            max_abs_diff(&g, &fd) / scale
        }));
    }
    s.push(c);

    let (mut c, mut rng) = s.start("upsilon_hessian_psd", 1e-8);
    if d == 0 {
        c.note("no parameters");
    }
    for _ in 0..if d == 0 { 0 } else { SAMPLES } {
        let th = gaussian_vec(&mut rng, d, 1.0);
        c.result(upsilon_hess(inst, &th).map(|h| {
            let scale = h.amax().max(1.0);
            (-h.symmetric_eigenvalues().min()).max(0.0) / scale
        }));
    }
    s.push(c);

    let (mut c, _) = s.start("kernel_orthogonality", 1e-10);
    let basis = kernel_basis(inst);
    for b in &basis {
        let sum = b.iter().sum::<f64>().abs();
        let fu = inst.rows().iter().map(|r| r.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().abs()).fold(0.0, f64::max);
        c.record(sum.max(fu));
    }
    if n - basis.len() != inst.family_dim() + 1 {
        c.fail(format!("kernel dimension {} does not match family dimension {}", basis.len(), inst.family_dim()));
    }
    s.push(c);

    let (mut c, mut rng) = s.start("facial_set_closure", 0.0);
    for _ in 0..SAMPLES {
        let subset = random_pm(&mut rng, n).support();
        let r = facial_set(inst, &subset).and_then(|f| {
            let again = facial_set(inst, &f.members)?;
            let contains = subset.iter().all(|z| f.members.contains(z));
            Ok(if contains && again == f { 0.0 } else { 1.0 })
        });
        c.result(r);
    }
    s.push(c);

    let (mut c, mut rng) = s.start("facial_set_brute_force", 0.0);
    if n > BRUTE_FORCE_CAP {
        c.note("|Z| above the brute-force cap");
    } else {
        for _ in 0..SAMPLES {
            let subset = random_pm(&mut rng, n).support();
            let oracle = brute_force_facial_set(&cols, &subset);
            c.result(facial_set(inst, &subset).map(|f| if f.members == oracle { 0.0 } else { 1.0 }));
        }
    }
    s.push(c);
}

fn projection_checks(s: &mut Suite) {
    let inst = s.inst;
    let beta = inst.beta();
    let (n, d) = (inst.n(), inst.d());

    let (mut c, mut rng) = s.start("divergence_nonnegative", 0.0);
    for _ in 0..SAMPLES {
        let u = random_pm(&mut rng, n);
        let v = random_pm(&mut rng, n);
        c.result(bregman_div(beta, u.weights(), v.weights()).and_then(|b| {
            let diag = bregman_div(beta, u.weights(), u.weights())?;
            Ok((-b).max(0.0) + diag.abs())
        }));
    }
    s.push(c);

    let mut pms = Vec::new();
    let (_, mut rng) = s.start("moment_match", 0.0);
    for _ in 0..PROJECTION_SAMPLES {
        pms.push(random_pm(&mut rng, n));
    }
    let projections: Vec<_> = pms.iter().map(|p| rb_project(inst, p)).collect();

    let (mut c, _) = s.start("moment_match", 1e-8);
    for (p, r) in pms.iter().zip(&projections) {
        match r {
            Ok(r) => c.record(max_abs_diff(&moment_map(inst, p), &moment_map(inst, &r.pi))),
            Err(e) => c.fail(e),
        }
    }
    s.push(c);

    let (mut c, _) = s.start("support_law", 0.0);
    for (p, r) in pms.iter().zip(&projections) {
        let Ok(r) = r else { continue };
        c.result(facial_set(inst, &p.support()).map(|f| if r.pi.support() == f.members { 0.0 } else { 1.0 }));
    }
    s.push(c);

    let (mut c, _) = s.start("dual_gap", 1e-7);
    for r in projections.iter().flatten() {
        c.record(r.dual_gap);
    }
    s.push(c);

    let (mut c, _) = s.start("energy_identity", 1e-7);
    for (p, r) in pms.iter().zip(&projections) {
        let Ok(r) = r else { continue };
        c.result(bregman_div(beta, p.weights(), r.pi.weights()).map(|b| (b - r.value).abs()));
    }
    s.push(c);

    let (mut c, _) = s.start("idempotence", 1e-9);
    for r in projections.iter().flatten() {
        c.result(rb_project(inst, &r.pi).map(|again| again.value.max(r.pi.tv_distance(&again.pi))));
    }
    s.push(c);

    let (mut c, mut rng) = s.start("h_minimality", 1e-8);
    let basis = kernel_basis(inst);
    if basis.is_empty() {
        c.note("trivial kernel: fibers are single points");
    } else {
        for r in projections.iter().flatten().take(5) {
            let h_pi = h_energy(beta, &r.pi);
            let mut accepted = 0;
            let mut tries = 0;
            while accepted < FIBER_SAMPLES && tries < 100 * FIBER_SAMPLES {
                tries += 1;
                let coef = gaussian_vec(&mut rng, basis.len(), 1.0);
                let mag = rng.random_range(0.0..1.0_f64).powi(3);
                let mut q = r.pi.weights().to_vec();
                for (b, ci) in basis.iter().zip(&coef) {
                    q.iter_mut().zip(b).for_each(|(x, y)| *x += mag * ci * y);
                }
                if q.iter().any(|&x| x < 0.0) {
                    continue;
                }
                let Ok(q) = Pm::from_unnormalized(q) else {
                    continue;
                };
                accepted += 1;
                c.record((h_pi - h_energy(beta, &q)).max(0.0));
            }
        }
    }
    s.push(c);

    let (mut c, mut rng) = s.start("projection_infimum", 1e-9);
    for (p, r) in pms.iter().zip(&projections).take(10) {
        let Ok(r) = r else { continue };
        for _ in 0..10 {
            let th = gaussian_vec(&mut rng, d, 1.0);
            c.result(
                pm_of_theta(inst, &th)
                    .and_then(|q| bregman_div(beta, p.weights(), q.weights()))
                    .map(|b| (r.value - b).max(0.0)),
            );
        }
    }
    s.push(c);
}

fn maximize_checks(s: &mut Suite, starts: usize) -> Option<MaxReport> {
    let inst = s.inst;
    let (mut crit, _) = s.start("max_criticality", CRITICALITY_TOL);
    let report = match maximize_divergence(inst, starts, crit.rec.seeds[0]) {
        Ok(r) => r,
        Err(e) => {
            crit.fail(&e);
            s.push(crit);
            for name in ["positive_gap", "small_support", "multistart_vs_enumeration"] {
                let (mut c, _) = s.start(name, 0.0);
                c.fail(&e);
                s.push(c);
            }
            return None;
        }
    };
    for o in &report.local_optima {
        crit.record(o.residual);
    }
    s.push(crit);

    let (mut c, _) = s.start("positive_gap", 0.0);
    for o in &report.local_optima {
        match check_positive_gap(inst, &o.pm) {
            Ok((true, _)) => c.record(0.0),
            Ok((false, _)) => c.record(1.0),
            Err(e) => c.fail(e),
        }
    }
    s.push(c);

    let (mut c, _) = s.start("small_support", 0.0);
    let cap = inst.family_dim() + 1;
    c.record(report.global_argmax.support().len().saturating_sub(cap) as f64);
    s.push(c);

    let (mut c, _) = s.start("multistart_vs_enumeration", ENUMERATION_AGREEMENT_TOL);
    match report.enumeration_value {
        Some(ev) => c.record((ev - report.multistart_value).abs()),
        None => c.note("|Z| above the enumeration cap"),
    }
    s.push(c);
    Some(report)
}

/// Rotates the statistic rows of `inst_u` by a random orthogonal matrix.
fn rotated(inst_u: &Instance, rng: &mut ChaCha8Rng) -> bregmax::Result<Instance> {
    let k = inst_u.d();
    let g = DMatrix::from_fn(k, k, |_, _| gaussian_vec(rng, 1, 1.0)[0]);
    let q = g.qr().q();
    let rows = inst_u.rows();
    let new_rows: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut r = vec![0.0; inst_u.n()];
            for (j, row) in rows.iter().enumerate() {
                r.iter_mut().zip(row).for_each(|(x, y)| *x += q[(i, j)] * y);
            }
            r
        })
        .collect();
    Ok(Instance::unlabeled(&new_rows, inst_u.beta().clone())?.with_tolerances(inst_u.tol))
}

fn bbar_checks(s: &mut Suite, starts: usize, max: Option<&MaxReport>) -> f64 {
    let inst = s.inst;
    let beta = inst.beta();
    let n = inst.n();
    let basis = kernel_basis(inst);

    let (mut c, _) = s.start("global_equivalence", EQUIVALENCE_TOL);
    let max_bbar = match maximize_bbar(inst, starts, c.rec.seeds[0]) {
        Ok(m) => Some(m.value),
        Err(Error::TrivialKernel) => {
            c.note("trivial kernel: max of B-bar taken as 0");
            Some(0.0)
        }
        Err(e) => {
            c.fail(e);
            None
        }
    };
    if let (Some(mb), Some(m)) = (max_bbar, max) {
        c.record((m.global_value - mb).abs());
    }
    s.push(c);

    let (mut side, mut rng) = s.start("bbar_positive_side", 0.0);
    let (mut supp, _) = s.start("argmax_support", 0.0);
    let (mut fiber, mut frng) = s.start("fiber_identity", 1e-8);
    for _ in 0..if n < 2 { 0 } else { BBAR_SAMPLES } {
        let u = random_direction(&mut rng, n);
        let inst_u = match family_from_direction(beta, &u) {
            Ok(i) => i.with_tolerances(inst.tol),
            Err(e) => {
                side.fail(e);
                continue;
            }
        };
        match bbar_eval_on(&inst_u, &u, BBAR_STARTS, side.rec.seeds[0]) {
            Ok(r) => {
                let plus = classify_side(&inst_u, &r.argmax, &u);
                side.record(if r.value > 0.0 && plus == Ok(Side::Plus) { 0.0 } else { 1.0 });
                let pos: Vec<usize> = (0..n).filter(|&z| r.argmax[z] - r.base[z] > SUPPORT_EPS).collect();
                supp.record(if pos == r.argmax.support() { 0.0 } else { 1.0 });
            }
            Err(e) => side.fail(e),
        }
        let th = gaussian_vec(&mut frng, inst_u.d(), 1.0);
        let r = pm_of_theta(&inst_u, &th).and_then(|q| {
            let t_max = (0..n).filter(|&z| u.u[z] < 0.0).map(|z| q[z] / -u.u[z]).fold(f64::INFINITY, f64::min);
            let t = frng.random_range(0.0..1.0) * t_max;
            let p: Vec<f64> = (0..n).map(|z| (q[z] + t * u.u[z]).max(0.0)).collect();
            let proj = rb_project(&inst_u, &Pm::from_unnormalized(p)?)?;
            Ok(max_abs_diff(proj.pi.weights(), q.weights()))
        });
        fiber.result(r);
    }
    s.push(side);
    s.push(supp);
    s.push(fiber);

    let (mut c, mut rng) = s.start("basis_independence", 1e-7);
    for _ in 0..if n < 3 { 0 } else { BBAR_SAMPLES / 2 } {
        let u = random_direction(&mut rng, n);
        let r = family_from_direction(beta, &u).and_then(|a| {
            let a = a.with_tolerances(inst.tol);
            let b = rotated(&a, &mut rng)?;
            let va = bbar_eval_on(&a, &u, BBAR_STARTS, c.rec.seeds[0])?.value;
            let vb = bbar_eval_on(&b, &u, BBAR_STARTS, c.rec.seeds[0])?.value;
            Ok((va - vb).abs())
        });
        c.result(r);
    }
    if n < 3 {
        c.note("no statistic rows in F_u");
    }
    s.push(c);

    let (mut c, mut rng) = s.start("bbar_classical_oracle", CLASSICAL_ORACLE_TOL);
    if beta.classical_reference().is_none() {
        c.note("generators are not classical");
    } else {
        for _ in 0..if n < 2 { 0 } else { BBAR_SAMPLES } {
            let u = random_direction(&mut rng, n);
            let r = bbar_eval(beta, &u, BBAR_STARTS, c.rec.seeds[0])
                .and_then(|r| Ok((r.value - bbar_classical(beta, &u)?).abs()));
            c.result(r);
        }
    }
    s.push(c);

    let (mut c, mut rng) = s.start("inequality_psi", INEQUALITY_TOL);
    let mut tries = 0;
    while c.rec.instances < BBAR_SAMPLES && tries < 10 * BBAR_SAMPLES {
        tries += 1;
        let p = random_pm(&mut rng, n);
        let u = match psi(inst, &p) {
            Ok(u) => u,
            Err(Error::MemberOfClosure) => continue,
            Err(e) => {
                c.fail(e);
                continue;
            }
        };
        let r = div_from_family(inst, &p)
            .and_then(|b| Ok((b - bbar_eval(beta, &u, BBAR_STARTS, c.rec.seeds[0])?.value).max(0.0)));
        c.result(r);
    }
    if c.rec.instances == 0 {
        c.note("every sampled pm lies in the closure of the family");
    }
    s.push(c);

    let (mut c, mut rng) = s.start("inequality_phi", INEQUALITY_TOL);
    if basis.is_empty() {
        c.note("trivial kernel");
    }
    for _ in 0..if basis.is_empty() { 0 } else { BBAR_SAMPLES } {
        let u = random_kernel_direction(&mut rng, &basis).expect("nontrivial kernel");
        let r = bbar_eval(beta, &u, BBAR_STARTS, c.rec.seeds[0])
            .and_then(|r| Ok((r.value - div_from_family(inst, &r.argmax)?).max(0.0)));
        c.result(r);
    }
    s.push(c);

    let (mut phi_psi, _) = s.start("roundtrip_phi_psi", 1e-6);
    let (mut psi_phi, _) = s.start("roundtrip_psi_phi", 1e-6);
    let (mut eq, _) = s.start("equality_at_maximizers", INEQUALITY_TOL);
    let optima: Vec<_> = max.map_or(vec![], |m| m.local_optima.iter().filter(|o| o.value > 1e-8).collect());
    if optima.is_empty() {
        for c in [&mut phi_psi, &mut psi_phi, &mut eq] {
            c.note("no local maximizer with positive value");
        }
    }
    for o in optima {
        let u = match psi(inst, &o.pm) {
            Ok(u) => u,
            Err(e) => {
                phi_psi.fail(e);
                continue;
            }
        };
        match bbar_eval(beta, &u, starts, phi_psi.rec.seeds[0]) {
            Ok(r) => {
                phi_psi.record(r.argmax.tv_distance(&o.pm));
                eq.record((r.value - o.value).abs());
                psi_phi.result(psi(inst, &r.argmax).map(|back| max_abs_diff(&back.u, &u.u)));
            }
            Err(e) => phi_psi.fail(e),
        }
    }
    s.push(phi_psi);
    s.push(psi_phi);
    s.push(eq);

    max_bbar.unwrap_or(f64::NAN)
}

/// Runs every check in [`CHECK_NAMES`]. `starts` is the multistart budget
/// of both global searches.
pub fn run_verify(inst: &Instance, seed: u64, starts: usize) -> VerifyReport {
    let mut s = Suite { inst, seed, checks: Vec::new() };
    beta_checks(&mut s);
    family_checks(&mut s);
    projection_checks(&mut s);
    let max = maximize_checks(&mut s, starts.max(1));
    let max_bbar = bbar_checks(&mut s, starts.max(1), max.as_ref());
    let order = |name: &str| CHECK_NAMES.iter().position(|n| *n == name);
    s.checks.sort_by_key(|c| order(c.name));
    VerifyReport {
        seed,
        starts,
        n: inst.n(),
        d: inst.d(),
        max_divergence: max.map_or(f64::NAN, |m| m.global_value),
        max_bbar,
        checks: s.checks,
    }
}

pub fn cmd_verify(inst: &Instance, seed: u64, starts: usize) -> CliResult<Output> {
    let report = run_verify(inst, seed, starts);
    let passed = report.passed();
    Ok(finish("verify", &report, passed))
}
