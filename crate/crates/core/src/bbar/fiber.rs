//! The objective `P ↦ B(P, F_u)` on the simplex over `supp(u⁺)`.
//!
//! For such `P` the projection onto `F_u` is `q = P - t u` where `t` is the
//! unique root in `(0, min_{u⁺} P/u)` of `φ(t) = Σ_{supp u} u_z l_z(P_z - t u_z)`.

use nalgebra::DMatrix;

use crate::ascent::{Eval, SimplexObjective};
use crate::beta::BetaSystem;
use crate::error::{Error, Result};
use crate::numerics::{solve_decreasing_root_with, Tolerances};

fn sigmoid(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

pub(crate) struct FiberPoint {
    /// `q = P - t u` over all of `Z`.
    pub q: Vec<f64>,
    pub value: f64,
}

pub(crate) struct Fiber<'a> {
    beta: &'a BetaSystem,
    u: &'a [f64],
    pub plus: Vec<usize>,
    minus: Vec<usize>,
    last_s: f64,
    tol: Tolerances,
}

impl<'a> Fiber<'a> {
    pub fn new(beta: &'a BetaSystem, u: &'a [f64], tol: Tolerances) -> Self {
        let plus = (0..u.len()).filter(|&z| u[z] > 0.0).collect();
        let minus = (0..u.len()).filter(|&z| u[z] < 0.0).collect();
        Self { beta, u, plus, minus, last_s: 0.0, tol }
    }

    /// Projection data for `w` supported exactly on `supp(u⁺)`.
    pub fn point(&mut self, w: &[f64]) -> Result<FiberPoint> {
        let (beta, u) = (self.beta, self.u);
        if self.plus.iter().any(|&z| !(w[z] > 0.0)) {
            return Err(Error::InvalidArgument("pm does not cover supp(u+)".into()));
        }
        let t_hi = self.plus.iter().map(|&z| w[z] / u[z]).fold(f64::INFINITY, f64::min);
        let slack: Vec<f64> = self.plus.iter().map(|&z| (w[z] - t_hi * u[z]).max(0.0)).collect();
        // t = t_hi σ(s); the distance to t_hi is t_hi σ(-s), kept separately
        // so that the blocking coordinate of q does not cancel
        let q_at = |s: f64| -> (f64, Vec<f64>, Vec<f64>) {
            let t = t_hi * sigmoid(s);
            let gap = t_hi * sigmoid(-s);
            let qp = self.plus.iter().zip(&slack).map(|(&z, sl)| sl + gap * u[z]).collect();
            let qm = self.minus.iter().map(|&z| -t * u[z]).collect();
            (t, qp, qm)
        };
        let phi = |s: f64| -> (f64, f64) {
            let (t, qp, qm) = q_at(s);
            let mut v = 0.0;
            let mut d = 0.0;
            for (&z, &q) in self.plus.iter().zip(&qp).chain(self.minus.iter().zip(&qm)) {
                v += u[z] * beta.derivative(z, q);
                d += u[z] * u[z] * beta.second_derivative(z, q);
            }
            let dt = t * sigmoid(-s);
            (v, -d * dt)
        };
        let s = solve_decreasing_root_with(phi, 0.0, self.last_s, &self.tol)?;
        self.last_s = s;
        let (_, qp, qm) = q_at(s);
        let mut q = vec![0.0; w.len()];
        let mut value = 0.0;
        for (&z, &v) in self.plus.iter().zip(&qp) {
            q[z] = v;
            value += beta.value(z, w[z]) - beta.value(z, v);
        }
        for (&z, &v) in self.minus.iter().zip(&qm) {
            q[z] = v;
            value += beta.value(z, 0.0) - beta.value(z, v);
        }
        Ok(FiberPoint { q, value })
    }
}

impl SimplexObjective for Fiber<'_> {
    fn eval(&mut self, w: &[f64], active: &[usize]) -> Result<Eval> {
        if active != self.plus.as_slice() {
            return Err(Error::InvalidArgument("support left supp(u+)".into()));
        }
        let fp = self.point(w)?;
        let (beta, u) = (self.beta, self.u);
        let grad = self.plus.iter().map(|&z| beta.derivative(z, w[z]) - beta.derivative(z, fp.q[z])).collect();
        let den: f64 =
            self.plus.iter().chain(&self.minus).map(|&z| u[z] * u[z] * beta.second_derivative(z, fp.q[z])).sum();
        let wv: Vec<f64> = self.plus.iter().map(|&z| u[z] * beta.second_derivative(z, fp.q[z])).collect();
        let n = self.plus.len();
        let hess = DMatrix::from_fn(n, n, |i, j| {
            let z = self.plus[i];
            let diag = if i == j { beta.second_derivative(z, w[z]) - beta.second_derivative(z, fp.q[z]) } else { 0.0 };
            diag + wv[i] * wv[j] / den
        });
        Ok(Eval { value: fp.value, grad, hess: Some(hess) })
    }
}
