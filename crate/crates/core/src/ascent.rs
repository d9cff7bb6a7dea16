//! Ascent on a face of the probability simplex with support dropping.
//!
//! Steps are Newton steps on the tangent space `{Σ w = 0}` when the tangent
//! Hessian is negative definite, and projected gradient steps otherwise. A
//! step that reaches the boundary zeroes the blocking coordinates, so the
//! support only ever shrinks.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::family::SUPPORT_EPS;

const ARMIJO: f64 = 1e-4;
const STOP_RESIDUAL: f64 = 1e-11;

pub(crate) struct Eval {
    pub value: f64,
    /// Gradient over the active coordinates (any additive constant).
    pub grad: Vec<f64>,
    /// Hessian over the active coordinates, when available.
    pub hess: Option<DMatrix<f64>>,
}

pub(crate) trait SimplexObjective {
    /// Evaluates at `w` (full length) whose support is exactly `active`.
    fn eval(&mut self, w: &[f64], active: &[usize]) -> Result<Eval>;
}

#[derive(Debug, Clone)]
pub(crate) struct AscentResult {
    pub weights: Vec<f64>,
    pub value: f64,
    /// `max |g_z - mean(g)|` over the final support.
    pub residual: f64,
}

pub(crate) fn residual(grad: &[f64]) -> f64 {
    if grad.is_empty() {
        return 0.0;
    }
    let mean = grad.iter().sum::<f64>() / grad.len() as f64;
    grad.iter().map(|g| (g - mean).abs()).fold(0.0, f64::max)
}

fn support(w: &[f64]) -> Vec<usize> {
    (0..w.len()).filter(|&z| w[z] > 0.0).collect()
}

fn clean(w: &mut [f64]) {
    w.iter_mut().for_each(|x| {
        if *x <= SUPPORT_EPS {
            *x = 0.0
        }
    });
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
}

/// Orthonormal basis (columns) of `{x ∈ R^n : Σ x = 0}`.
fn tangent_basis(n: usize) -> DMatrix<f64> {
    // Helmert contrasts
    DMatrix::from_fn(n, n - 1, |i, j| {
        let k = (j + 1) as f64;
        let norm = (k * (k + 1.0)).sqrt();
        if i <= j {
            1.0 / norm
        } else if i == j + 1 {
            -k / norm
        } else {
            0.0
        }
    })
}

/// Newton direction on the tangent space, if the tangent Hessian is
/// negative definite.
fn newton_direction(hess: &DMatrix<f64>, pg: &[f64]) -> Option<Vec<f64>> {
    let n = pg.len();
    let q = tangent_basis(n);
    let ht = q.transpose() * hess * &q;
    let neg = -ht;
    if !neg.iter().all(|v| v.is_finite()) {
        return None;
    }
    let ch = neg.cholesky()?;
    let g = q.transpose() * DVector::from_column_slice(pg);
    let d = &q * ch.solve(&g);
    let d: Vec<f64> = d.iter().copied().collect();
    d.iter().all(|v| v.is_finite()).then_some(d)
}

type Candidate = (Vec<f64>, Vec<usize>, Eval);

/// At a critical point whose tangent Hessian has a direction of positive
/// curvature, moves along it (either sign) to the first improving point.
fn escape_saddle(obj: &mut impl SimplexObjective, w: &[f64], active: &[usize], ev: &Eval) -> Result<Option<Candidate>> {
    let Some(hess) = ev.hess.as_ref() else {
        return Ok(None);
    };
    let q = tangent_basis(active.len());
    let ht = q.transpose() * hess * &q;
    if !ht.iter().all(|v| v.is_finite()) {
        return Ok(None);
    }
    let eig = ht.symmetric_eigen();
    let (imax, lmax) =
        eig.eigenvalues.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &l)| {
                if l > acc.1 {
                    (i, l)
                } else {
                    acc
                }
            },
        );
    let scale = hess.diagonal().amax().max(1.0);
    if !(lmax > 1e-8 * scale) {
        return Ok(None);
    }
    let dir: Vec<f64> = (&q * eig.eigenvectors.column(imax)).iter().copied().collect();
    for sign in [1.0, -1.0] {
        let d: Vec<f64> = dir.iter().map(|v| sign * v).collect();
        let mut t_bound = f64::INFINITY;
        for (i, &z) in active.iter().enumerate() {
            if d[i] < 0.0 {
                t_bound = t_bound.min(w[z] / -d[i]);
            }
        }
        let mut t = t_bound.min(1.0);
        while t > 1e-10 {
            let mut cand = w.to_vec();
            for (i, &z) in active.iter().enumerate() {
                cand[z] = (w[z] + t * d[i]).max(0.0);
            }
            clean(&mut cand);
            let cand_active = support(&cand);
            if let Ok(e2) = obj.eval(&cand, &cand_active) {
                if e2.value > ev.value + 1e-12 * ev.value.abs().max(1.0) {
                    return Ok(Some((cand, cand_active, e2)));
                }
            }
            t *= 0.5;
        }
    }
    Ok(None)
}

pub(crate) fn ascend(obj: &mut impl SimplexObjective, w0: &[f64], max_iter: usize) -> Result<AscentResult> {
    let mut w = w0.to_vec();
    clean(&mut w);
    let mut active = support(&w);
    let mut ev = obj.eval(&w, &active)?;
    let mut grad_step = f64::NAN;
    for _ in 0..max_iter {
        let res = residual(&ev.grad);
        if active.len() < 2 {
            break;
        }
        if res <= STOP_RESIDUAL {
            match escape_saddle(obj, &w, &active, &ev)? {
                Some((cand, cand_active, e2)) => {
                    w = cand;
                    active = cand_active;
                    ev = e2;
                    continue;
                }
                None => break,
            }
        }
        let mean = ev.grad.iter().sum::<f64>() / ev.grad.len() as f64;
        let pg: Vec<f64> = ev.grad.iter().map(|g| g - mean).collect();
        let (dir, newton) = match ev.hess.as_ref().and_then(|h| newton_direction(h, &pg)) {
            Some(d) => (d, true),
            None => (pg.clone(), false),
        };
        let slope: f64 = pg.iter().zip(&dir).map(|(a, b)| a * b).sum();
        if !(slope > 0.0) {
            break;
        }
        let mut t_bound = f64::INFINITY;
        for (i, &z) in active.iter().enumerate() {
            if dir[i] < 0.0 {
                t_bound = t_bound.min(w[z] / -dir[i]);
            }
        }
        let t0 = if newton {
            1.0
        } else if grad_step.is_nan() {
            0.1 / pg.iter().fold(0.0_f64, |a, b| a.max(b.abs()))
        } else {
            2.0 * grad_step
        };
        let mut t = t0.min(t_bound);
        let mut accepted = None;
        while t > 1e-16 * t0.min(t_bound).max(1e-300) && t > 0.0 {
            let mut cand = w.clone();
            for (i, &z) in active.iter().enumerate() {
                cand[z] = (w[z] + t * dir[i]).max(0.0);
            }
            if t == t_bound {
                for (i, &z) in active.iter().enumerate() {
                    if dir[i] < 0.0 && w[z] / -dir[i] <= t_bound * (1.0 + 1e-12) {
                        cand[z] = 0.0;
                    }
                }
            }
            clean(&mut cand);
            let cand_active = support(&cand);
            if let Ok(e2) = obj.eval(&cand, &cand_active) {
                if e2.value.is_finite() && e2.value >= ev.value + ARMIJO * t * slope {
                    accepted = Some((cand, cand_active, e2));
                    break;
                }
            }
            t *= 0.5;
        }
        // a boundary step must also beat the interior point halfway to it,
        // otherwise maxima inside the current face are skipped
        if let Some((_, ref cand_active, ref e2)) = accepted {
            if cand_active.len() < active.len() {
                let mut mid = w.clone();
                for (i, &z) in active.iter().enumerate() {
                    mid[z] = w[z] + 0.5 * t * dir[i];
                }
                if let Ok(em) = obj.eval(&mid, &active) {
                    if em.value > e2.value {
                        accepted = Some((mid, active.clone(), em));
                    }
                }
            }
        }
        let Some((cand, cand_active, e2)) = accepted else {
            break;
        };
        if !newton {
            grad_step = t;
        }
        w = cand;
        active = cand_active;
        ev = e2;
    }
    let residual = residual(&ev.grad);
    Ok(AscentResult { weights: w, value: ev.value, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Concave quadratic `-Σ (w - c)²` with optional Hessian.
    struct Quad {
        c: Vec<f64>,
        with_hess: bool,
    }

    impl SimplexObjective for Quad {
        fn eval(&mut self, w: &[f64], active: &[usize]) -> Result<Eval> {
            let value = -w.iter().zip(&self.c).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let grad = active.iter().map(|&z| -2.0 * (w[z] - self.c[z])).collect();
            let hess = self.with_hess.then(|| DMatrix::identity(active.len(), active.len()) * -2.0);
            Ok(Eval { value, grad, hess })
        }
    }

    #[test]
    fn interior_maximum() {
        for with_hess in [true, false] {
            let mut q = Quad { c: vec![0.2, 0.3, 0.5], with_hess };
            let r = ascend(&mut q, &[0.6, 0.2, 0.2], 500).unwrap();
            assert!(r.residual < 1e-9);
            for (a, b) in r.weights.iter().zip(&q.c) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn maximum_on_boundary_drops_support() {
        // target outside the simplex: the maximizer is the projection (0.75, 0.25, 0)
        let mut q = Quad { c: vec![1.0, 0.5, -0.5], with_hess: true };
        let r = ascend(&mut q, &[1.0 / 3.0; 3], 500).unwrap();
        assert_eq!(r.weights[2], 0.0);
        assert!((r.weights[0] - 0.75).abs() < 1e-9 && (r.weights[1] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        let q = tangent_basis(5);
        let g = q.transpose() * &q;
        assert!((g - DMatrix::identity(4, 4)).amax() < 1e-14);
        for j in 0..4 {
            assert!(q.column(j).sum().abs() < 1e-14);
        }
    }
}
