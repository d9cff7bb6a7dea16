/// Settings for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// ... and the simplex diameter falls below this.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { initial_step: 0.5, max_evals: 2000, f_tol: 1e-13, x_tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with the adaptive-parameter Nelder-Mead method.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        let value = eval(x0, &mut evals);
        return NelderMeadResult { x: vec![], value, evals, converged: true };
    }
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut pts: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    pts.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let v = eval(&x, &mut evals);
        pts.push((x, v));
    }

    let mut converged = false;
    while evals < opts.max_evals {
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = pts[n].1 - pts[0].1;
        let diam = pts[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&pts[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread.abs() <= opts.f_tol && diam <= opts.x_tol {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / nf).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&pts[n].0).map(|(c, w)| c + t * (c - w)).collect() };
        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < pts[0].1 {
            let xe = along(beta);
            let fe = eval(&xe, &mut evals);
            pts[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < pts[n - 1].1 {
            pts[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < pts[n].1 {
                let xc = along(gamma * alpha);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-gamma);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < pts[n].1.min(fr) {
                pts[n] = (xc, fc);
            } else {
                let best = pts[0].0.clone();
                for p in pts.iter_mut().skip(1) {
                    let x: Vec<f64> = best.iter().zip(&p.0).map(|(b, v)| b + delta * (v - b)).collect();
                    let v = eval(&x, &mut evals);
                    *p = (x, v);
                }
            }
        }
    }
    pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = pts.swap_remove(0);
    NelderMeadResult { x, value, evals, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let r = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &NelderMeadOptions { max_evals: 5000, ..Default::default() },
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn nonsmooth_minimum() {
        let r = nelder_mead(
            |x| (x[0] - 0.3).abs() + 2.0 * (x[1] + x[0]).abs() + (x[2] - 1.0).powi(2),
            &[1.0, 1.0, 0.0],
            &NelderMeadOptions::default(),
        );
        assert!(r.value < 1e-8, "{r:?}");
    }

    #[test]
    fn zero_dimensional() {
        let r = nelder_mead(|_| 4.0, &[], &NelderMeadOptions::default());
        assert_eq!(r.value, 4.0);
        assert_eq!(r.evals, 1);
    }
}
