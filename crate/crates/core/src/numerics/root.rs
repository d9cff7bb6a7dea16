use super::Tolerances;
use crate::error::{Error, Result};

/// Bracket expansion stops once the half-width exceeds this.
const MAX_BRACKET_WIDTH: f64 = 1e9;
const MAX_ITER: usize = 400;

/// Search domain of a monotone map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// The whole real line.
    Real,
    /// `(1e-300, 1e300)`; the search runs in log coordinates.
    Positive,
}

const POS_LOG_MIN: f64 = -690.775_527_898_213_7; // ln(1e-300)
const POS_LOG_MAX: f64 = 690.775_527_898_213_7;

/// Finds `r` with `g(r) = target` for a strictly decreasing continuous `g`.
pub fn solve_decreasing_root(mut g: impl FnMut(f64) -> f64, target: f64, hint: f64, tol: &Tolerances) -> Result<f64> {
    decreasing_root(&mut |r| (g(r) - target, None), hint, None, tol.root_abs)
}

/// Same as [`solve_decreasing_root`], with `gd` returning `(g(r), g'(r))` so
/// that bisection steps can be replaced by safeguarded Newton steps.
pub fn solve_decreasing_root_with(
    mut gd: impl FnMut(f64) -> (f64, f64),
    target: f64,
    hint: f64,
    tol: &Tolerances,
) -> Result<f64> {
    decreasing_root(
        &mut |r| {
            let (v, d) = gd(r);
            (v - target, Some(d))
        },
        hint,
        None,
        tol.root_abs,
    )
}

/// Inverts a strictly increasing map: returns `x` with `|h(x) - y| <= root_abs`.
///
/// `hd` returns `(h(x), h'(x))`; pass `f64::NAN` as the derivative when it is
/// not available.
pub fn invert_increasing(
    mut hd: impl FnMut(f64) -> (f64, f64),
    y: f64,
    domain: Domain,
    hint: Option<f64>,
    tol: &Tolerances,
) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::OutOfRange { y });
    }
    match domain {
        Domain::Real => decreasing_root(
            &mut |x| {
                let (v, d) = hd(x);
                (y - v, Some(-d))
            },
            hint.unwrap_or(0.0),
            None,
            tol.root_abs,
        ),
        Domain::Positive => {
            let lo = hd(POS_LOG_MIN.exp()).0;
            let hi = hd(POS_LOG_MAX.exp()).0;
            if y < lo || y > hi {
                return Err(Error::OutOfRange { y });
            }
            let s0 = hint.filter(|h| *h > 0.0).map(f64::ln).unwrap_or(0.0).clamp(POS_LOG_MIN, POS_LOG_MAX);
            let s = decreasing_root(
                &mut |s| {
                    let x = s.exp();
                    let (v, d) = hd(x);
                    (y - v, Some(-d * x))
                },
                s0,
                Some((POS_LOG_MIN, POS_LOG_MAX)),
                tol.root_abs,
            )?;
            Ok(s.exp())
        }
    }
}

/// Core routine: root of a decreasing `phi` (returning value and optional
/// derivative) by bracket expansion around `hint` followed by Newton steps
/// safeguarded by bisection.
fn decreasing_root(
    phi: &mut dyn FnMut(f64) -> (f64, Option<f64>),
    hint: f64,
    bounds: Option<(f64, f64)>,
    root_abs: f64,
) -> Result<f64> {
    let clamp = |x: f64| match bounds {
        Some((a, b)) => x.clamp(a, b),
        None => x,
    };
    let hint = clamp(hint);
    let (v0, d0) = phi(hint);
    if v0.is_nan() {
        return Err(Error::NoBracket { hint, width: 0.0 });
    }
    if v0.abs() <= root_abs {
        return Ok(polish(phi, hint, v0, d0, None));
    }

    // (lo, hi) with phi(lo) > 0 > phi(hi)
    let (mut lo, mut vlo, mut dlo, mut hi, mut vhi, mut dhi);
    let mut width = 1.0;
    if v0 > 0.0 {
        lo = hint;
        vlo = v0;
        dlo = d0;
        loop {
            let x = clamp(hint + width);
            let (v, d) = phi(x);
            if v.is_nan() {
                return Err(Error::NoBracket { hint, width });
            }
            if v <= 0.0 {
                hi = x;
                vhi = v;
                dhi = d;
                break;
            }
            lo = x;
            vlo = v;
            dlo = d;
            if width > MAX_BRACKET_WIDTH || bounds.is_some_and(|(_, b)| x >= b) {
                return Err(Error::NoBracket { hint, width });
            }
            width *= 2.0;
        }
    } else {
        hi = hint;
        vhi = v0;
        dhi = d0;
        loop {
            let x = clamp(hint - width);
            let (v, d) = phi(x);
            if v.is_nan() {
                return Err(Error::NoBracket { hint, width });
            }
            if v >= 0.0 {
                lo = x;
                vlo = v;
                dlo = d;
                break;
            }
            hi = x;
            vhi = v;
            dhi = d;
            if width > MAX_BRACKET_WIDTH || bounds.is_some_and(|(a, _)| x <= a) {
                return Err(Error::NoBracket { hint, width });
            }
            width *= 2.0;
        }
    }
    if vlo.abs() <= root_abs {
        return Ok(polish(phi, lo, vlo, dlo, Some((lo, hi))));
    }
    if vhi.abs() <= root_abs {
        return Ok(polish(phi, hi, vhi, dhi, Some((lo, hi))));
    }

    // start Newton from the endpoint with the smaller residual
    let (mut x, mut vx, mut dx) = if vlo.abs() < vhi.abs() { (lo, vlo, dlo) } else { (hi, vhi, dhi) };
    let mut prev_width = hi - lo;
    let mut force_bisect = false;
    for _ in 0..MAX_ITER {
        let newton = dx
            .filter(|d| !force_bisect && d.is_finite() && *d < 0.0)
            .map(|d| x - vx / d)
            .filter(|xn| *xn > lo && *xn < hi);
        let xn = match newton {
            Some(xn) => xn,
            None => {
                // regula falsi keeps derivative-free solves superlinear on
                // smooth functions; bisection guards the worst case
                let rf = lo + (hi - lo) * vlo / (vlo - vhi);
                if !force_bisect && rf > lo && rf < hi {
                    rf
                } else {
                    0.5 * (lo + hi)
                }
            }
        };
        let (v, d) = phi(xn);
        if v.is_nan() {
            return Err(Error::NoBracket { hint, width });
        }
        if v.abs() <= root_abs {
            return Ok(polish(phi, xn, v, d, Some((lo, hi))));
        }
        if v > 0.0 {
            lo = xn;
            vlo = v;
        } else {
            hi = xn;
            vhi = v;
        }
        // a step that fails to shrink the residual or the bracket enough is
        // followed by a bisection step
        let stalled = if newton.is_some() { v.abs() > 0.5 * vx.abs() } else { (hi - lo) > 0.5 * prev_width };
        force_bisect = !force_bisect && stalled;
        prev_width = hi - lo;
        x = xn;
        vx = v;
        dx = d;
        let scale = lo.abs().max(hi.abs()).max(1e-300);
        if hi - lo <= 4.0 * f64::EPSILON * scale {
            return Ok(if vlo.abs() < vhi.abs() { lo } else { hi });
        }
    }
    Ok(x)
}

/// One extra Newton step after the tolerance is met, kept only if it helps.
fn polish(
    phi: &mut dyn FnMut(f64) -> (f64, Option<f64>),
    x: f64,
    v: f64,
    d: Option<f64>,
    bracket: Option<(f64, f64)>,
) -> f64 {
    let Some(d) = d.filter(|d| d.is_finite() && *d < 0.0) else {
        return x;
    };
    if v == 0.0 {
        return x;
    }
    let xn = x - v / d;
    if let Some((lo, hi)) = bracket {
        if !(xn >= lo && xn <= hi) {
            return x;
        }
    }
    let (vn, _) = phi(xn);
    if vn.abs() < v.abs() {
        xn
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn exponential_root() {
        let r = solve_decreasing_root(|r| 2.0 * (-r).exp(), 1.0, 0.0, &tol()).unwrap();
        assert!((r - std::f64::consts::LN_2).abs() < 1e-12);
        let r = solve_decreasing_root_with(|r| (2.0 * (-r).exp(), -2.0 * (-r).exp()), 1.0, 0.0, &tol()).unwrap();
        assert!((r - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn linear_root() {
        let r = solve_decreasing_root(|r| 1.0 - r, 0.0, 0.0, &tol()).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reference_measure_sum() {
        let nu = [0.2, 0.3, 0.5];
        let g = |r: f64| nu.iter().map(|v| v * (-r).exp()).sum::<f64>();
        let r = solve_decreasing_root(g, 1.0, 5.0, &tol()).unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn far_root_is_bracketed() {
        let r = solve_decreasing_root(|r| -r, -1e6, 0.0, &tol()).unwrap();
        assert!((r - 1e6).abs() < 1e-6);
    }

    #[test]
    fn missing_root_is_reported() {
        // bounded below by 1, never reaches 0
        let err = solve_decreasing_root(|r| 1.0 + (-r).exp(), 0.0, 0.0, &tol()).unwrap_err();
        assert!(matches!(err, Error::NoBracket { .. }));
    }

    #[test]
    fn inverse_of_log() {
        let x = invert_increasing(|x| (x.ln(), 1.0 / x), 0.0, Domain::Positive, None, &tol()).unwrap();
        assert!((x - 1.0).abs() < 1e-12);
        let x = invert_increasing(|x| (x.ln() + x, 1.0 / x + 1.0), 1.0, Domain::Positive, None, &tol()).unwrap();
        assert!((x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_matches_bisection() {
        let h = |x: f64| x.ln() + 2.0 * x;
        // oracle: plain bisection on [1e-6, 1]
        let (mut a, mut b) = (1e-6_f64, 1.0_f64);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if h(m) < 0.5 {
                a = m
            } else {
                b = m
            }
        }
        let oracle = 0.5 * (a + b);
        let x = invert_increasing(|x| (h(x), f64::NAN), 0.5, Domain::Positive, None, &tol()).unwrap();
        assert!((x - oracle).abs() < 1e-12);
        assert!((h(x) - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn inverse_out_of_range() {
        // tanh-like map bounded above by 1
        let err =
            invert_increasing(|x| (x / (1.0 + x), 1.0 / ((1.0 + x) * (1.0 + x))), 2.0, Domain::Positive, None, &tol())
                .unwrap_err();
        assert!(matches!(err, Error::OutOfRange { .. }));
    }
}
