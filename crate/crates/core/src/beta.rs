//! Per-coordinate generator systems.
//!
//! Each coordinate `z` carries a convex differentiable generator `β_z` on
//! `(0, ∞)` whose derivative `l_z = β'_z` runs from `-∞` to `+∞`. Its convex
//! conjugate `β*_z` is differentiable with derivative `e_z = l_z⁻¹` (the
//! link). Two families have builtin support:
//!
//! * classical, `β(x) = x ln(x/ν) - x`, for which `e(r) = β*(r) = ν e^r` and
//!   the Bregman divergence is the (generalized) information divergence;
//! * entropy-quadratic, `β(x) = x ln x - x + α x²/2`, whose link has no
//!   elementary closed form and is inverted numerically.
//!
//! Anything else satisfying the limit conditions can be plugged in through
//! [`CustomGenerator`].

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{invert_increasing, Domain, Tolerances};

/// A user-supplied generator. Only `value`, `value_at_zero` and `derivative`
/// are required; the rest fall back to numerical evaluation.
pub trait CustomGenerator: Send + Sync + fmt::Debug {
    /// `β(x)` for `x > 0`.
    fn value(&self, x: f64) -> f64;
    /// `lim_{x→0+} β(x)`; must be finite.
    fn value_at_zero(&self) -> f64;
    /// `l(x) = β'(x)` for `x > 0`.
    fn derivative(&self, x: f64) -> f64;
    fn second_derivative(&self, _x: f64) -> Option<f64> {
        None
    }
    /// Closed-form link `e(r)`, if known.
    fn link(&self, _r: f64) -> Option<f64> {
        None
    }
    /// Closed-form conjugate `β*(r)`, if known.
    fn conjugate(&self, _r: f64) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone)]
pub enum Generator {
    Classical { nu: f64 },
    EntropyQuadratic { alpha: f64 },
    Custom(Arc<dyn CustomGenerator>),
}

fn link_tol() -> Tolerances {
    Tolerances { root_abs: 1e-13, ..Tolerances::default() }
}

impl Generator {
    /// `β(x)` for `x >= 0`, continuously extended at zero.
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Generator::Classical { nu } => {
                if x == 0.0 {
                    0.0
                } else {
                    x * (x / nu).ln() - x
                }
            }
            Generator::EntropyQuadratic { alpha } => {
                if x == 0.0 {
                    0.0
                } else {
                    x * x.ln() - x + 0.5 * alpha * x * x
                }
            }
            Generator::Custom(g) => {
                if x == 0.0 {
                    g.value_at_zero()
                } else {
                    g.value(x)
                }
            }
        }
    }

    /// `l(x) = β'(x)`; `-∞` at zero.
    pub fn derivative(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match self {
            Generator::Classical { nu } => (x / nu).ln(),
            Generator::EntropyQuadratic { alpha } => x.ln() + alpha * x,
            Generator::Custom(g) => g.derivative(x),
        }
    }

    /// `β''(x) = l'(x)` for `x > 0`.
    pub fn second_derivative(&self, x: f64) -> f64 {
        match self {
            Generator::Classical { .. } => 1.0 / x,
            Generator::EntropyQuadratic { alpha } => 1.0 / x + alpha,
            Generator::Custom(g) => g.second_derivative(x).unwrap_or_else(|| {
                let h = 1e-6 * x;
                (g.derivative(x + h) - g.derivative(x - h)) / (2.0 * h)
            }),
        }
    }

    /// The link `e(r) = β*'(r)`, the inverse of `l`.
    pub fn link(&self, r: f64) -> f64 {
        match self {
            Generator::Classical { nu } => nu * r.exp(),
            Generator::EntropyQuadratic { alpha } => {
                let er = r.exp();
                if *alpha == 0.0 || alpha * er < 1e-17 {
                    return er;
                }
                let hint = if er.is_finite() { er / (1.0 + alpha * er) } else { r / alpha };
                let a = *alpha;
                invert_increasing(|x| (x.ln() + a * x, 1.0 / x + a), r, Domain::Positive, Some(hint), &link_tol())
                    .unwrap_or(f64::NAN)
            }
            Generator::Custom(g) => g.link(r).unwrap_or_else(|| {
                invert_increasing(
                    |x| (g.derivative(x), g.second_derivative(x).unwrap_or(f64::NAN)),
                    r,
                    Domain::Positive,
                    None,
                    &link_tol(),
                )
                .unwrap_or(f64::NAN)
            }),
        }
    }

    /// `(e(r), e'(r))` with a single inversion of `l`.
    pub fn link_with_derivative(&self, r: f64) -> (f64, f64) {
        match self {
            Generator::Classical { nu } => {
                let v = nu * r.exp();
                (v, v)
            }
            Generator::EntropyQuadratic { alpha } => {
                let x = self.link(r);
                (x, x / (1.0 + alpha * x))
            }
            Generator::Custom(_) => (self.link(r), self.link_derivative(r)),
        }
    }

    /// `e'(r) = β*''(r)`.
    pub fn link_derivative(&self, r: f64) -> f64 {
        match self {
            Generator::Classical { nu } => nu * r.exp(),
            Generator::EntropyQuadratic { alpha } => {
                let x = self.link(r);
                x / (1.0 + alpha * x)
            }
            Generator::Custom(g) => {
                let x = self.link(r);
                match g.second_derivative(x) {
                    Some(d2) => 1.0 / d2,
                    None => {
                        let h = 1e-6 * r.abs().max(1.0);
                        (self.link(r + h) - self.link(r - h)) / (2.0 * h)
                    }
                }
            }
        }
    }

    /// The conjugate `β*(r)`.
    pub fn conjugate(&self, r: f64) -> f64 {
        match self {
            Generator::Classical { nu } => nu * r.exp(),
            Generator::EntropyQuadratic { .. } => self.conjugate_by_link(r),
            Generator::Custom(g) => g.conjugate(r).unwrap_or_else(|| self.conjugate_by_link(r)),
        }
    }

    /// `β*(r) = r e(r) - β(e(r))`.
    fn conjugate_by_link(&self, r: f64) -> f64 {
        let x = self.link(r);
        r * x - self.value(x)
    }

    /// `l(y)` for `y > 0`.
    pub fn inverse_link(&self, y: f64) -> Result<f64> {
        if y <= 0.0 || y.is_nan() {
            return Err(Error::NonPositiveArgument(y));
        }
        Ok(self.derivative(y))
    }

    fn check(&self, index: usize) -> Result<()> {
        let malformed = |reason: String| Error::MalformedGenerator { index, reason };
        let xs = [1e-8, 1e-4, 0.1, 1.0, 10.0, 1e4, 1e8];
        let ls: Vec<f64> = xs.iter().map(|x| self.derivative(*x)).collect();
        if ls.iter().any(|v| !v.is_finite()) {
            return Err(malformed("derivative is not finite on (0, ∞)".into()));
        }
        if ls.windows(2).any(|w| w[1] <= w[0]) {
            return Err(malformed("derivative is not strictly increasing".into()));
        }
        // sampled stand-in for l(0+) = -∞ and l(+∞) = +∞
        let l1 = self.derivative(1.0);
        if ls[0] > l1 - 10.0 || ls[6] < l1 + 10.0 {
            return Err(malformed("derivative does not diverge at 0+ and +∞".into()));
        }
        if !self.value(0.0).is_finite() {
            return Err(malformed("value at zero is not finite".into()));
        }
        for x in [0.1, 1.0, 10.0] {
            let back = self.link(self.derivative(x));
            if !((back - x).abs() <= 1e-8 * x.max(1.0)) {
                return Err(malformed(format!("e(l({x})) = {back}")));
            }
        }
        Ok(())
    }
}

/// The collection `{β_z}` indexed by `Z`.
#[derive(Debug, Clone)]
pub struct BetaSystem {
    generators: Vec<Generator>,
}

impl BetaSystem {
    /// Classical system with reference measure `nu`.
    pub fn make_classical(nu: &[f64]) -> Result<Self> {
        if let Some((index, &value)) = nu.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::NonPositiveReference { index, value });
        }
        Ok(Self { generators: nu.iter().map(|&nu| Generator::Classical { nu }).collect() })
    }

    pub fn make_entropy_quadratic(alpha: &[f64]) -> Result<Self> {
        if let Some((index, &value)) = alpha.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::NegativeAlpha { index, value });
        }
        Ok(Self { generators: alpha.iter().map(|&alpha| Generator::EntropyQuadratic { alpha }).collect() })
    }

    /// Arbitrary generators; each is sampled for the limit and inverse-pair
    /// conditions before being accepted.
    pub fn from_generators(generators: Vec<Generator>) -> Result<Self> {
        for (i, g) in generators.iter().enumerate() {
            g.check(i)?;
        }
        Ok(Self { generators })
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generator(&self, z: usize) -> &Generator {
        &self.generators[z]
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// The reference measure when every coordinate is classical.
    pub fn classical_reference(&self) -> Option<Vec<f64>> {
        self.generators
            .iter()
            .map(|g| match g {
                Generator::Classical { nu } => Some(*nu),
                _ => None,
            })
            .collect()
    }

    /// Sub-system on the given coordinates, in order.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        Self { generators: indices.iter().map(|&i| self.generators[i].clone()).collect() }
    }

    pub fn value(&self, z: usize, x: f64) -> f64 {
        self.generators[z].value(x)
    }

    /// `l_z(x)`.
    pub fn derivative(&self, z: usize, x: f64) -> f64 {
        self.generators[z].derivative(x)
    }

    pub fn second_derivative(&self, z: usize, x: f64) -> f64 {
        self.generators[z].second_derivative(x)
    }

    /// `e_z(r)`.
    pub fn link(&self, z: usize, r: f64) -> f64 {
        self.generators[z].link(r)
    }

    pub fn link_derivative(&self, z: usize, r: f64) -> f64 {
        self.generators[z].link_derivative(r)
    }

    pub fn link_with_derivative(&self, z: usize, r: f64) -> (f64, f64) {
        self.generators[z].link_with_derivative(r)
    }

    /// `β*_z(r)`.
    pub fn conjugate(&self, z: usize, r: f64) -> f64 {
        self.generators[z].conjugate(r)
    }

    /// `l_z(y)`, defined for `y > 0`.
    pub fn inverse_link(&self, z: usize, y: f64) -> Result<f64> {
        self.generators[z].inverse_link(y)
    }
}
