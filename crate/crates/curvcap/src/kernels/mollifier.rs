use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::plane::measure::ComplexAtomicMeasure;
use crate::plane::point::Point;
use crate::sum::Cascade;

/// Radial profile `psi(x) = (3/pi)(1 - |x|^2)^2` on the unit disk: a C^1
/// probability density with sup 3/pi and gradient bounded by 12/(pi sqrt(27)).
pub fn profile(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    let t = 1.0 - r * r;
    3.0 / std::f64::consts::PI * t * t
}

/// Mass of `profile` inside radius `s`: `1 - (1 - s^2)^3`, clamped to 1.
pub fn mass_within(s: f64) -> f64 {
    if s >= 1.0 {
        return 1.0;
    }
    let t = 1.0 - s * s;
    1.0 - t * t * t
}

/// The mollified Cauchy kernel `r_eps = psi_eps * (1/z)`. By the circle mean
/// value property of `1/z`, convolving with a radial probability density
/// leaves `1/z` untouched outside the support and multiplies it by the mass
/// fraction inside radius `|z|` otherwise.
#[derive(Clone, Copy, Debug)]
pub struct Mollifier {
    pub epsilon: f64,
}

impl Mollifier {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid("mollifier scale must be positive"));
        }
        Ok(Mollifier { epsilon })
    }

    /// `psi_eps(x) = eps^-2 psi(x/eps)` at radius `r`.
    pub fn density(&self, r: f64) -> f64 {
        profile(r / self.epsilon) / (self.epsilon * self.epsilon)
    }

    /// `r_eps(w)`: equals `1/w` exactly for `|w| > eps`, `0` at the origin.
    pub fn r_eps(&self, w: Complex64) -> Complex64 {
        let d2 = w.norm_sqr();
        if d2 == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let frac = if d2 >= self.epsilon * self.epsilon {
            1.0
        } else {
            mass_within(d2.sqrt() / self.epsilon)
        };
        Complex64::new(frac * w.re / d2, -frac * w.im / d2)
    }
}

/// Regularized Cauchy transform `sum_xi w_xi r_eps(xi - z)`.
pub fn cauchy_regularized(
    nu: &ComplexAtomicMeasure,
    z: Point,
    epsilon: f64,
) -> Result<Complex64> {
    let moll = Mollifier::new(epsilon)?;
    let mut acc = Cascade::new();
    for &(xi, w) in nu.atoms() {
        acc.push(w * moll.r_eps((xi - z).to_complex()));
    }
    Ok(acc.finish())
}
