//! Power-series evaluation of the one-sided Riemann-Liouville derivatives of
//! `e^{-cx} x²(1-x)²` on `(0, 1)`.

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{check_open, Error, Result};

/// Largest number of series terms before giving up.
pub const MAX_TERMS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `₀D_x^α`
    Left,
    /// `ₓD_1^α`
    Right,
}

/// `₀D_x^α` or `ₓD_1^α` of `e^{-cx} x²(1-x)²` at `x ∈ [0, 1]`.
///
/// Left: `e^{-cx} = Σ (-c)^j x^j / j!`, so the function is a power series in
/// `x` starting at `x²`, and the power rule
/// `₀D_x^α x^q = Γ(q+1)/Γ(q+1-α) x^{q-α}` applies termwise.
/// Right: with `s = 1 - x`, `e^{-cx} = e^{-c} e^{cs}` and `x²(1-x)² = s²(1-s)²`,
/// and the mirrored power rule applies in `s`.
pub fn frac_deriv_series(c: Complex64, alpha: f64, side: Side, x: f64) -> Result<Complex64> {
    check_open("alpha", alpha, 1.0, 2.0, "must lie in (1,2)")?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Parameter {
            name: "x",
            value: x,
            expected: "must lie in [0,1]",
        });
    }
    match side {
        Side::Left => quartic_exp_derivative(Complex64::new(1.0, 0.0), -c, alpha, x),
        Side::Right => quartic_exp_derivative((-c).exp(), c, alpha, 1.0 - x),
    }
}

/// `₀D_s^α [scale · e^{rate·s} (s² - 2s³ + s⁴)]`.
fn quartic_exp_derivative(scale: Complex64, rate: Complex64, alpha: f64, s: f64) -> Result<Complex64> {
    if s == 0.0 {
        return Ok(Complex64::default());
    }
    let modulus = rate.norm();
    // r(q) = Γ(q+1)/Γ(q+1-α), advanced by r(q+1) = r(q)(q+1)/(q+1-α)
    let ratio = |r: f64, q: f64| r * (q + 1.0) / (q + 1.0 - alpha);
    let mut r2 = gamma(3.0) / gamma(3.0 - alpha);
    let mut r3 = ratio(r2, 2.0);
    let mut r4 = ratio(r3, 3.0);

    let mut coeff = Complex64::new(1.0, 0.0); // rate^j / j!
    let mut s_pow = 1.0; // s^j
    let mut acc = Complex64::default();
    let mut bound = 1.0; // |rate|^j / j!
    for j in 0..MAX_TERMS {
        let q = j as f64;
        acc += coeff * s_pow * (r2 - 2.0 * r3 * s + r4 * s * s);
        if j as f64 > modulus && bound < 1e-16 && bound * r4 < 1e-17 * acc.norm() {
            return Ok(scale * acc * s.powf(2.0 - alpha));
        }
        let next = j + 1;
        coeff *= rate / next as f64;
        bound *= modulus / next as f64;
        s_pow *= s;
        r2 = ratio(r2, q + 2.0);
        r3 = ratio(r3, q + 3.0);
        r4 = ratio(r4, q + 4.0);
    }
    Err(Error::SeriesTruncation {
        terms: MAX_TERMS,
        modulus,
    })
}
