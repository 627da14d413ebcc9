//! Coefficient sequences for the fractional difference operators.
//!
//! * Grünwald weights `g_k` of `(1 - ζ)^a`, generated by the multiplicative
//!   recurrence (binomials overflow long before the tables get interesting).
//! * Shifted-and-weighted Grünwald weights `w_k` used by the spatial operator.
//! * Second-order convolution-quadrature weights `l_k^{2,γ}`, the coefficients
//!   of `((3/2)(1 - ζ)(1 - ζ/3))^γ`.
//! * Tempered weights `q_m = e^{-λ̃ m τ} l_m` and the per-grid-point rows that
//!   enter the time-stepping scheme.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{check_nonneg, check_open, check_positive, Error, Result};
use crate::spectral;

/// Tables longer than this are convolved through the FFT.
pub const DIRECT_CONVOLUTION_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    Grunwald,
    Wsgd,
    Lubich2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    kind: WeightKind,
    order: f64,
    values: Vec<f64>,
}

impl WeightTable {
    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    /// The fractional order the table was generated for (α or γ).
    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Running sums `Σ_{j<=k} values[j]`, compensated.
    pub fn partial_sums(&self) -> Vec<f64> {
        let mut acc = KahanSum::default();
        self.values
            .iter()
            .map(|&v| {
                acc.add(v);
                acc.total()
            })
            .collect()
    }
}

/// Neumaier's variant of compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

fn grunwald_unchecked(order: f64, n: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(n + 1);
    g.push(1.0);
    for k in 1..=n {
        let prev = g[k - 1];
        g.push((1.0 - (order + 1.0) / k as f64) * prev);
    }
    g
}

/// Grünwald weights `g_0..=g_n` for an order in `(0, 1) ∪ (1, 2)`.
pub fn grunwald_coeffs(order: f64, n: usize) -> Result<WeightTable> {
    check_open("order", order, 0.0, 2.0, "must lie in (0,1) or (1,2)")?;
    if order == 1.0 {
        return Err(Error::Parameter {
            name: "order",
            value: order,
            expected: "must lie in (0,1) or (1,2)",
        });
    }
    Ok(WeightTable {
        kind: WeightKind::Grunwald,
        order,
        values: grunwald_unchecked(order, n),
    })
}

/// Weighted-and-shifted Grünwald weights `w_0..=w_n` for `α ∈ (1, 2)`:
/// `w_0 = (α/2) g_0`, `w_k = (α/2) g_k + ((2-α)/2) g_{k-1}`.
pub fn wsgd_weights(alpha: f64, n: usize) -> Result<WeightTable> {
    check_open("alpha", alpha, 1.0, 2.0, "must lie in (1,2)")?;
    if n < 1 {
        return Err(Error::Parameter {
            name: "n",
            value: n as f64,
            expected: "must be >= 1",
        });
    }
    let g = grunwald_unchecked(alpha, n);
    let a = alpha / 2.0;
    let b = (2.0 - alpha) / 2.0;
    let mut values = Vec::with_capacity(n + 1);
    values.push(a * g[0]);
    values.extend((1..=n).map(|k| a * g[k] + b * g[k - 1]));
    Ok(WeightTable {
        kind: WeightKind::Wsgd,
        order: alpha,
        values,
    })
}

/// Second-order weights `l_0..=l_n` for `γ ∈ (0, 1)`, i.e. the coefficients of
/// `((3/2)(1 - ζ)(1 - ζ/3))^γ`. Uses the direct compensated convolution up to
/// [`DIRECT_CONVOLUTION_LIMIT`] and the FFT above it.
pub fn lubich2_coeffs(gamma: f64, n: usize) -> Result<WeightTable> {
    if n <= DIRECT_CONVOLUTION_LIMIT {
        lubich2_coeffs_direct(gamma, n)
    } else {
        lubich2_coeffs_fft(gamma, n)
    }
}

/// O(n²) compensated evaluation of `(3/2)^γ Σ_k 3^{-k} g_k g_{m-k}`.
pub fn lubich2_coeffs_direct(gamma: f64, n: usize) -> Result<WeightTable> {
    check_open("gamma", gamma, 0.0, 1.0, "must lie in (0,1)")?;
    let g = grunwald_unchecked(gamma, n);
    let scaled = third_scaled(&g);
    let front = 1.5f64.powf(gamma);
    let values = (0..=n)
        .map(|m| {
            let mut acc = KahanSum::default();
            for k in 0..=m {
                acc.add(scaled[k] * g[m - k]);
            }
            front * acc.total()
        })
        .collect();
    Ok(WeightTable {
        kind: WeightKind::Lubich2,
        order: gamma,
        values,
    })
}

/// Same sequence as [`lubich2_coeffs_direct`], convolved through the FFT.
pub fn lubich2_coeffs_fft(gamma: f64, n: usize) -> Result<WeightTable> {
    check_open("gamma", gamma, 0.0, 1.0, "must lie in (0,1)")?;
    let g = grunwald_unchecked(gamma, n);
    let scaled = third_scaled(&g);
    let front = 1.5f64.powf(gamma);
    let values = spectral::convolve(&scaled, &g, n + 1)
        .into_iter()
        .map(|v| front * v)
        .collect();
    Ok(WeightTable {
        kind: WeightKind::Lubich2,
        order: gamma,
        values,
    })
}

fn third_scaled(g: &[f64]) -> Vec<f64> {
    let mut pow = 1.0;
    g.iter()
        .map(|&v| {
            let out = pow * v;
            pow /= 3.0;
            out
        })
        .collect()
}

type CacheKey = (u8, u64, u64);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<WeightTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<WeightTable>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Shared, immutable `l^{2,γ}` table with at least `n + 1` entries.
///
/// Tables are memoised per `γ`; a request for a shorter table than one already
/// built returns the longer table (the coefficients do not depend on `n`).
pub fn lubich2_cached(gamma: f64, n: usize) -> Result<Arc<WeightTable>> {
    check_open("gamma", gamma, 0.0, 1.0, "must lie in (0,1)")?;
    let key = (2u8, gamma.to_bits(), 0u64);
    if let Some(t) = cache().lock().unwrap().get(&key) {
        if t.len() > n {
            return Ok(Arc::clone(t));
        }
    }
    let table = Arc::new(lubich2_coeffs(gamma, n)?);
    let mut guard = cache().lock().unwrap();
    let entry = guard.entry(key).or_insert_with(|| Arc::clone(&table));
    if entry.len() < table.len() {
        *entry = Arc::clone(&table);
    }
    Ok(table)
}

/// Temporal accuracy of the convolution quadrature (ν in the literature).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeOrder {
    First,
    Second,
}

impl SchemeOrder {
    pub fn as_int(self) -> u32 {
        match self {
            SchemeOrder::First => 1,
            SchemeOrder::Second => 2,
        }
    }

    /// Base coefficients `l^{ν,γ}`: Grünwald weights for ν = 1, [`lubich2_coeffs`] for ν = 2.
    pub fn base_coeffs(self, gamma: f64, n: usize) -> Result<WeightTable> {
        match self {
            SchemeOrder::First => {
                check_open("gamma", gamma, 0.0, 1.0, "must lie in (0,1)")?;
                grunwald_coeffs(gamma, n)
            }
            SchemeOrder::Second => lubich2_coeffs(gamma, n),
        }
    }
}

impl TryFrom<u32> for SchemeOrder {
    type Error = Error;

    fn try_from(nu: u32) -> Result<Self> {
        match nu {
            1 => Ok(SchemeOrder::First),
            2 => Ok(SchemeOrder::Second),
            other => Err(Error::Parameter {
                name: "nu",
                value: other as f64,
                expected: "must be 1 or 2",
            }),
        }
    }
}

/// `(Σ_{l=1}^{ν} (1/l)(1 - e^{-λτ})^l)^γ`, the discrete counterpart of `λ^γ τ^γ`.
pub fn subtraction_constant(order: SchemeOrder, gamma: f64, lambda: f64, tau: f64) -> f64 {
    let d = -(-lambda * tau).exp_m1();
    let s = match order {
        SchemeOrder::First => d,
        SchemeOrder::Second => d + 0.5 * d * d,
    };
    s.powf(gamma)
}

/// Closed form of the generating function
/// `(Σ_{l=1}^{ν} (1/l)(1 - e^{-λ̃τ} ζ)^l)^γ` (principal branch).
pub fn generating_function(
    order: SchemeOrder,
    gamma: f64,
    lambda_tilde: Complex64,
    tau: f64,
    zeta: Complex64,
) -> Complex64 {
    let d = Complex64::new(1.0, 0.0) - (-lambda_tilde * tau).exp() * zeta;
    let base = match order {
        SchemeOrder::First => d,
        SchemeOrder::Second => d * (1.0 + 0.5 * d),
    };
    if base.norm() == 0.0 {
        Complex64::default()
    } else {
        base.powf(gamma)
    }
}

/// `q_m = e^{-λ̃ m τ} l_m^{2,γ}` for `m = 0..=n`.
pub fn tempered_weights(gamma: f64, lambda_tilde: Complex64, tau: f64, n: usize) -> Result<Vec<Complex64>> {
    tempered_weights_for(SchemeOrder::Second, gamma, lambda_tilde, tau, n)
}

pub(crate) fn tempered_weights_for(
    order: SchemeOrder,
    gamma: f64,
    lambda_tilde: Complex64,
    tau: f64,
    n: usize,
) -> Result<Vec<Complex64>> {
    check_positive("tau", tau)?;
    if !(lambda_tilde.re >= 0.0) {
        return Err(Error::Parameter {
            name: "Re(lambda_tilde)",
            value: lambda_tilde.re,
            expected: "must be >= 0",
        });
    }
    let base = order.base_coeffs(gamma, n)?;
    Ok(base
        .values()
        .iter()
        .enumerate()
        .map(|(m, &l)| (-lambda_tilde * (m as f64 * tau)).exp() * l)
        .collect())
}

/// Per-grid-point factors of the tempered weights: `e^{-(λ + ρU)τ}` and the
/// unit-modulus phase `e^{-JηUτ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointFactors {
    pub damping: f64,
    pub phase: Complex64,
}

impl PointFactors {
    pub fn new(lambda: f64, rho_u: f64, eta_u: f64, tau: f64) -> Self {
        Self {
            damping: (-(lambda + rho_u) * tau).exp(),
            phase: Complex64::from_polar(1.0, -eta_u * tau),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperedWeightRow {
    pub gridpoint_index: usize,
    pub damping: f64,
    pub phase: Complex64,
    /// `l_0^{(2)}, l_1^{(2)}, ...`; the phase is kept separate.
    pub scheme_weights: Vec<f64>,
    pub subtraction_constant: f64,
}

impl TemperedWeightRow {
    /// Full complex weight `l_k^{(2)} · phase^k` as it multiplies `G^{n-k}`.
    pub fn complex_weight(&self, k: usize) -> Complex64 {
        self.scheme_weights[k] * self.phase.powu(k as u32)
    }
}

/// Scheme weights of one grid point:
/// `l_0^{(2)} = l_0 - subtraction_constant`, `l_k^{(2)} = damping^k l_k` for `k >= 1`.
pub fn scheme_weights(
    gridpoint_index: usize,
    gamma: f64,
    lambda: f64,
    rho_u: f64,
    eta_u: f64,
    tau: f64,
    n: usize,
) -> Result<TemperedWeightRow> {
    check_nonneg("lambda", lambda)?;
    check_nonneg("rho*U", rho_u)?;
    check_positive("tau", tau)?;
    let base = lubich2_cached(gamma, n)?;
    let factors = PointFactors::new(lambda, rho_u, eta_u, tau);
    let sub = subtraction_constant(SchemeOrder::Second, gamma, lambda, tau);
    let mut weights = Vec::with_capacity(n + 1);
    weights.push(base.get(0) - sub);
    let mut pow = 1.0;
    for k in 1..=n {
        pow *= factors.damping;
        weights.push(pow * base.get(k));
    }
    Ok(TemperedWeightRow {
        gridpoint_index,
        damping: factors.damping,
        phase: factors.phase,
        scheme_weights: weights,
        subtraction_constant: sub,
    })
}
