//! Stand-alone discretisation of the tempered fractional substantial derivative
//!
//! `ˢD_t^{γ,λ̃} G = D_t^{γ,λ̃} G - λ^γ G`,
//!
//! used to verify the temporal convolution weights independently of the PDE
//! solver.

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{check_nonneg, check_open, check_positive, Error, Result};
use crate::fracops::{subtraction_constant, tempered_weights_for, SchemeOrder};
use crate::par;

/// Samples `G(t - mτ)`, `m = 0..=n`, of a function on the uniform grid ending at `t = nτ`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSample {
    pub tau: f64,
    pub values: Vec<Complex64>,
    pub gamma: f64,
    pub lambda_tilde: Complex64,
    pub lambda: f64,
    pub order: SchemeOrder,
}

impl OperatorSample {
    /// Sample `g` at `t - mτ` for `m = 0..=n` where `τ = t / n`.
    pub fn from_fn(
        g: impl Fn(f64) -> Complex64,
        t: f64,
        n: usize,
        gamma: f64,
        lambda_tilde: Complex64,
        lambda: f64,
        order: SchemeOrder,
    ) -> Result<Self> {
        check_positive("t", t)?;
        if n == 0 {
            return Err(Error::Parameter {
                name: "n",
                value: 0.0,
                expected: "must be >= 1",
            });
        }
        let tau = t / n as f64;
        let values = (0..=n).map(|m| g((n - m) as f64 * tau)).collect();
        let s = Self {
            tau,
            values,
            gamma,
            lambda_tilde,
            lambda,
            order,
        };
        s.validate()?;
        Ok(s)
    }

    /// Number of steps `n`.
    pub fn steps(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn time(&self) -> f64 {
        self.steps() as f64 * self.tau
    }

    fn validate(&self) -> Result<()> {
        check_positive("tau", self.tau)?;
        check_open("gamma", self.gamma, 0.0, 1.0, "must lie in (0,1)")?;
        check_nonneg("lambda", self.lambda)?;
        if !(self.lambda_tilde.re >= self.lambda) {
            return Err(Error::Parameter {
                name: "Re(lambda_tilde)",
                value: self.lambda_tilde.re,
                expected: "must be >= lambda",
            });
        }
        if self.values.is_empty() {
            return Err(Error::Dimension { expected: 1, found: 0 });
        }
        Ok(())
    }
}

/// `(1/τ^γ) Σ_m q_m G(t - mτ) - (1/τ^γ) c_ν(λτ)^γ G(t)`, an `O(τ^ν)`
/// approximation of `ˢD_t^{γ,λ̃} G(t)`.
pub fn discretize_substantial(s: &OperatorSample) -> Result<Complex64> {
    s.validate()?;
    let n = s.steps();
    let q = tempered_weights_for(s.order, s.gamma, s.lambda_tilde, s.tau, n)?;
    let conv: Complex64 = q.iter().zip(&s.values).map(|(w, g)| w * g).sum();
    let sub = subtraction_constant(s.order, s.gamma, s.lambda, s.tau);
    Ok((conv - sub * s.values[0]) / s.tau.powf(s.gamma))
}

/// Exact `ˢD_t^{γ,λ̃}` of `G(t) = e^{-λ̃t} t^β`:
/// `e^{-λ̃t} Γ(β+1)/Γ(β+1-γ) t^{β-γ} - λ^γ e^{-λ̃t} t^β`.
pub fn reference_substantial(beta: f64, gamma: f64, lambda_tilde: Complex64, lambda: f64, t: f64) -> Result<Complex64> {
    check_open("gamma", gamma, 0.0, 1.0, "must lie in (0,1)")?;
    check_positive("t", t)?;
    check_nonneg("lambda", lambda)?;
    if !(beta > gamma) {
        return Err(Error::Parameter {
            name: "beta",
            value: beta,
            expected: "must exceed gamma",
        });
    }
    let shift = (-lambda_tilde * t).exp();
    let ratio = (ln_gamma(beta + 1.0) - ln_gamma(beta + 1.0 - gamma)).exp();
    Ok(shift * (ratio * t.powf(beta - gamma) - lambda.powf(gamma) * t.powf(beta)))
}

/// One row of an operator order study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderRow {
    pub tau: f64,
    pub error: f64,
    /// `log2(e(2τ)/e(τ))`; `NaN` on the first row.
    pub rate: f64,
}

/// Parameters of an order study on `G(t) = e^{-λ̃t} t^β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderStudy {
    pub order: SchemeOrder,
    pub gamma: f64,
    pub lambda_tilde: Complex64,
    pub lambda: f64,
    pub beta: f64,
    pub t: f64,
}

impl OrderStudy {
    /// Errors for `τ = t / 2^k`, `k ∈ [first_level, last_level]`.
    pub fn run(&self, first_level: u32, last_level: u32) -> Result<Vec<OrderRow>> {
        let exact = reference_substantial(self.beta, self.gamma, self.lambda_tilde, self.lambda, self.t)?;
        let levels: Vec<u32> = (first_level..=last_level).collect();
        let errors: Vec<Result<(f64, f64)>> = par::map(&levels, |&k| {
            let n = 1usize << k;
            let lt = self.lambda_tilde;
            let beta = self.beta;
            let sample = OperatorSample::from_fn(
                |s| (-lt * s).exp() * s.powf(beta),
                self.t,
                n,
                self.gamma,
                lt,
                self.lambda,
                self.order,
            )?;
            let approx = discretize_substantial(&sample)?;
            Ok((sample.tau, (approx - exact).norm()))
        });
        let mut rows: Vec<OrderRow> = Vec::with_capacity(errors.len());
        for e in errors {
            let (tau, error) = e?;
            let rate = rows
                .last()
                .map_or(f64::NAN, |prev: &OrderRow| (prev.error / error).log2());
            rows.push(OrderRow { tau, error, rate });
        }
        Ok(rows)
    }
}
