//! Problem definitions, analytic reference solutions and experiment drivers.

mod fpt;
mod series;
mod study;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use statrs::function::gamma::{checked_gamma_ur, gamma};

use crate::error::{Error, Result};
use crate::par;
use crate::solver::{FunctionalWeight, Grid, PhysicalParams};

pub use fpt::{fpt_run, FptConfig, FptCurve, FptSource};
pub use series::{frac_deriv_series, Side, MAX_TERMS};
pub use study::{
    convergence_study, max_error_against, max_self_difference, observed_rate, ConvergenceMode, Ladder, LadderLevel,
    ReportRow, RunReport,
};

/// Which power of `λ` multiplies the second term of the manufactured source.
/// The published formula prints `λ^α`; consistency with the exact solution
/// requires `λ^γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SourceExponent {
    #[default]
    Gamma,
    Alpha,
}

pub type InitialFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;
pub type FieldFn = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub enum Source {
    Zero,
    /// Source of the manufactured solution on `(0, 1)` with `U(x) = x`.
    Manufactured(SourceExponent),
    /// `λ D_t^{γ-1,λ̃} e^{-pUt} - λ^γ e^{-pUt}`.
    PhysicalModel,
    Custom(FieldFn),
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Zero => f.write_str("Zero"),
            Source::Manufactured(e) => write!(f, "Manufactured({e:?})"),
            Source::PhysicalModel => f.write_str("PhysicalModel"),
            Source::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub params: PhysicalParams,
    pub domain: (f64, f64),
    pub initial: InitialFn,
    pub source: Source,
    pub exact: Option<FieldFn>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("params", &self.params)
            .field("domain", &self.domain)
            .field("source", &self.source)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    /// Manufactured solution `e^{-(λ + pU)t}(t^{2+γ} + 1) x²(1-x)²` on `(0, 1)`
    /// with `U(x) = x`; the weight in `params` is overridden.
    pub fn manufactured(params: PhysicalParams, exponent: SourceExponent) -> Result<Self> {
        let params = PhysicalParams {
            weight: FunctionalWeight::Identity,
            ..params
        };
        params.validate()?;
        let p = params.clone();
        Ok(Self {
            params,
            domain: (0.0, 1.0),
            initial: Arc::new(|x| Complex64::new(quartic(x, 1.0), 0.0)),
            source: Source::Manufactured(exponent),
            exact: Some(Arc::new(move |x, t| manufactured_exact(x, t, &p))),
        })
    }

    /// Zero-source problem on `(0, 2)` with initial data `x²(2-x)²`, `U(x) = x`.
    pub fn quartic_decay(params: PhysicalParams) -> Result<Self> {
        let params = PhysicalParams {
            weight: FunctionalWeight::Identity,
            ..params
        };
        params.validate()?;
        Ok(Self {
            params,
            domain: (0.0, 2.0),
            initial: Arc::new(|x| Complex64::new(quartic(x, 2.0), 0.0)),
            source: Source::Zero,
            exact: None,
        })
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        let (a, b) = self.domain;
        if grid.a != a || grid.b != b {
            return Err(Error::Config(format!(
                "grid ({}, {}) does not cover the problem domain ({a}, {b})",
                grid.a, grid.b
            )));
        }
        Ok(())
    }

    pub fn initial_value(&self, x: f64) -> Complex64 {
        (self.initial)(x)
    }

    pub fn exact_value(&self, x: f64, t: f64) -> Option<Complex64> {
        self.exact.as_ref().map(|f| f(x, t))
    }

    pub fn source_value(&self, x: f64, t: f64) -> Result<Complex64> {
        match &self.source {
            Source::Zero => Ok(Complex64::default()),
            Source::Manufactured(e) => manufactured_source(x, t, &self.params, *e),
            Source::PhysicalModel => Ok(physical_source(x, t, &self.params)),
            Source::Custom(f) => Ok(f(x, t)),
        }
    }

    /// Evaluate the source at every node of `xs` into `out`.
    pub fn source_level(&self, xs: &[f64], t: f64, out: &mut [Complex64]) -> Result<()> {
        if let Source::Zero = self.source {
            out.iter_mut().for_each(|v| *v = Complex64::default());
            return Ok(());
        }
        let values = par::map(xs, |&x| self.source_value(x, t));
        for (o, v) in out.iter_mut().zip(values) {
            *o = v?;
        }
        Ok(())
    }
}

fn quartic(x: f64, b: f64) -> f64 {
    let y = x * (b - x);
    y * y
}

/// `e^{-(λ + pU(x))t} (t^{2+γ} + 1) x²(1-x)²`.
pub fn manufactured_exact(x: f64, t: f64, params: &PhysicalParams) -> Complex64 {
    let shape = quartic(x, 1.0) * (t.powf(2.0 + params.gamma) + 1.0);
    (-params.lambda_tilde(x) * t).exp() * shape
}

/// Source term of the manufactured solution:
///
/// ```text
/// Γ(3+γ)/Γ(3) e^{-λ̃t} t² X - λ^γ e^{-λ̃t}(t^{2+γ}+1) X
///   + K κ_α e^{-λt}(t^{2+γ}+1) (₀D_x^α + ₓD_1^α)[e^{-ptx} X],   X = x²(1-x)².
/// ```
pub fn manufactured_source(x: f64, t: f64, params: &PhysicalParams, exponent: SourceExponent) -> Result<Complex64> {
    let gam = params.gamma;
    let shape = quartic(x, 1.0);
    let time_factor = t.powf(2.0 + gam) + 1.0;
    let decay = (-params.lambda_tilde(x) * t).exp();
    let lambda_pow = match exponent {
        SourceExponent::Gamma => params.lambda.powf(gam),
        SourceExponent::Alpha => params.lambda.powf(params.alpha),
    };
    let first = gamma(3.0 + gam) / 2.0 * t * t * shape * decay;
    let second = -lambda_pow * time_factor * shape * decay;
    let c = params.p() * t;
    let spatial = frac_deriv_series(c, params.alpha, Side::Left, x)? + frac_deriv_series(c, params.alpha, Side::Right, x)?;
    let third = params.k_diff * crate::riesz::riesz_kappa(params.alpha) * (-params.lambda * t).exp() * time_factor * spatial;
    Ok(first + second + third)
}

/// `λ D_t^{γ-1,λ̃} e^{-pUt} - λ^γ e^{-pUt} = -λ^γ Q(1-γ, λt) e^{-pU(x)t}`,
/// with `Q` the regularised upper incomplete gamma function.
pub fn physical_source(x: f64, t: f64, params: &PhysicalParams) -> Complex64 {
    if params.lambda == 0.0 {
        return Complex64::default();
    }
    let upper = if t > 0.0 {
        checked_gamma_ur(1.0 - params.gamma, params.lambda * t).unwrap_or(0.0)
    } else {
        1.0
    };
    let decay = (-params.p() * params.weight.eval(x) * t).exp();
    -params.lambda.powf(params.gamma) * upper * decay
}
