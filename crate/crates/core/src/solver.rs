//! Implicit second-order time stepping.
//!
//! At step `n` every interior node `i` satisfies
//!
//! ```text
//! (l_0^(2)/τ^γ) G_i^n - (κ/h^α)(A_α G^n)_i
//!     = f_i^n + (1/τ^γ) e^{-λ̃_i nτ} (Σ_{k<=n} l_k) G_i^0
//!       - (1/τ^γ) Σ_{k=1}^{n} l_k e^{-(λ+ρU_i)kτ} e^{-JηU_i kτ} G_i^{n-k}
//! ```
//!
//! The left-hand matrix is real, symmetric positive definite and the same for
//! every step, so it is factorised once and complex right-hand sides are
//! solved as two real systems.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{check_nonneg, check_open, check_positive, Error, Result};
use crate::fracops::{lubich2_cached, subtraction_constant, PointFactors, SchemeOrder, WeightTable};
use crate::par;
use crate::problems::ProblemSpec;
use crate::riesz::{assemble_riesz, RieszOperator};

/// Systems with more unknowns than this are solved by conjugate gradients.
pub const CHOLESKY_LIMIT: usize = 4096;

/// The functional weight `U(x) >= 0`.
#[derive(Clone)]
pub enum FunctionalWeight {
    Zero,
    /// `U(x) = x`.
    Identity,
    /// `U(x) = 0` for `x <= 0`, `1` for `x > 0`.
    UnitStep,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl FunctionalWeight {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            FunctionalWeight::Zero => 0.0,
            FunctionalWeight::Identity => x,
            FunctionalWeight::UnitStep => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            FunctionalWeight::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for FunctionalWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionalWeight::Zero => f.write_str("Zero"),
            FunctionalWeight::Identity => f.write_str("Identity"),
            FunctionalWeight::UnitStep => f.write_str("UnitStep"),
            FunctionalWeight::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhysicalParams {
    pub gamma: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub rho: f64,
    pub eta: f64,
    /// Diffusion coefficient `K`.
    pub k_diff: f64,
    pub weight: FunctionalWeight,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        check_open("gamma", self.gamma, 0.0, 1.0, "must lie in (0,1)")?;
        check_open("alpha", self.alpha, 1.0, 2.0, "must lie in (1,2)")?;
        check_nonneg("lambda", self.lambda)?;
        check_positive("rho", self.rho)?;
        check_positive("K", self.k_diff)?;
        if !self.eta.is_finite() {
            return Err(Error::Parameter {
                name: "eta",
                value: self.eta,
                expected: "must be finite",
            });
        }
        Ok(())
    }

    /// `p = ρ + Jη`.
    pub fn p(&self) -> Complex64 {
        Complex64::new(self.rho, self.eta)
    }

    /// `λ̃(x) = λ + p U(x)`.
    pub fn lambda_tilde(&self, x: f64) -> Complex64 {
        self.lambda + self.p() * self.weight.eval(x)
    }

    /// `κ = -K / (2 cos(απ/2)) > 0`.
    pub fn kappa(&self) -> f64 {
        -self.k_diff * crate::riesz::riesz_kappa(self.alpha)
    }

    /// Same parameters with `η` negated; the scheme then produces the complex conjugate.
    pub fn conjugated(&self) -> Self {
        Self {
            eta: -self.eta,
            ..self.clone()
        }
    }
}

/// Uniform grid `x_i = a + i h`, `i = 0..=M`, on `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub a: f64,
    pub b: f64,
    pub m: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Config(format!("domain ({a}, {b}) is empty or not finite")));
        }
        if m < 3 {
            return Err(Error::Parameter {
                name: "M",
                value: m as f64,
                expected: "must be >= 3",
            });
        }
        Ok(Self { a, b, m })
    }

    /// Grid on `(a, b)` with the requested width; `(b - a)/h` must be an integer.
    pub fn with_width(a: f64, b: f64, h: f64) -> Result<Self> {
        check_positive("h", h)?;
        let m = ((b - a) / h).round();
        if (m * h - (b - a)).abs() > 1e-9 * (b - a) {
            return Err(Error::Config(format!("h = {h} does not divide the domain ({a}, {b})")));
        }
        Self::new(a, b, m as usize)
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.m as f64
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// Node `x_i` for `i = 0..=M`.
    pub fn node(&self, i: usize) -> f64 {
        self.a + i as f64 * self.h()
    }

    /// Interior nodes `x_1..x_{M-1}`.
    pub fn interior(&self) -> Vec<f64> {
        (1..self.m).map(|i| self.node(i)).collect()
    }

    pub fn interior_len(&self) -> usize {
        self.m - 1
    }

    /// Index of the node at `x`, if `x` is (to rounding) a grid node.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let s = (x - self.a) / self.h();
        let i = s.round();
        if (s - i).abs() < 1e-8 && i >= 0.0 && i <= self.m as f64 {
            Some(i as usize)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_final: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize) -> Result<Self> {
        check_positive("T", t_final)?;
        Ok(Self { t_final, steps })
    }

    /// Time grid with the requested step; `T/τ` must be an integer.
    pub fn with_step(t_final: f64, tau: f64) -> Result<Self> {
        check_positive("tau", tau)?;
        let n = (t_final / tau).round();
        if (n * tau - t_final).abs() > 1e-9 * t_final {
            return Err(Error::Config(format!("tau = {tau} does not divide T = {t_final}")));
        }
        Self::new(t_final, n as usize)
    }

    pub fn tau(&self) -> f64 {
        if self.steps == 0 {
            self.t_final
        } else {
            self.t_final / self.steps as f64
        }
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.tau()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearSolverKind {
    /// Cholesky up to [`CHOLESKY_LIMIT`] unknowns, conjugate gradients above.
    #[default]
    Auto,
    Cholesky,
    ConjugateGradient,
}

enum Factor {
    Cholesky(Cholesky<f64, Dyn>),
    ConjugateGradient { tol: f64, max_iter: usize },
}

/// `M_sys = c I - (κ/h^α) A_α` with `c = l_0^(2) / τ^γ`.
pub struct SystemMatrix {
    diag: f64,
    coupling: f64,
    operator: RieszOperator,
    factor: Factor,
}

impl fmt::Debug for SystemMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.factor {
            Factor::Cholesky(_) => "cholesky",
            Factor::ConjugateGradient { .. } => "cg",
        };
        f.debug_struct("SystemMatrix")
            .field("diag", &self.diag)
            .field("coupling", &self.coupling)
            .field("dim", &self.operator.dim())
            .field("factor", &kind)
            .finish()
    }
}

/// Leading weight `l_0^(2) = (3/2)^γ - c_2(λτ)^γ`.
pub fn leading_weight(gamma: f64, lambda: f64, tau: f64) -> f64 {
    1.5f64.powf(gamma) - subtraction_constant(SchemeOrder::Second, gamma, lambda, tau)
}

pub fn build_system(params: &PhysicalParams, grid: &Grid, tau: f64) -> Result<SystemMatrix> {
    build_system_with(params, grid, tau, LinearSolverKind::Auto)
}

pub fn build_system_with(params: &PhysicalParams, grid: &Grid, tau: f64, kind: LinearSolverKind) -> Result<SystemMatrix> {
    params.validate()?;
    check_positive("tau", tau)?;
    let l0 = leading_weight(params.gamma, params.lambda, tau);
    if !(l0 > 0.0) {
        return Err(Error::NonPositiveLeadingWeight {
            l0,
            lambda_tau: params.lambda * tau,
        });
    }
    let h = grid.h();
    let operator = assemble_riesz(params.alpha, grid.m, h, params.k_diff)?;
    let diag = l0 / tau.powf(params.gamma);
    let coupling = operator.kappa() / h.powf(params.alpha);
    let use_cholesky = match kind {
        LinearSolverKind::Auto => operator.dim() <= CHOLESKY_LIMIT,
        LinearSolverKind::Cholesky => true,
        LinearSolverKind::ConjugateGradient => false,
    };
    let factor = if use_cholesky {
        let n = operator.dim();
        let dense = DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { diag } else { 0.0 };
            d - coupling * operator.entry(i, j)
        });
        let chol = dense.cholesky().ok_or_else(|| Error::SolverBreakdown {
            step: 0,
            reason: "system matrix is not positive definite".into(),
        })?;
        Factor::Cholesky(chol)
    } else {
        Factor::ConjugateGradient {
            tol: 1e-12,
            max_iter: 10 * operator.dim(),
        }
    };
    Ok(SystemMatrix {
        diag,
        coupling,
        operator,
        factor,
    })
}

impl SystemMatrix {
    /// `c = l_0^(2) / τ^γ`.
    pub fn diagonal_shift(&self) -> f64 {
        self.diag
    }

    /// `κ / h^α`.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn operator(&self) -> &RieszOperator {
        &self.operator
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn uses_cholesky(&self) -> bool {
        matches!(self.factor, Factor::Cholesky(_))
    }

    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let a = self.operator.to_dense()?;
        Ok(DMatrix::identity(a.nrows(), a.ncols()) * self.diag - a * self.coupling)
    }

    /// `M_sys x` for a real vector.
    pub fn apply_real(&self, x: &[f64], out: &mut [f64]) {
        self.operator.apply_unscaled_real(x, out);
        for (o, &v) in out.iter_mut().zip(x) {
            *o = self.diag * v - self.coupling * *o;
        }
    }

    pub fn solve_real(&self, rhs: &[f64], step: usize) -> Result<Vec<f64>> {
        if rhs.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: rhs.len(),
            });
        }
        match &self.factor {
            Factor::Cholesky(chol) => {
                let mut b = DVector::from_column_slice(rhs);
                chol.solve_mut(&mut b);
                Ok(b.as_slice().to_vec())
            }
            Factor::ConjugateGradient { tol, max_iter } => self.conjugate_gradient(rhs, *tol, *max_iter, step),
        }
    }

    /// Solve `M_sys x = rhs` for complex `rhs` as two real solves.
    pub fn solve(&self, rhs: &[Complex64], step: usize) -> Result<Vec<Complex64>> {
        let re: Vec<f64> = rhs.iter().map(|v| v.re).collect();
        let im: Vec<f64> = rhs.iter().map(|v| v.im).collect();
        let xr = self.solve_real(&re, step)?;
        let xi = if im.iter().all(|&v| v == 0.0) {
            vec![0.0; im.len()]
        } else {
            self.solve_real(&im, step)?
        };
        Ok(xr.into_iter().zip(xi).map(|(r, i)| Complex64::new(r, i)).collect())
    }

    fn conjugate_gradient(&self, b: &[f64], tol: f64, max_iter: usize, step: usize) -> Result<Vec<f64>> {
        let n = b.len();
        let b_norm = dot(b, b).sqrt();
        let mut x = vec![0.0; n];
        if b_norm == 0.0 {
            return Ok(x);
        }
        let mut r = b.to_vec();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr = dot(&r, &r);
        for _ in 0..max_iter.max(1) {
            self.apply_real(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::SolverBreakdown {
                    step,
                    reason: format!("non-positive curvature {pap:e} in conjugate gradients"),
                });
            }
            let alpha = rr / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_next = dot(&r, &r);
            if rr_next.sqrt() <= tol * b_norm {
                return Ok(x);
            }
            let beta = rr_next / rr;
            rr = rr_next;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        Err(Error::SolverBreakdown {
            step,
            reason: format!("conjugate gradients did not reach {tol:e} in {max_iter} iterations"),
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Inner loops of the history convolution.
pub mod kernels {
    use super::*;

    /// The running power of the phase is recomputed exactly this often.
    pub const RENORMALIZE_EVERY: usize = 1024;

    /// `Σ_{k=1}^{n} l_k (damping·phase)^k G^{n-k}` for one grid point, where
    /// `series` holds `G^0..G^{n-1}`.
    pub fn history_sum(series: &[Complex64], weights: &[f64], factors: PointFactors) -> Complex64 {
        let n = series.len();
        let z = factors.damping * factors.phase;
        let theta = factors.phase.arg();
        let mut power = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::default();
        for k in 1..=n {
            power = if k % RENORMALIZE_EVERY == 0 {
                factors.damping.powi(k as i32) * Complex64::from_polar(1.0, theta * k as f64)
            } else {
                power * z
            };
            if power.re == 0.0 && power.im == 0.0 {
                break;
            }
            acc += weights[k] * power * series[n - k];
        }
        acc
    }

    /// [`history_sum`] for every point, one after another.
    pub fn history_terms_sequential(columns: &[Vec<Complex64>], weights: &[f64], factors: &[PointFactors], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = history_sum(&columns[i], weights, factors[i]);
        }
    }

    /// [`history_sum`] for every point, spread over the thread pool when the
    /// `parallel` feature is enabled. Bitwise identical to the sequential path.
    pub fn history_terms(columns: &[Vec<Complex64>], weights: &[f64], factors: &[PointFactors], out: &mut [Complex64]) {
        par::for_each_indexed(out, |i, o| *o = history_sum(&columns[i], weights, factors[i]));
    }
}

/// Stored time levels of a run, kept point-major (`columns[i][n]`) because the
/// history convolution walks each point's time series.
#[derive(Debug, Clone)]
pub struct SolutionHistory {
    grid: Grid,
    time: TimeGrid,
    columns: Vec<Vec<Complex64>>,
    keep_every: usize,
    step_seconds: Vec<f64>,
}

impl SolutionHistory {
    pub fn new(grid: Grid, time: TimeGrid, initial: Vec<Complex64>, keep_every: usize) -> Result<Self> {
        if initial.len() != grid.interior_len() {
            return Err(Error::Dimension {
                expected: grid.interior_len(),
                found: initial.len(),
            });
        }
        let columns = initial
            .into_iter()
            .map(|v| {
                let mut c = Vec::with_capacity(time.steps + 1);
                c.push(v);
                c
            })
            .collect();
        Ok(Self {
            grid,
            time,
            columns,
            keep_every: keep_every.max(1),
            step_seconds: Vec::with_capacity(time.steps),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    /// Number of stored levels (`n + 1` after `n` steps).
    pub fn levels(&self) -> usize {
        self.columns.first().map_or(1, Vec::len)
    }

    /// Index of the newest level.
    pub fn last_step(&self) -> usize {
        self.levels() - 1
    }

    /// `G_i^n` for interior index `i` (node `x_{i+1}`).
    pub fn value(&self, i: usize, n: usize) -> Complex64 {
        self.columns[i][n]
    }

    pub fn column(&self, i: usize) -> &[Complex64] {
        &self.columns[i]
    }

    pub fn columns(&self) -> &[Vec<Complex64>] {
        &self.columns
    }

    /// Interior values at level `n`.
    pub fn level(&self, n: usize) -> Vec<Complex64> {
        self.columns.iter().map(|c| c[n]).collect()
    }

    pub fn final_level(&self) -> Vec<Complex64> {
        self.level(self.last_step())
    }

    /// Values at all nodes `x_0..=x_M`, zero on the boundary.
    pub fn level_with_boundary(&self, n: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.grid.m + 1);
        out.push(Complex64::default());
        out.extend(self.level(n));
        out.push(Complex64::default());
        out
    }

    /// Steps selected for output: every `keep_every`-th level plus the last one.
    /// The convolution itself always uses every level.
    pub fn recorded_steps(&self) -> Vec<usize> {
        let last = self.last_step();
        let mut steps: Vec<usize> = (0..=last).step_by(self.keep_every).collect();
        if steps.last() != Some(&last) {
            steps.push(last);
        }
        steps
    }

    /// Wall-clock seconds spent in each completed step.
    pub fn step_seconds(&self) -> &[f64] {
        &self.step_seconds
    }

    pub fn push_level(&mut self, level: Vec<Complex64>, seconds: f64) -> Result<()> {
        if level.len() != self.columns.len() {
            return Err(Error::Dimension {
                expected: self.columns.len(),
                found: level.len(),
            });
        }
        for (c, v) in self.columns.iter_mut().zip(level) {
            c.push(v);
        }
        self.step_seconds.push(seconds);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Output decimation (see [`SolutionHistory::recorded_steps`]).
    pub keep_every: usize,
    pub solver: LinearSolverKind,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            keep_every: 1,
            solver: LinearSolverKind::Auto,
        }
    }
}

/// Precomputed state shared by every step of one run.
pub struct Stepper {
    params: PhysicalParams,
    grid: Grid,
    time: TimeGrid,
    system: SystemMatrix,
    base: Arc<WeightTable>,
    base_partial_sums: Vec<f64>,
    scheme_weights: Vec<f64>,
    factors: Vec<PointFactors>,
    lambda_tilde: Vec<Complex64>,
    inv_tau_gamma: f64,
}

impl fmt::Debug for Stepper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Stepper")
            .field("grid", &self.grid)
            .field("time", &self.time)
            .field("system", &self.system)
            .finish()
    }
}

impl Stepper {
    pub fn new(params: &PhysicalParams, grid: Grid, time: TimeGrid, solver: LinearSolverKind) -> Result<Self> {
        let tau = time.tau();
        let system = build_system_with(params, &grid, tau, solver)?;
        let base = lubich2_cached(params.gamma, time.steps)?;
        let base_partial_sums = base.partial_sums();
        let mut scheme_weights = base.values()[..=time.steps].to_vec();
        scheme_weights[0] = leading_weight(params.gamma, params.lambda, tau);
        let xs = grid.interior();
        let factors = xs
            .iter()
            .map(|&x| {
                let u = params.weight.eval(x);
                PointFactors::new(params.lambda, params.rho * u, params.eta * u, tau)
            })
            .collect();
        let lambda_tilde = xs.iter().map(|&x| params.lambda_tilde(x)).collect();
        Ok(Self {
            params: params.clone(),
            grid,
            time,
            system,
            base,
            base_partial_sums,
            scheme_weights,
            factors,
            lambda_tilde,
            inv_tau_gamma: tau.powf(-params.gamma),
        })
    }

    pub fn system(&self) -> &SystemMatrix {
        &self.system
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    /// `l_0^(2), l_1, l_2, ...` (the per-point damping is applied in the kernel).
    pub fn scheme_weights(&self) -> &[f64] {
        &self.scheme_weights
    }

    pub fn base_weights(&self) -> &WeightTable {
        &self.base
    }

    pub fn point_factors(&self) -> &[PointFactors] {
        &self.factors
    }

    /// Right-hand side of step `n` (`history` must hold levels `0..n`).
    pub fn rhs(&self, history: &SolutionHistory, n: usize, source: &[Complex64]) -> Result<Vec<Complex64>> {
        let dim = self.grid.interior_len();
        if source.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: source.len(),
            });
        }
        if history.levels() != n {
            return Err(Error::Config(format!(
                "step {n} requested with {} stored levels",
                history.levels()
            )));
        }
        let mut hist = vec![Complex64::default(); dim];
        kernels::history_terms(history.columns(), &self.scheme_weights, &self.factors, &mut hist);

        let tn = self.time.time(n);
        let initial_weight = self.base_partial_sums[n];
        let scale = self.inv_tau_gamma;
        let mut rhs = hist;
        par::for_each_indexed(&mut rhs, |i, r| {
            let decay = (-self.lambda_tilde[i] * tn).exp();
            let initial = decay * (initial_weight * history.value(i, 0));
            *r = source[i] + scale * (initial - *r);
        });
        Ok(rhs)
    }

    /// Advance to level `n` given levels `0..n` and the source `f^n` at the interior nodes.
    pub fn step(&self, history: &SolutionHistory, n: usize, source: &[Complex64]) -> Result<Vec<Complex64>> {
        let rhs = self.rhs(history, n, source)?;
        let level = self.system.solve(&rhs, n)?;
        if level.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite { step: n });
        }
        Ok(level)
    }
}

/// Run `time.steps` steps of the scheme for `problem` on `grid`.
pub fn run(problem: &ProblemSpec, grid: &Grid, time: &TimeGrid, options: RunOptions) -> Result<SolutionHistory> {
    problem.check_grid(grid)?;
    let stepper = Stepper::new(&problem.params, *grid, *time, options.solver)?;
    let xs = grid.interior();
    let initial: Vec<Complex64> = xs.iter().map(|&x| problem.initial_value(x)).collect();
    let mut history = SolutionHistory::new(*grid, *time, initial, options.keep_every)?;
    let mut source = vec![Complex64::default(); xs.len()];
    for n in 1..=time.steps {
        let started = Instant::now();
        let t = time.time(n);
        problem.source_level(&xs, t, &mut source)?;
        let level = stepper.step(&history, n, &source)?;
        history.push_level(level, started.elapsed().as_secs_f64())?;
    }
    Ok(history)
}
