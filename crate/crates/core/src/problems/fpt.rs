//! First-passage-time survival curves: `P{t_f > t} = lim_{p→∞} G(-c0, p, t)`
//! with `U` the unit step, approximated by a large real `p`.

use std::sync::Arc;

use num_complex::Complex64;

use super::{ProblemSpec, Source};
use crate::error::{check_positive, Error, Result};
use crate::solver::{run, FunctionalWeight, Grid, PhysicalParams, RunOptions, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FptSource {
    #[default]
    Physical,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FptConfig {
    pub c0: f64,
    pub p_large: f64,
    /// Domain is `(-half_width, half_width)`.
    pub half_width: f64,
    pub t_final: f64,
    pub tau: f64,
    pub h: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub k_diff: f64,
    pub source: FptSource,
}

impl FptConfig {
    /// Reduced run: `(-20, 20)`, `T = 100`, `τ = h = 1/10`.
    pub fn desk() -> Self {
        Self {
            c0: 0.1,
            p_large: 1e8,
            half_width: 20.0,
            t_final: 100.0,
            tau: 0.1,
            h: 0.1,
            gamma: 0.5,
            alpha: 1.9,
            lambda: 0.0,
            k_diff: 1.0,
            source: FptSource::Physical,
        }
    }

    /// `(-100, 100)`, `T = 800`, `τ = h = 1/20`, `c0 = 0.05`.
    pub fn full_scale() -> Self {
        Self {
            c0: 0.05,
            half_width: 100.0,
            t_final: 800.0,
            tau: 0.05,
            h: 0.05,
            ..Self::desk()
        }
    }

    pub fn params(&self) -> PhysicalParams {
        PhysicalParams {
            gamma: self.gamma,
            alpha: self.alpha,
            lambda: self.lambda,
            rho: self.p_large,
            eta: 0.0,
            k_diff: self.k_diff,
            weight: FunctionalWeight::UnitStep,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        check_positive("half_width", self.half_width)?;
        Grid::with_width(-self.half_width, self.half_width, self.h)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::with_step(self.t_final, self.tau)
    }

    /// Interior index of the readout node `x = -c0`.
    pub fn readout_index(&self) -> Result<usize> {
        check_positive("c0", self.c0)?;
        let grid = self.grid()?;
        match grid.index_of(-self.c0) {
            Some(i) if i >= 1 && i < grid.m => Ok(i - 1),
            _ => Err(Error::OffGrid {
                x: -self.c0,
                h: grid.h(),
            }),
        }
    }

    /// Check every constraint without solving.
    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        check_positive("p", self.p_large)?;
        self.time_grid()?;
        self.readout_index()?;
        Ok(())
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let params = self.params();
        params.validate()?;
        Ok(ProblemSpec {
            params,
            domain: (-self.half_width, self.half_width),
            initial: Arc::new(|_| Complex64::new(1.0, 0.0)),
            source: match self.source {
                FptSource::Physical => Source::PhysicalModel,
                FptSource::Zero => Source::Zero,
            },
            exact: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FptCurve {
    pub times: Vec<f64>,
    /// `Re G(-c0, t_n)` clipped to `[0, 1]`.
    pub survival: Vec<f64>,
    /// Unclipped complex readout.
    pub raw: Vec<Complex64>,
    /// Wall-clock seconds of the solve.
    pub seconds: f64,
}

impl FptCurve {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Least-squares slope of `ln P` against `ln t` over `t ∈ [t0, t1]`.
    pub fn loglog_slope(&self, t0: f64, t1: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(&self.survival)
            .filter(|(&t, &p)| t >= t0 && t <= t1 && t > 0.0 && p > 0.0)
            .map(|(t, p)| (t.ln(), p.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Some(sxy / sxx)
    }

    /// Largest increase `P_{n+1} - P_n`, zero for a nonincreasing curve.
    pub fn max_increase(&self) -> f64 {
        self.survival.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

pub fn fpt_run(cfg: &FptConfig) -> Result<FptCurve> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let time = cfg.time_grid()?;
    let idx = cfg.readout_index()?;
    let problem = cfg.problem()?;
    let started = std::time::Instant::now();
    let history = run(&problem, &grid, &time, RunOptions::default())?;
    let seconds = started.elapsed().as_secs_f64();
    let raw = history.column(idx).to_vec();
    Ok(FptCurve {
        times: (0..raw.len()).map(|n| time.time(n)).collect(),
        survival: raw.iter().map(|v| v.re.clamp(0.0, 1.0)).collect(),
        raw,
        seconds,
    })
}
