//! Convergence studies: errors against an exact solution or against the next
//! finer grid, with observed orders.

use std::time::Instant;

use num_complex::Complex64;

use super::ProblemSpec;
use crate::error::{Error, Result};
use crate::par;
use crate::solver::{run, Grid, RunOptions, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderLevel {
    pub h: f64,
    pub tau: f64,
}

/// Sequence of `(h, τ)` pairs, coarse to fine.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ladder {
    pub levels: Vec<LadderLevel>,
}

impl Ladder {
    /// `h = h0/2^k`, `τ = τ0/2^k`.
    pub fn halving(h0: f64, tau0: f64, levels: usize) -> Self {
        Self {
            levels: (0..levels)
                .map(|k| {
                    let s = 0.5f64.powi(k as i32);
                    LadderLevel { h: h0 * s, tau: tau0 * s }
                })
                .collect(),
        }
    }

    /// `h = h0/2^k` with `τ` fixed.
    pub fn spatial(h0: f64, tau: f64, levels: usize) -> Self {
        Self {
            levels: (0..levels)
                .map(|k| LadderLevel {
                    h: h0 * 0.5f64.powi(k as i32),
                    tau,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceMode {
    /// Max-norm error against `ProblemSpec::exact` at the final time.
    Exact,
    /// `‖G_h - G_{h/2}‖∞` on the common nodes; one row fewer than levels.
    SelfConvergence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub h: f64,
    pub tau: f64,
    pub max_error: f64,
    /// `NaN` on the first row or when an error is zero.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub rows: Vec<ReportRow>,
    /// Labelled wall-clock seconds.
    pub timings: Vec<(String, f64)>,
}

impl RunReport {
    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.max_error).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.rows.iter().skip(1).map(|r| r.rate).collect()
    }
}

/// `ln(coarse/fine) / ln(ratio)`; `NaN` unless both errors are positive and finite.
pub fn observed_rate(coarse: f64, fine: f64, ratio: f64) -> f64 {
    let ok = |e: f64| e > 0.0 && e.is_finite();
    if ok(coarse) && ok(fine) {
        (coarse / fine).ln() / ratio.ln()
    } else {
        f64::NAN
    }
}

/// `max_i |level_i - exact(x_i, t)|` over interior nodes.
pub fn max_error_against(grid: &Grid, level: &[Complex64], t: f64, exact: impl Fn(f64, f64) -> Complex64) -> Result<f64> {
    if level.len() != grid.interior_len() {
        return Err(Error::Dimension {
            expected: grid.interior_len(),
            found: level.len(),
        });
    }
    Ok(level
        .iter()
        .enumerate()
        .map(|(i, v)| (v - exact(grid.node(i + 1), t)).norm())
        .fold(0.0, f64::max))
}

/// Max difference on the coarse interior nodes; the fine grid must refine the
/// coarse one by an integer factor on the same domain.
pub fn max_self_difference(coarse_grid: &Grid, coarse: &[Complex64], fine_grid: &Grid, fine: &[Complex64]) -> Result<f64> {
    if coarse_grid.a != fine_grid.a || coarse_grid.b != fine_grid.b {
        return Err(Error::NonNestedGrids(format!(
            "domains ({}, {}) and ({}, {}) differ",
            coarse_grid.a, coarse_grid.b, fine_grid.a, fine_grid.b
        )));
    }
    if !fine_grid.m.is_multiple_of(coarse_grid.m) {
        return Err(Error::NonNestedGrids(format!(
            "M = {} does not refine M = {}",
            fine_grid.m, coarse_grid.m
        )));
    }
    for (g, v) in [(coarse_grid, coarse), (fine_grid, fine)] {
        if v.len() != g.interior_len() {
            return Err(Error::Dimension {
                expected: g.interior_len(),
                found: v.len(),
            });
        }
    }
    let r = fine_grid.m / coarse_grid.m;
    Ok(coarse
        .iter()
        .enumerate()
        .map(|(i, v)| (v - fine[r * (i + 1) - 1]).norm())
        .fold(0.0, f64::max))
}

/// Solve on every ladder level up to `t_final` and tabulate errors and orders.
pub fn convergence_study(spec: &ProblemSpec, ladder: &Ladder, mode: ConvergenceMode, t_final: f64) -> Result<RunReport> {
    if mode == ConvergenceMode::Exact && spec.exact.is_none() {
        return Err(Error::Config("exact mode needs a problem with a known solution".into()));
    }
    let (a, b) = spec.domain;
    let mut setups = Vec::with_capacity(ladder.len());
    for lv in &ladder.levels {
        setups.push((Grid::with_width(a, b, lv.h)?, TimeGrid::with_step(t_final, lv.tau)?));
    }
    if mode == ConvergenceMode::SelfConvergence {
        for w in setups.windows(2) {
            if !w[1].0.m.is_multiple_of(w[0].0.m) {
                return Err(Error::NonNestedGrids(format!("M = {} does not refine M = {}", w[1].0.m, w[0].0.m)));
            }
        }
    }

    let solved: Vec<Result<(Vec<Complex64>, f64)>> = par::map(&setups, |(grid, time)| {
        let started = Instant::now();
        let history = run(spec, grid, time, RunOptions::default())?;
        Ok((history.final_level(), started.elapsed().as_secs_f64()))
    });
    let mut finals = Vec::with_capacity(solved.len());
    let mut timings = Vec::with_capacity(solved.len());
    for (lv, s) in ladder.levels.iter().zip(solved) {
        let (level, secs) = s?;
        finals.push(level);
        timings.push((format!("solve h={:e} tau={:e}", lv.h, lv.tau), secs));
    }

    let errors: Vec<f64> = match mode {
        ConvergenceMode::Exact => {
            let exact = spec.exact.as_ref().expect("checked above");
            setups
                .iter()
                .zip(&finals)
                .map(|((grid, time), v)| max_error_against(grid, v, time.t_final, |x, t| exact(x, t)))
                .collect::<Result<_>>()?
        }
        ConvergenceMode::SelfConvergence => setups
            .windows(2)
            .zip(finals.windows(2))
            .map(|(g, v)| max_self_difference(&g[0].0, &v[0], &g[1].0, &v[1]))
            .collect::<Result<_>>()?,
    };

    let mut rows: Vec<ReportRow> = Vec::with_capacity(errors.len());
    for (lv, &e) in ladder.levels.iter().zip(&errors) {
        let rate = rows.last().map_or(f64::NAN, |prev| {
            observed_rate(prev.max_error, e, prev.h / lv.h)
        });
        rows.push(ReportRow {
            h: lv.h,
            tau: lv.tau,
            max_error: e,
            rate,
        });
    }
    Ok(RunReport { rows, timings })
}
