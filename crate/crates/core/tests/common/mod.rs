//! Verification suites shared by the property tests and the acceptance runner.
//! Each suite returns a one-line summary or the first failing point.
#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;

use tfk_core::fracops::{grunwald_coeffs, lubich2_coeffs, scheme_weights, wsgd_weights};
use tfk_core::problems::{
    convergence_study, fpt_run, ConvergenceMode, FptConfig, Ladder, ProblemSpec, SourceExponent,
};
use tfk_core::riesz::assemble_riesz;
use tfk_core::solver::{build_system, LinearSolverKind, SolutionHistory, Stepper};
use tfk_core::substantial::OrderStudy;
use tfk_core::{par, FunctionalWeight, Grid, PhysicalParams, SchemeOrder, TimeGrid};

pub type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

pub const SEED: u64 = 0x5eed_7f4c;

pub fn tenths(lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(|k| k as f64 / 10.0).collect()
}

pub fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

// ---------------------------------------------------------------- coefficients

/// Signs and partial sums of the Grünwald and shifted weights for `α ∈ (1, 2)`.
pub fn check_shifted_weight_signs(n: usize) -> Outcome {
    for alpha in tenths(11, 19) {
        let g = grunwald_coeffs(alpha, n).map_err(|e| e.to_string())?;
        let gv = g.values();
        ensure!(gv[0] > 0.0 && gv[1] < 0.0, "alpha={alpha}: g0={} g1={}", gv[0], gv[1]);
        if let Some(k) = (2..=n).find(|&k| !(gv[k] > 0.0)) {
            return Err(format!("alpha={alpha}: g_{k}={} not > 0", gv[k]));
        }
        let gs = g.partial_sums();
        if let Some(m) = (1..=n).find(|&m| !(gs[m] < 0.0)) {
            return Err(format!("alpha={alpha}: sum g_0..g_{m}={} not < 0", gs[m]));
        }

        let w = wsgd_weights(alpha, n).map_err(|e| e.to_string())?;
        let wv = w.values();
        ensure!(
            wv[0] > 0.0 && wv[1] < 0.0 && wv[0] + wv[2] > 0.0,
            "alpha={alpha}: w0={} w1={} w0+w2={}",
            wv[0],
            wv[1],
            wv[0] + wv[2]
        );
        if let Some(k) = (3..=n).find(|&k| !(wv[k] > 0.0)) {
            return Err(format!("alpha={alpha}: w_{k}={} not > 0", wv[k]));
        }
        let ws = w.partial_sums();
        // w_0 + w_1 = (2 - α²)/2 changes sign at α = √2
        let first = 0.5 * (2.0 - alpha * alpha);
        ensure!(
            (ws[1] - first).abs() <= 1e-15,
            "alpha={alpha}: w0+w1={} vs (2-alpha^2)/2={first}",
            ws[1]
        );
        if let Some(m) = (2..=n).find(|&m| !(ws[m] < 0.0)) {
            return Err(format!("alpha={alpha}: sum w_0..w_{m}={} not < 0", ws[m]));
        }
    }
    Ok(format!(
        "alpha in 1.1..1.9, n={n} (sum w_0..w_m < 0 for m>=2; m=1 negative only for alpha>sqrt2)"
    ))
}

/// Two-sided partial-sum bounds for the Grünwald weights of both orders.
pub fn check_grunwald_sum_bounds(n: usize) -> Outcome {
    for gam in tenths(1, 9) {
        let g = grunwald_coeffs(gam, n).map_err(|e| e.to_string())?;
        let gv = g.values();
        ensure!(gv[0] == 1.0, "gamma={gam}: g0={}", gv[0]);
        if let Some(k) = (1..=n).find(|&k| !(gv[k] < 0.0)) {
            return Err(format!("gamma={gam}: g_{k}={} not < 0", gv[k]));
        }
        let s = g.partial_sums();
        let inv_gamma = 1.0 / gamma(1.0 - gam);
        for m in 1..=n {
            let sum = s[m - 1];
            let lo = inv_gamma / (m as f64).powf(gam);
            let hi = 1.0 / (m as f64).powf(gam);
            ensure!(
                lo < sum && sum <= hi * (1.0 + 4.0 * f64::EPSILON),
                "gamma={gam}, n={m}: {lo} < {sum} <= {hi} violated"
            );
        }
    }
    for alpha in tenths(11, 19) {
        let g = grunwald_coeffs(alpha, n).map_err(|e| e.to_string())?;
        let s = g.partial_sums();
        let inv_gamma = 1.0 / gamma(1.0 - alpha);
        // Σ_{k≤m} g_k = Π_{j≤m} (1 - α/j)
        let mut product = 1.0;
        for m in 1..=n {
            product *= 1.0 - alpha / m as f64;
            let sum = s[m];
            ensure!(
                (sum - product).abs() <= 1e-14 + 1e-10 * product.abs(),
                "alpha={alpha}, n={m}: partial sum {sum} vs product {product}"
            );
            let lo = -1.0 / (m as f64).powf(alpha);
            let hi = inv_gamma / (m as f64).powf(alpha);
            ensure!(lo < sum && sum <= hi, "alpha={alpha}, n={m}: {lo} < {sum} <= {hi} violated");
        }
    }
    Ok(format!("gamma in 0.1..0.9, alpha in 1.1..1.9, n=1..{n}"))
}

pub fn lubich2_closed_forms(gam: f64) -> [f64; 4] {
    let c = 1.5f64.powf(gam);
    [
        c,
        -c * 4.0 * gam / 3.0,
        c * gam * (8.0 * gam - 5.0) / 9.0,
        c * 4.0 * gam * (gam - 1.0) * (7.0 - 8.0 * gam) / 81.0,
    ]
}

/// Closed forms, signs and vanishing sum of the second-order coefficients.
pub fn check_lubich2_properties(n: usize) -> Outcome {
    let mut gammas = tenths(1, 9);
    gammas.extend([5.0 / 8.0, 7.0 / 8.0, 0.95, 0.99]);
    for gam in gammas {
        let l = lubich2_coeffs(gam, n).map_err(|e| e.to_string())?;
        let lv = l.values();
        for (k, want) in lubich2_closed_forms(gam).into_iter().enumerate() {
            ensure!(
                (lv[k] - want).abs() <= 1e-14 * want.abs().max(1e-300) + 1e-16,
                "gamma={gam}: l_{k}={} vs closed form {want}",
                lv[k]
            );
        }
        ensure!(lv[0] > 0.0 && lv[1] < 0.0, "gamma={gam}: l0={} l1={}", lv[0], lv[1]);
        if let Some(k) = (4..=n).find(|&k| !(lv[k] < 0.0)) {
            return Err(format!("gamma={gam}: l_{k}={} not < 0", lv[k]));
        }
        let s = l.partial_sums();
        if let Some(m) = (4..n).find(|&m| !(s[m] > 0.0 && s[m + 1] < s[m])) {
            return Err(format!("gamma={gam}: partial sums not decreasing to 0 at n={m}"));
        }
    }
    let l = lubich2_coeffs(0.8, n).map_err(|e| e.to_string())?;
    let tail = l.partial_sums()[n];
    ensure!(tail.abs() <= 1e-3, "gamma=0.8: |sum l_0..l_{n}|={tail} > 1e-3");
    Ok(format!("n={n}, |sum| at gamma=0.8: {tail:.3e}"))
}

/// `Σ_{k=1}^{K} l_k (cos kz - 1) ≥ -10⁻⁸` on a `10⁻³` grid of `[0, π]`. The
/// omitted tail lies in `[0, 2 Σ_{k≤K} l_k]`, so the bound is applied to the
/// truncated sum less that width.
pub fn check_cosine_sum_nonneg(terms: usize) -> Outcome {
    let mut zs: Vec<f64> = (0..)
        .map(|j| j as f64 * 1e-3)
        .take_while(|&z| z < std::f64::consts::PI)
        .collect();
    zs.push(std::f64::consts::PI);
    let mut gammas = tenths(1, 9);
    gammas.extend([5.0 / 8.0, 0.7, 0.75, 7.0 / 8.0, 0.95, 0.99]);
    let mut worst = f64::INFINITY;
    for gam in gammas {
        let l = lubich2_coeffs(gam, terms).map_err(|e| e.to_string())?;
        let lv = l.values();
        let tail = l.partial_sums()[terms].abs();
        let sums = par::map(&zs, |&z| {
            let mut acc = 0.0;
            for (k, &lk) in lv.iter().enumerate().skip(1) {
                acc += lk * ((k as f64 * z).cos() - 1.0);
            }
            acc
        });
        for (&z, &g) in zs.iter().zip(&sums) {
            let slack = if gam <= 5.0 / 8.0 { 0.0 } else { 2.0 * tail };
            ensure!(
                g >= -1e-8 - slack,
                "gamma={gam}, z={z}: truncated sum {g} below -1e-8 (tail {tail:e})"
            );
            worst = worst.min(g);
        }
    }
    Ok(format!("K={terms}, {} z-points, min truncated sum {worst:.3e}", zs.len()))
}

/// FFT of the padded tempered coefficients against the closed-form generating function.
pub fn check_generating_function() -> Outcome {
    use rustfft::FftPlanner;
    use tfk_core::fracops::{generating_function, tempered_weights};

    let len = 4096;
    let mut worst: f64 = 0.0;
    for (gam, lt, tau) in [
        (0.5, Complex64::new(1.0, 2.0), 0.1),
        (0.3, Complex64::new(3.0, 0.0), 0.05),
        (0.8, Complex64::new(0.5, -4.0), 0.2),
    ] {
        for order in [SchemeOrder::First, SchemeOrder::Second] {
            let q: Vec<Complex64> = match order {
                SchemeOrder::Second => tempered_weights(gam, lt, tau, len - 1).map_err(|e| e.to_string())?,
                SchemeOrder::First => {
                    let g = grunwald_coeffs(gam, len - 1).map_err(|e| e.to_string())?;
                    g.values()
                        .iter()
                        .enumerate()
                        .map(|(m, &v)| (-lt * (m as f64 * tau)).exp() * v)
                        .collect()
                }
            };
            let mut buf = q.clone();
            FftPlanner::new().plan_fft_inverse(len).process(&mut buf);
            let direct: Vec<Complex64> = (0..len)
                .map(|j| {
                    let zeta = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / len as f64);
                    generating_function(order, gam, lt, tau, zeta)
                })
                .collect();
            let scale = direct.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let err = buf.iter().zip(&direct).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
            ensure!(err <= 1e-10, "gamma={gam}, lt={lt}, {order:?}: relative mismatch {err:e}");
            worst = worst.max(err);
        }
    }
    Ok(format!("max relative mismatch {worst:.2e}"))
}

pub fn coefficient_suite() -> Outcome {
    let parts = [
        check_shifted_weight_signs(10_000)?,
        check_grunwald_sum_bounds(10_000)?,
        check_lubich2_properties(10_000)?,
        check_cosine_sum_nonneg(10_000)?,
        check_generating_function()?,
    ];
    Ok(parts.join("; "))
}

// ---------------------------------------------------------------- matrices

fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// `-(1/h^α)(A u, u) ≥ -2/(b^α Γ(1-α)) ‖u‖²` on random and extremal vectors.
pub fn check_quadratic_form_bound(samples: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tightest = f64::INFINITY;
    for alpha in [1.1, 1.3, 1.5, 1.8] {
        for m in [8usize, 64, 256] {
            for b in [1.0, 3.0] {
                let h = b / m as f64;
                let op = assemble_riesz(alpha, m, h, 1.0).map_err(|e| e.to_string())?;
                let bound = -2.0 / (b.powf(alpha) * gamma(1.0 - alpha));
                let mut vectors: Vec<Vec<Complex64>> = (0..samples).map(|_| random_complex(&mut rng, m - 1)).collect();
                vectors.push((1..m).map(|i| Complex64::new((std::f64::consts::PI * i as f64 / m as f64).sin(), 0.0)).collect());
                vectors.push((1..m).map(|i| Complex64::new(0.0, if i % 2 == 0 { 1.0 } else { -1.0 })).collect());
                for u in &vectors {
                    let norm2 = h * u.iter().map(|v| v.norm_sqr()).sum::<f64>();
                    let lhs = -op.quadratic_form(u).map_err(|e| e.to_string())? * h.powf(-alpha);
                    ensure!(
                        lhs >= bound * norm2 * (1.0 - 1e-12),
                        "alpha={alpha}, M={m}, b={b}: {lhs} < {}",
                        bound * norm2
                    );
                    tightest = tightest.min(lhs / (bound * norm2));
                }
            }
        }
    }
    Ok(format!("{samples}+2 vectors per (alpha, M, b), min lhs/bound {tightest:.3}"))
}

pub fn toeplitz_from_row(row: &[f64]) -> DMatrix<f64> {
    let n = row.len();
    DMatrix::from_fn(n, n, |i, j| {
        let d = i.abs_diff(j);
        if d == 0 {
            row[0]
        } else {
            0.5 * row[d]
        }
    })
}

/// Smallest eigenvalue of the symmetric Toeplitz matrix built from the scheme weights.
pub fn check_history_matrix_psd() -> Outcome {
    let mut worst = f64::INFINITY;
    for gam in [0.1, 0.3, 0.5, 0.625, 0.7, 0.875, 0.95] {
        for lambda_tau in [0.0, 0.01, 0.1, 1.0] {
            for rho_u_tau in [0.0, 0.1, 1.0] {
                for n in [16usize, 64, 256] {
                    let row = scheme_weights(0, gam, lambda_tau, rho_u_tau, 0.0, 1.0, n).map_err(|e| e.to_string())?;
                    let l = toeplitz_from_row(&row.scheme_weights);
                    let min = SymmetricEigen::new(l).eigenvalues.min();
                    ensure!(
                        min >= -1e-10,
                        "gamma={gam}, lambda*tau={lambda_tau}, rho*U*tau={rho_u_tau}, N={n}: min eigenvalue {min:e}"
                    );
                    worst = worst.min(min);
                }
            }
        }
    }
    Ok(format!("N in {{16,64,256}}, min eigenvalue {worst:.3e}"))
}

/// `Re Σ_n (Σ_k l_k^{(2)} phase^k v^{n-k}) conj(v^n) ≥ 0` for random complex histories.
pub fn check_history_form_nonneg(samples: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let gam = rng.random_range(0.05..0.95);
        let lambda = rng.random_range(0.0..2.0);
        let rho_u = rng.random_range(0.0..2.0);
        let eta_u = rng.random_range(-10.0..10.0);
        let tau = rng.random_range(0.01..0.5);
        let n = rng.random_range(1..64usize);
        let row = scheme_weights(0, gam, lambda, rho_u, eta_u, tau, n).map_err(|e| e.to_string())?;
        let v = random_complex(&mut rng, n + 1);
        let mut form = 0.0;
        for m in 0..=n {
            let mut acc = Complex64::default();
            for k in 0..=m {
                acc += row.complex_weight(k) * v[m - k];
            }
            form += (acc * v[m].conj()).re;
        }
        let norm2: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        ensure!(
            form >= -1e-10 * norm2,
            "gamma={gam}, lambda={lambda}, rhoU={rho_u}, etaU={eta_u}, tau={tau}, N={n}: form {form:e}"
        );
    }
    Ok(format!("{samples} random histories"))
}

/// System matrices are symmetric positive definite.
pub fn check_system_spd() -> Outcome {
    let mut worst = f64::INFINITY;
    for (gam, alpha, lambda) in [(0.3, 1.3, 0.0), (0.8, 1.8, 0.2), (0.5, 1.1, 3.0), (0.9, 1.99, 1.0)] {
        for m in [4usize, 33, 128] {
            for tau in [0.01, 0.2, 1.0] {
                let p = PhysicalParams {
                    gamma: gam,
                    alpha,
                    lambda,
                    rho: 1.0,
                    eta: 5.0,
                    k_diff: 1.0,
                    weight: FunctionalWeight::Identity,
                };
                let grid = Grid::new(0.0, 1.0, m).map_err(|e| e.to_string())?;
                let sys = build_system(&p, &grid, tau).map_err(|e| e.to_string())?;
                let dense = sys.to_dense().map_err(|e| e.to_string())?;
                ensure!(dense == dense.transpose(), "gamma={gam}, alpha={alpha}, M={m}: not symmetric");
                let min = SymmetricEigen::new(dense).eigenvalues.min();
                ensure!(min > 0.0, "gamma={gam}, alpha={alpha}, M={m}, tau={tau}: min eigenvalue {min:e}");
                worst = worst.min(min);
            }
        }
    }
    Ok(format!("M <= 128, min eigenvalue {worst:.3e}"))
}

pub fn matrix_suite() -> Outcome {
    let parts = [
        check_quadratic_form_bound(1000, SEED)?,
        check_history_matrix_psd()?,
        check_history_form_nonneg(200, SEED + 1)?,
        check_system_spd()?,
    ];
    Ok(parts.join("; "))
}

// ---------------------------------------------------------------- stability

/// Zero-initial runs with random forcing bounded by 1; returns
/// `(τ Σ ‖G^n‖², C τ Σ ‖f^n‖²)` with `C = b^{2α} Γ²(1-α) / 4κ²`.
pub fn stability_energies(params: &PhysicalParams, m: usize, tau: f64, t_final: f64, seed: u64) -> Result<(f64, f64), String> {
    let grid = Grid::new(0.0, 1.0, m).map_err(|e| e.to_string())?;
    let time = TimeGrid::with_step(t_final, tau).map_err(|e| e.to_string())?;
    let stepper = Stepper::new(params, grid, time, LinearSolverKind::Auto).map_err(|e| e.to_string())?;
    let dim = grid.interior_len();
    let mut history = SolutionHistory::new(grid, time, vec![Complex64::default(); dim], 1).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = grid.h();
    let (mut lhs, mut forcing) = (0.0, 0.0);
    for n in 1..=time.steps {
        let f = random_complex(&mut rng, dim);
        let level = stepper.step(&history, n, &f).map_err(|e| e.to_string())?;
        if level.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(format!("non-finite solution at step {n}"));
        }
        lhs += tau * h * level.iter().map(|v| v.norm_sqr()).sum::<f64>();
        forcing += tau * h * f.iter().map(|v| v.norm_sqr()).sum::<f64>();
        history.push_level(level, 0.0).map_err(|e| e.to_string())?;
    }
    let b = grid.length();
    let c = b.powf(2.0 * params.alpha) * gamma(1.0 - params.alpha).powi(2) / (4.0 * params.kappa().powi(2));
    Ok((lhs, c * forcing))
}

pub fn stability_suite(taus: &[f64]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut seed = SEED;
    for gam in [0.3, 0.8] {
        for alpha in [1.3, 1.8] {
            for &tau in taus {
                for (lambda, eta) in [(0.2, 5.0), (3.0, -2.0)] {
                    let p = PhysicalParams {
                        gamma: gam,
                        alpha,
                        lambda,
                        rho: 1.0,
                        eta,
                        k_diff: 1.0,
                        weight: FunctionalWeight::Identity,
                    };
                    seed += 1;
                    let (lhs, rhs) = stability_energies(&p, 32, tau, 2.0, seed)?;
                    ensure!(
                        lhs <= rhs,
                        "gamma={gam}, alpha={alpha}, tau={tau}, lambda={lambda}: {lhs:e} > bound {rhs:e}"
                    );
                    worst = worst.max(lhs / rhs);
                }
            }
        }
    }
    Ok(format!("tau in {taus:?}, max energy/bound {worst:.3e}"))
}

// ---------------------------------------------------------------- operator order

pub fn operator_order_suite() -> Outcome {
    let mut summary = Vec::new();
    for (order, lo, hi) in [(SchemeOrder::First, 0.85, 1.15), (SchemeOrder::Second, 1.8, 2.2)] {
        let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for gam in [0.3, 0.8] {
            for lt in [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 2.0)] {
                for lambda in [0.0, 0.3] {
                    if lt.re < lambda {
                        continue;
                    }
                    let study = OrderStudy {
                        order,
                        gamma: gam,
                        lambda_tilde: lt,
                        lambda,
                        beta: 3.0,
                        t: 1.0,
                    };
                    let rows = study.run(4, 10).map_err(|e| e.to_string())?;
                    for r in rows.iter().skip(1) {
                        ensure!(
                            r.rate >= lo && r.rate <= hi,
                            "{order:?}, gamma={gam}, lt={lt}, lambda={lambda}, tau={}: rate {} outside [{lo}, {hi}]",
                            r.tau,
                            r.rate
                        );
                        rmin = rmin.min(r.rate);
                        rmax = rmax.max(r.rate);
                    }
                }
            }
        }
        summary.push(format!("nu={} rates in [{rmin:.3}, {rmax:.3}]", order.as_int()));
    }
    Ok(summary.join(", "))
}

// ---------------------------------------------------------------- reproductions

pub const TABLE_ROW_A: [f64; 4] = [1.1304e-03, 2.8014e-04, 6.9327e-05, 1.7138e-05];
pub const TABLE_ROW_B: [f64; 4] = [7.6493e-05, 1.8679e-05, 4.5848e-06, 1.1222e-06];
pub const SELF_DIFFS: [f64; 4] = [3.1725e-05, 7.4247e-06, 1.8780e-06, 4.8609e-07];

pub fn baseline_params(lambda: f64, alpha: f64, gam: f64) -> PhysicalParams {
    PhysicalParams {
        gamma: gam,
        alpha,
        lambda,
        rho: 1.0,
        eta: 5.0,
        k_diff: 1.0,
        weight: FunctionalWeight::Identity,
    }
}

pub fn manufactured_row(lambda: f64, alpha: f64, gam: f64, want: &[f64; 4]) -> Outcome {
    let spec = ProblemSpec::manufactured(baseline_params(lambda, alpha, gam), SourceExponent::Gamma).map_err(|e| e.to_string())?;
    let report = convergence_study(&spec, &Ladder::halving(0.05, 0.05, 4), ConvergenceMode::Exact, 1.0)
        .map_err(|e| e.to_string())?;
    let errors = report.errors();
    for (k, (&e, &w)) in errors.iter().zip(want).enumerate() {
        ensure!(rel_err(e, w) <= 0.01, "level {k}: error {e:.4e} vs {w:.4e}");
    }
    let rates = report.rates();
    for r in &rates {
        ensure!((1.95..=2.08).contains(r), "rate {r:.4} outside [1.95, 2.08]");
    }
    Ok(format!("errors {}, rates {rates:.4?}", sci(&errors)))
}

pub fn self_convergence_table() -> Outcome {
    let spec = ProblemSpec::quartic_decay(baseline_params(0.2, 1.3, 0.8)).map_err(|e| e.to_string())?;
    let report = convergence_study(&spec, &Ladder::spatial(0.1, 1.0 / 400.0, 5), ConvergenceMode::SelfConvergence, 4.0)
        .map_err(|e| e.to_string())?;
    let diffs = report.errors();
    ensure!(diffs.len() == 4, "expected 4 differences, got {}", diffs.len());
    for (k, (&d, &w)) in diffs.iter().zip(&SELF_DIFFS).enumerate() {
        ensure!(rel_err(d, w) <= 0.05, "level {k}: difference {d:.4e} vs {w:.4e}");
    }
    let rates = report.rates();
    for r in &rates {
        ensure!((1.7..=2.3).contains(r), "rate {r:.4} outside [1.7, 2.3]");
    }
    Ok(format!("differences {}, rates {rates:.4?}", sci(&diffs)))
}

/// Pairwise spread allowed between late-time log-log slopes.
pub const SLOPE_SPREAD: f64 = 0.05;

pub fn survival_desk_run() -> Outcome {
    FptConfig::full_scale().validate().map_err(|e| format!("full-scale config rejected: {e}"))?;
    let cfg = FptConfig::desk();
    let curve = fpt_run(&cfg).map_err(|e| e.to_string())?;
    ensure!(curve.survival[0] == 1.0, "P(0) = {}", curve.survival[0]);
    ensure!(
        curve.raw.iter().all(|v| (-1e-6..=1.0 + 1e-6).contains(&v.re)),
        "raw readout leaves [0, 1]"
    );
    ensure!(curve.max_increase() <= 1e-6, "P increases by {:e}", curve.max_increase());
    let im = curve.raw.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    ensure!(im < 1e-6, "imaginary part {im:e}");
    let t = cfg.t_final;
    let slopes: Vec<f64> = [(t / 8.0, t / 4.0), (t / 4.0, t / 2.0), (t / 2.0, t)]
        .iter()
        .map(|&(a, b)| curve.loglog_slope(a, b).ok_or_else(|| format!("no points in [{a}, {b}]")))
        .collect::<Result<_, _>>()?;
    let spread = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure!(slopes.iter().all(|s| *s < 0.0), "non-negative slope in {slopes:?}");
    ensure!(spread < SLOPE_SPREAD, "slopes {slopes:?} spread {spread:.3}");
    Ok(format!(
        "{} rows, P(T)={:.4}, late slopes {slopes:.3?}, {:.1}s",
        curve.len(),
        curve.survival.last().unwrap(),
        curve.seconds
    ))
}
