//! Second-order shifted Grünwald discretisation of the Riesz derivative with
//! zero exterior extension.
//!
//! On `M - 1` interior nodes the operator is `(1/h^α) A_α` with
//! `A_α = B_α + B_αᵀ` symmetric Toeplitz. Only its first column is stored:
//! `[2w_1, w_0 + w_2, w_3, w_4, ..., w_{M-1}]`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{check_open, check_positive, Error, Result};
use crate::fracops::{wsgd_weights, WeightTable};
use crate::spectral::CirculantEmbedding;

/// Largest order for which [`RieszOperator::to_dense`] will materialise the matrix.
pub const DENSE_LIMIT: usize = 2048;

/// `κ_α = 1 / (2 cos(απ/2))`, negative on `(1, 2)`.
pub fn riesz_kappa(alpha: f64) -> f64 {
    1.0 / (2.0 * (alpha * std::f64::consts::FRAC_PI_2).cos())
}

#[derive(Debug, Clone)]
pub struct RieszOperator {
    alpha: f64,
    m: usize,
    h: f64,
    weights: WeightTable,
    column: Vec<f64>,
    kappa: f64,
    embedding: CirculantEmbedding,
}

/// Build the operator for `M` intervals of width `h` and diffusion coefficient `K`.
pub fn assemble_riesz(alpha: f64, m: usize, h: f64, k_diff: f64) -> Result<RieszOperator> {
    check_open("alpha", alpha, 1.0, 2.0, "must lie in (1,2)")?;
    check_positive("h", h)?;
    check_positive("K", k_diff)?;
    if m < 3 {
        return Err(Error::Parameter {
            name: "M",
            value: m as f64,
            expected: "must be >= 3",
        });
    }
    let weights = wsgd_weights(alpha, m - 1)?;
    let w = weights.values();
    let n = m - 1;
    let mut column = Vec::with_capacity(n);
    column.push(2.0 * w[1]);
    if n > 1 {
        column.push(w[0] + w[2]);
    }
    column.extend((2..n).map(|d| w[d + 1]));
    let embedding = CirculantEmbedding::new(&column);
    Ok(RieszOperator {
        alpha,
        m,
        h,
        weights,
        column,
        kappa: -k_diff * riesz_kappa(alpha),
        embedding,
    })
}

impl RieszOperator {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of intervals `M`; the operator acts on `M - 1` interior values.
    pub fn intervals(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m - 1
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Domain length `b = M h`.
    pub fn length(&self) -> f64 {
        self.m as f64 * self.h
    }

    pub fn weights(&self) -> &WeightTable {
        &self.weights
    }

    /// First column (= first row) of `A_α`.
    pub fn column(&self) -> &[f64] {
        &self.column
    }

    /// `κ = -K κ_α > 0`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Entry `(i, j)` of `A_α`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.column[i.abs_diff(j)]
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.dim() {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.dim(),
                found: len,
            })
        }
    }

    /// `(1/h^α) A_α u` through the circulant embedding.
    pub fn apply(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(u.len())?;
        let mut out = vec![Complex64::default(); u.len()];
        self.embedding.apply(u, &mut out);
        let scale = self.h.powf(-self.alpha);
        out.iter_mut().for_each(|v| *v *= scale);
        Ok(out)
    }

    /// `(1/h^α) A_α u` by the O(M²) row sums.
    pub fn apply_dense(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(u.len())?;
        let n = u.len();
        let scale = self.h.powf(-self.alpha);
        Ok((0..n)
            .map(|i| {
                let mut acc = Complex64::default();
                for (j, &uj) in u.iter().enumerate() {
                    acc += self.column[i.abs_diff(j)] * uj;
                }
                acc * scale
            })
            .collect())
    }

    /// Unscaled real product `A_α x`, used by the iterative solver.
    pub(crate) fn apply_unscaled_real(&self, x: &[f64], out: &mut [f64]) {
        self.embedding.apply_real(x, out);
    }

    /// `(A_α u, u)` in the grid inner product `h Σ u_i conj(v_i)`; real by symmetry.
    pub fn quadratic_form(&self, u: &[Complex64]) -> Result<f64> {
        self.check_len(u.len())?;
        let mut au = vec![Complex64::default(); u.len()];
        self.embedding.apply(u, &mut au);
        Ok(self.h * au.iter().zip(u).map(|(a, v)| (a * v.conj()).re).sum::<f64>())
    }

    /// Dense `A_α` (unscaled). Only for orders up to [`DENSE_LIMIT`].
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if n > DENSE_LIMIT {
            return Err(Error::Parameter {
                name: "M-1",
                value: n as f64,
                expected: "dense materialisation limited to 2048 unknowns",
            });
        }
        Ok(DMatrix::from_fn(n, n, |i, j| self.entry(i, j)))
    }
}
