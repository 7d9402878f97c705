//! The two validation distributions: a correlated multivariate Gaussian and a
//! bivariate Dirichlet, with exact densities, samplers and the analytic
//! conditionals used as oracles for conditional resampling.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::ensemble::Ensemble;
use crate::error::{DetError, Result};
use crate::tree::{default_column_names, Condition};

/// Covariance of the three-dimensional Gaussian validation case.
pub const GAUSSIAN_CASE_COV: [[f64; 3]; 3] = [[0.35, 0.25, 0.5], [0.25, 0.4, 0.6], [0.5, 0.6, 1.0]];

/// Shape parameters of the Dirichlet validation case.
pub const DIRICHLET_CASE_ALPHA: [f64; 3] = [1.25, 2.0, 0.75];

#[derive(Debug, Clone)]
pub struct GaussianSpec {
    mu: DVector<f64>,
    cov: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    precision: DMatrix<f64>,
    log_norm: f64,
}

impl GaussianSpec {
    /// `cov` is given row by row and must be symmetric positive definite.
    pub fn new(mu: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        let d = mu.len();
        if d == 0 {
            return Err(DetError::InvalidInput(
                "Gaussian needs at least one dimension".into(),
            ));
        }
        if cov.len() != d || cov.iter().any(|r| r.len() != d) {
            return Err(DetError::InvalidInput(format!(
                "covariance must be {d}x{d}"
            )));
        }
        let cov = DMatrix::from_fn(d, d, |i, j| cov[i][j]);
        Self::from_matrix(DVector::from_vec(mu), cov)
    }

    pub fn from_matrix(mu: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mu.len();
        if cov.shape() != (d, d) {
            return Err(DetError::InvalidInput(format!(
                "covariance must be {d}x{d}"
            )));
        }
        if mu.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(DetError::InvalidInput(
                "non-finite Gaussian parameter".into(),
            ));
        }
        let scale = cov.amax().max(f64::MIN_POSITIVE);
        for i in 0..d {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                    return Err(DetError::InvalidInput("covariance is not symmetric".into()));
                }
            }
        }
        let chol = Cholesky::new(cov.clone())
            .ok_or_else(|| DetError::InvalidInput("covariance is not positive definite".into()))?;
        let precision = chol.inverse();
        let log_det = 2.0
            * chol
                .l_dirty()
                .diagonal()
                .iter()
                .map(|v| v.ln())
                .sum::<f64>();
        let log_norm = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
        Ok(GaussianSpec {
            mu,
            cov,
            chol,
            precision,
            log_norm,
        })
    }

    /// The three-dimensional validation case with zero mean.
    pub fn validation_case() -> Self {
        let cov = GAUSSIAN_CASE_COV.iter().map(|r| r.to_vec()).collect();
        Self::new(vec![0.0; 3], cov).expect("validation covariance is positive definite")
    }

    pub fn dims(&self) -> usize {
        self.mu.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn determinant(&self) -> f64 {
        self.chol.determinant()
    }

    /// Lower Cholesky factor `L` with `L L^T = C`.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dims() {
            return Err(DetError::DimensionMismatch {
                expected: self.dims(),
                actual: x.len(),
            });
        }
        let r = DVector::from_column_slice(x) - &self.mu;
        let q = (&self.precision * &r).dot(&r);
        Ok((self.log_norm - 0.5 * q).exp())
    }

    /// Mean and standard deviation of coordinate `dim`.
    pub fn marginal(&self, dim: usize) -> (f64, f64) {
        (self.mu[dim], self.cov[(dim, dim)].sqrt())
    }
}

pub fn gaussian_pdf(spec: &GaussianSpec, x: &[f64]) -> Result<f64> {
    spec.pdf(x)
}

/// `x = mu + L z` with `z` standard normal, drawn from one ChaCha8 stream.
pub fn sample_gaussian(spec: &GaussianSpec, seed: u64, count: usize) -> Ensemble {
    let d = spec.dims();
    let l = spec.cholesky_factor();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(count * d);
    let mut z = DVector::zeros(d);
    for _ in 0..count {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        let x = &spec.mu + &l * &z;
        data.extend(x.iter());
    }
    Ensemble::new_allow_empty(data, d, default_column_names(d)).expect("finite draws")
}

/// Distribution of the free coordinates given `cond`:
/// `mu' = mu_f + C_fc C_cc^-1 (x_c - mu_c)`, `C' = C_ff - C_fc C_cc^-1 C_cf`.
pub fn gaussian_conditional(spec: &GaussianSpec, cond: &Condition) -> Result<GaussianSpec> {
    let d = spec.dims();
    let fixed: Vec<usize> = cond.entries().iter().map(|e| e.0).collect();
    if let Some(&bad) = fixed.iter().find(|&&i| i >= d) {
        return Err(DetError::DimensionOutOfRange {
            index: bad,
            dims: d,
        });
    }
    let free = cond.free_dims(d);
    if free.is_empty() {
        return Err(DetError::InvalidInput(
            "condition must leave a free dimension".into(),
        ));
    }
    let sub = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| spec.cov[(rows[i], cols[j])])
    };
    let mu_f = DVector::from_iterator(free.len(), free.iter().map(|&i| spec.mu[i]));
    if fixed.is_empty() {
        return GaussianSpec::from_matrix(mu_f, sub(&free, &free));
    }
    let c_ff = sub(&free, &free);
    let c_fc = sub(&free, &fixed);
    let c_cc = sub(&fixed, &fixed);
    let chol_cc = Cholesky::new(c_cc)
        .ok_or_else(|| DetError::InvalidInput("conditioned covariance block is singular".into()))?;
    let resid = DVector::from_iterator(
        fixed.len(),
        cond.entries().iter().map(|&(i, v)| v - spec.mu[i]),
    );
    let mu = mu_f + &c_fc * chol_cc.solve(&resid);
    let mut cov = c_ff - &c_fc * chol_cc.solve(&c_fc.transpose());
    // restore exact symmetry lost to rounding
    let cov_t = cov.transpose();
    cov = (cov + cov_t) * 0.5;
    GaussianSpec::from_matrix(mu, cov)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletSpec {
    alpha: [f64; 3],
    log_norm: f64,
}

impl DirichletSpec {
    pub fn new(alpha: [f64; 3]) -> Result<Self> {
        if alpha.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(DetError::InvalidInput(
                "Dirichlet parameters must be positive".into(),
            ));
        }
        let log_norm =
            ln_gamma(alpha.iter().sum()) - alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>();
        Ok(DirichletSpec { alpha, log_norm })
    }

    pub fn validation_case() -> Self {
        Self::new(DIRICHLET_CASE_ALPHA).expect("positive parameters")
    }

    pub fn alpha(&self) -> [f64; 3] {
        self.alpha
    }

    /// Density of `(x1, x2)` on the open simplex `x1 > 0, x2 > 0, x1 + x2 < 1`.
    pub fn pdf(&self, x1: f64, x2: f64) -> f64 {
        let x3 = 1.0 - x1 - x2;
        if !(x1 > 0.0 && x2 > 0.0 && x3 > 0.0) {
            return 0.0;
        }
        let [a1, a2, a3] = self.alpha;
        (self.log_norm + (a1 - 1.0) * x1.ln() + (a2 - 1.0) * x2.ln() + (a3 - 1.0) * x3.ln()).exp()
    }

    /// CDF at `x1` of `x1 | x2`, a Beta(a1, a3) stretched over `[0, 1 - x2]`.
    pub fn conditional_cdf(&self, x2: f64, x1: f64) -> Result<f64> {
        if !(x2 > 0.0 && x2 < 1.0) {
            return Err(DetError::Domain(format!("x2 = {x2} outside (0, 1)")));
        }
        let t = x1 / (1.0 - x2);
        Ok(if t <= 0.0 {
            0.0
        } else if t >= 1.0 {
            1.0
        } else {
            beta_reg(self.alpha[0], self.alpha[2], t)
        })
    }

    /// Density of `x1 | x2`.
    pub fn conditional_pdf(&self, x2: f64, x1: f64) -> Result<f64> {
        if !(x2 > 0.0 && x2 < 1.0) {
            return Err(DetError::Domain(format!("x2 = {x2} outside (0, 1)")));
        }
        let w = 1.0 - x2;
        let t = x1 / w;
        if !(t > 0.0 && t < 1.0) {
            return Ok(0.0);
        }
        let [a1, _, a3] = self.alpha;
        let log_b = ln_gamma(a1) + ln_gamma(a3) - ln_gamma(a1 + a3);
        Ok(((a1 - 1.0) * t.ln() + (a3 - 1.0) * (1.0 - t).ln() - log_b).exp() / w)
    }

    /// CDF of the marginal of coordinate `dim` (0 or 1), a Beta(a_k, sum - a_k).
    pub fn marginal_cdf(&self, dim: usize, x: f64) -> f64 {
        let a = self.alpha[dim];
        let b = self.alpha.iter().sum::<f64>() - a;
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            beta_reg(a, b, x)
        }
    }
}

pub fn dirichlet_pdf(spec: &DirichletSpec, x1: f64, x2: f64) -> f64 {
    spec.pdf(x1, x2)
}

pub fn dirichlet_conditional_cdf(spec: &DirichletSpec, x2: f64, x1: f64) -> Result<f64> {
    spec.conditional_cdf(x2, x1)
}

/// `(x1, x2) = (g1, g2) / (g1 + g2 + g3)` with `g_k ~ Gamma(a_k, 1)`.
pub fn sample_dirichlet(spec: &DirichletSpec, seed: u64, count: usize) -> Ensemble {
    // rand_distr's Gamma boosts shapes below one, which the validation case needs.
    let gammas = spec
        .alpha
        .map(|a| Gamma::new(a, 1.0).expect("positive shape"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(2 * count);
    while data.len() < 2 * count {
        let g = [0, 1, 2].map(|k| gammas[k].sample(&mut rng));
        let s = g[0] + g[1] + g[2];
        let (x1, x2) = (g[0] / s, g[1] / s);
        // draws that land on the simplex boundary in floating point carry no density
        if !(x1 > 0.0 && x2 > 0.0 && x1 + x2 < 1.0) {
            continue;
        }
        data.push(x1);
        data.push(x2);
    }
    Ensemble::new_allow_empty(data, 2, default_column_names(2)).expect("finite draws")
}
