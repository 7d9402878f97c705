//! Goodness-of-fit and comparison utilities.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::ensemble::Ensemble;
use crate::error::{DetError, Result};

const KS_MIN_SAMPLES: usize = 8;
const KOLMOGOROV_TERMS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// `sup_x |F_n(x) - F(x)|`.
    pub statistic: f64,
    /// Asymptotic p-value from the Kolmogorov distribution.
    pub p_value: f64,
    pub sample_size: usize,
}

/// One-sample Kolmogorov-Smirnov test of `samples` against `cdf`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    let n = samples.len();
    if n < KS_MIN_SAMPLES {
        return Err(DetError::InvalidInput(format!(
            "KS test needs at least {KS_MIN_SAMPLES} samples, got {n}"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut d = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(nf.sqrt() * d),
        sample_size: n,
    })
}

/// `P[K > lambda]` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.0 {
        // Jacobi-transformed series, which converges fast where the
        // alternating one does not.
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=KOLMOGOROV_TERMS)
            .map(|k| ((2 * k - 1) as f64).powi(2))
            .map(|m| (c * m).exp())
            .sum();
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s
    } else {
        2.0 * (1..=KOLMOGOROV_TERMS)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
            })
            .sum::<f64>()
    };
    p.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of observed category counts against
/// probabilities. Categories with zero probability must be empty and are
/// left out of the degrees of freedom.
pub fn chi_square_test(observed: &[u64], probabilities: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != probabilities.len() {
        return Err(DetError::DimensionMismatch {
            expected: probabilities.len(),
            actual: observed.len(),
        });
    }
    let total: u64 = observed.iter().sum();
    let psum: f64 = probabilities.iter().sum();
    let mut stat = 0.0;
    let mut categories = 0usize;
    for (&o, &p) in observed.iter().zip(probabilities) {
        if p <= 0.0 {
            if o > 0 {
                return Ok(ChiSquareResult {
                    statistic: f64::INFINITY,
                    dof: 0,
                    p_value: 0.0,
                });
            }
            continue;
        }
        let e = total as f64 * p / psum;
        stat += (o as f64 - e).powi(2) / e;
        categories += 1;
    }
    if categories < 2 {
        return Ok(ChiSquareResult {
            statistic: stat,
            dof: 0,
            p_value: 1.0,
        });
    }
    let dof = categories - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    Ok(ChiSquareResult {
        statistic: stat,
        dof,
        p_value: dist.sf(stat),
    })
}

/// Column means and the unbiased sample covariance.
pub fn sample_moments(points: &Ensemble) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = points.len();
    if n < 2 {
        return Err(DetError::InvalidInput(format!(
            "moments need at least 2 samples, got {n}"
        )));
    }
    let d = points.dims();
    let mut mean = vec![0.0; d];
    for r in points.rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![vec![0.0; d]; d];
    for r in points.rows() {
        for i in 0..d {
            let di = r[i] - mean[i];
            for j in i..d {
                cov[i][j] += di * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= (n - 1) as f64;
            cov[j][i] = cov[i][j];
        }
    }
    Ok((mean, cov))
}

/// One lattice axis: `points` equally spaced values from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || points < 2 {
            return Err(DetError::InvalidInput(format!(
                "axis needs lo < hi and at least 2 points, got {lo}:{hi}:{points}"
            )));
        }
        Ok(Axis { lo, hi, points })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn value(&self, k: usize) -> f64 {
        if k + 1 == self.points {
            self.hi
        } else {
            self.lo + k as f64 * self.step()
        }
    }

    /// Trapezoid weight of point `k`.
    fn weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.points {
            0.5 * self.step()
        } else {
            self.step()
        }
    }
}

/// Tensor-product lattice over a box.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub axes: Vec<Axis>,
}

impl Lattice {
    pub fn new(axes: Vec<Axis>) -> Self {
        Lattice { axes }
    }

    /// Same number of points on every side of the box `[lower, upper]`.
    pub fn over_box(lower: &[f64], upper: &[f64], points: usize) -> Result<Self> {
        let axes = lower
            .iter()
            .zip(upper)
            .map(|(&l, &u)| Axis::new(l, u, points))
            .collect::<Result<_>>()?;
        Ok(Lattice { axes })
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Calls `f(point, weight)` for every lattice point, last axis fastest.
    pub fn for_each(&self, mut f: impl FnMut(&[f64], f64)) {
        let d = self.axes.len();
        let mut idx = vec![0usize; d];
        let mut x: Vec<f64> = self.axes.iter().map(|a| a.value(0)).collect();
        for _ in 0..self.len() {
            let w = self
                .axes
                .iter()
                .zip(&idx)
                .map(|(a, &k)| a.weight(k))
                .product();
            f(&x, w);
            for i in (0..d).rev() {
                idx[i] += 1;
                if idx[i] < self.axes[i].points {
                    x[i] = self.axes[i].value(idx[i]);
                    break;
                }
                idx[i] = 0;
                x[i] = self.axes[i].value(0);
            }
        }
    }
}

/// Trapezoid-rule integral of `(a - b)^2` over the lattice.
pub fn grid_ise(a: impl Fn(&[f64]) -> f64, b: impl Fn(&[f64]) -> f64, grid: &Lattice) -> f64 {
    let mut sum = 0.0;
    grid.for_each(|x, w| sum += w * (a(x) - b(x)).powi(2));
    sum
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::default_column_names;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ks_examples() {
        let n = 50;
        let q: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let r = ks_test(&q, |x| x).unwrap();
        assert!((r.statistic - 0.5 / n as f64).abs() < 1e-15);
        assert_eq!(r.sample_size, n);

        let same = vec![0.5; 20];
        assert_eq!(ks_test(&same, |x| x).unwrap().statistic, 0.5);
        assert!(ks_test(&[0.1; 7], |x| x).is_err());
    }

    #[test]
    fn ks_calibration() {
        let mut rejections = 0;
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let u: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
            if ks_test(&u, |x| x.clamp(0.0, 1.0)).unwrap().p_value < 0.05 {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / 200.0;
        assert!((rate - 0.05).abs() <= 0.03, "{rate}");
    }

    #[test]
    fn kolmogorov_known_values() {
        // P[K > 1.36] ~ 0.049, P[K > 1.63] ~ 0.010
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.628) - 0.01).abs() < 1e-3);
        // both series agree where they overlap
        let a = 2.0
            * (1..=100)
                .map(|k| if k % 2 == 1 { 1.0 } else { -1.0 } * (-2.0 * (k * k) as f64 * 0.81).exp())
                .sum::<f64>();
        assert!((kolmogorov_sf(0.9) - a).abs() < 1e-12);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn chi_square_basics() {
        let r = chi_square_test(&[50, 50], &[0.5, 0.5]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let r = chi_square_test(&[90, 10], &[0.5, 0.5]).unwrap();
        assert!(r.p_value < 1e-10);
        let r = chi_square_test(&[0, 30, 70], &[0.0, 0.3, 0.7]).unwrap();
        assert_eq!(r.dof, 1);
        assert_eq!(chi_square_test(&[1, 30], &[0.0, 1.0]).unwrap().p_value, 0.0);
    }

    #[test]
    fn moments_examples() {
        let e = Ensemble::from_rows(&[[0.0, 0.0], [2.0, 2.0]]).unwrap();
        let (m, c) = sample_moments(&e).unwrap();
        assert_eq!(m, vec![1.0, 1.0]);
        assert_eq!(c, vec![vec![2.0, 2.0], vec![2.0, 2.0]]);

        let e = Ensemble::new(vec![3.0; 10], 2, default_column_names(2)).unwrap();
        let (_, c) = sample_moments(&e).unwrap();
        assert!(c.iter().flatten().all(|&v| v == 0.0));
        assert!(sample_moments(&Ensemble::from_rows(&[[1.0]]).unwrap()).is_err());
    }

    #[test]
    fn ise_examples() {
        let g = Lattice::over_box(&[0.0, 0.0], &[1.0, 1.0], 101).unwrap();
        assert_eq!(grid_ise(|_| 0.3, |_| 0.3, &g), 0.0);
        assert!((grid_ise(|_| 1.0, |_| 0.0, &g) - 1.0).abs() < 1e-12);
        assert_eq!(g.len(), 101 * 101);
        let mut count = 0;
        g.for_each(|x, _| {
            assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
            count += 1;
        });
        assert_eq!(count, g.len());
        assert!(Axis::new(0.0, 1.0, 1).is_err());
    }

    proptest! {
        #[test]
        fn ks_invariant_under_monotone_maps(
            xs in proptest::collection::vec(0.001f64..0.999, 8..60),
        ) {
            let d1 = ks_test(&xs, |x| x).unwrap().statistic;
            let mapped: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
            let d2 = ks_test(&mapped, |y: f64| y.exp()).unwrap().statistic;
            prop_assert!((d1 - d2).abs() < 1e-12);
        }

        #[test]
        fn ise_symmetric_nonnegative(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
            let g = Lattice::over_box(&[0.0, -1.0], &[1.0, 1.0], 7).unwrap();
            let f1 = |x: &[f64]| a * x[0] + b;
            let f2 = |x: &[f64]| c * x[1] * x[1];
            let ab = grid_ise(f1, f2, &g);
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - grid_ise(f2, f1, &g)).abs() < 1e-12);
            prop_assert_eq!(grid_ise(f1, f1, &g), 0.0);
        }
    }
}
