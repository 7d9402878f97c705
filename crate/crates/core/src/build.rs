//! Tree construction by recursive equal-size splitting.
//!
//! At every node each dimension gets a fitted linear marginal (slope by
//! moment matching) and a goodness-of-fit test of the node's samples against
//! it: either a KS test against the fitted CDF ([`FitTest::Kolmogorov`]) or
//! a two-sided binomial test of the fraction below the midpoint
//! ([`FitTest::HalfMass`]). Optionally every pair of dimensions also gets a
//! 2x2 independence test of the quadrant counts around the midpoint, since
//! a product of marginals cannot represent dependence inside an element.
//! The node is split at the midpoint of the dimension behind the smallest
//! p-value when that p-value is below `alpha`.

use std::cmp::Ordering;

use statrs::function::erf::erfc;

use crate::cuboid::Cuboid;
use crate::ensemble::Ensemble;
use crate::error::{DetError, Result};
use crate::marginal::{MarginalModel, Order};
use crate::stats::kolmogorov_sf;
use crate::tree::{DetTree, DistributionElement, RawNode};

/// Node sizes up to this use the exact binomial tail.
const EXACT_BINOMIAL_MAX: usize = 30;
/// Subsets larger than this are split on separate rayon tasks.
const PARALLEL_MIN: usize = 8192;

/// Statistic of the per-dimension fit test that decides splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitTest {
    /// Binomial test of the sample fraction below the midpoint.
    HalfMass,
    /// Kolmogorov-Smirnov distance to the fitted marginal CDF.
    #[default]
    Kolmogorov,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildConfig {
    pub order: Order,
    pub fit_test: FitTest,
    /// Also test every pair of dimensions for independence of the quadrant
    /// counts around the node midpoint.
    pub pairwise_independence: bool,
    /// Significance level of the per-node fit test.
    pub alpha: f64,
    /// Nodes with at most this many samples become leaves.
    pub min_leaf_count: usize,
    pub max_depth: usize,
    /// Relative padding of the data bounding box.
    pub bounds_padding_rel: f64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            order: Order::Linear,
            fit_test: FitTest::default(),
            pairwise_independence: true,
            alpha: 0.01,
            min_leaf_count: 10,
            max_depth: 40,
            bounds_padding_rel: 1e-9,
        }
    }
}

impl BuildConfig {
    /// Marginal half-mass test only, the minimal split criterion.
    pub fn half_mass() -> Self {
        BuildConfig {
            fit_test: FitTest::HalfMass,
            pairwise_independence: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(DetError::InvalidInput(format!(
                "alpha {} outside (0, 1)",
                self.alpha
            )));
        }
        if self.min_leaf_count < 1 {
            return Err(DetError::InvalidInput(
                "min leaf count must be at least 1".into(),
            ));
        }
        if self.max_depth < 1 {
            return Err(DetError::InvalidInput(
                "max depth must be at least 1".into(),
            ));
        }
        if !(self.bounds_padding_rel >= 0.0 && self.bounds_padding_rel.is_finite()) {
            return Err(DetError::InvalidInput(
                "bounds padding must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Bounding box of the data with each side pushed out by `padding_rel * range`
/// (or `padding_rel * max(1, |value|)` for a zero-range column).
pub fn root_cuboid(ensemble: &Ensemble, padding_rel: f64) -> Result<Cuboid> {
    let d = ensemble.dims();
    let mut lower = vec![f64::INFINITY; d];
    let mut upper = vec![f64::NEG_INFINITY; d];
    for row in ensemble.rows() {
        for (i, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(DetError::InvalidInput("non-finite sample value".into()));
            }
            lower[i] = lower[i].min(v);
            upper[i] = upper[i].max(v);
        }
    }
    for i in 0..d {
        let range = upper[i] - lower[i];
        let pad = if range > 0.0 {
            padding_rel * range
        } else {
            padding_rel * lower[i].abs().max(1.0)
        };
        lower[i] -= pad;
        upper[i] += pad;
        if !(lower[i] < upper[i]) {
            // zero padding on a constant column
            let bump = f64::EPSILON * lower[i].abs().max(1.0);
            lower[i] -= bump;
            upper[i] += bump;
        }
    }
    Cuboid::new(lower, upper)
}

/// Moment estimate `clamp(6 (mean(t) - 1/2), -1, 1)` of the linear slope from
/// values in `[lo, hi]`; 0 for no values.
pub fn estimate_theta(values: &[f64], lo: f64, hi: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let w = hi - lo;
    let mean = values.iter().map(|&v| (v - lo) / w).sum::<f64>() / values.len() as f64;
    theta_from_mean(mean)
}

fn theta_from_mean(mean: f64) -> f64 {
    (6.0 * (mean - 0.5)).clamp(-1.0, 1.0)
}

/// Two-sided binomial p-value of the number of values below the midpoint of
/// `[lo, hi]`, against the lower-half mass `1/2 - theta/4` of the fitted marginal.
pub fn split_pvalue(values: &[f64], lo: f64, hi: f64, theta: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let below = values.iter().filter(|&&v| v < mid).count();
    half_mass_test(values.len(), below, theta).p
}

/// KS p-value of values in `[lo, hi]` against the linear marginal with slope `theta`.
pub fn marginal_fit_pvalue(values: &[f64], lo: f64, hi: f64, theta: f64) -> f64 {
    let model = MarginalModel::linear(theta.clamp(-1.0, 1.0)).expect("clamped slope");
    let mut t: Vec<f64> = values.iter().map(|&v| (v - lo) / (hi - lo)).collect();
    kolmogorov_fit_test(&mut t, &model).p
}

/// Independence p-value of paired values, from the quadrant counts around
/// the midpoints `mid_a`, `mid_b` (below means strictly less).
pub fn quadrant_independence_pvalue(a: &[f64], b: &[f64], mid_a: f64, mid_b: f64) -> f64 {
    let mut q = [0u64; 4];
    for (&x, &y) in a.iter().zip(b) {
        q[2 * usize::from(x >= mid_a) + usize::from(y >= mid_b)] += 1;
    }
    quadrant_independence_test(q).p
}

#[derive(Debug, Clone, Copy)]
struct TestOutcome {
    p: f64,
    /// Leading exponent `e` of the tail, `p ~ exp(-e)`; orders outcomes whose
    /// p-values underflow to zero.
    tail: f64,
}

impl TestOutcome {
    const NONE: TestOutcome = TestOutcome { p: 1.0, tail: 0.0 };

    /// More significant first.
    fn significance_cmp(&self, other: &Self) -> Ordering {
        match self.p.total_cmp(&other.p) {
            Ordering::Equal if self.p == 0.0 => other.tail.total_cmp(&self.tail),
            ord => ord,
        }
    }
}

fn half_mass_test(trials: usize, below: usize, theta: f64) -> TestOutcome {
    if trials == 0 {
        return TestOutcome::NONE;
    }
    let p0 = 0.5 - 0.25 * theta;
    let n = trials as f64;
    let k = below as f64;
    let sd = (n * p0 * (1.0 - p0)).sqrt();
    let z = ((k - n * p0).abs() - 0.5).max(0.0) / sd;
    let p = if trials <= EXACT_BINOMIAL_MAX {
        exact_two_sided(trials, below, p0)
    } else {
        erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    TestOutcome {
        p,
        tail: 0.5 * z * z,
    }
}

/// KS test of normalized values against `model`'s unit CDF.
fn kolmogorov_fit_test(t: &mut [f64], model: &MarginalModel) -> TestOutcome {
    if t.is_empty() {
        return TestOutcome::NONE;
    }
    t.sort_unstable_by(f64::total_cmp);
    let n = t.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in t.iter().enumerate() {
        let f = model.unit_cdf(x.clamp(0.0, 1.0));
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    let lambda = n.sqrt() * d;
    TestOutcome {
        p: kolmogorov_sf(lambda),
        tail: 2.0 * lambda * lambda,
    }
}

/// Pearson chi-square (1 dof) independence test of the 2x2 table of
/// quadrant counts `[[ll, lu], [ul, uu]]` around the node midpoint.
fn quadrant_independence_test(q: [u64; 4]) -> TestOutcome {
    let [ll, lu, ul, uu] = q.map(|v| v as f64);
    let rows = [ll + lu, ul + uu];
    let cols = [ll + ul, lu + uu];
    let denom = rows[0] * rows[1] * cols[0] * cols[1];
    if denom == 0.0 {
        return TestOutcome::NONE;
    }
    let total = rows[0] + rows[1];
    let stat = total * (ll * uu - lu * ul).powi(2) / denom;
    TestOutcome {
        p: erfc((0.5 * stat).sqrt()).min(1.0),
        tail: 0.5 * stat,
    }
}

/// `min(1, 2 min(P[X <= k], P[X >= k]))` for `X ~ Bin(n, p0)`.
fn exact_two_sided(n: usize, k: usize, p0: f64) -> f64 {
    let pmf = binomial_pmf(n, p0);
    let lower: f64 = pmf[..=k].iter().sum();
    let upper: f64 = pmf[k..].iter().sum();
    (2.0 * lower.min(upper)).min(1.0)
}

fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    let mut out = Vec::with_capacity(n + 1);
    let mut binom = 1.0_f64;
    for j in 0..=n {
        if j > 0 {
            binom = binom * (n + 1 - j) as f64 / j as f64;
        }
        out.push(binom * p.powi(j as i32) * q.powi((n - j) as i32));
    }
    out
}

/// Builds a DET from `ensemble`. Deterministic for fixed input.
pub fn build_tree(ensemble: &Ensemble, config: &BuildConfig) -> Result<DetTree> {
    config.validate()?;
    if ensemble.is_empty() {
        return Err(DetError::InvalidInput("ensemble has no samples".into()));
    }
    let root = root_cuboid(ensemble, config.bounds_padding_rel)?;
    let idx: Vec<u32> = (0..ensemble.len() as u32).collect();
    let builder = Builder {
        data: ensemble.as_slice(),
        dims: ensemble.dims(),
        config,
    };
    let raw = builder.node(idx, root, 0);
    DetTree::from_raw(raw, config.order, ensemble.column_names().to_vec())
}

struct Builder<'a> {
    data: &'a [f64],
    dims: usize,
    config: &'a BuildConfig,
}

struct DimFit {
    theta: f64,
    test: TestOutcome,
    separable: bool,
}

impl Builder<'_> {
    #[inline]
    fn value(&self, sample: u32, dim: usize) -> f64 {
        self.data[sample as usize * self.dims + dim]
    }

    fn fit_dim(&self, idx: &[u32], cuboid: &Cuboid, dim: usize) -> DimFit {
        let lo = cuboid.lower()[dim];
        let w = cuboid.width(dim);
        let mid = cuboid.midpoint(dim);
        let mut sum = 0.0;
        let mut below = 0usize;
        let first = idx.first().map(|&s| self.value(s, dim));
        let mut separable = false;
        for &s in idx {
            let v = self.value(s, dim);
            sum += (v - lo) / w;
            below += usize::from(v < mid);
            separable |= Some(v) != first;
        }
        let theta = match self.config.order {
            Order::Constant => 0.0,
            Order::Linear if idx.is_empty() => 0.0,
            Order::Linear => theta_from_mean(sum / idx.len() as f64),
        };
        let test = match self.config.fit_test {
            FitTest::HalfMass => half_mass_test(idx.len(), below, theta),
            FitTest::Kolmogorov => {
                let model = MarginalModel::linear(theta).expect("clamped slope");
                let mut t: Vec<f64> = idx.iter().map(|&s| (self.value(s, dim) - lo) / w).collect();
                kolmogorov_fit_test(&mut t, &model)
            }
        };
        DimFit {
            theta,
            test,
            separable,
        }
    }

    /// Every test outcome paired with the dimension a rejection would split.
    fn candidates(
        &self,
        idx: &[u32],
        cuboid: &Cuboid,
        fits: &[DimFit],
    ) -> Vec<(usize, TestOutcome)> {
        let mut out: Vec<(usize, TestOutcome)> = fits
            .iter()
            .enumerate()
            .filter(|(_, f)| f.separable)
            .map(|(d, f)| (d, f.test))
            .collect();
        if !self.config.pairwise_independence || self.dims < 2 {
            return out;
        }
        let d = self.dims;
        let mids: Vec<f64> = (0..d).map(|i| cuboid.midpoint(i)).collect();
        // quadrant counts per pair, indexed by (below_i, below_j)
        let mut quads = vec![[0u64; 4]; d * d];
        let mut below = vec![false; d];
        for &s in idx {
            for i in 0..d {
                below[i] = self.value(s, i) < mids[i];
            }
            for i in 0..d {
                for j in (i + 1)..d {
                    let q = 2 * usize::from(!below[i]) + usize::from(!below[j]);
                    quads[i * d + j][q] += 1;
                }
            }
        }
        for i in 0..d {
            for j in (i + 1)..d {
                if !(fits[i].separable || fits[j].separable) {
                    continue;
                }
                let test = quadrant_independence_test(quads[i * d + j]);
                let target = match (fits[i].separable, fits[j].separable) {
                    (true, false) => i,
                    (false, true) => j,
                    _ if fits[j].test.significance_cmp(&fits[i].test) == Ordering::Less => j,
                    _ => i,
                };
                out.push((target, test));
            }
        }
        out
    }

    fn node(&self, idx: Vec<u32>, cuboid: Cuboid, depth: usize) -> RawNode {
        let fits: Vec<DimFit> = (0..self.dims)
            .map(|d| self.fit_dim(&idx, &cuboid, d))
            .collect();

        let may_split = idx.len() > self.config.min_leaf_count && depth < self.config.max_depth;
        let choice = if may_split {
            self.candidates(&idx, &cuboid, &fits)
                .into_iter()
                .filter(|(_, t)| t.p < self.config.alpha)
                // min_by keeps the first of equal elements: marginal tests in
                // dimension order, then pairs
                .min_by(|a, b| a.1.significance_cmp(&b.1))
                .and_then(|(d, _)| cuboid.bisect(d).map(|halves| (d, halves)))
        } else {
            None
        };

        let Some((dim, (lo_box, hi_box))) = choice else {
            let marginals = fits
                .iter()
                .map(|f| match self.config.order {
                    Order::Constant => MarginalModel::constant(),
                    Order::Linear => MarginalModel::linear(f.theta).expect("clamped slope"),
                })
                .collect();
            let de = DistributionElement::new(cuboid, idx.len() as u64, marginals)
                .expect("marginals match cuboid dimension");
            return RawNode::Leaf(de);
        };

        let position = cuboid.midpoint(dim);
        let (lower_idx, upper_idx): (Vec<u32>, Vec<u32>) = idx
            .into_iter()
            .partition(|&s| self.value(s, dim) < position);
        let (a, b) = if lower_idx.len().max(upper_idx.len()) >= PARALLEL_MIN {
            rayon::join(
                || self.node(lower_idx, lo_box, depth + 1),
                || self.node(upper_idx, hi_box, depth + 1),
            )
        } else {
            (
                self.node(lower_idx, lo_box, depth + 1),
                self.node(upper_idx, hi_box, depth + 1),
            )
        };
        RawNode::Split {
            cuboid,
            dim,
            position,
            children: Box::new([a, b]),
        }
    }
}
