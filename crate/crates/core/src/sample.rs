//! Smooth-bootstrap sampling from a [`DetTree`].
//!
//! Every sample is drawn in two steps: a leaf is picked with probability
//! proportional to its (possibly conditional) weight, then every free
//! coordinate is drawn by inverting the leaf's marginal CDF.
//!
//! # Random stream contract
//!
//! Sample `j` of a call with seed `s` uses its own ChaCha8 stream: the
//! generator `ChaCha8Rng::seed_from_u64(s)` switched to stream `j` (see
//! [`sample_rng`]). It consumes one `f64` in `[0, 1)` for the leaf and then
//! one per free dimension in ascending dimension order. Output therefore does
//! not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ensemble::Ensemble;
use crate::error::{DetError, Result};
use crate::tree::{Condition, DetTree, LeafId, NodeBody, NodeId};

/// Rows generated per rayon task at minimum.
const ROWS_PER_TASK: usize = 1024;

/// Leaves compatible with a condition and their unnormalized selection
/// weights `(count/n) * prod_{i in cond} p[x_i^c | theta_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedLeafSet {
    pub leaves: Vec<LeafId>,
    pub weights: Vec<f64>,
    /// Sum of the weights: the DET estimate of the marginal density at the
    /// conditioning point.
    pub total: f64,
}

impl WeightedLeafSet {
    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    /// Selection probabilities (weights divided by the total).
    pub fn probabilities(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w / self.total).collect()
    }
}

/// Index `k` with `u * sum(w)` in `[W_{k-1}, W_k)` where `W` is the running sum.
pub fn categorical_pick(weights: &[f64], u: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&u) {
        return Err(DetError::Domain(format!("u = {u} outside [0, 1)")));
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(DetError::InvalidInput(
            "weights must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(DetError::InvalidInput("all weights are zero".into()));
    }
    let target = u * total;
    let mut acc = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return Ok(k);
        }
    }
    Ok(last_positive(weights))
}

fn last_positive(weights: &[f64]) -> usize {
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .expect("positive total")
}

/// Prefix sums for repeated draws; picks exactly what [`categorical_pick`] picks.
#[derive(Debug, Clone)]
pub(crate) struct CumulativeTable {
    cumulative: Vec<f64>,
    last_positive: usize,
}

impl CumulativeTable {
    pub(crate) fn new(weights: &[f64]) -> Option<Self> {
        let mut acc = 0.0;
        let cumulative: Vec<f64> = weights
            .iter()
            .map(|&w| {
                acc += w;
                acc
            })
            .collect();
        if !(acc > 0.0) {
            return None;
        }
        Some(CumulativeTable {
            cumulative,
            last_positive: last_positive(weights),
        })
    }

    #[inline]
    pub(crate) fn pick(&self, u: f64) -> usize {
        let total = *self.cumulative.last().expect("nonempty");
        let target = u * total;
        let k = self.cumulative.partition_point(|&c| c <= target);
        if k < self.cumulative.len() {
            k
        } else {
            self.last_positive
        }
    }
}

/// Generator for sample `index` of a call seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn generate<F>(dims: usize, count: usize, seed: u64, fill: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let mut out = vec![0.0; count * dims];
    let base = ChaCha8Rng::seed_from_u64(seed);
    out.par_chunks_mut(dims)
        .enumerate()
        .with_min_len(ROWS_PER_TASK)
        .for_each(|(j, row)| {
            let mut rng = base.clone();
            rng.set_stream(j as u64);
            fill(&mut rng, row);
        });
    out
}

/// `count` draws from the DET density.
pub fn sample_unconditional(tree: &DetTree, seed: u64, count: usize) -> Result<Ensemble> {
    let weights: Vec<f64> = tree.leaves().iter().map(|l| l.count() as f64).collect();
    let table = CumulativeTable::new(&weights).ok_or(DetError::EmptyTree)?;
    let data = generate(tree.dims(), count, seed, |rng, row| {
        let leaf = tree.leaf(table.pick(rng.random()));
        let c = leaf.cuboid();
        for (i, x) in row.iter_mut().enumerate() {
            let y: f64 = rng.random();
            *x = leaf.marginals()[i].quantile_unchecked(c.lower()[i], c.upper()[i], y);
        }
    });
    Ensemble::new_allow_empty(data, tree.dims(), tree.column_names().to_vec())
}

fn check_condition(tree: &DetTree, cond: &Condition) -> Result<()> {
    let root = tree.root_cuboid();
    for &(dim, v) in cond.entries() {
        if dim >= tree.dims() {
            return Err(DetError::DimensionOutOfRange {
                index: dim,
                dims: tree.dims(),
            });
        }
        if !(root.lower()[dim] <= v && v <= root.upper()[dim]) {
            return Err(DetError::Domain(format!(
                "condition value {v} for dimension {} outside [{}, {}]",
                dim + 1,
                root.lower()[dim],
                root.upper()[dim]
            )));
        }
    }
    Ok(())
}

/// Leaves whose cuboids contain every conditioned value, found by descending
/// only into children compatible with the condition.
pub fn find_conditioned_leaves(tree: &DetTree, cond: &Condition) -> Result<WeightedLeafSet> {
    find_conditioned_leaves_inspect(tree, cond, |_| {})
}

/// [`find_conditioned_leaves`], reporting every visited node to `visit`.
pub fn find_conditioned_leaves_inspect(
    tree: &DetTree,
    cond: &Condition,
    mut visit: impl FnMut(NodeId),
) -> Result<WeightedLeafSet> {
    check_condition(tree, cond)?;
    let fixed = cond.dense(tree.dims());
    let mut set = WeightedLeafSet {
        leaves: Vec::new(),
        weights: Vec::new(),
        total: 0.0,
    };
    let mut stack = vec![0];
    while let Some(id) = stack.pop() {
        visit(id);
        match *tree.node(id).body() {
            NodeBody::Leaf(l) => {
                let leaf = tree.leaf(l);
                let mut w = leaf.mass(tree.n());
                for &(dim, v) in cond.entries() {
                    w *= leaf.marginal_density_at(dim, v);
                }
                set.leaves.push(l);
                set.weights.push(w);
            }
            NodeBody::Split {
                dim,
                position,
                lower,
                upper,
            } => match fixed[dim] {
                Some(v) if v < position => stack.push(lower),
                Some(_) => stack.push(upper),
                None => {
                    // upper first so leaves come out in depth-first order
                    stack.push(upper);
                    stack.push(lower);
                }
            },
        }
    }
    set.total = set.weights.iter().sum();
    Ok(set)
}

/// The DET estimate of the marginal density at the conditioning point.
pub fn conditional_marginal_estimate(set: &WeightedLeafSet) -> f64 {
    set.total
}

/// `count` draws of the free coordinates given `cond`; conditioned
/// coordinates are copied through unchanged. An empty condition falls back
/// to [`sample_unconditional`].
pub fn sample_conditional(
    tree: &DetTree,
    cond: &Condition,
    seed: u64,
    count: usize,
) -> Result<Ensemble> {
    if cond.is_empty() {
        return sample_unconditional(tree, seed, count);
    }
    if cond.len() >= tree.dims() {
        return Err(DetError::InvalidInput(
            "condition fixes every dimension; nothing left to sample".into(),
        ));
    }
    let set = find_conditioned_leaves(tree, cond)?;
    let table = CumulativeTable::new(&set.weights).ok_or(DetError::ZeroDensity)?;
    let fixed = cond.dense(tree.dims());
    let data = generate(tree.dims(), count, seed, |rng, row| {
        let leaf = tree.leaf(set.leaves[table.pick(rng.random())]);
        let c = leaf.cuboid();
        for (i, x) in row.iter_mut().enumerate() {
            *x = match fixed[i] {
                Some(v) => v,
                None => {
                    let y: f64 = rng.random();
                    leaf.marginals()[i].quantile_unchecked(c.lower()[i], c.upper()[i], y)
                }
            };
        }
    });
    Ensemble::new_allow_empty(data, tree.dims(), tree.column_names().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cuboid::Cuboid;
    use crate::marginal::{MarginalModel, Order};
    use crate::tree::{default_column_names, DistributionElement, RawNode};
    use proptest::prelude::*;

    fn two_leaf(counts: [u64; 2]) -> DetTree {
        let root = Cuboid::unit(2);
        let (a, b) = root.bisect(0).unwrap();
        let m = |t: f64| MarginalModel::linear(t).unwrap();
        let leaf = |c: Cuboid, n: u64, t: [f64; 2]| {
            if n == 0 {
                DistributionElement::uniform(c, 0)
            } else {
                DistributionElement::new(c, n, vec![m(t[0]), m(t[1])]).unwrap()
            }
        };
        let raw = RawNode::Split {
            cuboid: root,
            dim: 0,
            position: 0.5,
            children: Box::new([
                RawNode::Leaf(leaf(a, counts[0], [0.4, -0.2])),
                RawNode::Leaf(leaf(b, counts[1], [-1.0, 0.9])),
            ]),
        };
        DetTree::from_raw(raw, Order::Linear, default_column_names(2)).unwrap()
    }

    #[test]
    fn categorical_pick_examples() {
        for u in [0.0, 0.3, 0.999] {
            assert_eq!(categorical_pick(&[1.0, 0.0, 0.0], u).unwrap(), 0);
        }
        assert_eq!(categorical_pick(&[1.0, 1.0], 0.75).unwrap(), 1);
        assert_eq!(categorical_pick(&[1.0, 1.0], 0.5).unwrap(), 1);
        assert_eq!(categorical_pick(&[0.0, 2.0, 0.0], 0.0).unwrap(), 1);
        assert!(categorical_pick(&[0.0, 0.0], 0.5).is_err());
        assert!(categorical_pick(&[1.0], 1.0).is_err());

        let w = [0.2, 0.3, 0.5];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hits = [0usize; 3];
        let draws = 1_000_000;
        for _ in 0..draws {
            hits[categorical_pick(&w, rng.random()).unwrap()] += 1;
        }
        for k in 0..3 {
            assert!((hits[k] as f64 / draws as f64 - w[k]).abs() < 0.002);
        }
    }

    proptest! {
        #[test]
        fn table_matches_linear_scan(
            w in proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..10.0], 1..40),
            u in 0.0f64..1.0,
        ) {
            prop_assume!(w.iter().sum::<f64>() > 0.0);
            let table = CumulativeTable::new(&w).unwrap();
            prop_assert_eq!(table.pick(u), categorical_pick(&w, u).unwrap());
            prop_assert!(w[table.pick(u)] > 0.0);
        }
    }

    #[test]
    fn unconditional_basics() {
        let tree = two_leaf([1, 3]);
        assert_eq!(sample_unconditional(&tree, 1, 0).unwrap().len(), 0);
        let a = sample_unconditional(&tree, 9, 5000).unwrap();
        let b = sample_unconditional(&tree, 9, 5000).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_unconditional(&tree, 10, 5000).unwrap());
        assert!(a.rows().all(|r| tree.root_cuboid().contains(r)));

        let empty = DetTree::from_raw(
            RawNode::Leaf(DistributionElement::uniform(Cuboid::unit(1), 1)),
            Order::Linear,
            default_column_names(1),
        )
        .unwrap();
        assert_eq!(sample_unconditional(&empty, 0, 3).unwrap().len(), 3);
    }

    #[test]
    fn prefix_of_larger_request_is_identical() {
        let tree = two_leaf([2, 5]);
        let short = sample_unconditional(&tree, 4, 100).unwrap();
        let long = sample_unconditional(&tree, 4, 5000).unwrap();
        assert_eq!(short.as_slice(), &long.as_slice()[..200]);
    }

    #[test]
    fn leaf_occupancy_matches_masses() {
        let tree = two_leaf([1, 3]);
        let s = sample_unconditional(&tree, 77, 100_000).unwrap();
        let lower = s.rows().filter(|r| r[0] < 0.5).count() as f64 / 1e5;
        assert!((lower - 0.25).abs() < 0.01, "{lower}");
    }

    #[test]
    fn conditioned_leaves_single_leaf() {
        let tree = DetTree::uniform(Cuboid::unit(2), 10).unwrap();
        let cond = Condition::new([(1, 0.5)], 2).unwrap();
        let set = find_conditioned_leaves(&tree, &cond).unwrap();
        assert_eq!(set.leaves, vec![0]);
        assert_eq!(set.weights, vec![1.0]);
        assert_eq!(conditional_marginal_estimate(&set), 1.0);
    }

    #[test]
    fn pruning_skips_excluded_subtree() {
        let tree = two_leaf([1, 3]);
        let cond = Condition::new([(0, 0.7)], 2).unwrap();
        let mut visited = Vec::new();
        let set = find_conditioned_leaves_inspect(&tree, &cond, |id| visited.push(id)).unwrap();
        let NodeBody::Split { lower, upper, .. } = *tree.root().body() else {
            panic!()
        };
        assert!(!visited.contains(&lower));
        assert!(visited.contains(&upper));
        assert_eq!(set.leaves, vec![1]);
        // leaf 1: mass 3/4, theta -1 on [0.5, 1] at 0.7 -> (1 - (0.8 - 1)) / 0.5 = 2.4
        assert!((set.total - 0.75 * 2.4).abs() < 1e-15);
    }

    #[test]
    fn boundary_condition_selects_one_side() {
        let tree = two_leaf([1, 3]);
        let at_split =
            find_conditioned_leaves(&tree, &Condition::new([(0, 0.5)], 2).unwrap()).unwrap();
        assert_eq!(at_split.leaves, vec![1]);
        let at_top =
            find_conditioned_leaves(&tree, &Condition::new([(0, 1.0)], 2).unwrap()).unwrap();
        assert_eq!(at_top.leaves, vec![1]);
        let at_bottom =
            find_conditioned_leaves(&tree, &Condition::new([(0, 0.0)], 2).unwrap()).unwrap();
        assert_eq!(at_bottom.leaves, vec![0]);
    }

    #[test]
    fn condition_errors() {
        let tree = two_leaf([1, 3]);
        let outside = Condition::new([(1, 1.5)], 2).unwrap();
        assert!(matches!(
            find_conditioned_leaves(&tree, &outside),
            Err(DetError::Domain(_))
        ));
        let bad_dim = Condition::new([(2, 0.5)], 3).unwrap();
        assert!(matches!(
            find_conditioned_leaves(&tree, &bad_dim),
            Err(DetError::DimensionOutOfRange { .. })
        ));
        let all = Condition::new([(0, 0.5), (1, 0.5)], 2).unwrap();
        assert!(sample_conditional(&tree, &all, 0, 1).is_err());
    }

    #[test]
    fn zero_density_condition_is_an_error() {
        let tree = two_leaf([0, 3]);
        let cond = Condition::new([(0, 0.25)], 2).unwrap();
        let set = find_conditioned_leaves(&tree, &cond).unwrap();
        assert_eq!(conditional_marginal_estimate(&set), 0.0);
        assert!(matches!(
            sample_conditional(&tree, &cond, 0, 10),
            Err(DetError::ZeroDensity)
        ));
        // theta = -1 makes the density vanish at the upper root bound
        let edge = Condition::new([(0, 1.0)], 2).unwrap();
        assert!(matches!(
            sample_conditional(&tree, &edge, 0, 10),
            Err(DetError::ZeroDensity)
        ));
    }

    #[test]
    fn conditional_passes_values_through() {
        let tree = two_leaf([1, 3]);
        let v = 0.123_456_789_012_345_6;
        let cond = Condition::new([(1, v)], 2).unwrap();
        let s = sample_conditional(&tree, &cond, 5, 2000).unwrap();
        assert!(s.rows().all(|r| r[1].to_bits() == v.to_bits()));
        assert!(s.rows().all(|r| (0.0..=1.0).contains(&r[0])));
        assert_eq!(s, sample_conditional(&tree, &cond, 5, 2000).unwrap());
        let unc = sample_conditional(&tree, &Condition::none(), 5, 10).unwrap();
        assert_eq!(unc, sample_unconditional(&tree, 5, 10).unwrap());
    }
}
