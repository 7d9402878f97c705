//! Distribution elements and the tree that partitions the sample space into them.

use crate::cuboid::Cuboid;
use crate::error::{DetError, Result};
use crate::marginal::{MarginalModel, Order};

pub type NodeId = usize;
pub type LeafId = usize;

/// A cuboid carrying `count` samples and an independent product of
/// per-dimension marginal densities.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionElement {
    cuboid: Cuboid,
    count: u64,
    marginals: Vec<MarginalModel>,
}

impl DistributionElement {
    pub fn new(cuboid: Cuboid, count: u64, marginals: Vec<MarginalModel>) -> Result<Self> {
        if marginals.len() != cuboid.dims() {
            return Err(DetError::DimensionMismatch {
                expected: cuboid.dims(),
                actual: marginals.len(),
            });
        }
        if count == 0 && marginals.iter().any(|m| m.theta() != 0.0) {
            return Err(DetError::InvalidInput(
                "empty element must have theta = 0".into(),
            ));
        }
        Ok(DistributionElement {
            cuboid,
            count,
            marginals,
        })
    }

    pub fn uniform(cuboid: Cuboid, count: u64) -> Self {
        let d = cuboid.dims();
        DistributionElement {
            cuboid,
            count,
            marginals: vec![MarginalModel::UNIFORM; d],
        }
    }

    pub fn cuboid(&self) -> &Cuboid {
        &self.cuboid
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn marginals(&self) -> &[MarginalModel] {
        &self.marginals
    }

    pub fn dims(&self) -> usize {
        self.marginals.len()
    }

    /// Probability mass `count / n`; equal to the integral of the element density.
    pub fn mass(&self, n: u64) -> f64 {
        self.count as f64 / n as f64
    }

    /// Marginal density of dimension `dim` at `x`, which must lie in the element's extent.
    #[inline]
    pub(crate) fn marginal_density_at(&self, dim: usize, x: f64) -> f64 {
        let c = &self.cuboid;
        self.marginals[dim].density_unchecked(c.lower()[dim], c.upper()[dim], x)
    }

    /// `(count / n) * prod_i p[x_i | theta_i]`, with the element treated as closed.
    pub fn density(&self, x: &[f64], n: u64) -> Result<f64> {
        self.density_in(x, n, &self.cuboid)
    }

    /// Element density under the containment rule of the partition of `root`.
    pub fn density_in(&self, x: &[f64], n: u64, root: &Cuboid) -> Result<f64> {
        if x.len() != self.dims() {
            return Err(DetError::DimensionMismatch {
                expected: self.dims(),
                actual: x.len(),
            });
        }
        if n == 0 {
            return Err(DetError::InvalidInput(
                "total sample count must be positive".into(),
            ));
        }
        if !self.cuboid.contains_in(x, root) {
            return Ok(0.0);
        }
        Ok(self.density_inside(x, n))
    }

    #[inline]
    pub(crate) fn density_inside(&self, x: &[f64], n: u64) -> f64 {
        let mut p = self.mass(n);
        for (i, &xi) in x.iter().enumerate() {
            p *= self.marginal_density_at(i, xi);
        }
        p
    }
}

pub fn element_density(de: &DistributionElement, x: &[f64], n: u64) -> Result<f64> {
    de.density(x, n)
}

pub fn leaf_mass(de: &DistributionElement, n: u64) -> f64 {
    de.mass(n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeBody {
    Leaf(LeafId),
    Split {
        dim: usize,
        position: f64,
        lower: NodeId,
        upper: NodeId,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetNode {
    cuboid: Cuboid,
    count: u64,
    depth: usize,
    body: NodeBody,
}

impl DetNode {
    pub fn cuboid(&self) -> &Cuboid {
        &self.cuboid
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn body(&self) -> &NodeBody {
        &self.body
    }
}

/// Recursive, unvalidated node description used to assemble a [`DetTree`].
#[derive(Debug, Clone, PartialEq)]
pub enum RawNode {
    Leaf(DistributionElement),
    Split {
        cuboid: Cuboid,
        dim: usize,
        position: f64,
        children: Box<[RawNode; 2]>,
    },
}

impl RawNode {
    pub fn cuboid(&self) -> &Cuboid {
        match self {
            RawNode::Leaf(de) => de.cuboid(),
            RawNode::Split { cuboid, .. } => cuboid,
        }
    }

    pub fn count(&self) -> u64 {
        match self {
            RawNode::Leaf(de) => de.count(),
            RawNode::Split { children, .. } => children[0].count() + children[1].count(),
        }
    }
}

/// A distribution element tree: a binary partition of the root cuboid whose
/// leaves are distribution elements. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct DetTree {
    nodes: Vec<DetNode>,
    leaves: Vec<DistributionElement>,
    n: u64,
    order: Order,
    column_names: Vec<String>,
}

impl DetTree {
    /// Validates `root` and flattens it. Checks every structural invariant:
    /// equal-size splits, children partitioning their parent, marginal orders,
    /// and a positive total count.
    pub fn from_raw(root: RawNode, order: Order, column_names: Vec<String>) -> Result<Self> {
        let dims = root.cuboid().dims();
        if column_names.len() != dims {
            return Err(DetError::DimensionMismatch {
                expected: dims,
                actual: column_names.len(),
            });
        }
        let mut tree = DetTree {
            nodes: Vec::new(),
            leaves: Vec::new(),
            n: 0,
            order,
            column_names,
        };
        tree.push(root, 0)?;
        tree.n = tree.nodes[0].count;
        if tree.n == 0 {
            return Err(DetError::EmptyTree);
        }
        Ok(tree)
    }

    /// Single-leaf tree with uniform marginals.
    pub fn uniform(cuboid: Cuboid, n: u64) -> Result<Self> {
        let names = default_column_names(cuboid.dims());
        Self::from_raw(
            RawNode::Leaf(DistributionElement::uniform(cuboid, n)),
            Order::Constant,
            names,
        )
    }

    fn push(&mut self, raw: RawNode, depth: usize) -> Result<NodeId> {
        let id = self.nodes.len();
        match raw {
            RawNode::Leaf(de) => {
                for m in de.marginals() {
                    if self.order == Order::Constant && m.theta() != 0.0 {
                        return Err(DetError::InvalidInput(
                            "constant-order tree with nonzero theta".into(),
                        ));
                    }
                }
                let leaf = self.leaves.len();
                self.nodes.push(DetNode {
                    cuboid: de.cuboid().clone(),
                    count: de.count(),
                    depth,
                    body: NodeBody::Leaf(leaf),
                });
                self.leaves.push(de);
            }
            RawNode::Split {
                cuboid,
                dim,
                position,
                children,
            } => {
                if dim >= cuboid.dims() {
                    return Err(DetError::DimensionOutOfRange {
                        index: dim,
                        dims: cuboid.dims(),
                    });
                }
                if position != cuboid.midpoint(dim) {
                    return Err(DetError::InvalidInput(format!(
                        "split position {position} is not the midpoint of dimension {dim}"
                    )));
                }
                let (lo, hi) = cuboid.bisect(dim).ok_or_else(|| {
                    DetError::InvalidInput(format!("dimension {dim} too narrow to split"))
                })?;
                let [a, b] = *children;
                if a.cuboid() != &lo || b.cuboid() != &hi {
                    return Err(DetError::InvalidInput(
                        "children do not partition their parent".into(),
                    ));
                }
                let count = a.count() + b.count();
                self.nodes.push(DetNode {
                    cuboid,
                    count,
                    depth,
                    body: NodeBody::Split {
                        dim,
                        position,
                        lower: 0,
                        upper: 0,
                    },
                });
                let lower = self.push(a, depth + 1)?;
                let upper = self.push(b, depth + 1)?;
                self.nodes[id].body = NodeBody::Split {
                    dim,
                    position,
                    lower,
                    upper,
                };
            }
        }
        Ok(id)
    }

    /// Rebuilds the recursive description (inverse of [`from_raw`](Self::from_raw)).
    pub fn to_raw(&self) -> RawNode {
        self.raw_at(0)
    }

    fn raw_at(&self, id: NodeId) -> RawNode {
        let node = &self.nodes[id];
        match node.body {
            NodeBody::Leaf(l) => RawNode::Leaf(self.leaves[l].clone()),
            NodeBody::Split {
                dim,
                position,
                lower,
                upper,
            } => RawNode::Split {
                cuboid: node.cuboid.clone(),
                dim,
                position,
                children: Box::new([self.raw_at(lower), self.raw_at(upper)]),
            },
        }
    }

    pub fn dims(&self) -> usize {
        self.column_names.len()
    }

    /// Total sample count `n`.
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn root(&self) -> &DetNode {
        &self.nodes[0]
    }

    pub fn root_cuboid(&self) -> &Cuboid {
        &self.nodes[0].cuboid
    }

    pub fn nodes(&self) -> &[DetNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &DetNode {
        &self.nodes[id]
    }

    pub fn leaves(&self) -> &[DistributionElement] {
        &self.leaves
    }

    pub fn leaf(&self, id: LeafId) -> &DistributionElement {
        &self.leaves[id]
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn leaf_mass(&self, id: LeafId) -> f64 {
        self.leaves[id].mass(self.n)
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dims() {
            return Err(DetError::DimensionMismatch {
                expected: self.dims(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// The unique leaf containing `x`, or `None` outside the root cuboid.
    pub fn locate(&self, x: &[f64]) -> Result<Option<LeafId>> {
        self.check_point(x)?;
        let root = self.root_cuboid();
        if !root.contains(x) {
            return Ok(None);
        }
        let mut id = 0;
        loop {
            match self.nodes[id].body {
                NodeBody::Leaf(l) => return Ok(Some(l)),
                NodeBody::Split {
                    dim,
                    position,
                    lower,
                    upper,
                } => {
                    id = if x[dim] < position { lower } else { upper };
                }
            }
        }
    }

    /// DET density estimate at `x`; zero outside the root cuboid.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        Ok(match self.locate(x)? {
            Some(l) => self.leaves[l].density_inside(x, self.n),
            None => 0.0,
        })
    }
}

pub fn det_density(tree: &DetTree, x: &[f64]) -> Result<f64> {
    tree.density(x)
}

pub fn default_column_names(dims: usize) -> Vec<String> {
    (1..=dims).map(|i| format!("x{i}")).collect()
}

/// Prescribed values for a subset of coordinates. Dimensions are 0-based and
/// kept sorted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Condition {
    entries: Vec<(usize, f64)>,
}

impl Condition {
    pub fn none() -> Self {
        Condition::default()
    }

    /// Validates indices (distinct, `< dims`) and values (finite).
    pub fn new(entries: impl IntoIterator<Item = (usize, f64)>, dims: usize) -> Result<Self> {
        let mut entries: Vec<(usize, f64)> = entries.into_iter().collect();
        entries.sort_by_key(|e| e.0);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(DetError::InvalidInput(format!(
                    "dimension {} conditioned twice",
                    w[0].0
                )));
            }
        }
        for &(dim, v) in &entries {
            if dim >= dims {
                return Err(DetError::DimensionOutOfRange { index: dim, dims });
            }
            if !v.is_finite() {
                return Err(DetError::InvalidInput(format!(
                    "non-finite condition value {v}"
                )));
            }
        }
        Ok(Condition { entries })
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn value(&self, dim: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.0 == dim).map(|e| e.1)
    }

    /// Dimensions not fixed by this condition, ascending.
    pub fn free_dims(&self, dims: usize) -> Vec<usize> {
        (0..dims).filter(|d| self.value(*d).is_none()).collect()
    }

    /// Per-dimension lookup table, `None` for free dimensions.
    pub(crate) fn dense(&self, dims: usize) -> Vec<Option<f64>> {
        let mut out = vec![None; dims];
        for &(d, v) in &self.entries {
            out[d] = Some(v);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_leaf(count: u64, thetas: &[f64]) -> DistributionElement {
        let m = thetas
            .iter()
            .map(|&t| MarginalModel::linear(t).unwrap())
            .collect();
        DistributionElement::new(Cuboid::unit(thetas.len()), count, m).unwrap()
    }

    /// Tensor 2-point Gauss-Legendre, exact for products of linear factors.
    fn gauss_mass(de: &DistributionElement, n: u64) -> f64 {
        let d = de.dims();
        let g = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
        let c = de.cuboid();
        let mut sum = 0.0;
        for mask in 0..(1usize << d) {
            let x: Vec<f64> = (0..d)
                .map(|i| c.lower()[i] + g[(mask >> i) & 1] * c.width(i))
                .collect();
            sum += de.density(&x, n).unwrap();
        }
        sum * c.volume() / (1 << d) as f64
    }

    #[test]
    fn element_density_examples() {
        let de = unit_leaf(10, &[0.0, 0.0]);
        assert_eq!(de.density(&[0.3, 0.7], 10).unwrap(), 1.0);
        assert_eq!(de.density(&[1.5, 0.5], 10).unwrap(), 0.0);
        assert!(de.density(&[0.5], 10).is_err());

        let half = unit_leaf(5, &[1.0, 0.0]);
        assert_eq!(half.density(&[0.5, 0.5], 10).unwrap(), 0.5);
        assert!((gauss_mass(&half, 10) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn leaf_mass_examples() {
        let de = DistributionElement::uniform(Cuboid::unit(1), 250);
        assert_eq!(de.mass(1000), 0.25);
        assert_eq!(
            DistributionElement::uniform(Cuboid::unit(1), 0).mass(1000),
            0.0
        );
        let c = Cuboid::new(vec![-2.0, 1.0, 0.0], vec![3.0, 1.5, 0.1]).unwrap();
        let m = [0.3, -1.0, 0.77]
            .map(|t| MarginalModel::linear(t).unwrap())
            .to_vec();
        let de = DistributionElement::new(c, 37, m).unwrap();
        assert!((gauss_mass(&de, 100) - 0.37).abs() < 1e-10);
    }

    #[test]
    fn empty_element_rejects_slope() {
        let m = vec![MarginalModel::linear(0.5).unwrap()];
        assert!(DistributionElement::new(Cuboid::unit(1), 0, m).is_err());
    }

    fn two_leaf() -> DetTree {
        let root = Cuboid::unit(2);
        let (a, b) = root.bisect(0).unwrap();
        let raw = RawNode::Split {
            cuboid: root,
            dim: 0,
            position: 0.5,
            children: Box::new([
                RawNode::Leaf(DistributionElement::uniform(a, 1)),
                RawNode::Leaf(DistributionElement::uniform(b, 3)),
            ]),
        };
        DetTree::from_raw(raw, Order::Linear, default_column_names(2)).unwrap()
    }

    #[test]
    fn tree_density_and_locate() {
        let t = DetTree::uniform(Cuboid::unit(2), 7).unwrap();
        assert_eq!(t.density(&[0.2, 0.9]).unwrap(), 1.0);
        assert_eq!(t.density(&[1.2, 0.9]).unwrap(), 0.0);
        assert_eq!(t.density(&[1.0, 1.0]).unwrap(), 1.0);

        let t = two_leaf();
        assert_eq!(t.n(), 4);
        assert_eq!(t.locate(&[0.5, 0.1]).unwrap(), Some(1));
        assert_eq!(t.locate(&[0.4999, 0.1]).unwrap(), Some(0));
        assert_eq!(t.density(&[0.25, 0.25]).unwrap(), 0.5);
        assert_eq!(t.density(&[0.75, 0.25]).unwrap(), 1.5);
        let masses: f64 = (0..t.leaf_count()).map(|l| t.leaf_mass(l)).sum();
        assert_eq!(masses, 1.0);
    }

    #[test]
    fn from_raw_rejects_broken_structure() {
        let root = Cuboid::unit(1);
        let (a, b) = root.bisect(0).unwrap();
        let off_mid = RawNode::Split {
            cuboid: root.clone(),
            dim: 0,
            position: 0.4,
            children: Box::new([
                RawNode::Leaf(DistributionElement::uniform(a.clone(), 1)),
                RawNode::Leaf(DistributionElement::uniform(b.clone(), 1)),
            ]),
        };
        assert!(DetTree::from_raw(off_mid, Order::Linear, default_column_names(1)).is_err());

        let swapped = RawNode::Split {
            cuboid: root,
            dim: 0,
            position: 0.5,
            children: Box::new([
                RawNode::Leaf(DistributionElement::uniform(b, 1)),
                RawNode::Leaf(DistributionElement::uniform(a, 1)),
            ]),
        };
        assert!(DetTree::from_raw(swapped, Order::Linear, default_column_names(1)).is_err());

        let empty = RawNode::Leaf(DistributionElement::uniform(Cuboid::unit(1), 0));
        assert!(matches!(
            DetTree::from_raw(empty, Order::Linear, default_column_names(1)),
            Err(DetError::EmptyTree)
        ));
    }

    #[test]
    fn condition_validation() {
        assert!(Condition::new([(0, 1.0), (0, 2.0)], 3).is_err());
        assert!(matches!(
            Condition::new([(3, 1.0)], 3),
            Err(DetError::DimensionOutOfRange { index: 3, dims: 3 })
        ));
        assert!(Condition::new([(1, f64::NAN)], 3).is_err());
        let c = Condition::new([(2, 0.5), (0, 1.0)], 3).unwrap();
        assert_eq!(c.entries(), &[(0, 1.0), (2, 0.5)]);
        assert_eq!(c.free_dims(3), vec![1]);
    }
}
