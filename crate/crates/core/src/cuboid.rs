use crate::error::{DetError, Result};

/// Axis-aligned box `prod_i [lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cuboid {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Cuboid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(DetError::DimensionMismatch {
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(DetError::InvalidInput(
                "cuboid needs at least one dimension".into(),
            ));
        }
        for (i, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite()) {
                return Err(DetError::InvalidInput(format!(
                    "non-finite bound in dimension {i}"
                )));
            }
            if !(l < u) {
                return Err(DetError::InvalidInput(format!(
                    "empty extent [{l}, {u}] in dimension {i}"
                )));
            }
        }
        Ok(Cuboid { lower, upper })
    }

    pub fn unit(dims: usize) -> Self {
        Cuboid {
            lower: vec![0.0; dims],
            upper: vec![1.0; dims],
        }
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, dim: usize) -> f64 {
        self.upper[dim] - self.lower[dim]
    }

    pub fn midpoint(&self, dim: usize) -> f64 {
        0.5 * (self.lower[dim] + self.upper[dim])
    }

    pub fn volume(&self) -> f64 {
        (0..self.dims()).map(|i| self.width(i)).product()
    }

    /// Splits at the midpoint of `dim`, or `None` when the midpoint is not
    /// strictly inside (the extent has shrunk to a few ulps).
    pub fn bisect(&self, dim: usize) -> Option<(Cuboid, Cuboid)> {
        let mid = self.midpoint(dim);
        if !(self.lower[dim] < mid && mid < self.upper[dim]) {
            return None;
        }
        let mut lo = self.clone();
        let mut hi = self.clone();
        lo.upper[dim] = mid;
        hi.lower[dim] = mid;
        Some((lo, hi))
    }

    /// Whether coordinate `x` of dimension `dim` lies in this box when the box
    /// is a cell of the partition of `root`: intervals are `[l, u)`, closed
    /// above only where `u` is the root's upper bound.
    #[inline]
    pub fn contains_coord_in(&self, dim: usize, x: f64, root: &Cuboid) -> bool {
        let (l, u) = (self.lower[dim], self.upper[dim]);
        l <= x && (x < u || (x == u && u == root.upper[dim]))
    }

    pub fn contains_in(&self, x: &[f64], root: &Cuboid) -> bool {
        x.len() == self.dims() && (0..self.dims()).all(|i| self.contains_coord_in(i, x[i], root))
    }

    /// Containment with this box taken as its own root (closed on both sides).
    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_in(x, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_bounds() {
        assert!(Cuboid::new(vec![0.0], vec![0.0]).is_err());
        assert!(Cuboid::new(vec![1.0], vec![0.0]).is_err());
        assert!(Cuboid::new(vec![0.0], vec![f64::INFINITY]).is_err());
        assert!(Cuboid::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(Cuboid::new(vec![], vec![]).is_err());
    }

    #[test]
    fn bisect_partitions_under_half_open_rule() {
        let root = Cuboid::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let (lo, hi) = root.bisect(1).unwrap();
        assert_eq!(lo.upper()[1], 0.0);
        assert_eq!(hi.lower()[1], 0.0);
        for x in [[0.5, -1.0], [0.5, 0.0], [0.5, 1.0], [1.0, 1.0], [0.0, -0.5]] {
            let hits = [&lo, &hi]
                .iter()
                .filter(|c| c.contains_in(&x, &root))
                .count();
            assert_eq!(hits, 1, "{x:?}");
        }
        assert!(!root.contains(&[1.5, 0.0]));
    }

    #[test]
    fn bisect_refuses_ulp_extent() {
        let c = Cuboid::new(vec![1.0], vec![f64::from_bits(1.0f64.to_bits() + 1)]).unwrap();
        assert!(c.bisect(0).is_none());
    }
}
