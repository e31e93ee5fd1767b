//! The discretized body manifold: a uniform chain of material points.

use crate::error::{Error, Result};

/// Uniform reference grid over the sheet's arc coordinate.
///
/// Node `i` sits at material coordinate `s_i = i * spacing`, with
/// `s_{n-1} = sheet_length` up to one rounding unit. The node count is
/// required to be odd so a midpoint node exists for symmetric diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialGrid {
    n_nodes: usize,
    sheet_length: f64,
    spacing: f64,
}

impl MaterialGrid {
    /// Build a grid with `n_nodes` nodes over `sheet_length`.
    pub fn new(n_nodes: usize, sheet_length: f64) -> Result<Self> {
        if n_nodes < 5 || n_nodes % 2 == 0 {
            return Err(Error::ConfigInvalid(vec![format!(
                "sheet.n_nodes must be odd and at least 5, got {n_nodes}"
            )]));
        }
        if !(sheet_length.is_finite() && sheet_length > 0.0) {
            return Err(Error::ConfigInvalid(vec![format!(
                "sheet.sheet_length must be positive and finite, got {sheet_length}"
            )]));
        }
        Ok(MaterialGrid {
            n_nodes,
            sheet_length,
            spacing: sheet_length / (n_nodes - 1) as f64,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn sheet_length(&self) -> f64 {
        self.sheet_length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Material coordinate of node `i`.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing
    }

    /// All node coordinates.
    pub fn coords(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|i| self.coord(i)).collect()
    }

    /// Index of the midpoint node (exists because `n_nodes` is odd).
    pub fn mid_node(&self) -> usize {
        (self.n_nodes - 1) / 2
    }

    /// Trapezoid quadrature weights: `h/2` at the two ends, `h` inside.
    /// They sum to `sheet_length` up to rounding and make nodal sums agree
    /// with the cumulative trapezoid rule used for placements.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.spacing;
        let mut w = vec![h; self.n_nodes];
        w[0] = 0.5 * h;
        w[self.n_nodes - 1] = 0.5 * h;
        w
    }

    /// Error unless `values` has one entry per node.
    pub fn check_len<T>(&self, values: &[T]) -> Result<()> {
        if values.len() != self.n_nodes {
            Err(Error::ShapeMismatch {
                expected: self.n_nodes,
                got: values.len(),
            })
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_even_or_tiny_node_counts() {
        assert!(MaterialGrid::new(4, 1.0).is_err());
        assert!(MaterialGrid::new(100, 1.0).is_err());
        assert!(MaterialGrid::new(3, 1.0).is_err());
        assert!(MaterialGrid::new(5, 1.0).is_ok());
    }

    #[test]
    fn last_coord_reproduces_sheet_length() {
        for (n, len) in [(5, 1.0), (101, 1.0), (101, 2.7), (1001, 0.013)] {
            let g = MaterialGrid::new(n, len).unwrap();
            let end = g.coord(n - 1);
            assert!(
                (end - len).abs() <= 2.0 * f64::EPSILON * len,
                "end {end} vs {len}"
            );
        }
    }

    #[test]
    fn trapezoid_weights_sum_to_length() {
        let g = MaterialGrid::new(101, 1.0).unwrap();
        let sum: f64 = g.trapezoid_weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-13);
    }

    #[test]
    fn midpoint_node_is_central() {
        let g = MaterialGrid::new(101, 1.0).unwrap();
        assert_eq!(g.mid_node(), 50);
        assert!((g.coord(g.mid_node()) - 0.5).abs() < 1e-14);
    }
}
