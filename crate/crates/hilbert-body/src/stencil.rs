//! Shared finite-difference stencil for referential gradients.
//!
//! One stencil is used everywhere a per-node field is differentiated with
//! respect to the material coordinate: central differences at interior
//! nodes, one-sided three-point second-order formulas at the two ends, so
//! every output stays node-aligned.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

/// Values the stencil can act on: pairwise difference and scaled addition.
pub trait StencilValue: Clone {
    fn diff(&self, rhs: &Self) -> Self;
    fn scaled(&self, coeff: f64) -> Self;
    fn add(&self, rhs: &Self) -> Self;
}

impl StencilValue for f64 {
    fn diff(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn scaled(&self, coeff: f64) -> Self {
        coeff * self
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
}

impl StencilValue for Matrix2<Complex64> {
    fn diff(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn scaled(&self, coeff: f64) -> Self {
        self.scale(coeff)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
}

impl StencilValue for DMatrix<Complex64> {
    fn diff(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn scaled(&self, coeff: f64) -> Self {
        self.scale(coeff)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
}

/// First derivative of a node-aligned field with spacing `h`.
///
/// Interior: `(f_{i+1} - f_{i-1}) / (2h)`.
/// Ends: `(-3 f_0 + 4 f_1 - f_2) / (2h)` and its mirror image, evaluated
/// as combinations of differences from the boundary value so a constant
/// field yields exact zeros. Exact on fields affine in the node
/// coordinate; O(h^2) otherwise.
///
/// Panics if the field has fewer than 3 entries; callers validate shape
/// against the grid first.
pub fn gradient<T: StencilValue>(field: &[T], h: f64) -> Vec<T> {
    let n = field.len();
    assert!(n >= 3, "gradient stencil needs at least 3 nodes");
    let inv2h = 1.0 / (2.0 * h);
    let mut out = Vec::with_capacity(n);

    // -3 f0 + 4 f1 - f2 == 4 (f1 - f0) - (f2 - f0)
    let first = field[1]
        .diff(&field[0])
        .scaled(4.0 * inv2h)
        .add(&field[2].diff(&field[0]).scaled(-inv2h));
    out.push(first);

    for i in 1..n - 1 {
        out.push(field[i + 1].diff(&field[i - 1]).scaled(inv2h));
    }

    // 3 f_{n-1} - 4 f_{n-2} + f_{n-3} == -4 (f_{n-2} - f_{n-1}) + (f_{n-3} - f_{n-1})
    let last = field[n - 2]
        .diff(&field[n - 1])
        .scaled(-4.0 * inv2h)
        .add(&field[n - 3].diff(&field[n - 1]).scaled(inv2h));
    out.push(last);

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_linear_data() {
        let h = 0.1;
        let field: Vec<f64> = (0..7).map(|i| 2.5 * (i as f64) * h - 1.0).collect();
        for g in gradient(&field, h) {
            assert!((g - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn second_order_on_smooth_data() {
        let err = |n: usize| -> f64 {
            let h = 1.0 / (n - 1) as f64;
            let field: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin()).collect();
            gradient(&field, h)
                .iter()
                .enumerate()
                .map(|(i, g)| (g - (i as f64 * h).cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(101) / err(201);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn matrix_gradient_matches_entrywise_scalar_gradient() {
        let h = 0.05;
        let n = 11;
        let f: Vec<f64> = (0..n).map(|i| ((i as f64) * h).powi(2)).collect();
        let mats: Vec<Matrix2<Complex64>> = f
            .iter()
            .map(|&v| Matrix2::from_element(Complex64::new(v, -2.0 * v)))
            .collect();
        let gm = gradient(&mats, h);
        let gs = gradient(&f, h);
        for (m, s) in gm.iter().zip(&gs) {
            assert!((m[(0, 0)].re - s).abs() < 1e-12);
            assert!((m[(1, 1)].im + 2.0 * s).abs() < 1e-12);
        }
    }
}
