//! Placements, deformation gradients, strain invariants, and curvature of
//! the reduced one-dimensional sheet.
//!
//! The sheet is a planar extensible elastica: each node carries a tangent
//! angle `theta`, a stretch `eps` (local stretch ratio `lambda = 1 + eps`),
//! and a position obtained by trapezoid integration of
//! `(1 + eps) (cos theta, sin theta)` from the first node. The transverse
//! direction is rigid (unit stretch), so the right Cauchy-Green measure of
//! the reduced body is the scalar `c = lambda^2`.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::coupling;
use crate::error::{Error, Result};
use crate::grid::MaterialGrid;
use crate::qubit::{FibreField, Unitary2};
use crate::stencil;

/// Per-node placement of the elastica: positions, tangent angles, stretches.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub theta: Vec<f64>,
    pub eps: Vec<f64>,
}

impl Placement {
    /// The flat, unstretched reference placement.
    pub fn flat(grid: &MaterialGrid) -> Placement {
        let n = grid.n_nodes();
        Placement {
            x: grid.coords(),
            z: vec![0.0; n],
            theta: vec![0.0; n],
            eps: vec![0.0; n],
        }
    }

    /// Build a placement from angle and stretch fields, integrating the
    /// positions with the cumulative trapezoid rule from the origin.
    pub fn from_theta_eps(grid: &MaterialGrid, theta: Vec<f64>, eps: Vec<f64>) -> Result<Placement> {
        grid.check_len(&theta)?;
        grid.check_len(&eps)?;
        for (i, &e) in eps.iter().enumerate() {
            if e <= -1.0 {
                return Err(Error::DegenerateDeformation { node: i, eps: e });
            }
        }
        let (x, z) = integrate_positions(grid, &theta, &eps);
        Ok(Placement { x, z, theta, eps })
    }

    pub fn n_nodes(&self) -> usize {
        self.theta.len()
    }

    /// Max deviation between the stored positions and a fresh trapezoid
    /// integration of `(1 + eps)(cos theta, sin theta)`.
    pub fn reconstruction_defect(&self, grid: &MaterialGrid) -> f64 {
        let (x, z) = integrate_positions(grid, &self.theta, &self.eps);
        self.x
            .iter()
            .zip(&x)
            .chain(self.z.iter().zip(&z))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// End-to-end span along x and net rise along z (trapezoid quadrature).
    pub fn end_span(&self, grid: &MaterialGrid) -> (f64, f64) {
        let w = grid.trapezoid_weights();
        let mut dx = 0.0;
        let mut dz = 0.0;
        for i in 0..self.n_nodes() {
            let lam = 1.0 + self.eps[i];
            dx += w[i] * lam * self.theta[i].cos();
            dz += w[i] * lam * self.theta[i].sin();
        }
        (dx, dz)
    }
}

fn integrate_positions(grid: &MaterialGrid, theta: &[f64], eps: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n_nodes();
    let h = grid.spacing();
    let mut x = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    x.push(0.0);
    z.push(0.0);
    for i in 1..n {
        let (la, lb) = (1.0 + eps[i - 1], 1.0 + eps[i]);
        let fx = 0.5 * h * (la * theta[i - 1].cos() + lb * theta[i].cos());
        let fz = 0.5 * h * (la * theta[i - 1].sin() + lb * theta[i].sin());
        x.push(x[i - 1] + fx);
        z.push(z[i - 1] + fz);
    }
    (x, z)
}

/// Reduced deformation gradient: per-node stretch factor and rotation angle.
/// The full 2x2 form is `lambda * R(theta)` with determinant `lambda^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationGradient1D {
    pub lambda: Vec<f64>,
    pub theta: Vec<f64>,
}

impl DeformationGradient1D {
    /// The 2x2 matrix `lambda R(theta)` at node `i`.
    pub fn matrix(&self, i: usize) -> nalgebra::Matrix2<f64> {
        let (s, c) = self.theta[i].sin_cos();
        nalgebra::Matrix2::new(c, -s, s, c) * self.lambda[i]
    }
}

/// Scalar right Cauchy-Green measure `c = lambda^2` with the invariants of
/// the sheet embedded in 3-space with unit transverse stretches:
/// `i1 = c + 2`, `i2 = 2c + 1`, `i3 = c`.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyGreenRecord {
    pub c: Vec<f64>,
}

impl CauchyGreenRecord {
    pub fn i1(&self, i: usize) -> f64 {
        self.c[i] + 2.0
    }
    pub fn i2(&self, i: usize) -> f64 {
        2.0 * self.c[i] + 1.0
    }
    pub fn i3(&self, i: usize) -> f64 {
        self.c[i]
    }
}

/// Signed nodal curvature `kappa = d theta / d s`. The radius of curvature
/// is `1 / |kappa|`; it is kept implicit so flat regions need no special
/// value.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub kappa: Vec<f64>,
}

impl CurvatureField {
    pub fn max_abs(&self) -> f64 {
        self.kappa.iter().fold(0.0, |m, k| m.max(k.abs()))
    }
}

/// Nodal curvature of an angle field by the shared stencil: central
/// differences inside, one-sided second order at the two ends.
pub fn compute_curvature(theta: &[f64], grid: &MaterialGrid) -> Result<CurvatureField> {
    grid.check_len(theta)?;
    Ok(CurvatureField {
        kappa: stencil::gradient(theta, grid.spacing()),
    })
}

/// Repackage a placement as a deformation gradient field. Pure relabelling,
/// no differentiation; fails if any node is degenerate (`eps <= -1`).
pub fn compute_deformation_gradient(placement: &Placement) -> Result<DeformationGradient1D> {
    let mut lambda = Vec::with_capacity(placement.n_nodes());
    for (i, &e) in placement.eps.iter().enumerate() {
        if e <= -1.0 {
            return Err(Error::DegenerateDeformation { node: i, eps: e });
        }
        lambda.push(1.0 + e);
    }
    Ok(DeformationGradient1D {
        lambda,
        theta: placement.theta.clone(),
    })
}

/// Right Cauchy-Green record of a deformation gradient. The rotation angle
/// is not read: `C = F^T F` is rotation-invariant by construction.
pub fn cauchy_green(f: &DeformationGradient1D) -> CauchyGreenRecord {
    CauchyGreenRecord {
        c: f.lambda.iter().map(|l| l * l).collect(),
    }
}

/// The four elements of the local 1-jet at one node: macro placement,
/// deformation gradient, fibre unitary, and referential unitary gradient.
#[derive(Debug, Clone)]
pub struct JetNode {
    pub position: (f64, f64),
    pub lambda: f64,
    pub theta: f64,
    pub c: f64,
    pub unitary: Unitary2,
    pub unitary_gradient: Matrix2<Complex64>,
}

/// Node-aligned collection of 1-jets, for snapshot diagnostics.
#[derive(Debug, Clone)]
pub struct JetSummary {
    pub nodes: Vec<JetNode>,
}

/// Assemble the per-node 1-jet record from a placement and a fibre field.
pub fn jet_record(placement: &Placement, field: &FibreField) -> Result<JetSummary> {
    let grid = field.grid();
    grid.check_len(&placement.theta)?;
    let f = compute_deformation_gradient(placement)?;
    let c = cauchy_green(&f);
    let du = coupling::unitary_gradient(field.propagators(), grid)?;
    let nodes = (0..grid.n_nodes())
        .map(|i| JetNode {
            position: (placement.x[i], placement.z[i]),
            lambda: f.lambda[i],
            theta: f.theta[i],
            c: c.c[i],
            unitary: field.propagators()[i].clone(),
            unitary_gradient: du[i],
        })
        .collect();
    Ok(JetSummary { nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid101() -> MaterialGrid {
        MaterialGrid::new(101, 1.0).unwrap()
    }

    #[test]
    fn flat_sheet_has_zero_curvature() {
        let g = grid101();
        let kappa = compute_curvature(&vec![0.0; 101], &g).unwrap();
        assert!(kappa.kappa.iter().all(|&k| k == 0.0));
    }

    #[test]
    fn uniform_winding_is_exact_at_every_node() {
        let g = grid101();
        let a = 0.73;
        let theta: Vec<f64> = (0..101).map(|i| a * g.coord(i)).collect();
        let kappa = compute_curvature(&theta, &g).unwrap();
        assert_eq!(kappa.kappa.len(), 101);
        for &k in &kappa.kappa {
            assert!((k - a).abs() < 1e-12, "kappa {k} vs {a}");
        }
    }

    #[test]
    fn sinusoid_curvature_converges_at_second_order() {
        let tau = std::f64::consts::TAU;
        let err = |n: usize| {
            let g = MaterialGrid::new(n, 1.0).unwrap();
            let theta: Vec<f64> = (0..n).map(|i| (tau * g.coord(i)).sin()).collect();
            let kappa = compute_curvature(&theta, &g).unwrap();
            kappa
                .kappa
                .iter()
                .enumerate()
                .map(|(i, k)| (k - tau * (tau * g.coord(i)).cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(101) / err(201);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn curvature_rejects_length_mismatch() {
        let g = grid101();
        assert!(matches!(
            compute_curvature(&vec![0.0; 100], &g),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn identity_and_uniform_stretch_gradients() {
        let g = grid101();
        let p = Placement::flat(&g);
        let f = compute_deformation_gradient(&p).unwrap();
        assert!(f.lambda.iter().all(|&l| l == 1.0));
        assert!(f.theta.iter().all(|&t| t == 0.0));

        let p = Placement::from_theta_eps(&g, vec![0.0; 101], vec![0.1; 101]).unwrap();
        let f = compute_deformation_gradient(&p).unwrap();
        assert!(f.lambda.iter().all(|&l| (l - 1.1).abs() < 1e-15));
    }

    #[test]
    fn degenerate_stretch_is_rejected() {
        let g = grid101();
        let mut eps = vec![0.0; 101];
        eps[7] = -1.0;
        assert!(matches!(
            Placement::from_theta_eps(&g, vec![0.0; 101], eps),
            Err(Error::DegenerateDeformation { node: 7, .. })
        ));
    }

    #[test]
    fn cauchy_green_identity_and_square() {
        let f = DeformationGradient1D {
            lambda: vec![1.0, 1.2],
            theta: vec![0.0, 0.4],
        };
        let c = cauchy_green(&f);
        assert_eq!(c.c[0], 1.0);
        assert_eq!((c.i1(0), c.i2(0), c.i3(0)), (3.0, 3.0, 1.0));
        assert!((c.c[1] - 1.44).abs() < 1e-15);
    }

    #[test]
    fn reconstruction_roundtrip_is_tight() {
        let g = grid101();
        let theta: Vec<f64> = (0..101).map(|i| (3.0 * g.coord(i)).sin() * 0.4).collect();
        let eps: Vec<f64> = (0..101).map(|i| 0.02 * (5.0 * g.coord(i)).cos()).collect();
        let p = Placement::from_theta_eps(&g, theta, eps).unwrap();
        assert!(p.reconstruction_defect(&g) <= 1e-10 * g.sheet_length());
    }

    proptest! {
        // det(lambda R(theta)) = lambda^2 > 0 for every valid node.
        #[test]
        fn determinant_is_lambda_squared(lambda in 0.05f64..3.0, theta in -6.3f64..6.3) {
            let f = DeformationGradient1D { lambda: vec![lambda], theta: vec![theta] };
            let det = f.matrix(0).determinant();
            prop_assert!(det > 0.0);
            prop_assert!((det - lambda * lambda).abs() <= 1e-12 * lambda * lambda);
        }

        // Rotating the frame never changes C: theta is not read at all.
        #[test]
        fn cauchy_green_ignores_rotation(lambda in 0.05f64..3.0, theta in -6.3f64..6.3) {
            let with_rot = cauchy_green(&DeformationGradient1D {
                lambda: vec![lambda],
                theta: vec![theta],
            });
            let without = cauchy_green(&DeformationGradient1D {
                lambda: vec![lambda],
                theta: vec![0.0],
            });
            prop_assert_eq!(with_rot.c[0].to_bits(), without.c[0].to_bits());
        }
    }
}
