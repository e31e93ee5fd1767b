//! Fibre-to-macro coupling through the referential gradient of the
//! propagator field.
//!
//! For each node the antihermitian operator `W = U^dag dU/ds` is formed
//! from the accumulated propagator and its finite-difference gradient. Its
//! trace is purely imaginary; the coupling scalar is `w = |tr W|` and the
//! bending stiffness responds through `B = B0 (1 + beta w^2)`.
//!
//! `U^dag dU` computed from a discrete gradient is antihermitian only up
//! to O(h^2); the symmetrization `(M - M^dag)/2` removes that noise, while
//! a guarded defect check fails loudly when the deviation is structural
//! (non-unitary input or a hopelessly under-resolved field).

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::MaterialGrid;
use crate::qubit::Unitary2;
use crate::stencil;

/// Default relative bound on the hermitian defect of `U^dag dU`; genuine
/// discretization noise stays well below it, structural violations exceed it.
pub const DEFAULT_ANTIHERMITIAN_TOL: f64 = 0.5;

/// Per-node coupling state: the antihermitian operator, its trace data,
/// and the stiffness it produces.
#[derive(Debug, Clone)]
pub struct CouplingField {
    /// Antihermitian `W` per node (units 1/length).
    pub w_op: Vec<Matrix2<C64>>,
    /// `tr W` per node; purely imaginary up to rounding.
    pub trace_value: Vec<C64>,
    /// `|tr W|` per node.
    pub w_norm: Vec<f64>,
    /// Modified bending stiffness per node.
    pub stiffness: Vec<f64>,
}

/// Stiffness response to the coupling scalar: `B = B0 (1 + beta w^2)`.
/// `beta = 0` short-circuits to `B0` exactly, bit for bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackCouplingLaw {
    pub base_stiffness: f64,
    pub gain: f64,
}

impl BackCouplingLaw {
    pub fn new(base_stiffness: f64, gain: f64) -> Result<BackCouplingLaw> {
        if !(base_stiffness > 0.0) || !(gain >= 0.0) {
            return Err(Error::ConfigInvalid(vec![format!(
                "back-coupling law needs B0 > 0 and beta >= 0, got B0 = {base_stiffness}, beta = {gain}"
            )]));
        }
        Ok(BackCouplingLaw {
            base_stiffness,
            gain,
        })
    }

    pub fn stiffness(&self, w: f64) -> f64 {
        if self.gain == 0.0 {
            self.base_stiffness
        } else {
            self.base_stiffness * (1.0 + self.gain * w * w)
        }
    }
}

/// Referential gradient of a propagator field: the shared second-order
/// stencil applied entrywise to the 2x2 matrices.
pub fn unitary_gradient(field: &[Unitary2], grid: &MaterialGrid) -> Result<Vec<Matrix2<C64>>> {
    grid.check_len(field)?;
    let mats: Vec<Matrix2<C64>> = field.iter().map(|u| *u.matrix()).collect();
    Ok(stencil::gradient(&mats, grid.spacing()))
}

/// Same stencil for dynamically sized propagators (oscillator fibre).
pub fn unitary_gradient_dyn(field: &[DMatrix<C64>], grid: &MaterialGrid) -> Result<Vec<DMatrix<C64>>> {
    grid.check_len(field)?;
    Ok(stencil::gradient(field, grid.spacing()))
}

fn max_abs2(m: &Matrix2<C64>) -> f64 {
    m.iter().map(|e| e.norm()).fold(0.0, f64::max)
}

fn max_abs_dyn(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|e| e.norm()).fold(0.0, f64::max)
}

/// `W = (M - M^dag)/2` with `M = U^dag dU`, after checking that the
/// hermitian part `M + M^dag` stays below the absolute bound `max_defect`.
/// Callers derive the bound from the gradient scale of the whole field so
/// symmetry nodes with vanishing gradients are not judged against their own
/// noise. Pass `node` for error context.
pub fn compute_w(
    u: &Unitary2,
    du: &Matrix2<C64>,
    max_defect: f64,
    node: usize,
) -> Result<Matrix2<C64>> {
    let m = u.matrix().adjoint() * du;
    let defect = max_abs2(&(m + m.adjoint()));
    if defect > max_defect {
        return Err(Error::AntihermitianDefect {
            node,
            defect,
            tol: max_defect,
        });
    }
    Ok((m - m.adjoint()).scale(0.5))
}

/// Dynamic-size variant of [`compute_w`] for the oscillator propagators.
pub fn compute_w_dyn(
    u: &DMatrix<C64>,
    du: &DMatrix<C64>,
    max_defect: f64,
    node: usize,
) -> Result<DMatrix<C64>> {
    let m = u.adjoint() * du;
    let madj = m.adjoint();
    let defect = max_abs_dyn(&(&m + &madj));
    if defect > max_defect {
        return Err(Error::AntihermitianDefect {
            node,
            defect,
            tol: max_defect,
        });
    }
    Ok((m - madj).scale(0.5))
}

/// `w_i = |tr W_i|`. With one surviving material index the trace vector
/// has a single component per node, so the norm is the plain modulus; the
/// trace of the symmetrized W is purely imaginary by construction.
pub fn trace_norm_field(w_ops: &[Matrix2<C64>]) -> (Vec<C64>, Vec<f64>) {
    let traces: Vec<C64> = w_ops.iter().map(|w| w.trace()).collect();
    let norms = traces.iter().map(|t| t.norm()).collect();
    (traces, norms)
}

pub fn trace_norm_field_dyn(w_ops: &[DMatrix<C64>]) -> (Vec<C64>, Vec<f64>) {
    let traces: Vec<C64> = w_ops.iter().map(|w| w.trace()).collect();
    let norms = traces.iter().map(|t| t.norm()).collect();
    (traces, norms)
}

/// Apply the back-coupling law to a coupling-norm field.
pub fn update_stiffness(law: &BackCouplingLaw, w_norm: &[f64]) -> Vec<f64> {
    w_norm.iter().map(|&w| law.stiffness(w)).collect()
}

/// Full coupling pass over a qubit propagator field: gradient, W, traces,
/// norms, stiffness. `antihermitian_tol` is relative to the max gradient
/// magnitude over the whole field.
pub fn coupling_pass(
    field: &[Unitary2],
    grid: &MaterialGrid,
    law: &BackCouplingLaw,
    antihermitian_tol: f64,
) -> Result<CouplingField> {
    let du = unitary_gradient(field, grid)?;
    let scale = du.iter().map(max_abs2).fold(0.0, f64::max).max(1e-300);
    let max_defect = antihermitian_tol * scale;
    let mut w_op = Vec::with_capacity(field.len());
    for (i, (u, d)) in field.iter().zip(&du).enumerate() {
        w_op.push(compute_w(u, d, max_defect, i)?);
    }
    let (trace_value, w_norm) = trace_norm_field(&w_op);
    let stiffness = update_stiffness(law, &w_norm);
    Ok(CouplingField {
        w_op,
        trace_value,
        w_norm,
        stiffness,
    })
}

/// Coupling-norm field from a dynamic propagator field (oscillator runs);
/// returns the per-node `w` and stiffness without storing the large `W`s.
pub fn coupling_pass_dyn(
    field: &[DMatrix<C64>],
    grid: &MaterialGrid,
    law: &BackCouplingLaw,
    antihermitian_tol: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let du = unitary_gradient_dyn(field, grid)?;
    let scale = du.iter().map(max_abs_dyn).fold(0.0, f64::max).max(1e-300);
    let max_defect = antihermitian_tol * scale;
    let mut w_norm = Vec::with_capacity(field.len());
    for (i, (u, d)) in field.iter().zip(&du).enumerate() {
        let w = compute_w_dyn(u, d, max_defect, i)?;
        w_norm.push(w.trace().norm());
    }
    let stiffness = update_stiffness(law, &w_norm);
    Ok((w_norm, stiffness))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{pauli_exponential, sigma_x, sigma_z, PauliCoefficients, Unitary2};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn phase_field(grid: &MaterialGrid, rate: f64) -> Vec<Unitary2> {
        // U(s) = exp(-i rate s sigma_z)
        (0..grid.n_nodes())
            .map(|i| {
                pauli_exponential(
                    PauliCoefficients {
                        a0: 0.0,
                        ax: 0.0,
                        ay: 0.0,
                        az: 1.0,
                    },
                    rate * grid.coord(i),
                )
            })
            .collect()
    }

    fn random_unitary(rng: &mut ChaCha8Rng) -> Unitary2 {
        pauli_exponential(
            PauliCoefficients {
                a0: rng.gen_range(-3.0..3.0),
                ax: rng.gen_range(-3.0..3.0),
                ay: rng.gen_range(-3.0..3.0),
                az: rng.gen_range(-3.0..3.0),
            },
            1.0,
        )
    }

    #[test]
    fn constant_field_has_zero_gradient() {
        let grid = MaterialGrid::new(11, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_unitary(&mut rng);
        let field = vec![u; 11];
        for g in unitary_gradient(&field, &grid).unwrap() {
            assert_eq!(max_abs2(&g), 0.0);
        }
    }

    #[test]
    fn analytic_phase_field_gradient_is_second_order() {
        let err = |n: usize| {
            let grid = MaterialGrid::new(n, 1.0).unwrap();
            let field = phase_field(&grid, 1.0);
            let du = unitary_gradient(&field, &grid).unwrap();
            field
                .iter()
                .zip(&du)
                .map(|(u, d)| {
                    let exact = sigma_z() * C64::new(0.0, -1.0) * u.matrix();
                    max_abs2(&(d - exact))
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(101) / err(201);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn zero_gradient_gives_zero_w() {
        let u = Unitary2::identity();
        let w = compute_w(&u, &Matrix2::zeros(), DEFAULT_ANTIHERMITIAN_TOL, 0).unwrap();
        assert_eq!(max_abs2(&w), 0.0);
    }

    #[test]
    fn exact_phase_gradient_reproduces_minus_i_sigma_z() {
        // With the exact dU = -i sigma_z U, W = -i sigma_z. Its trace is
        // zero: Pauli matrices are traceless, so this W is invisible to
        // the coupling norm.
        let u = pauli_exponential(
            PauliCoefficients {
                a0: 0.0,
                ax: 0.0,
                ay: 0.0,
                az: 1.0,
            },
            0.83,
        );
        let du = sigma_z() * C64::new(0.0, -1.0) * u.matrix();
        let w = compute_w(&u, &du, DEFAULT_ANTIHERMITIAN_TOL, 0).unwrap();
        let expected = sigma_z() * C64::new(0.0, -1.0);
        assert!(max_abs2(&(w - expected)) < 1e-14);
        let (traces, norms) = trace_norm_field(&[w]);
        assert!(traces[0].norm() < 1e-14);
        assert_abs_diff_eq!(norms[0], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn global_phase_gradient_carries_the_full_trace() {
        // U(s) = e^{-i s} I has the exact dU = -i U, so W = -i I with
        // tr W = -2i and |tr W| = 2: the trace-bearing counterpart of the
        // traceless sigma_z case.
        let u = pauli_exponential(
            PauliCoefficients {
                a0: 1.0,
                ax: 0.0,
                ay: 0.0,
                az: 0.0,
            },
            0.83,
        );
        let du = u.matrix() * C64::new(0.0, -1.0);
        let w = compute_w(&u, &du, DEFAULT_ANTIHERMITIAN_TOL, 0).unwrap();
        let (traces, norms) = trace_norm_field(&[w]);
        assert!((traces[0] - C64::new(0.0, -2.0)).norm() < 1e-14);
        assert_abs_diff_eq!(norms[0], 2.0, epsilon = 1e-14);
        assert!(traces[0].re.abs() < 1e-15);
    }

    #[test]
    fn traceless_w_has_zero_norm_despite_being_nonzero() {
        // sigma matrices are traceless: a pure -i sigma_x W is invisible to
        // the trace norm. Assert the blind spot explicitly.
        let w = sigma_x() * C64::new(0.0, -1.5);
        assert!(max_abs2(&w) > 1.0);
        let (_, norms) = trace_norm_field(&[w]);
        assert_abs_diff_eq!(norms[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn structural_violation_raises_consistency_error() {
        // A non-unitary "U" makes U^dag dU strongly hermitian.
        let grid = MaterialGrid::new(11, 1.0).unwrap();
        let stretched: Vec<Unitary2> = phase_field(&grid, 1.0);
        let mut mats: Vec<Matrix2<C64>> = stretched.iter().map(|u| *u.matrix()).collect();
        for (i, m) in mats.iter_mut().enumerate() {
            *m *= C64::new(1.0 + 0.4 * grid.coord(i), 0.0);
        }
        let du = stencil::gradient(&mats, grid.spacing());
        // Wrap without the unitarity check by building from the raw parts.
        let err = (0..mats.len()).find_map(|i| {
            let fake_u = Unitary2::identity();
            match compute_w(&fake_u, &du[i], 1e-3, i) {
                Err(e) => Some(e),
                Ok(_) => None,
            }
        });
        assert!(matches!(err, Some(Error::AntihermitianDefect { .. })));
    }

    #[test]
    fn left_gauge_transformation_leaves_w_unchanged() {
        let grid = MaterialGrid::new(41, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let field = phase_field(&grid, 2.0);
        let v = random_unitary(&mut rng);
        let transformed: Vec<Unitary2> = field.iter().map(|u| v.compose(u)).collect();

        let law = BackCouplingLaw::new(1.0, 0.0).unwrap();
        let base = coupling_pass(&field, &grid, &law, DEFAULT_ANTIHERMITIAN_TOL).unwrap();
        let moved = coupling_pass(&transformed, &grid, &law, DEFAULT_ANTIHERMITIAN_TOL).unwrap();
        for (a, b) in base.w_op.iter().zip(&moved.w_op) {
            assert!(max_abs2(&(a - b)) < 1e-12);
        }
    }

    #[test]
    fn right_gauge_transformation_conjugates_w_and_keeps_traces() {
        let grid = MaterialGrid::new(41, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let field = phase_field(&grid, 2.0);
        let law = BackCouplingLaw::new(1.0, 0.0).unwrap();
        let base = coupling_pass(&field, &grid, &law, DEFAULT_ANTIHERMITIAN_TOL).unwrap();
        for _ in 0..4 {
            let v = random_unitary(&mut rng);
            let transformed: Vec<Unitary2> = field.iter().map(|u| u.compose(&v)).collect();
            let moved =
                coupling_pass(&transformed, &grid, &law, DEFAULT_ANTIHERMITIAN_TOL).unwrap();
            for ((w, w_moved), (t, t_moved)) in base
                .w_op
                .iter()
                .zip(&moved.w_op)
                .zip(base.trace_value.iter().zip(&moved.trace_value))
            {
                let conj = v.matrix().adjoint() * w * v.matrix();
                assert!(max_abs2(&(w_moved - conj)) < 1e-12);
                assert!((t - t_moved).norm() < 1e-12);
            }
            for (n, n_moved) in base.w_norm.iter().zip(&moved.w_norm) {
                assert!((n - n_moved).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn antihermitian_defect_decays_at_second_order() {
        // A field with varying phase rate has a genuinely nonzero hermitian
        // defect in U^dag D_h U; it must shrink like h^2.
        let defect = |n: usize| {
            let grid = MaterialGrid::new(n, 1.0).unwrap();
            let field: Vec<Unitary2> = (0..n)
                .map(|i| {
                    let s = grid.coord(i);
                    pauli_exponential(
                        PauliCoefficients {
                            a0: 0.0,
                            ax: 0.0,
                            ay: 0.0,
                            az: 1.0,
                        },
                        (std::f64::consts::TAU * s).sin(),
                    )
                })
                .collect();
            let du = unitary_gradient(&field, &grid).unwrap();
            field
                .iter()
                .zip(&du)
                .map(|(u, d)| {
                    let m = u.matrix().adjoint() * d;
                    max_abs2(&(m + m.adjoint()))
                })
                .fold(0.0, f64::max)
        };
        let ratio = defect(101) / defect(201);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn stiffness_law_short_circuits_at_zero_gain() {
        let law = BackCouplingLaw::new(2.5, 0.0).unwrap();
        for w in [0.0, 1.0, 17.3, f64::MAX.sqrt()] {
            assert_eq!(law.stiffness(w).to_bits(), 2.5f64.to_bits());
        }
        let law = BackCouplingLaw::new(1.0, 0.25).unwrap();
        assert_abs_diff_eq!(law.stiffness(2.0), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn stiffness_is_monotone_in_the_coupling_norm() {
        let law = BackCouplingLaw::new(1.3, 0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (a, b) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            assert!(law.stiffness(lo) <= law.stiffness(hi));
            assert!(law.stiffness(lo) >= law.base_stiffness);
        }
    }

    #[test]
    fn dyn_variant_matches_fixed_size_variant() {
        let grid = MaterialGrid::new(21, 1.0).unwrap();
        let field = phase_field(&grid, 1.5);
        let dyn_field: Vec<DMatrix<C64>> = field
            .iter()
            .map(|u| {
                DMatrix::from_fn(2, 2, |r, c| u.matrix()[(r, c)])
            })
            .collect();
        let law = BackCouplingLaw::new(1.0, 0.4).unwrap();
        let fixed = coupling_pass(&field, &grid, &law, DEFAULT_ANTIHERMITIAN_TOL).unwrap();
        let (w_norm, stiffness) =
            coupling_pass_dyn(&dyn_field, &grid, &law, DEFAULT_ANTIHERMITIAN_TOL).unwrap();
        for (a, b) in fixed.w_norm.iter().zip(&w_norm) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        for (a, b) in fixed.stiffness.iter().zip(&stiffness) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }
}
