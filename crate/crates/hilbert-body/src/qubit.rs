//! Per-node qubit dynamics.
//!
//! Each node carries a two-level state and the propagator accumulated since
//! t = 0. The nodal Hamiltonian is assembled from four real coefficient
//! functions of the local macro state, `H = g0 I + gx sx + gy sy + gz sz`,
//! and one step advances both state and propagator with the closed-form
//! 2x2 exponential, so unitarity is exact to rounding and is monitored,
//! never repaired.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::MaterialGrid;

const I2: Matrix2<C64> = Matrix2::new(
    C64::new(1.0, 0.0),
    C64::new(0.0, 0.0),
    C64::new(0.0, 0.0),
    C64::new(1.0, 0.0),
);

pub fn sigma_x() -> Matrix2<C64> {
    Matrix2::new(
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
    )
}

pub fn sigma_y() -> Matrix2<C64> {
    Matrix2::new(
        C64::new(0.0, 0.0),
        C64::new(0.0, -1.0),
        C64::new(0.0, 1.0),
        C64::new(0.0, 0.0),
    )
}

pub fn sigma_z() -> Matrix2<C64> {
    Matrix2::new(
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(-1.0, 0.0),
    )
}

/// Max-abs entry of `U^dag U - I`.
pub fn unitarity_defect(m: &Matrix2<C64>) -> f64 {
    let d = m.adjoint() * m - I2;
    d.iter().map(|e| e.norm()).fold(0.0, f64::max)
}

/// A 2x2 unitary, checked on construction: `U^dag U = I` and `|det U| = 1`
/// to 1e-12 in max-abs entry norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary2(Matrix2<C64>);

impl Unitary2 {
    pub const TOL: f64 = 1e-12;

    pub fn identity() -> Unitary2 {
        Unitary2(I2)
    }

    pub fn from_matrix(m: Matrix2<C64>) -> Result<Unitary2> {
        let defect = unitarity_defect(&m);
        let det_defect = (m.determinant().norm() - 1.0).abs();
        let worst = defect.max(det_defect);
        if worst > Self::TOL {
            return Err(Error::UnitarityLost {
                node: usize::MAX,
                defect: worst,
                tol: Self::TOL,
            });
        }
        Ok(Unitary2(m))
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.0
    }

    pub fn defect(&self) -> f64 {
        unitarity_defect(&self.0)
    }

    /// `self * rhs` without re-checking; products of checked unitaries stay
    /// within tolerance and are monitored by the field-level audit.
    pub fn compose(&self, rhs: &Unitary2) -> Unitary2 {
        Unitary2(self.0 * rhs.0)
    }

    pub fn apply(&self, psi: &Vector2<C64>) -> Vector2<C64> {
        self.0 * psi
    }
}

/// A normalized two-level state.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitState(Vector2<C64>);

impl QubitState {
    pub const NORM_TOL: f64 = 1e-10;

    pub fn new(psi0: C64, psi1: C64) -> Result<QubitState> {
        let v = Vector2::new(psi0, psi1);
        let norm = v.norm();
        if (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::ConstitutiveEval(format!(
                "qubit state norm {norm} is not 1 within {}",
                Self::NORM_TOL
            )));
        }
        Ok(QubitState(v))
    }

    /// Basis state (1, 0).
    pub fn up() -> QubitState {
        QubitState(Vector2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0)))
    }

    /// Basis state (0, 1).
    pub fn down() -> QubitState {
        QubitState(Vector2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0)))
    }

    /// (1, 1) / sqrt(2).
    pub fn plus() -> QubitState {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        QubitState(Vector2::new(C64::new(r, 0.0), C64::new(r, 0.0)))
    }

    /// (1, -1) / sqrt(2).
    pub fn minus() -> QubitState {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        QubitState(Vector2::new(C64::new(r, 0.0), C64::new(-r, 0.0)))
    }

    pub fn vector(&self) -> &Vector2<C64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Population of the second basis state.
    pub fn p_up(&self) -> f64 {
        self.0[1].norm_sqr()
    }

    /// `|<other|self>|^2`.
    pub fn fidelity(&self, other: &QubitState) -> f64 {
        (other.0.adjoint() * self.0)[(0, 0)].norm_sqr()
    }
}

/// Hermitian 2x2 Hamiltonian as real Pauli coefficients:
/// `H = a0 I + ax sx + ay sy + az sz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliCoefficients {
    pub a0: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl PauliCoefficients {
    pub fn matrix(&self) -> Matrix2<C64> {
        I2.scale(self.a0)
            + sigma_x().scale(self.ax)
            + sigma_y().scale(self.ay)
            + sigma_z().scale(self.az)
    }
}

/// Named coefficient tables mapping the local macro scalars `(c, kappa)`
/// to the four Pauli coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetKind {
    /// `gx = mu (1 + L_c |kappa|)`, all else zero: a sigma_x drive whose
    /// rate grows with curvature (one extra unit when the radius of
    /// curvature equals the coupling length).
    PaperExample,
    /// `g0 = mu L_c |kappa|`, `gx = mu`: constant sigma_x drive plus a
    /// curvature-driven global phase. The phase has nonzero trace in the
    /// propagator gradient, so it feeds the stiffness coupling.
    CurvaturePhase,
    /// `gx = mu c`, `gz = mu L_c |kappa|`: stretch-modulated drive and a
    /// curvature-tilted axis; the two directions do not commute.
    StretchDrive,
}

impl PresetKind {
    pub fn name(&self) -> &'static str {
        match self {
            PresetKind::PaperExample => "paper-example",
            PresetKind::CurvaturePhase => "curvature-phase",
            PresetKind::StretchDrive => "stretch-drive",
        }
    }

    pub fn from_name(name: &str) -> Option<PresetKind> {
        match name {
            "paper-example" => Some(PresetKind::PaperExample),
            "curvature-phase" => Some(PresetKind::CurvaturePhase),
            "stretch-drive" => Some(PresetKind::StretchDrive),
            _ => None,
        }
    }

    pub const ALL: [PresetKind; 3] = [
        PresetKind::PaperExample,
        PresetKind::CurvaturePhase,
        PresetKind::StretchDrive,
    ];
}

/// Energy scale, coupling length, and coefficient table for the qubit
/// Hamiltonian (hbar = 1, so `mu` is an angular frequency).
#[derive(Debug, Clone, PartialEq)]
pub struct ConstitutivePreset {
    pub mu: f64,
    pub coupling_length: f64,
    pub kind: PresetKind,
}

impl ConstitutivePreset {
    pub fn new(kind: PresetKind, mu: f64, coupling_length: f64) -> ConstitutivePreset {
        ConstitutivePreset {
            mu,
            coupling_length,
            kind,
        }
    }

    /// True when only the sigma_x coefficient can be nonzero, which is what
    /// the commuting exact mode requires.
    pub fn is_sigma_x_only(&self) -> bool {
        matches!(self.kind, PresetKind::PaperExample)
    }
}

/// Evaluate the four Pauli coefficients at one node's `(c, kappa)`.
/// Hermiticity is structural: the coefficients are real by construction.
pub fn build_hamiltonian(
    preset: &ConstitutivePreset,
    c: f64,
    kappa: f64,
) -> Result<PauliCoefficients> {
    if !(c > 0.0) || !kappa.is_finite() {
        return Err(Error::ConstitutiveEval(format!(
            "macro scalars out of range: c = {c}, kappa = {kappa}"
        )));
    }
    let mu = preset.mu;
    let lc = preset.coupling_length;
    let coeffs = match preset.kind {
        PresetKind::PaperExample => PauliCoefficients {
            a0: 0.0,
            ax: mu * (1.0 + lc * kappa.abs()),
            ay: 0.0,
            az: 0.0,
        },
        PresetKind::CurvaturePhase => PauliCoefficients {
            a0: mu * lc * kappa.abs(),
            ax: mu,
            ay: 0.0,
            az: 0.0,
        },
        PresetKind::StretchDrive => PauliCoefficients {
            a0: 0.0,
            ax: mu * c,
            ay: 0.0,
            az: mu * lc * kappa.abs(),
        },
    };
    for a in [coeffs.a0, coeffs.ax, coeffs.ay, coeffs.az] {
        if !a.is_finite() {
            return Err(Error::ConstitutiveEval(format!(
                "non-finite Pauli coefficient from preset {} at c = {c}, kappa = {kappa}",
                preset.kind.name()
            )));
        }
    }
    Ok(coeffs)
}

/// Closed-form unitary `exp(-i dt (a0 I + a . sigma))`:
/// `e^{-i a0 dt} (cos(|a| dt) I - i sin(|a| dt) a_hat . sigma)`,
/// with the |a| = 0 limit a pure phase.
pub fn pauli_exponential(coeffs: PauliCoefficients, dt: f64) -> Unitary2 {
    let PauliCoefficients { a0, ax, ay, az } = coeffs;
    let norm = (ax * ax + ay * ay + az * az).sqrt();
    let phase = C64::from_polar(1.0, -a0 * dt);
    let m = if norm * dt == 0.0 {
        I2 * phase
    } else {
        let (s, c) = (norm * dt).sin_cos();
        let (nx, ny, nz) = (ax / norm, ay / norm, az / norm);
        // cos I - i sin (n . sigma), all entries written out.
        Matrix2::new(
            C64::new(c, -s * nz),
            C64::new(-s * ny, -s * nx),
            C64::new(s * ny, -s * nx),
            C64::new(c, s * nz),
        ) * phase
    };
    Unitary2(m)
}

/// Per-node qubit states and accumulated propagators over a grid.
#[derive(Debug, Clone)]
pub struct FibreField {
    grid: MaterialGrid,
    psi0: Vec<Vector2<C64>>,
    psi: Vec<Vector2<C64>>,
    u: Vec<Unitary2>,
}

impl FibreField {
    /// Uniform initial state at every node, identity propagators.
    pub fn uniform(grid: MaterialGrid, initial: QubitState) -> FibreField {
        let n = grid.n_nodes();
        FibreField {
            grid,
            psi0: vec![*initial.vector(); n],
            psi: vec![*initial.vector(); n],
            u: vec![Unitary2::identity(); n],
        }
    }

    pub fn grid(&self) -> &MaterialGrid {
        &self.grid
    }

    pub fn propagators(&self) -> &[Unitary2] {
        &self.u
    }

    /// Replace the propagator at every node (used by gauge tests and the
    /// commuting exact mode).
    pub fn set_propagators(&mut self, u: Vec<Unitary2>) -> Result<()> {
        self.grid.check_len(&u)?;
        self.u = u;
        // Keep the state consistent with psi = U psi0.
        for i in 0..self.psi.len() {
            self.psi[i] = self.u[i].apply(&self.psi0[i]);
        }
        Ok(())
    }

    pub fn state(&self, i: usize) -> &Vector2<C64> {
        &self.psi[i]
    }

    pub fn initial_state(&self, i: usize) -> &Vector2<C64> {
        &self.psi0[i]
    }

    pub fn p_up(&self) -> Vec<f64> {
        self.psi.iter().map(|p| p[1].norm_sqr()).collect()
    }

    pub fn fidelity_to_initial(&self) -> Vec<f64> {
        self.psi
            .iter()
            .zip(&self.psi0)
            .map(|(p, p0)| (p0.adjoint() * p)[(0, 0)].norm_sqr())
            .collect()
    }

    /// Worst propagator unitarity defect over the field.
    pub fn max_unitarity_defect(&self) -> f64 {
        self.u.iter().map(Unitary2::defect).fold(0.0, f64::max)
    }

    /// Worst deviation of the state norm from 1.
    pub fn max_norm_drift(&self) -> f64 {
        self.psi
            .iter()
            .map(|p| (p.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Worst `|psi - U psi0|` over the field (propagator consistency).
    pub fn max_propagator_inconsistency(&self) -> f64 {
        self.psi
            .iter()
            .zip(&self.psi0)
            .zip(&self.u)
            .map(|((p, p0), u)| (p - u.apply(p0)).norm())
            .fold(0.0, f64::max)
    }
}

/// Advance every node by `exp(-i H_i dt)` with `H_i` built from the step
/// midpoint macro scalars. The propagator is left-multiplied and the state
/// advanced by the same unitary; the update is per-node independent and is
/// run in parallel, with results independent of the partitioning.
pub fn fibre_step(
    field: &mut FibreField,
    c_mid: &[f64],
    kappa_mid: &[f64],
    preset: &ConstitutivePreset,
    dt: f64,
) -> Result<()> {
    field.grid.check_len(c_mid)?;
    field.grid.check_len(kappa_mid)?;
    if !(dt > 0.0) {
        return Err(Error::ConstitutiveEval(format!(
            "fibre step requires dt > 0, got {dt}"
        )));
    }

    let updates: Vec<Result<(Vector2<C64>, Unitary2, f64)>> = field
        .psi
        .par_iter()
        .zip(field.u.par_iter())
        .zip(c_mid.par_iter().zip(kappa_mid.par_iter()))
        .map(|((psi, u), (&c, &kappa))| {
            let coeffs = build_hamiltonian(preset, c, kappa)?;
            let step = pauli_exponential(coeffs, dt);
            let new_u = step.compose(u);
            let new_psi = step.apply(psi);
            Ok((new_psi, new_u.clone(), new_u.defect()))
        })
        .collect();

    for (i, upd) in updates.into_iter().enumerate() {
        let (psi, u, defect) = upd?;
        if defect > Unitary2::TOL {
            return Err(Error::UnitarityLost {
                node: i,
                defect,
                tol: Unitary2::TOL,
            });
        }
        field.psi[i] = psi;
        field.u[i] = u;
    }
    Ok(())
}

/// Accumulated sigma_x phases for the commuting exact mode.
///
/// When the preset is sigma_x-only the evolution is
/// `U_i(t) = exp(-i sx Theta_i(t))` with `Theta_i` the time integral of
/// `gx` at node i; the integral is accumulated by the trapezoid rule over
/// the sampled history and materialized into exact unitaries on demand.
#[derive(Debug, Clone)]
pub struct CommutingAccumulator {
    theta: Vec<f64>,
}

impl CommutingAccumulator {
    pub fn new(n_nodes: usize) -> CommutingAccumulator {
        CommutingAccumulator {
            theta: vec![0.0; n_nodes],
        }
    }

    pub fn phases(&self) -> &[f64] {
        &self.theta
    }

    /// Add one trapezoid panel `dt (gx_prev + gx_next) / 2` per node.
    pub fn accumulate(&mut self, gx_prev: &[f64], gx_next: &[f64], dt: f64) -> Result<()> {
        if gx_prev.len() != self.theta.len() || gx_next.len() != self.theta.len() {
            return Err(Error::ShapeMismatch {
                expected: self.theta.len(),
                got: gx_prev.len().min(gx_next.len()),
            });
        }
        for i in 0..self.theta.len() {
            self.theta[i] += 0.5 * dt * (gx_prev[i] + gx_next[i]);
        }
        Ok(())
    }
}

/// Evaluate `gx` of a sigma_x-only preset at each node; mode error if the
/// preset has any other nonzero coefficient.
pub fn sigma_x_rates(
    preset: &ConstitutivePreset,
    c: &[f64],
    kappa: &[f64],
) -> Result<Vec<f64>> {
    if !preset.is_sigma_x_only() {
        return Err(Error::Mode(format!(
            "commuting exact mode needs a sigma_x-only preset; {} has other nonzero coefficients",
            preset.kind.name()
        )));
    }
    c.iter()
        .zip(kappa)
        .map(|(&ci, &ki)| build_hamiltonian(preset, ci, ki).map(|a| a.ax))
        .collect()
}

/// Overwrite a field with the commuting-mode propagators
/// `U_i = exp(-i sx Theta_i)` and the matching states.
pub fn apply_commuting_phases(field: &mut FibreField, acc: &CommutingAccumulator) -> Result<()> {
    field.grid.check_len(acc.phases())?;
    let u: Vec<Unitary2> = acc
        .phases()
        .iter()
        .map(|&th| {
            pauli_exponential(
                PauliCoefficients {
                    a0: 0.0,
                    ax: 1.0,
                    ay: 0.0,
                    az: 0.0,
                },
                th,
            )
        })
        .collect();
    field.set_propagators(u)
}
