//! Truncated harmonic-oscillator fibre.
//!
//! Each node carries a Fock-space amplitude vector truncated at `n_f`
//! levels. The nodal Hamiltonian is `omega(c, kappa) (N + 1/2) +
//! lambda_d(c, kappa) (a + a^dag)` and a step applies the exact
//! eigendecomposition exponential of the frozen midpoint Hamiltonian.
//! Truncation is monitored, not projected away: when the top two levels
//! accumulate more than the configured occupation the step fails loudly.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::MaterialGrid;

/// Annihilation, creation, and number matrices on `n_f` Fock levels.
///
/// `a` has sqrt(1)..sqrt(n_f - 1) on the superdiagonal, `a^dag` is its
/// conjugate transpose, and `N = a^dag a` is diagonal `0..n_f-1`.
pub fn ladder_matrices(n_f: usize) -> (DMatrix<C64>, DMatrix<C64>, DMatrix<C64>) {
    assert!(n_f >= 2, "ladder matrices need at least 2 levels");
    let mut a = DMatrix::zeros(n_f, n_f);
    for n in 1..n_f {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let adag = a.adjoint();
    let number = &adag * &a;
    (a, adag, number)
}

/// Frequency and drive tables for the oscillator Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscillatorKind {
    /// `omega = mu`, no drive: every node is a bare oscillator.
    Uniform,
    /// `omega = mu`, `lambda_d = mu L_c |kappa|`: curvature drives the
    /// position quadrature.
    CurvatureDrive,
    /// `omega = mu sqrt(c)`, `lambda_d = mu L_c |kappa|`: stretch detunes
    /// the frequency as well.
    StretchTuned,
}

impl OscillatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            OscillatorKind::Uniform => "uniform",
            OscillatorKind::CurvatureDrive => "curvature-drive",
            OscillatorKind::StretchTuned => "stretch-tuned",
        }
    }

    pub fn from_name(name: &str) -> Option<OscillatorKind> {
        match name {
            "uniform" => Some(OscillatorKind::Uniform),
            "curvature-drive" => Some(OscillatorKind::CurvatureDrive),
            "stretch-tuned" => Some(OscillatorKind::StretchTuned),
            _ => None,
        }
    }

    pub const ALL: [OscillatorKind; 3] = [
        OscillatorKind::Uniform,
        OscillatorKind::CurvatureDrive,
        OscillatorKind::StretchTuned,
    ];
}

/// Oscillator fibre parameters: scales, truncation, tail threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorPreset {
    pub mu: f64,
    pub coupling_length: f64,
    pub n_f: usize,
    pub kind: OscillatorKind,
    /// Combined occupation of the top two levels above which a step fails.
    pub tail_threshold: f64,
}

impl OscillatorPreset {
    pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-8;

    pub fn new(kind: OscillatorKind, mu: f64, coupling_length: f64, n_f: usize) -> OscillatorPreset {
        OscillatorPreset {
            mu,
            coupling_length,
            n_f,
            kind,
            tail_threshold: Self::DEFAULT_TAIL_THRESHOLD,
        }
    }

    /// Frequency and drive at one node's macro scalars.
    pub fn rates(&self, c: f64, kappa: f64) -> Result<(f64, f64)> {
        if !(c > 0.0) || !kappa.is_finite() {
            return Err(Error::ConstitutiveEval(format!(
                "macro scalars out of range: c = {c}, kappa = {kappa}"
            )));
        }
        let (omega, drive) = match self.kind {
            OscillatorKind::Uniform => (self.mu, 0.0),
            OscillatorKind::CurvatureDrive => {
                (self.mu, self.mu * self.coupling_length * kappa.abs())
            }
            OscillatorKind::StretchTuned => (
                self.mu * c.sqrt(),
                self.mu * self.coupling_length * kappa.abs(),
            ),
        };
        if !(omega > 0.0) || !drive.is_finite() {
            return Err(Error::ConstitutiveEval(format!(
                "oscillator rates out of range: omega = {omega}, lambda_d = {drive}"
            )));
        }
        Ok((omega, drive))
    }
}

/// A normalized truncated Fock state.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState(DVector<C64>);

impl FockState {
    pub const NORM_TOL: f64 = 1e-10;

    pub fn new(amplitudes: DVector<C64>) -> Result<FockState> {
        if amplitudes.len() < 4 {
            return Err(Error::ConstitutiveEval(format!(
                "Fock truncation must keep at least 4 levels, got {}",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::ConstitutiveEval(format!(
                "Fock state norm {norm} is not 1 within {}",
                Self::NORM_TOL
            )));
        }
        Ok(FockState(amplitudes))
    }

    /// The number state `|level>` on `n_f` levels.
    pub fn number_state(n_f: usize, level: usize) -> Result<FockState> {
        if level >= n_f {
            return Err(Error::ConstitutiveEval(format!(
                "Fock level {level} does not exist below truncation {n_f}"
            )));
        }
        let mut v = DVector::zeros(n_f);
        v[level] = C64::new(1.0, 0.0);
        FockState::new(v)
    }

    pub fn ground(n_f: usize) -> Result<FockState> {
        FockState::number_state(n_f, 0)
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.0
    }

    /// Occupation of the top two levels.
    pub fn tail_occupation(&self) -> f64 {
        let n = self.0.len();
        self.0[n - 1].norm_sqr() + self.0[n - 2].norm_sqr()
    }
}

/// Hermitian `omega (N + 1/2) + lambda_d (a + a^dag)` at one node.
/// Diagonal when the drive vanishes.
pub fn oscillator_hamiltonian(preset: &OscillatorPreset, c: f64, kappa: f64) -> Result<DMatrix<C64>> {
    let (omega, drive) = preset.rates(c, kappa)?;
    let (a, adag, number) = ladder_matrices(preset.n_f);
    let half = DMatrix::identity(preset.n_f, preset.n_f).scale(0.5);
    Ok((number + half).scale(omega) + (a + adag).scale(drive))
}

/// Per-node Fock states and accumulated propagators over a grid.
#[derive(Debug, Clone)]
pub struct OscillatorField {
    grid: MaterialGrid,
    n_f: usize,
    psi0: Vec<DVector<C64>>,
    psi: Vec<DVector<C64>>,
    u: Vec<DMatrix<C64>>,
}

impl OscillatorField {
    pub fn uniform(grid: MaterialGrid, initial: FockState) -> OscillatorField {
        let n = grid.n_nodes();
        let n_f = initial.amplitudes().len();
        OscillatorField {
            grid,
            n_f,
            psi0: vec![initial.amplitudes().clone(); n],
            psi: vec![initial.amplitudes().clone(); n],
            u: vec![DMatrix::identity(n_f, n_f); n],
        }
    }

    pub fn grid(&self) -> &MaterialGrid {
        &self.grid
    }

    pub fn n_f(&self) -> usize {
        self.n_f
    }

    pub fn state(&self, i: usize) -> &DVector<C64> {
        &self.psi[i]
    }

    pub fn propagators(&self) -> &[DMatrix<C64>] {
        &self.u
    }

    /// Population of the first excited level per node.
    pub fn p_up(&self) -> Vec<f64> {
        self.psi.iter().map(|p| p[1].norm_sqr()).collect()
    }

    pub fn fidelity_to_initial(&self) -> Vec<f64> {
        self.psi
            .iter()
            .zip(&self.psi0)
            .map(|(p, p0)| p0.dotc(p).norm_sqr())
            .collect()
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.psi
            .iter()
            .map(|p| (p.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        self.u
            .iter()
            .map(|u| {
                (u.adjoint() * u - DMatrix::<C64>::identity(self.n_f, self.n_f))
                    .iter()
                    .map(|e| e.norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn max_tail_occupation(&self) -> f64 {
        self.psi
            .iter()
            .map(|p| p[p.len() - 1].norm_sqr() + p[p.len() - 2].norm_sqr())
            .fold(0.0, f64::max)
    }
}

/// Exact step unitary `exp(-i H dt)` via the Hermitian eigendecomposition.
pub fn eigen_exponential(h: &DMatrix<C64>, dt: f64) -> DMatrix<C64> {
    let eig = h.clone().symmetric_eigen();
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -e * dt)),
    );
    let scaled = {
        let mut v = eig.eigenvectors.clone();
        for (j, col) in v.column_iter_mut().enumerate() {
            let mut col = col;
            col *= phases[j];
        }
        v
    };
    scaled * eig.eigenvectors.adjoint()
}

/// Advance every node by `exp(-i H_mid dt)`; the state and the accumulated
/// propagator receive the same unitary. Fails with node and time attached
/// when the truncation tail exceeds the preset threshold.
pub fn oscillator_step(
    field: &mut OscillatorField,
    c_mid: &[f64],
    kappa_mid: &[f64],
    preset: &OscillatorPreset,
    dt: f64,
    time: f64,
) -> Result<()> {
    field.grid.check_len(c_mid)?;
    field.grid.check_len(kappa_mid)?;
    if preset.n_f != field.n_f {
        return Err(Error::ShapeMismatch {
            expected: field.n_f,
            got: preset.n_f,
        });
    }
    if !(dt > 0.0) {
        return Err(Error::ConstitutiveEval(format!(
            "oscillator step requires dt > 0, got {dt}"
        )));
    }

    let updates: Vec<Result<(DVector<C64>, DMatrix<C64>, f64)>> = field
        .psi
        .par_iter()
        .zip(field.u.par_iter())
        .zip(c_mid.par_iter().zip(kappa_mid.par_iter()))
        .map(|((psi, u), (&c, &kappa))| {
            let h = oscillator_hamiltonian(preset, c, kappa)?;
            let step = eigen_exponential(&h, dt);
            let new_psi = &step * psi;
            let new_u = step * u;
            let tail = new_psi[preset.n_f - 1].norm_sqr() + new_psi[preset.n_f - 2].norm_sqr();
            Ok((new_psi, new_u, tail))
        })
        .collect();

    for (i, upd) in updates.into_iter().enumerate() {
        let (psi, u, tail) = upd?;
        if tail > preset.tail_threshold {
            return Err(Error::Truncation {
                node: i,
                time,
                tail,
                threshold: preset.tail_threshold,
            });
        }
        field.psi[i] = psi;
        field.u[i] = u;
    }
    Ok(())
}
