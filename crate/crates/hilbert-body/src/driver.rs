//! The staggered time loop.
//!
//! Each step: evaluate the bar schedule at the new time, re-solve the macro
//! equilibrium with the current stiffness field (warm-started from the
//! previous step), average the macro fields of the two steps into midpoint
//! values, advance the fibre by one unitary step, recompute the coupling
//! fields, and update the stiffness. An optional fixed-point inner loop
//! repeats the pass from the same start-of-step state until the stiffness
//! increment falls below tolerance. The macro state is immutable during the
//! fibre and coupling passes; the fibre pass itself is per-node parallel.

use crate::config::{FibreKindConfig, SimConfig};
use crate::coupling::{self, BackCouplingLaw};
use crate::elastica::{solve_equilibrium, ElasticaProblem, ElasticaSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::grid::MaterialGrid;
use crate::kinematics::{cauchy_green, compute_curvature, compute_deformation_gradient, Placement};
use crate::oscillator::{oscillator_step, FockState, OscillatorField, OscillatorKind, OscillatorPreset};
use crate::qubit::{
    apply_commuting_phases, fibre_step, sigma_x_rates, CommutingAccumulator, ConstitutivePreset,
    FibreField, PresetKind, QubitState, Unitary2,
};
use crate::schedule::Schedule;

/// Macro-side state of one time level: placement plus derived fields and
/// the stiffness that produced it.
#[derive(Debug, Clone)]
pub struct MacroState {
    pub placement: Placement,
    pub kappa: Vec<f64>,
    pub c: Vec<f64>,
    pub stiffness: Vec<f64>,
}

/// Per-snapshot record: the full macro state, fibre and coupling summaries,
/// and step diagnostics.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub d: f64,
    pub macro_state: MacroState,
    pub p_up: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub w_norm: Vec<f64>,
    pub elastic_energy: f64,
    pub max_abs_kappa: f64,
    pub max_w: f64,
    pub min_w: f64,
    pub min_fidelity: f64,
    pub newton_iters: usize,
    pub inner_iters: usize,
    /// Stiffness-increment norms of the inner fixed-point passes at this
    /// step (one entry per pass).
    pub inner_delta_history: Vec<f64>,
    /// Accumulated per-node propagators (qubit runs only).
    pub propagators: Option<Vec<Unitary2>>,
    /// Worst `|U^dag U - I|` entry over the fibre field.
    pub max_unitarity_defect: f64,
    /// Worst deviation of any state norm from 1.
    pub max_norm_drift: f64,
}

/// Full run output: snapshots plus wall-clock bounds for the run metadata.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub snapshots: Vec<Snapshot>,
    pub n_steps: usize,
    pub started_at: String,
    pub finished_at: String,
}

/// Fibre integrator selection. The commuting exact mode is the
/// high-accuracy reference for sigma_x-only presets in decoupled runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FibreIntegrator {
    /// Midpoint-sampled exponential step (default).
    Magnus,
    /// Trapezoid-accumulated phases `U_i = exp(-i sx Theta_i)`.
    CommutingExact,
}

/// Library-level run switches not exposed in the configuration file.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub integrator: FibreIntegrator,
    /// Relative antihermitian-defect guard used on the coupling path when
    /// the back-coupling is active.
    pub antihermitian_tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            integrator: FibreIntegrator::Magnus,
            antihermitian_tol: coupling::DEFAULT_ANTIHERMITIAN_TOL,
        }
    }
}

enum Fibre {
    Qubit(FibreField),
    Oscillator(OscillatorField),
}

enum FibrePreset {
    Qubit(ConstitutivePreset),
    Oscillator(OscillatorPreset),
}

fn macro_fields(placement: &Placement, grid: &MaterialGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    let f = compute_deformation_gradient(placement)?;
    let c = cauchy_green(&f);
    let kappa = compute_curvature(&placement.theta, grid)?;
    Ok((c.c, kappa.kappa))
}

fn build_fibre(config: &SimConfig, grid: &MaterialGrid) -> Result<(Fibre, FibrePreset)> {
    match config.fibre.kind {
        FibreKindConfig::Qubit => {
            let kind = PresetKind::from_name(&config.fibre.preset).ok_or_else(|| {
                Error::ConfigInvalid(vec![format!(
                    "unknown qubit preset `{}`",
                    config.fibre.preset
                )])
            })?;
            let preset =
                ConstitutivePreset::new(kind, config.fibre.mu, config.fibre.coupling_length);
            let state = match config.fibre.initial_state.as_str() {
                "up" => QubitState::up(),
                "down" => QubitState::down(),
                "plus" => QubitState::plus(),
                "minus" => QubitState::minus(),
                other => {
                    return Err(Error::ConfigInvalid(vec![format!(
                        "unknown qubit initial state `{other}`"
                    )]))
                }
            };
            Ok((
                Fibre::Qubit(FibreField::uniform(grid.clone(), state)),
                FibrePreset::Qubit(preset),
            ))
        }
        FibreKindConfig::Oscillator => {
            let kind = OscillatorKind::from_name(&config.fibre.preset).ok_or_else(|| {
                Error::ConfigInvalid(vec![format!(
                    "unknown oscillator preset `{}`",
                    config.fibre.preset
                )])
            })?;
            let preset = OscillatorPreset::new(
                kind,
                config.fibre.mu,
                config.fibre.coupling_length,
                config.fibre.n_f,
            );
            let state = if config.fibre.initial_state == "ground" {
                FockState::ground(config.fibre.n_f)?
            } else if let Some(level) = config.fibre.initial_state.strip_prefix("fock:") {
                let level: usize = level.parse().map_err(|_| {
                    Error::ConfigInvalid(vec![format!(
                        "bad oscillator initial state `{}`",
                        config.fibre.initial_state
                    )])
                })?;
                FockState::number_state(config.fibre.n_f, level)?
            } else {
                return Err(Error::ConfigInvalid(vec![format!(
                    "unknown oscillator initial state `{}`",
                    config.fibre.initial_state
                )]));
            };
            Ok((
                Fibre::Oscillator(OscillatorField::uniform(grid.clone(), state)),
                FibrePreset::Oscillator(preset),
            ))
        }
    }
}

impl Fibre {
    fn p_up(&self) -> Vec<f64> {
        match self {
            Fibre::Qubit(f) => f.p_up(),
            Fibre::Oscillator(f) => f.p_up(),
        }
    }

    fn fidelity(&self) -> Vec<f64> {
        match self {
            Fibre::Qubit(f) => f.fidelity_to_initial(),
            Fibre::Oscillator(f) => f.fidelity_to_initial(),
        }
    }

    fn audit(&self, step: usize, t: f64) -> Result<()> {
        let (norm_drift, unit_defect) = match self {
            Fibre::Qubit(f) => {
                if f.max_propagator_inconsistency() > 1e-9 {
                    return Err(Error::UnitarityLost {
                        node: usize::MAX,
                        defect: f.max_propagator_inconsistency(),
                        tol: 1e-9,
                    }
                    .at_step(step, t));
                }
                (f.max_norm_drift(), f.max_unitarity_defect())
            }
            Fibre::Oscillator(f) => (f.max_norm_drift(), f.max_unitarity_defect()),
        };
        if norm_drift > 1e-10 || unit_defect > Unitary2::TOL {
            return Err(Error::UnitarityLost {
                node: usize::MAX,
                defect: norm_drift.max(unit_defect),
                tol: Unitary2::TOL,
            }
            .at_step(step, t));
        }
        Ok(())
    }
}

/// Coupling pass appropriate to the fibre kind; returns `(w_norm, B)`.
fn coupling_fields(
    fibre: &Fibre,
    grid: &MaterialGrid,
    law: &BackCouplingLaw,
    tol: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    match fibre {
        Fibre::Qubit(f) => {
            let pass = coupling::coupling_pass(f.propagators(), grid, law, tol)?;
            Ok((pass.w_norm, pass.stiffness))
        }
        Fibre::Oscillator(f) => coupling::coupling_pass_dyn(f.propagators(), grid, law, tol),
    }
}

/// Run a configuration to completion with the default options.
pub fn run(config: &SimConfig) -> Result<TrajectoryRecord> {
    run_with_options(config, &RunOptions::default())
}

/// Run a configuration with explicit integrator/guard options, honoring
/// `HILBERT_SIM_THREADS` as a worker-count cap for the per-node passes
/// (0 or unset means automatic).
pub fn run_with_options(config: &SimConfig, opts: &RunOptions) -> Result<TrajectoryRecord> {
    match std::env::var("HILBERT_SIM_THREADS") {
        Ok(raw) => {
            let n: usize = raw.trim().parse().map_err(|_| {
                Error::ConfigInvalid(vec![format!(
                    "HILBERT_SIM_THREADS must be a nonnegative integer, got `{raw}`"
                )])
            })?;
            if n == 0 {
                run_inner(config, opts)
            } else {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::ConfigInvalid(vec![format!("thread pool: {e}")]))?;
                pool.install(|| run_inner(config, opts))
            }
        }
        Err(_) => run_inner(config, opts),
    }
}

fn run_inner(config: &SimConfig, opts: &RunOptions) -> Result<TrajectoryRecord> {
    let started_at = now_rfc3339();
    let grid = MaterialGrid::new(config.sheet.n_nodes, config.sheet.sheet_length)?;
    let schedule: Schedule = config.build_schedule()?;
    let solver_opts = SolverOptions {
        tol: config.numerics.newton_tol,
        max_newton: config.numerics.max_newton,
        seed_amplitude: config.numerics.seed_amplitude,
        branch_sign: config.numerics.branch_sign,
        ..SolverOptions::default()
    };
    let law = BackCouplingLaw::new(config.sheet.b0, config.coupling.beta)?;
    let beta_active = config.coupling.beta > 0.0;
    let coupling_tol = if beta_active {
        opts.antihermitian_tol
    } else {
        f64::INFINITY
    };

    let (mut fibre, preset) = build_fibre(config, &grid)?;
    if opts.integrator == FibreIntegrator::CommutingExact {
        match (&preset, beta_active) {
            (FibrePreset::Qubit(p), false) if p.is_sigma_x_only() => {}
            (FibrePreset::Qubit(_), _) => {
                return Err(Error::Mode(
                    "commuting exact mode needs a sigma_x-only preset and beta = 0".into(),
                ))
            }
            (FibrePreset::Oscillator(_), _) => {
                return Err(Error::Mode(
                    "commuting exact mode applies to the qubit fibre only".into(),
                ))
            }
        }
    }

    let dt = schedule.dt;
    let n_steps = schedule.n_steps();
    let stride = config.schedule.snapshot_stride;

    // Initial macro solve at d(0).
    let d0 = schedule.end_distance(0.0);
    let mut stiffness = vec![config.sheet.b0; grid.n_nodes()];
    let problem0 = ElasticaProblem::new(grid.clone(), stiffness.clone(), config.sheet.s, d0)?;
    let mut macro_sol = solve_equilibrium(&problem0, None, &solver_opts)?;
    let (mut c_prev, mut kappa_prev) = macro_fields(&macro_sol.placement, &grid)?;

    let mut commuting = match opts.integrator {
        FibreIntegrator::CommutingExact => Some(CommutingAccumulator::new(grid.n_nodes())),
        FibreIntegrator::Magnus => None,
    };

    let (w0, b0_field) = coupling_fields(&fibre, &grid, &law, coupling_tol)?;
    stiffness = b0_field;
    let mut record = TrajectoryRecord {
        snapshots: Vec::new(),
        n_steps,
        started_at,
        finished_at: String::new(),
    };
    if stride > 0 {
        push_snapshot(
            &mut record,
            &grid,
            config,
            0,
            0.0,
            d0,
            &macro_sol,
            &kappa_prev,
            &c_prev,
            &stiffness,
            &fibre,
            &w0,
            macro_sol.newton_iterations,
            0,
            Vec::new(),
        )?;
    }

    for step in 1..=n_steps {
        let t = step as f64 * dt;
        let t_prev = (step - 1) as f64 * dt;
        let d = schedule.end_distance(t);

        let fp_active = beta_active && config.coupling.fp_enabled;
        let mut b_used = stiffness.clone();
        let mut inner = 0usize;
        let mut history: Vec<f64> = Vec::new();
        let (next_sol, next_fields, fibre_next, w_next, b_next);
        loop {
            inner += 1;
            let problem = ElasticaProblem::new(grid.clone(), b_used.clone(), config.sheet.s, d)
                .map_err(|e| e.at_step(step, t))?;
            let trial_sol = solve_equilibrium(&problem, Some(&macro_sol), &solver_opts)
                .map_err(|e| e.at_step(step, t))?;
            let (c_next, kappa_next) =
                macro_fields(&trial_sol.placement, &grid).map_err(|e| e.at_step(step, t))?;
            let c_mid: Vec<f64> = c_prev
                .iter()
                .zip(&c_next)
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            let kappa_mid: Vec<f64> = kappa_prev
                .iter()
                .zip(&kappa_next)
                .map(|(a, b)| 0.5 * (a + b))
                .collect();

            let mut fibre_trial = match &fibre {
                Fibre::Qubit(f) => Fibre::Qubit(f.clone()),
                Fibre::Oscillator(f) => Fibre::Oscillator(f.clone()),
            };
            match (&mut fibre_trial, &preset) {
                (Fibre::Qubit(f), FibrePreset::Qubit(p)) => {
                    if let Some(acc) = &mut commuting {
                        // Trapezoid phase accumulation; the propagators are
                        // materialized from the phases below.
                        let g_prev = sigma_x_rates(p, &c_prev, &kappa_prev)
                            .map_err(|e| e.at_step(step, t))?;
                        let g_next = sigma_x_rates(p, &c_next, &kappa_next)
                            .map_err(|e| e.at_step(step, t))?;
                        acc.accumulate(&g_prev, &g_next, dt)
                            .map_err(|e| e.at_step(step, t))?;
                        apply_commuting_phases(f, acc).map_err(|e| e.at_step(step, t))?;
                    } else {
                        fibre_step(f, &c_mid, &kappa_mid, p, dt)
                            .map_err(|e| e.at_step(step, t))?;
                    }
                }
                (Fibre::Oscillator(f), FibrePreset::Oscillator(p)) => {
                    oscillator_step(f, &c_mid, &kappa_mid, p, dt, t_prev + 0.5 * dt)
                        .map_err(|e| e.at_step(step, t))?;
                }
                _ => unreachable!("fibre and preset kinds always match"),
            }

            let (w_trial, b_trial) = coupling_fields(&fibre_trial, &grid, &law, coupling_tol)
                .map_err(|e| e.at_step(step, t))?;
            let delta = b_trial
                .iter()
                .zip(&b_used)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / config.sheet.b0;
            history.push(delta);

            if !fp_active || delta <= config.coupling.fp_tol {
                next_sol = trial_sol;
                next_fields = (c_next, kappa_next);
                fibre_next = fibre_trial;
                w_next = w_trial;
                b_next = b_trial;
                break;
            }
            if inner >= config.coupling.max_inner {
                return Err(Error::CouplingDivergence {
                    step,
                    time: t,
                    tol: config.coupling.fp_tol,
                    max_inner: config.coupling.max_inner,
                });
            }
            b_used = b_trial;
        }

        macro_sol = next_sol;
        (c_prev, kappa_prev) = next_fields;
        fibre = fibre_next;
        stiffness = b_next;

        if stride > 0 && step % stride == 0 {
            fibre.audit(step, t)?;
            push_snapshot(
                &mut record,
                &grid,
                config,
                step,
                t,
                d,
                &macro_sol,
                &kappa_prev,
                &c_prev,
                &stiffness,
                &fibre,
                &w_next,
                macro_sol.newton_iterations,
                inner,
                history,
            )?;
        }
    }

    record.finished_at = now_rfc3339();
    Ok(record)
}

/// Current UTC wall time in RFC 3339 with millisecond precision.
pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

#[allow(clippy::too_many_arguments)]
fn push_snapshot(
    record: &mut TrajectoryRecord,
    grid: &MaterialGrid,
    config: &SimConfig,
    step: usize,
    t: f64,
    d: f64,
    macro_sol: &ElasticaSolution,
    kappa: &[f64],
    c: &[f64],
    stiffness: &[f64],
    fibre: &Fibre,
    w_norm: &[f64],
    newton_iters: usize,
    inner_iters: usize,
    inner_delta_history: Vec<f64>,
) -> Result<()> {
    // Type invariants are re-checked at write time.
    let defect = macro_sol.placement.reconstruction_defect(grid);
    if defect > 1e-10 * grid.sheet_length() {
        return Err(Error::SolverFailure {
            reason: format!("snapshot placement failed reconstruction at step {step}"),
            residual: defect,
        });
    }
    fibre.audit(step, t)?;
    if let Some(last) = record.snapshots.last() {
        if t <= last.t {
            return Err(Error::SolverFailure {
                reason: format!("snapshot times must strictly increase (step {step})"),
                residual: t,
            });
        }
    }

    let problem = ElasticaProblem::new(
        grid.clone(),
        stiffness.to_vec(),
        config.sheet.s,
        d.min(grid.sheet_length()),
    )?;
    let elastic_energy = crate::elastica::total_energy(&problem, &macro_sol.placement)?;
    let p_up = fibre.p_up();
    let fidelity = fibre.fidelity();
    let (propagators, max_unitarity_defect, max_norm_drift) = match fibre {
        Fibre::Qubit(f) => (
            Some(f.propagators().to_vec()),
            f.max_unitarity_defect(),
            f.max_norm_drift(),
        ),
        Fibre::Oscillator(f) => (None, f.max_unitarity_defect(), f.max_norm_drift()),
    };
    let max_abs_kappa = kappa.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let max_w = w_norm.iter().fold(0.0f64, |m, w| m.max(*w));
    let min_w = w_norm.iter().fold(f64::INFINITY, |m, w| m.min(*w));
    let min_fidelity = fidelity.iter().fold(f64::INFINITY, |m, f| m.min(*f));

    record.snapshots.push(Snapshot {
        step,
        t,
        d,
        macro_state: MacroState {
            placement: macro_sol.placement.clone(),
            kappa: kappa.to_vec(),
            c: c.to_vec(),
            stiffness: stiffness.to_vec(),
        },
        p_up,
        fidelity,
        w_norm: w_norm.to_vec(),
        elastic_energy,
        max_abs_kappa,
        max_w,
        min_w,
        min_fidelity,
        newton_iters,
        inner_iters,
        inner_delta_history,
        propagators,
        max_unitarity_defect,
        max_norm_drift,
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_config;
    use approx::assert_abs_diff_eq;

    fn small_config() -> SimConfig {
        let mut cfg = default_config();
        cfg.sheet.n_nodes = 21;
        cfg.schedule.total_time = 2.0;
        cfg.schedule.dt = 0.05;
        cfg.schedule.snapshot_stride = 8;
        cfg
    }

    #[test]
    fn flat_decoupled_run_is_a_pure_rabi_oscillation() {
        let mut cfg = small_config();
        cfg.schedule.kind = "hold".into();
        cfg.schedule.d_final = 1.0;
        let record = run(&cfg).unwrap();
        assert!(!record.snapshots.is_empty());
        for snap in &record.snapshots {
            let expected = (cfg.fibre.mu * snap.t).sin().powi(2);
            for (node, p) in snap.p_up.iter().enumerate() {
                assert!(
                    (p - expected).abs() <= 1e-9,
                    "step {} node {node}: {p} vs {expected}",
                    snap.step
                );
            }
            assert_eq!(snap.max_abs_kappa, 0.0);
            assert_eq!(snap.d, 1.0);
        }
    }

    #[test]
    fn decoupled_macro_equals_independent_per_step_solves() {
        let mut cfg = small_config();
        cfg.schedule.kind = "ramp".into();
        cfg.schedule.d_final = 0.85;
        cfg.schedule.snapshot_stride = 5;
        let record = run(&cfg).unwrap();

        // Mirror loop: same solver, same warm-start policy, no fibre at all.
        let grid = MaterialGrid::new(cfg.sheet.n_nodes, cfg.sheet.sheet_length).unwrap();
        let schedule = cfg.build_schedule().unwrap();
        let opts = SolverOptions::default();
        let mut sol = solve_equilibrium(
            &ElasticaProblem::uniform(grid.clone(), cfg.sheet.b0, cfg.sheet.s, 1.0).unwrap(),
            None,
            &opts,
        )
        .unwrap();
        let mut by_step = std::collections::HashMap::new();
        by_step.insert(0usize, sol.placement.clone());
        for step in 1..=schedule.n_steps() {
            let d = schedule.end_distance(step as f64 * schedule.dt);
            let problem =
                ElasticaProblem::uniform(grid.clone(), cfg.sheet.b0, cfg.sheet.s, d).unwrap();
            sol = solve_equilibrium(&problem, Some(&sol), &opts).unwrap();
            by_step.insert(step, sol.placement.clone());
        }
        for snap in &record.snapshots {
            let reference = &by_step[&snap.step];
            assert_eq!(
                &snap.macro_state.placement, reference,
                "macro trajectory diverged at step {}",
                snap.step
            );
        }

        // Independent cold solves land on the same branch to solver accuracy.
        for snap in &record.snapshots {
            if snap.step == 0 {
                continue;
            }
            let problem =
                ElasticaProblem::uniform(grid.clone(), cfg.sheet.b0, cfg.sheet.s, snap.d).unwrap();
            let cold = solve_equilibrium(&problem, None, &opts).unwrap();
            let worst = snap
                .macro_state
                .placement
                .theta
                .iter()
                .zip(&cold.placement.theta)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(worst <= 1e-8, "step {}: {worst}", snap.step);
        }
    }

    #[test]
    fn snapshot_d_values_equal_the_schedule_exactly() {
        let mut cfg = small_config();
        cfg.schedule.kind = "ramp".into();
        cfg.schedule.d_final = 0.9;
        let record = run(&cfg).unwrap();
        let schedule = cfg.build_schedule().unwrap();
        for snap in &record.snapshots {
            assert_eq!(snap.d.to_bits(), schedule.end_distance(snap.t).to_bits());
        }
    }

    #[test]
    fn fixed_point_with_zero_beta_makes_exactly_one_pass() {
        let mut cfg = small_config();
        cfg.coupling.fp_enabled = true;
        cfg.schedule.kind = "ramp".into();
        cfg.schedule.d_final = 0.9;
        cfg.schedule.snapshot_stride = 1;
        let record = run(&cfg).unwrap();
        for snap in &record.snapshots[1..] {
            assert_eq!(snap.inner_iters, 1);
            assert_eq!(snap.inner_delta_history, vec![0.0]);
        }
    }

    #[test]
    fn tiny_beta_fixed_point_converges_in_two_passes() {
        let mut cfg = small_config();
        cfg.fibre.preset = "curvature-phase".into();
        cfg.fibre.coupling_length = 0.2;
        cfg.schedule.kind = "piecewise".into();
        cfg.schedule.points = Some(vec![(0.0, 0.93), (2.0, 0.88)]);
        cfg.schedule.d_final = 0.88;
        cfg.schedule.snapshot_stride = 1;
        cfg.coupling.beta = 1e-6;
        cfg.coupling.fp_enabled = true;
        let record = run(&cfg).unwrap();
        for snap in &record.snapshots[1..] {
            assert!(snap.inner_iters <= 2, "step {}: {}", snap.step, snap.inner_iters);
            // Contractivity: the recorded increments shrink monotonically.
            for pair in snap.inner_delta_history.windows(2) {
                assert!(pair[1] <= pair[0]);
            }
        }
        // The coupling actually fired.
        let max_w = record
            .snapshots
            .iter()
            .map(|s| s.max_w)
            .fold(0.0, f64::max);
        assert!(max_w > 0.0);
        for snap in &record.snapshots {
            for b in &snap.macro_state.stiffness {
                assert!(*b >= cfg.sheet.b0);
            }
        }
    }

    #[test]
    fn coupled_runs_are_bitwise_deterministic() {
        let mut cfg = small_config();
        cfg.fibre.preset = "curvature-phase".into();
        cfg.fibre.coupling_length = 0.2;
        cfg.schedule.kind = "ramp".into();
        cfg.schedule.d_final = 0.9;
        cfg.coupling.beta = 1e-4;
        cfg.coupling.fp_enabled = true;
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.snapshots.len(), b.snapshots.len());
        for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(sa.macro_state.placement, sb.macro_state.placement);
            assert_eq!(sa.p_up, sb.p_up);
            assert_eq!(sa.w_norm, sb.w_norm);
            assert_eq!(sa.macro_state.stiffness, sb.macro_state.stiffness);
        }
    }

    #[test]
    fn commuting_mode_agrees_with_magnus_on_sigma_x_runs() {
        let mut cfg = small_config();
        cfg.schedule.kind = "ramp".into();
        cfg.schedule.d_final = 0.9;
        cfg.schedule.snapshot_stride = 10;
        let magnus = run(&cfg).unwrap();
        let commuting = run_with_options(
            &cfg,
            &RunOptions {
                integrator: FibreIntegrator::CommutingExact,
                ..RunOptions::default()
            },
        )
        .unwrap();
        for (a, b) in magnus.snapshots.iter().zip(&commuting.snapshots) {
            for (pa, pb) in a.p_up.iter().zip(&b.p_up) {
                // Same trapezoid samples, same phases, up to rounding.
                assert_abs_diff_eq!(pa, pb, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn commuting_mode_rejects_unsuitable_presets() {
        let mut cfg = small_config();
        cfg.fibre.preset = "curvature-phase".into();
        let err = run_with_options(
            &cfg,
            &RunOptions {
                integrator: FibreIntegrator::CommutingExact,
                ..RunOptions::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Mode(_)));
    }

    #[test]
    fn oscillator_run_keeps_the_ground_state_stationary() {
        let mut cfg = small_config();
        cfg.fibre.kind = FibreKindConfig::Oscillator;
        cfg.fibre.preset = "uniform".into();
        cfg.fibre.initial_state = "ground".into();
        cfg.fibre.n_f = 8;
        cfg.schedule.kind = "ramp".into();
        cfg.schedule.d_final = 0.9;
        let record = run(&cfg).unwrap();
        for snap in &record.snapshots {
            for p in &snap.p_up {
                assert!(p.abs() < 1e-12);
            }
            for f in &snap.fidelity {
                assert!((f - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_stride_produces_no_snapshots() {
        let mut cfg = small_config();
        cfg.schedule.kind = "hold".into();
        cfg.schedule.d_final = 1.0;
        cfg.schedule.snapshot_stride = 0;
        let record = run(&cfg).unwrap();
        assert!(record.snapshots.is_empty());
        assert_eq!(record.n_steps, 40);
    }
}
