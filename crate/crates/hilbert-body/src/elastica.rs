//! Quasi-static solver for the clamped-clamped extensible elastica under a
//! prescribed end-to-end distance, with spatially varying bending stiffness.
//!
//! The discrete strain energy uses segment (midpoint) curvatures,
//!
//! `E = sum_seg h B_{i+1/2} ((theta_{i+1} - theta_i)/h)^2 / 2
//!    + sum_i w_i S eps_i^2 / 2`,
//!
//! with trapezoid weights `w` on the stretch part and the two end
//! constraints enforced through Lagrange multipliers `(F_x, F_z)`. Segment
//! curvature keeps the bending operator tridiagonal and free of the
//! odd-even soft modes a wide central-difference stencil admits, so the
//! discrete buckling threshold lands on the clamped-column value; the nodal
//! curvature field of the kinematics module remains the reported
//! diagnostic. Equilibria are stationary points of the KKT system, found by
//! damped Newton with continuation in the end distance and an escalation
//! pass that walks off the unstable flat branch when a bent equilibrium
//! with lower energy exists. Everything runs in scaled units (lengths by
//! the sheet length, energies by `B_ref / length`) and is scaled back on
//! exit.
//!
//! An independent verification path integrates the same stationarity
//! conditions as the discrete pendulum recurrence
//! `B theta'' = F_x sin theta - F_z cos theta` and shoots on
//! `(theta'(0), F_x, F_z)`; it shares no assembly code with the solver.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::grid::MaterialGrid;
use crate::kinematics::Placement;

/// Boundary-condition kind. Only clamped-clamped is implemented; the enum
/// is the extension point for pinned ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    ClampedClamped,
}

/// The macro problem: grid, stiffnesses, and target end distance.
#[derive(Debug, Clone)]
pub struct ElasticaProblem {
    pub grid: MaterialGrid,
    pub bending_stiffness: Vec<f64>,
    pub axial_stiffness: f64,
    pub end_distance: f64,
    pub boundary: BoundaryKind,
    /// Allowed overshoot of `end_distance` past the sheet length, as a
    /// fraction of the sheet length.
    pub d_slack: f64,
}

impl ElasticaProblem {
    pub const DEFAULT_D_SLACK: f64 = 1e-6;

    pub fn new(
        grid: MaterialGrid,
        bending_stiffness: Vec<f64>,
        axial_stiffness: f64,
        end_distance: f64,
    ) -> Result<ElasticaProblem> {
        grid.check_len(&bending_stiffness)?;
        let mut issues = Vec::new();
        if bending_stiffness.iter().any(|&b| !(b > 0.0)) {
            issues.push("every bending stiffness B_i must be positive".to_string());
        }
        if !(axial_stiffness > 0.0) {
            issues.push(format!(
                "axial stiffness S must be positive, got {axial_stiffness}"
            ));
        }
        let max_d = grid.sheet_length() * (1.0 + Self::DEFAULT_D_SLACK);
        if !(end_distance > 0.0 && end_distance <= max_d) {
            issues.push(format!(
                "end distance must lie in (0, {max_d}], got {end_distance}"
            ));
        }
        if !issues.is_empty() {
            return Err(Error::ConfigInvalid(issues));
        }
        Ok(ElasticaProblem {
            grid,
            bending_stiffness,
            axial_stiffness,
            end_distance,
            boundary: BoundaryKind::ClampedClamped,
            d_slack: Self::DEFAULT_D_SLACK,
        })
    }

    /// Uniform stiffness convenience constructor.
    pub fn uniform(
        grid: MaterialGrid,
        bending: f64,
        axial: f64,
        end_distance: f64,
    ) -> Result<ElasticaProblem> {
        let n = grid.n_nodes();
        ElasticaProblem::new(grid, vec![bending; n], axial, end_distance)
    }

    /// Same problem at a different target end distance.
    pub fn with_end_distance(&self, end_distance: f64) -> Result<ElasticaProblem> {
        ElasticaProblem::new(
            self.grid.clone(),
            self.bending_stiffness.clone(),
            self.axial_stiffness,
            end_distance,
        )
    }
}

/// Solver knobs. The default residual tolerance is 1e-10 in scaled units.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_newton: usize,
    /// z-amplitude of the symmetric buckling seed, as a fraction of the
    /// sheet length.
    pub seed_amplitude: f64,
    /// +1 selects the branch with positive mid-node deflection.
    pub branch_sign: i8,
    pub max_line_search: usize,
    pub max_continuation: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_newton: 100,
            seed_amplitude: 0.01,
            branch_sign: 1,
            max_line_search: 30,
            max_continuation: 30,
        }
    }
}

/// Converged equilibrium: placement, constraint forces, diagnostics.
#[derive(Debug, Clone)]
pub struct ElasticaSolution {
    pub placement: Placement,
    /// Constraint force conjugate to the end distance (physical units).
    pub f_x: f64,
    /// Constraint force conjugate to the end rise (physical units).
    pub f_z: f64,
    /// Final max-abs KKT residual in scaled units.
    pub residual_norm: f64,
    pub newton_iterations: usize,
    /// Sign of the mid-node deflection (+1 for the flat solution).
    pub branch_sign: i8,
}

/// Nodal angles below this threshold collapse to the exact flat branch.
const FLAT_SNAP_TOL: f64 = 1e-7;

// ---------------------------------------------------------------------------
// Scaled problem data shared by energy, solver, oracle, and eigenproblem.
// ---------------------------------------------------------------------------

#[derive(Clone)]
struct Scaled {
    n: usize,
    h: f64,
    /// Trapezoid weights for nodal (stretch, constraint) sums.
    w: Vec<f64>,
    /// Segment bending stiffness `B_{i+1/2}`, length n-1.
    b_seg: Vec<f64>,
    s: f64,
    d: f64,
    length: f64,
    b_ref: f64,
}

impl Scaled {
    fn build(problem: &ElasticaProblem) -> Scaled {
        let n = problem.grid.n_nodes();
        let length = problem.grid.sheet_length();
        let b_ref = problem.bending_stiffness.iter().sum::<f64>() / n as f64;
        let h = problem.grid.spacing() / length;
        let mut w = vec![h; n];
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
        let b_seg = (0..n - 1)
            .map(|i| {
                0.5 * (problem.bending_stiffness[i] + problem.bending_stiffness[i + 1]) / b_ref
            })
            .collect();
        Scaled {
            n,
            h,
            w,
            b_seg,
            s: problem.axial_stiffness * length * length / b_ref,
            d: problem.end_distance / length,
            length,
            b_ref,
        }
    }

    /// `dE_bend/dtheta_i` for the full (scaled) angle field.
    fn bending_gradient(&self, theta: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut g = vec![0.0; n];
        for i in 0..n - 1 {
            let flux = self.b_seg[i] * (theta[i + 1] - theta[i]) / self.h;
            g[i] -= flux;
            g[i + 1] += flux;
        }
        g
    }

    /// Scaled strain energy of an unknown vector's fields.
    fn energy(&self, theta: &[f64], eps: &[f64]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n - 1 {
            let dth = theta[i + 1] - theta[i];
            e += 0.5 * self.b_seg[i] * dth * dth / self.h;
        }
        for i in 0..self.n {
            e += 0.5 * self.w[i] * self.s * eps[i] * eps[i];
        }
        e
    }
}

// ---------------------------------------------------------------------------
// Energy and its gradient (physical units).
// ---------------------------------------------------------------------------

/// Discrete strain energy: segment-curvature bending plus trapezoid-weighted
/// stretch,
/// `sum_seg B_{i+1/2} (theta_{i+1}-theta_i)^2 / (2h) + sum_i w_i S eps_i^2 / 2`.
pub fn total_energy(problem: &ElasticaProblem, placement: &Placement) -> Result<f64> {
    problem.grid.check_len(&placement.theta)?;
    problem.grid.check_len(&placement.eps)?;
    let h = problem.grid.spacing();
    let n = problem.grid.n_nodes();
    let b = &problem.bending_stiffness;
    let mut e = 0.0;
    for i in 0..n - 1 {
        let dth = placement.theta[i + 1] - placement.theta[i];
        e += 0.25 * (b[i] + b[i + 1]) * dth * dth / h;
    }
    for i in 0..n {
        let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
        e += 0.5 * w * problem.axial_stiffness * placement.eps[i] * placement.eps[i];
    }
    Ok(e)
}

/// Analytic gradient of [`total_energy`] with respect to every nodal angle
/// and stretch (physical units). This is the energy part of the KKT
/// residual; it is validated against central finite differences.
pub fn energy_gradient(
    problem: &ElasticaProblem,
    placement: &Placement,
) -> Result<(Vec<f64>, Vec<f64>)> {
    problem.grid.check_len(&placement.theta)?;
    problem.grid.check_len(&placement.eps)?;
    let h = problem.grid.spacing();
    let n = problem.grid.n_nodes();
    let b = &problem.bending_stiffness;
    let mut d_theta = vec![0.0; n];
    for i in 0..n - 1 {
        let flux = 0.5 * (b[i] + b[i + 1]) * (placement.theta[i + 1] - placement.theta[i]) / h;
        d_theta[i] -= flux;
        d_theta[i + 1] += flux;
    }
    let d_eps: Vec<f64> = (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
            w * problem.axial_stiffness * placement.eps[i]
        })
        .collect();
    Ok((d_theta, d_eps))
}

// ---------------------------------------------------------------------------
// KKT Newton solver.
// ---------------------------------------------------------------------------

/// Unknown layout: `[theta_1 .. theta_{n-2}, eps_0 .. eps_{n-1}, Fx, Fz]`.
struct Kkt<'a> {
    sc: &'a Scaled,
}

impl<'a> Kkt<'a> {
    fn dim(&self) -> usize {
        2 * self.sc.n
    }

    fn full_theta(&self, z: &DVector<f64>) -> Vec<f64> {
        let n = self.sc.n;
        let mut theta = vec![0.0; n];
        theta[1..n - 1].copy_from_slice(&z.as_slice()[0..n - 2]);
        theta
    }

    fn eps_slice<'b>(&self, z: &'b DVector<f64>) -> &'b [f64] {
        let n = self.sc.n;
        &z.as_slice()[n - 2..2 * n - 2]
    }

    fn residual(&self, z: &DVector<f64>, d_target: f64) -> DVector<f64> {
        let sc = self.sc;
        let n = sc.n;
        let theta = self.full_theta(z);
        let eps = self.eps_slice(z);
        let (fx, fz) = (z[2 * n - 2], z[2 * n - 1]);

        let bend = sc.bending_gradient(&theta);
        let mut r = DVector::zeros(self.dim());
        let mut gx = -d_target;
        let mut gz = 0.0;
        for i in 0..n {
            let (sin, cos) = theta[i].sin_cos();
            let lam = 1.0 + eps[i];
            if i >= 1 && i <= n - 2 {
                r[i - 1] = bend[i] + fx * sc.w[i] * lam * sin - fz * sc.w[i] * lam * cos;
            }
            r[n - 2 + i] = sc.w[i] * (sc.s * eps[i] - fx * cos - fz * sin);
            gx += sc.w[i] * lam * cos;
            gz += sc.w[i] * lam * sin;
        }
        r[2 * n - 2] = gx;
        r[2 * n - 1] = gz;
        r
    }

    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let sc = self.sc;
        let n = sc.n;
        let theta = self.full_theta(z);
        let eps = self.eps_slice(z);
        let (fx, fz) = (z[2 * n - 2], z[2 * n - 1]);

        let mut j = DMatrix::zeros(self.dim(), self.dim());
        // Tridiagonal bending block on the interior angles.
        for i in 1..n - 1 {
            let row = i - 1;
            j[(row, row)] = (sc.b_seg[i - 1] + sc.b_seg[i]) / sc.h;
            if i >= 2 {
                j[(row, row - 1)] = -sc.b_seg[i - 1] / sc.h;
            }
            if i <= n - 3 {
                j[(row, row + 1)] = -sc.b_seg[i] / sc.h;
            }
        }
        for i in 0..n {
            let (sin, cos) = theta[i].sin_cos();
            let lam = 1.0 + eps[i];
            let w = sc.w[i];
            let cross = w * (fx * sin - fz * cos);
            let erow = n - 2 + i;
            if i >= 1 && i <= n - 2 {
                let row = i - 1;
                j[(row, row)] += fx * w * lam * cos + fz * w * lam * sin;
                j[(row, erow)] = cross;
                j[(row, 2 * n - 2)] = w * lam * sin;
                j[(row, 2 * n - 1)] = -w * lam * cos;
                j[(erow, row)] = cross;
                j[(2 * n - 2, row)] = -w * lam * sin;
                j[(2 * n - 1, row)] = w * lam * cos;
            }
            j[(erow, erow)] = w * sc.s;
            j[(erow, 2 * n - 2)] = -w * cos;
            j[(erow, 2 * n - 1)] = -w * sin;
            j[(2 * n - 2, erow)] = w * cos;
            j[(2 * n - 1, erow)] = w * sin;
        }
        j
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// One damped-Newton solve at fixed end distance. Returns the converged
/// unknown vector and iteration count, or the last residual on failure.
fn newton_at(
    kkt: &Kkt,
    z0: DVector<f64>,
    d_target: f64,
    opts: &SolverOptions,
) -> std::result::Result<(DVector<f64>, usize), f64> {
    let n = kkt.sc.n;
    let mut z = z0;
    let mut r = kkt.residual(&z, d_target);
    let mut r_norm2 = r.norm();
    for iter in 0..opts.max_newton {
        if inf_norm(&r) <= opts.tol {
            return Ok((z, iter));
        }
        let j = kkt.jacobian(&z);
        let Some(dz) = j.lu().solve(&(-&r)) else {
            return Err(inf_norm(&r));
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..opts.max_line_search {
            let trial = &z + &dz * alpha;
            let eps_ok = trial.as_slice()[n - 2..2 * n - 2].iter().all(|&e| e > -0.95);
            if eps_ok {
                let r_trial = kkt.residual(&trial, d_target);
                let norm_trial = r_trial.norm();
                if norm_trial < r_norm2 {
                    z = trial;
                    r = r_trial;
                    r_norm2 = norm_trial;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(inf_norm(&r));
        }
    }
    if inf_norm(&r) <= opts.tol {
        Ok((z, opts.max_newton))
    } else {
        Err(inf_norm(&r))
    }
}

/// Flat compressed state plus the symmetric buckling perturbation
/// `z(s) = amp (1 - cos(2 pi s))`, i.e. `theta(s) = 2 pi amp sin(2 pi s)`.
fn seed_vector(sc: &Scaled, amplitude: f64, branch_sign: i8) -> DVector<f64> {
    let n = sc.n;
    let mut z = DVector::zeros(2 * n);
    let amp = amplitude * branch_sign as f64;
    let tau = std::f64::consts::TAU;
    for i in 1..n - 1 {
        let s = i as f64 * sc.h;
        z[i - 1] = amp * tau * (tau * s).sin();
    }
    let eps0 = sc.d - 1.0;
    for i in 0..n {
        z[n - 2 + i] = eps0;
    }
    z[2 * n - 2] = sc.s * eps0;
    z
}

fn vector_from_solution(sc: &Scaled, sol: &ElasticaSolution) -> DVector<f64> {
    let n = sc.n;
    let mut z = DVector::zeros(2 * n);
    for i in 1..n - 1 {
        z[i - 1] = sol.placement.theta[i];
    }
    for i in 0..n {
        z[n - 2 + i] = sol.placement.eps[i];
    }
    z[2 * n - 2] = sol.f_x * sc.length * sc.length / sc.b_ref;
    z[2 * n - 1] = sol.f_z * sc.length * sc.length / sc.b_ref;
    z
}

/// Span of the configuration encoded in `z`, in scaled units.
fn span_of(kkt: &Kkt, z: &DVector<f64>) -> f64 {
    let sc = kkt.sc;
    let theta = kkt.full_theta(z);
    let eps = kkt.eps_slice(z);
    (0..sc.n)
        .map(|i| sc.w[i] * (1.0 + eps[i]) * theta[i].cos())
        .sum()
}

fn max_interior_theta(sc: &Scaled, z: &DVector<f64>) -> f64 {
    z.as_slice()[0..sc.n - 2]
        .iter()
        .fold(0.0f64, |m, t| m.max(t.abs()))
}

/// Continuation loop: walk the end distance from the start configuration's
/// span to the target, halving the step on Newton failure.
fn solve_with_continuation(
    kkt: &Kkt,
    mut z: DVector<f64>,
    opts: &SolverOptions,
) -> Result<(DVector<f64>, usize)> {
    let sc = kkt.sc;
    let mut d_cur = span_of(kkt, &z);
    let mut iterations = 0;
    let mut halvings = 0;
    let mut last_residual = f64::INFINITY;
    loop {
        let mut step = sc.d - d_cur;
        let mut advanced = false;
        while halvings <= opts.max_continuation {
            match newton_at(kkt, z.clone(), d_cur + step, opts) {
                Ok((z_new, iters)) => {
                    z = z_new;
                    d_cur += step;
                    iterations += iters;
                    advanced = true;
                    break;
                }
                Err(res) => {
                    last_residual = res;
                    halvings += 1;
                    step *= 0.5;
                }
            }
        }
        if !advanced {
            return Err(Error::SolverFailure {
                reason: format!(
                    "Newton did not converge after {halvings} continuation halvings toward d = {}",
                    sc.d * sc.length
                ),
                residual: last_residual,
            });
        }
        if (sc.d - d_cur).abs() <= f64::EPSILON * sc.d.max(1.0) {
            return Ok((z, iterations));
        }
    }
}

/// Find the equilibrium at the problem's end distance.
///
/// With no warm start the solver seeds from the flat compressed state plus
/// a symmetric buckling perturbation with deflection amplitude
/// `seed_amplitude` on the configured branch; warm starts reuse a previous
/// solution. On Newton failure the end distance is walked from the start
/// configuration toward the target with step halving (continuation).
///
/// Newton finds stationary points, and below the buckling threshold the
/// flat branch persists as an unstable one. When a solve lands flat, one
/// escalation pass re-solves from an arc-length-sized perturbation and
/// keeps the bent equilibrium if it exists with lower energy, so the
/// returned branch is the stable one. Converged angle fields below 1e-7
/// snap to the exact flat state, and a bent solution is mirrored onto the
/// configured branch sign; both polishes are exact symmetries of the
/// discrete system.
pub fn solve_equilibrium(
    problem: &ElasticaProblem,
    warm: Option<&ElasticaSolution>,
    opts: &SolverOptions,
) -> Result<ElasticaSolution> {
    let sc = Scaled::build(problem);
    let kkt = Kkt { sc: &sc };
    let n = sc.n;

    let z_start = match warm {
        Some(sol) => vector_from_solution(&sc, sol),
        None => seed_vector(&sc, opts.seed_amplitude, opts.branch_sign),
    };
    let warm_flat_same_d = warm.is_some_and(|sol| {
        sol.placement.theta.iter().all(|t| t.abs() <= FLAT_SNAP_TOL)
            && (problem.end_distance - {
                let (dx, _) = sol.placement.end_span(&problem.grid);
                dx
            })
            .abs()
                <= 1e-12 * sc.length
    });

    let (mut z, mut iterations) = solve_with_continuation(&kkt, z_start, opts)?;

    // Escalation off the unstable flat branch: a flat result may coexist
    // with a lower-energy bent equilibrium that the small seed or the flat
    // warm start cannot reach.
    if max_interior_theta(&sc, &z) <= FLAT_SNAP_TOL && !warm_flat_same_d {
        let arc_amp = ((1.0 - sc.d).max(0.0)).sqrt() / std::f64::consts::PI;
        let amp = arc_amp.max(2.0 * opts.seed_amplitude);
        let z2_start = seed_vector(&sc, amp, opts.branch_sign);
        if let Ok((z2, it2)) = solve_with_continuation(&kkt, z2_start, opts) {
            iterations += it2;
            if max_interior_theta(&sc, &z2) > FLAT_SNAP_TOL {
                let e_flat = sc.energy(&kkt.full_theta(&z), kkt.eps_slice(&z));
                let e_bent = sc.energy(&kkt.full_theta(&z2), kkt.eps_slice(&z2));
                if e_bent < e_flat {
                    z = z2;
                }
            }
        }
    }

    // Exact flat polishing.
    if max_interior_theta(&sc, &z) <= FLAT_SNAP_TOL {
        let eps0 = sc.d - 1.0;
        for i in 0..n - 2 {
            z[i] = 0.0;
        }
        for i in 0..n {
            z[n - 2 + i] = eps0;
        }
        z[2 * n - 2] = sc.s * eps0;
        z[2 * n - 1] = 0.0;
    }

    let mut theta = kkt.full_theta(&z);
    let eps = kkt.eps_slice(&z).to_vec();
    let fx = z[2 * n - 2];
    let mut fz = z[2 * n - 1];

    // Mirror symmetry z -> -z maps solutions to solutions; pick the branch.
    let mid_rise: f64 = {
        let mid = n / 2;
        let mut rise = 0.0;
        for i in 1..=mid {
            let (la, lb) = (1.0 + eps[i - 1], 1.0 + eps[i]);
            rise += 0.5 * sc.h * (la * theta[i - 1].sin() + lb * theta[i].sin());
        }
        rise
    };
    if mid_rise * (opts.branch_sign as f64) < 0.0 {
        for t in theta.iter_mut() {
            *t = -*t;
        }
        fz = -fz;
    }

    let mut z_final = DVector::zeros(2 * n);
    for i in 1..n - 1 {
        z_final[i - 1] = theta[i];
    }
    for i in 0..n {
        z_final[n - 2 + i] = eps[i];
    }
    z_final[2 * n - 2] = fx;
    z_final[2 * n - 1] = fz;
    let residual_norm = inf_norm(&kkt.residual(&z_final, sc.d));

    let placement = Placement::from_theta_eps(&problem.grid, theta, eps)?;
    let force_scale = sc.b_ref / (sc.length * sc.length);
    let mid_z = placement.z[problem.grid.mid_node()];
    Ok(ElasticaSolution {
        placement,
        f_x: fx * force_scale,
        f_z: fz * force_scale,
        residual_norm,
        newton_iterations: iterations,
        branch_sign: if mid_z < 0.0 { -1 } else { 1 },
    })
}

// ---------------------------------------------------------------------------
// Linearized buckling threshold.
// ---------------------------------------------------------------------------

/// Critical end distance of the flat branch predicted by the discrete
/// linearized eigenproblem, or `None` when compression can never reach the
/// critical load (small axial stiffness).
///
/// The flat branch at relative distance `delta = d / l` carries compression
/// `P = S (1 - delta)`; it turns unstable when `P (1 + eps)` reaches the
/// smallest generalized eigenvalue `P0` of the interior bending operator
/// against `diag(w)`, restricted to perturbations with zero end rise. That
/// gives `S delta (1 - delta) = P0`.
pub fn linearized_critical_distance(problem: &ElasticaProblem) -> Result<Option<f64>> {
    let sc = Scaled::build(problem);
    let p0 = flat_branch_critical_load(&sc)?;
    let ratio = 4.0 * p0 / sc.s;
    if ratio > 1.0 {
        return Ok(None);
    }
    let delta = 0.5 * (1.0 + (1.0 - ratio).sqrt());
    Ok(Some(delta * sc.length))
}

/// Smallest compressive load (scaled by `B_ref / l^2`) that destabilizes
/// the flat branch at unit stretch.
pub fn flat_branch_critical_load_scaled(problem: &ElasticaProblem) -> Result<f64> {
    flat_branch_critical_load(&Scaled::build(problem))
}

fn flat_branch_critical_load(sc: &Scaled) -> Result<f64> {
    let n = sc.n;
    let m = n - 2;
    // Tridiagonal interior bending operator.
    let mut a = DMatrix::zeros(m, m);
    for i in 1..n - 1 {
        let row = i - 1;
        a[(row, row)] = (sc.b_seg[i - 1] + sc.b_seg[i]) / sc.h;
        if i >= 2 {
            a[(row, row - 1)] = -sc.b_seg[i - 1] / sc.h;
        }
        if i <= n - 3 {
            a[(row, row + 1)] = -sc.b_seg[i] / sc.h;
        }
    }
    let mass = DVector::from_iterator(m, (1..n - 1).map(|i| sc.w[i]));

    // Householder reflector sending the constraint onto e_1; columns 2..m
    // of the reflector span the admissible perturbations.
    let mut v = mass.normalize();
    v[0] -= 1.0;
    let q = if v.norm() < 1e-14 {
        let mut q = DMatrix::zeros(m, m - 1);
        for k in 0..m - 1 {
            q[(k + 1, k)] = 1.0;
        }
        q
    } else {
        let v = v.normalize();
        let h = DMatrix::identity(m, m) - &v * v.transpose() * 2.0;
        h.columns(1, m - 1).into_owned()
    };

    let a_red = q.transpose() * &a * &q;
    let m_red = q.transpose() * DMatrix::from_diagonal(&mass) * &q;
    let a_red = (&a_red + a_red.transpose()) * 0.5;
    let m_red = (&m_red + m_red.transpose()) * 0.5;

    let chol = m_red.cholesky().ok_or_else(|| Error::SolverFailure {
        reason: "mass matrix of the linearized eigenproblem is not positive definite".into(),
        residual: f64::NAN,
    })?;
    let l_inv = chol.l().try_inverse().ok_or_else(|| Error::SolverFailure {
        reason: "mass Cholesky factor is singular".into(),
        residual: f64::NAN,
    })?;
    let sym = &l_inv * a_red * l_inv.transpose();
    let sym = (&sym + sym.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    Ok(eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
}

// ---------------------------------------------------------------------------
// Shooting oracle.
// ---------------------------------------------------------------------------

/// Stretch treatment of the shooting oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StretchModel {
    /// Stretches pinned to zero.
    Inextensible,
    /// Pointwise stationarity `eps_i = (Fx cos + Fz sin) / S`, the same
    /// relation the solver's stationary points satisfy.
    Pointwise,
}

/// Shooting result: the placement plus the multipliers it found.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub placement: Placement,
    pub f_x: f64,
    pub f_z: f64,
    pub residual: f64,
}

/// Verification path for uniform bending stiffness: explicit stepping of
/// the discrete pendulum equation
/// `B (theta_{i+1} - 2 theta_i + theta_{i-1}) / h^2 =
///  (F_x sin theta_i - F_z cos theta_i) lambda_i`,
/// shooting on `(theta'(0), F_x, F_z)` to meet the far clamp and both end
/// constraints. Shares no assembly code with the Newton solver.
pub fn shooting_oracle(problem: &ElasticaProblem, model: StretchModel) -> Result<OracleSolution> {
    let sc = Scaled::build(problem);
    let n = sc.n;
    if n < 7 {
        return Err(Error::Mode(
            "shooting oracle needs at least 7 nodes".to_string(),
        ));
    }
    let b0 = problem.bending_stiffness[0];
    if problem
        .bending_stiffness
        .iter()
        .any(|&b| (b - b0).abs() > 1e-12 * b0.abs())
    {
        return Err(Error::Mode(
            "shooting oracle requires uniform bending stiffness".to_string(),
        ));
    }

    // Initial guess from the linearized clamped-clamped mode: theta'(0) of
    // amp*(1 - cos(2 pi s)) with the arc-length amplitude for d, and the
    // classical critical load.
    let tau = std::f64::consts::TAU;
    let compression = (1.0 - sc.d).max(0.0);
    let theta_amp = 2.0 * compression.sqrt();
    let guess = [
        theta_amp * (tau * sc.h).sin(),
        if compression > 0.0 {
            -tau * tau
        } else {
            sc.s * (sc.d - 1.0)
        },
        0.0,
    ];

    let direct = {
        let march = |q: &[f64; 3]| march_recurrence(&sc, model, q);
        shoot_newton(&march, guess)
    };
    let p = match direct {
        Ok(p) => p,
        Err(_) => {
            // Continuation fallback: walk d down from just-buckled.
            let mut p = [0.05, -tau * tau, 0.0];
            let mut d_cur = 1.0 - 1e-3;
            loop {
                let sc_step = Scaled {
                    d: d_cur,
                    ..sc.clone()
                };
                let march_step = |q: &[f64; 3]| march_recurrence(&sc_step, model, q);
                p = shoot_newton(&march_step, p).map_err(|res| Error::OracleFailure {
                    reason: format!("continuation stalled at d = {d_cur}"),
                    residual: res,
                })?;
                if (d_cur - sc.d).abs() < 1e-15 {
                    break p;
                }
                d_cur = (d_cur - 0.02).max(sc.d);
            }
        }
    };

    let (theta, residuals) = march_recurrence(&sc, model, &p);
    let worst = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let eps = stretch_field(&sc, model, &theta, p[1], p[2]);
    let placement = Placement::from_theta_eps(&problem.grid, theta, eps)?;
    let force_scale = sc.b_ref / (sc.length * sc.length);
    Ok(OracleSolution {
        placement,
        f_x: p[1] * force_scale,
        f_z: p[2] * force_scale,
        residual: worst,
    })
}

fn stretch_field(sc: &Scaled, model: StretchModel, theta: &[f64], fx: f64, fz: f64) -> Vec<f64> {
    match model {
        StretchModel::Inextensible => vec![0.0; sc.n],
        StretchModel::Pointwise => theta
            .iter()
            .map(|t| {
                let (sin, cos) = t.sin_cos();
                (fx * cos + fz * sin) / sc.s
            })
            .collect(),
    }
}

/// March the stationarity recurrence from the left clamp with shooting
/// parameters `(theta_1, Fx, Fz)`; returns the full angle field and the
/// closure residuals `(theta_{n-1}, x-span defect, z-rise defect)`.
fn march_recurrence(sc: &Scaled, model: StretchModel, p: &[f64; 3]) -> (Vec<f64>, [f64; 3]) {
    let n = sc.n;
    let [t1, fx, fz] = *p;
    let mut theta = vec![0.0; n];
    theta[1] = t1;

    let lam = |t: f64| -> f64 {
        match model {
            StretchModel::Inextensible => 1.0,
            StretchModel::Pointwise => {
                let (sin, cos) = t.sin_cos();
                1.0 + (fx * cos + fz * sin) / sc.s
            }
        }
    };

    // Stationarity at node i gives the bending-flux transfer
    // b_seg[i] (theta_{i+1} - theta_i) = b_seg[i-1] (theta_i - theta_{i-1})
    //   + h w_i lam_i (fx sin - fz cos).
    for i in 1..=n - 2 {
        let (sin, cos) = theta[i].sin_cos();
        let pend = sc.w[i] * lam(theta[i]) * (fx * sin - fz * cos);
        let flux_in = sc.b_seg[i - 1] * (theta[i] - theta[i - 1]);
        theta[i + 1] = theta[i] + (flux_in + sc.h * pend) / sc.b_seg[i];
    }

    let far_clamp = theta[n - 1];
    // The marched theta_{n-1} is the residual; clamp it before measuring
    // the end constraints so they see the admissible configuration.
    let mut theta_c = theta.clone();
    theta_c[n - 1] = 0.0;
    let mut gx = -sc.d;
    let mut gz = 0.0;
    for i in 0..n {
        let (sin, cos) = theta_c[i].sin_cos();
        let l = lam(theta_c[i]);
        gx += sc.w[i] * l * cos;
        gz += sc.w[i] * l * sin;
    }
    theta_c[n - 1] = 0.0;
    (theta_c, [far_clamp, gx, gz])
}

/// Three-unknown Newton shoot with a finite-difference Jacobian.
fn shoot_newton<F>(march: &F, start: [f64; 3]) -> std::result::Result<[f64; 3], f64>
where
    F: Fn(&[f64; 3]) -> (Vec<f64>, [f64; 3]),
{
    let residual_norm = |r: &[f64; 3]| -> f64 { r.iter().fold(0.0f64, |m, x| m.max(x.abs())) };
    let mut p = start;
    let (_, mut r) = march(&p);
    for _ in 0..200 {
        let norm = residual_norm(&r);
        if norm <= 1e-11 {
            return Ok(p);
        }
        let mut jac = Matrix3::<f64>::zeros();
        for col in 0..3 {
            let dp = 1e-7 * p[col].abs().max(1.0);
            let mut p_hi = p;
            p_hi[col] += dp;
            let (_, r_hi) = march(&p_hi);
            let mut p_lo = p;
            p_lo[col] -= dp;
            let (_, r_lo) = march(&p_lo);
            for row in 0..3 {
                jac[(row, col)] = (r_hi[row] - r_lo[row]) / (2.0 * dp);
            }
        }
        let rhs = Vector3::from_row_slice(&r);
        let Some(step) = jac.lu().solve(&(-rhs)) else {
            return Err(norm);
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = [
                p[0] + alpha * step[0],
                p[1] + alpha * step[1],
                p[2] + alpha * step[2],
            ];
            let (_, r_trial) = march(&trial);
            if r_trial.iter().all(|x| x.is_finite()) && residual_norm(&r_trial) < norm {
                p = trial;
                r = r_trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(norm);
        }
    }
    let norm = residual_norm(&r);
    if norm <= 1e-11 {
        Ok(p)
    } else {
        Err(norm)
    }
}
