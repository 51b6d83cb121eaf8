//! Post-hoc certificates for finished runs: entropy-solution residuals,
//! total-variation history, conservation defects, front tracking, and the
//! aggregate entropy-dissipation budget.
//!
//! The residual functionals are quadratures of the entropy-solution
//! conditions applied to the piecewise-constant fields the scheme produces,
//! with the jump term along the orderliness fronts evaluated on the tracked
//! front polylines:
//!
//! ```text
//! WF(phi)    = sum  (u w dphi/dt + f(u, w) w dphi/dx) dx dt + initial term
//! EI(phi, k) = sum  (|u - k| dphi/dt + Phi(u, w, k) dphi/dx) dx dt
//!              + initial term
//!              + (f_max(k) - f_min(k)) sum_fronts |w+ - w-| phi(t, y(t)) dt
//! ```
//!
//! Within each space-time cell the field is constant, so the derivative
//! factors integrate exactly: the time term pairs `u w` with
//! `phi(t^{n+1}, x_j) - phi(t^n, x_j)` and the space term pairs the cell flux
//! with the interface difference of `phi` at the slab midpoint (cell centers
//! and midpoints realize the midpoint rule in the remaining direction). On
//! constant states everything telescopes to roundoff. `WF` should vanish and
//! `EI` should be nonnegative in the limit; at finite resolution both carry
//! discretization residuals that must shrink under refinement.

use serde::Serialize;

use crate::error::{GarzError, Result};
use crate::interface::{interface_flux_raw, kruzhkov_raw, InterfacePair};
use crate::model::FluxFamily;
use crate::riemann::RiemannSolution;
use crate::scheme::{critical_points, GridState, InitialData, MeshConfig, RunOutput, RunStats};

/// Total variation of a cell array: sum of neighbor differences.
pub fn tv(w: &[f64]) -> f64 {
    w.windows(2).map(|p| (p[1] - p[0]).abs()).sum()
}

/// `sum_j (|du_j| + |dw_j|) dx` between two states on the same mesh.
pub fn l1_distance(a: &GridState, b: &GridState, dx: f64) -> f64 {
    let du: f64 = a.u.iter().zip(&b.u).map(|(p, q)| (p - q).abs()).sum();
    let dw: f64 = a.w.iter().zip(&b.w).map(|(p, q)| (p - q).abs()).sum();
    (du + dw) * dx
}

/// L1 errors `(rho, w)` of a state against the exact Riemann profile at the
/// state's own time, compared cell-average against cell-average.
pub fn l1_error_vs_oracle(
    state: &GridState,
    sol: &RiemannSolution,
    mesh: &MeshConfig,
) -> (f64, f64) {
    let mut eu = 0.0;
    let mut ew = 0.0;
    for j in 0..mesh.n_cells() {
        let a = mesh.interface_position(j);
        let b = mesh.interface_position(j + 1);
        let (ru, rw) = sol.average(state.t, a, b);
        eu += (state.u[j] - ru).abs() * mesh.dx();
        ew += (state.w[j] - rw).abs() * mesh.dx();
    }
    (eu, ew)
}

/// Smooth product bump with exact partial derivatives; infinitely
/// differentiable, supported on `[t0 - rt, t0 + rt] x [x0 - rx, x0 + rx]`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TestFunction {
    pub t0: f64,
    pub x0: f64,
    pub rt: f64,
    pub rx: f64,
}

fn bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

fn dbump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        let d = 1.0 - s * s;
        (-1.0 / d).exp() * (-2.0 * s / (d * d))
    } else {
        0.0
    }
}

impl TestFunction {
    pub fn value(&self, t: f64, x: f64) -> f64 {
        bump((t - self.t0) / self.rt) * bump((x - self.x0) / self.rx)
    }

    pub fn dt(&self, t: f64, x: f64) -> f64 {
        dbump((t - self.t0) / self.rt) / self.rt * bump((x - self.x0) / self.rx)
    }

    pub fn dx(&self, t: f64, x: f64) -> f64 {
        bump((t - self.t0) / self.rt) * dbump((x - self.x0) / self.rx) / self.rx
    }

    /// Support must not exit `[0, t_end] x (x_min, x_max)` in time-forward
    /// and space; reaching below `t = 0` is allowed (the initial term
    /// catches the boundary).
    fn check_support(&self, mesh: &MeshConfig) -> Result<()> {
        let ok = self.t0 + self.rt <= mesh.t_end() + 1e-12
            && self.x0 - self.rx >= mesh.x_min() - 1e-12
            && self.x0 + self.rx <= mesh.x_max() + 1e-12;
        if !ok {
            return Err(GarzError::SupportError {
                t_lo: self.t0 - self.rt,
                t_hi: self.t0 + self.rt,
                x_lo: self.x0 - self.rx,
                x_hi: self.x0 + self.rx,
            });
        }
        Ok(())
    }

    /// Deterministic seeded family of bumps interior to the space-time box.
    pub fn seeded_family(n: usize, seed: u64, mesh: &MeshConfig) -> Vec<TestFunction> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let t_end = mesh.t_end();
        let lx = mesh.x_max() - mesh.x_min();
        (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                let v: f64 = rng.gen();
                let a: f64 = rng.gen();
                let b: f64 = rng.gen();
                TestFunction {
                    t0: t_end * (0.35 + 0.3 * u),
                    rt: t_end * (0.12 + 0.1 * v),
                    x0: mesh.x_min() + lx * (0.35 + 0.3 * a),
                    rx: lx * (0.10 + 0.15 * b),
                }
            })
            .collect()
    }
}

/// Quadrature of the conservative `rho w` weak form on the
/// piecewise-constant trajectory, initial-datum term included.
pub fn weak_form_residual(
    trajectory: &[GridState],
    family: &FluxFamily,
    mesh: &MeshConfig,
    phi: &TestFunction,
) -> Result<f64> {
    phi.check_support(mesh)?;
    let (dx, dt) = (mesh.dx(), mesh.dt());
    let mut acc = 0.0;
    for state in trajectory.iter().take(trajectory.len().saturating_sub(1)) {
        let (t0, t1) = (state.t, state.t + dt);
        let tm = state.t + 0.5 * dt;
        if slab_inactive(phi, t0, t1) {
            continue;
        }
        for j in 0..mesh.n_cells() {
            let x = mesh.cell_center(j);
            let (u, w) = (state.u[j], state.w[j]);
            // Time integral of dphi/dt over the slab is exact; space integral
            // of dphi/dx over the cell is exact at the slab midpoint.
            acc += u * w * (phi.value(t1, x) - phi.value(t0, x)) * dx;
            acc += family.f(u, w)
                * w
                * (phi.value(tm, mesh.interface_position(j + 1))
                    - phi.value(tm, mesh.interface_position(j)))
                * dt;
        }
    }
    let init = &trajectory[0];
    for j in 0..mesh.n_cells() {
        let x = mesh.cell_center(j);
        acc += init.u[j] * init.w[j] * phi.value(0.0, x) * dx;
    }
    Ok(acc)
}

#[inline]
fn slab_inactive(phi: &TestFunction, t0: f64, t1: f64) -> bool {
    t1 <= phi.t0 - phi.rt || t0 >= phi.t0 + phi.rt
}

/// A tracked discontinuity curve of the orderliness field.
#[derive(Clone, Debug, Serialize)]
pub struct Front {
    /// Index of the generating breakpoint in the initial datum.
    pub breakpoint: usize,
    /// Level `(a_{m-1} + a_m) / 2` whose crossing is tracked.
    pub level: f64,
    /// Plateau value left of the front.
    pub w_left: f64,
    /// Plateau value right of the front.
    pub w_right: f64,
    /// Interpolated crossing position at each step time.
    pub positions: Vec<f64>,
    /// Index of the cell immediately left of the crossing at each step.
    #[serde(skip)]
    pub cells: Vec<usize>,
}

impl Front {
    /// Slope of the polyline between the first and last record.
    pub fn mean_slope(&self, dt: f64) -> f64 {
        let n = self.positions.len();
        debug_assert!(n >= 2);
        (self.positions[n - 1] - self.positions[0]) / ((n - 1) as f64 * dt)
    }
}

/// Follows each initial breakpoint of `w_o` through the trajectory by
/// locating the mid-level crossing of the smeared discrete front inside a
/// CFL-sized search window. Breakpoints with zero jump carry no front and
/// are skipped. Fails with `FrontLost` when no admissible crossing exists
/// (front collision) or when the polyline would violate its Lipschitz bound.
pub fn track_fronts(
    trajectory: &[GridState],
    init: &InitialData,
    family: &FluxFamily,
    mesh: &MeshConfig,
) -> Result<Vec<Front>> {
    let n = mesh.n_cells();
    let dx = mesh.dx();
    let breakpoints = init.w0.breakpoints();
    let values = init.w0.values();
    // Window: how many cells the transported quantity can move per step,
    // plus two for the smeared transition.
    let window = (mesh.lambda() * family.lipschitz_bound() / family.epsilon()).ceil() as usize + 2;
    let v_sup = family.model().v_max(0.0);
    let lipschitz_bound = (v_sup + 1.0) * mesh.dt() + 2.0 * dx;

    let mut fronts = Vec::new();
    for (m, &d) in breakpoints.iter().enumerate() {
        let jump = values[m + 1] - values[m];
        if jump == 0.0 {
            continue;
        }
        let level = 0.5 * (values[m] + values[m + 1]);
        let mut cell = (((d - mesh.x_min()) / dx).floor() as isize)
            .clamp(0, n as isize - 1) as usize;
        let mut positions = vec![d];
        let mut cells = vec![cell];
        let mut prev_y = d;
        for (step, state) in trajectory.iter().enumerate().skip(1) {
            let lo = cell.saturating_sub(window);
            let hi = (cell + window).min(n - 2);
            let mut best: Option<(f64, usize)> = None;
            for j in lo..=hi {
                let (wa, wb) = (state.w[j], state.w[j + 1]);
                let oriented = (wb - wa).signum() == jump.signum() && wb != wa;
                if !oriented || (wa - level) * (wb - level) > 0.0 {
                    continue;
                }
                let y = mesh.cell_center(j) + dx * (level - wa) / (wb - wa);
                if best.is_none_or(|(by, _)| (y - prev_y).abs() < (by - prev_y).abs()) {
                    best = Some((y, j));
                }
            }
            let (y, j) = best.ok_or(GarzError::FrontLost { front: m, step })?;
            if (y - prev_y).abs() > lipschitz_bound {
                return Err(GarzError::FrontLost { front: m, step });
            }
            positions.push(y);
            cells.push(j);
            prev_y = y;
            cell = j;
        }
        fronts.push(Front {
            breakpoint: m,
            level,
            w_left: values[m],
            w_right: values[m + 1],
            positions,
            cells,
        });
    }
    Ok(fronts)
}

/// Quadrature of the adapted entropy inequality for one Kruzhkov level `k`,
/// front term included. Nonnegative in the limit; the returned value may dip
/// below zero by the discretization residual.
pub fn entropy_inequality_residual(
    trajectory: &[GridState],
    family: &FluxFamily,
    mesh: &MeshConfig,
    phi: &TestFunction,
    k: f64,
    fronts: &[Front],
) -> Result<f64> {
    phi.check_support(mesh)?;
    let (dx, dt) = (mesh.dx(), mesh.dt());
    let n = mesh.n_cells();
    let mut acc = 0.0;
    for state in trajectory.iter().take(trajectory.len().saturating_sub(1)) {
        let (t0, t1) = (state.t, state.t + dt);
        let tm = state.t + 0.5 * dt;
        if slab_inactive(phi, t0, t1) {
            continue;
        }
        for j in 0..n {
            let x = mesh.cell_center(j);
            let (u, w) = (state.u[j], state.w[j]);
            acc += (u - k).abs() * (phi.value(t1, x) - phi.value(t0, x)) * dx;
            acc += kruzhkov_raw(family, u, w, k)
                * (phi.value(tm, mesh.interface_position(j + 1))
                    - phi.value(tm, mesh.interface_position(j)))
                * dt;
        }
    }
    let init = &trajectory[0];
    for j in 0..n {
        acc += (init.u[j] - k).abs() * phi.value(0.0, mesh.cell_center(j)) * dx;
    }
    // Front term: (f_max(k) - f_min(k)) |w+ - w-| phi along each polyline.
    // The one-sided values are the plateau values of the generating
    // breakpoint: the transported field is piecewise constant between
    // fronts, so these are the limits of w on either side of the curve. The
    // discrete transition is smeared over many cells, so cell values near
    // the crossing systematically under-count the jump.
    let gap_k = family.f_max(k) - family.f_min(k);
    for front in fronts {
        let jump = (front.w_right - front.w_left).abs();
        for (step, state) in trajectory.iter().enumerate().take(trajectory.len() - 1) {
            let (t0, t1) = (state.t, state.t + dt);
            let tm = state.t + 0.5 * dt;
            if slab_inactive(phi, t0, t1) {
                continue;
            }
            acc += gap_k * jump * phi.value(tm, front.positions[step]) * dt;
        }
    }
    Ok(acc)
}

/// Slack of the discrete entropy inequalities summed over cells, steps, and
/// a k-grid (averaged over k), weighted by `dx`. Nonnegative for a monotone
/// scheme; a bulk measure of the numerical entropy dissipation.
pub fn entropy_dissipation_budget(
    trajectory: &[GridState],
    family: &FluxFamily,
    mesh: &MeshConfig,
    k_grid_size: usize,
) -> Result<f64> {
    assert!(k_grid_size >= 2);
    let n = mesh.n_cells();
    let lambda = mesh.lambda();
    let dx = mesh.dx();
    let mut total = 0.0;
    for win in trajectory.windows(2) {
        let (state, next) = (&win[0], &win[1]);
        let alphas = critical_points(family, &state.w)?;
        let iface = |i: usize, a: f64, b: f64| -> f64 {
            let l = i.saturating_sub(1).min(n - 1);
            let r = i.min(n - 1);
            interface_flux_raw(family, state.w[l], alphas[l], state.w[r], alphas[r], a, b)
        };
        for ki in 0..k_grid_size {
            let k = ki as f64 / (k_grid_size - 1) as f64;
            for j in 0..n {
                let ul = if j == 0 { state.u[0] } else { state.u[j - 1] };
                let uc = state.u[j];
                let ur = if j + 1 == n { state.u[n - 1] } else { state.u[j + 1] };
                let phi_right =
                    iface(j + 1, uc.max(k), ur.max(k)) - iface(j + 1, uc.min(k), ur.min(k));
                let phi_left = iface(j, ul.max(k), uc.max(k)) - iface(j, ul.min(k), uc.min(k));
                let fkk = (iface(j + 1, k, k) - iface(j, k, k)).abs();
                let slack = (uc - k).abs() - (next.u[j] - k).abs()
                    - lambda * (phi_right - phi_left)
                    + lambda * fkk;
                total += slack.max(0.0) * dx;
            }
        }
    }
    Ok(total / k_grid_size as f64)
}

/// Mean interface remainder along tracked fronts: the adjacent-cell pair one
/// cell off the crossing, measured against the slice pair of the front's
/// plateau values. A discrete shadow of the trace-germ condition.
pub fn front_germ_remainder(
    trajectory: &[GridState],
    fronts: &[Front],
    family: &FluxFamily,
    mesh: &MeshConfig,
) -> Result<Vec<f64>> {
    let n = mesh.n_cells();
    let mut out = Vec::with_capacity(fronts.len());
    for front in fronts {
        let pair = InterfacePair::new(family, front.w_left, front.w_right)?;
        let mut acc = 0.0;
        let mut count = 0usize;
        for (step, state) in trajectory.iter().enumerate() {
            let j = front.cells[step];
            let u_left = state.u[j.saturating_sub(1)];
            let u_right = state.u[(j + 2).min(n - 1)];
            acc += pair.remainder(u_left, u_right)?;
            count += 1;
        }
        out.push(acc / count as f64);
    }
    Ok(out)
}

/// Violation counters of the per-step discrete entropy scan.
#[derive(Clone, Debug, Serialize)]
pub struct EntropyViolations {
    pub count: usize,
    pub worst: f64,
}

/// Per-run record serialized as `report.json`.
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsReport {
    pub u_bounds: (f64, f64),
    pub w_bounds: (f64, f64),
    pub tv_w_history: Vec<f64>,
    pub mass_defect: f64,
    pub rhow_defect: f64,
    pub entropy_violations: EntropyViolations,
    /// Per test function: worst (minimum over the k-grid) entropy residual.
    pub ei_residual: Vec<f64>,
    /// Per test function: absolute weak-form residual.
    pub wf_residual: Vec<f64>,
    pub fronts: Vec<Front>,
}

/// Residual/report options; mirrors the `diagnostics` config block.
#[derive(Clone, Debug)]
pub struct DiagnosticsOptions {
    pub enabled: bool,
    pub k_grid: usize,
    pub n_test_functions: usize,
    pub seed: u64,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self {
            enabled: true,
            k_grid: 11,
            n_test_functions: 5,
            seed: 0,
        }
    }
}

/// Assembles the full report from a finished run. Residuals and fronts need
/// the retained trajectory; without it only the marching statistics are
/// reported.
pub fn compute_report(
    output: &RunOutput,
    init: &InitialData,
    family: &FluxFamily,
    mesh: &MeshConfig,
    opts: &DiagnosticsOptions,
) -> Result<DiagnosticsReport> {
    let stats: &RunStats = &output.stats;
    let mut report = DiagnosticsReport {
        u_bounds: stats.u_bounds,
        w_bounds: stats.w_bounds,
        tv_w_history: stats.tv_w_history.clone(),
        mass_defect: stats.mass_defect,
        rhow_defect: stats.rhow_defect,
        entropy_violations: EntropyViolations {
            count: stats.entropy_violation_count,
            worst: stats.entropy_violation_worst,
        },
        ei_residual: Vec::new(),
        wf_residual: Vec::new(),
        fronts: Vec::new(),
    };
    let Some(trajectory) = output.trajectory.as_ref() else {
        return Ok(report);
    };
    if !opts.enabled || mesh.t_end() <= 0.0 {
        return Ok(report);
    }
    let fronts = track_fronts(trajectory, init, family, mesh)?;
    let phis = TestFunction::seeded_family(opts.n_test_functions, opts.seed, mesh);
    for phi in &phis {
        report.wf_residual.push(
            weak_form_residual(trajectory, family, mesh, phi)?.abs(),
        );
        let mut worst = f64::INFINITY;
        for ki in 0..opts.k_grid.max(2) {
            let k = ki as f64 / (opts.k_grid.max(2) - 1) as f64;
            let r = entropy_inequality_residual(trajectory, family, mesh, phi, k, &fronts)?;
            worst = worst.min(r);
        }
        report.ei_residual.push(worst);
    }
    report.fronts = fronts;
    Ok(report)
}
