//! `garz`: scenario runner for the finite-volume solver.
//!
//! Subcommands:
//! - `run <config.json>`: march the scheme, write one CSV per snapshot plus
//!   `report.json` and `meta.json`.
//! - `riemann <config.json>`: run the scheme against the exact Riemann
//!   solution, write paired CSVs and an error summary.
//! - `converge <config.json> --levels N`: refinement study with self
//!   distances and (for Riemann data) oracle errors.
//! - `check <config.json>`: interface property battery on the configured
//!   model.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 runtime invariant
//! violation, 4 no intermediate Riemann state, 5 failed property check.
//! `GARZ_THREADS` caps the parallelism of `converge` (0 = sequential).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use garz::config::{ResolvedConfig, RunConfig};
use garz::diagnostics::{compute_report, l1_error_vs_oracle};
use garz::riemann::{solve_riemann, RiemannSolution, Wave1};
use garz::scheme::{run, GridState, MeshConfig, RunOptions, RunOutput};
use garz::verify::run_property_battery;
use garz::GarzError;

#[derive(Parser)]
#[command(name = "garz", about = "Finite-volume solver for a 2x2 traffic system", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write snapshots plus diagnostics.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output_dir` from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Riemann scenario against the exact solution.
    Riemann {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refinement study: doubles the resolution `levels` times.
    Converge {
        config: PathBuf,
        /// Number of refinement levels (at least 3).
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Interface property battery on the configured model.
    Check {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out } => cmd_run(&config, out.as_deref()),
        Command::Riemann { config, out } => cmd_riemann(&config, out.as_deref()),
        Command::Converge { config, levels, out } => cmd_converge(&config, levels, out.as_deref()),
        Command::Check { config, out } => cmd_check(&config, out.as_deref()),
    };
    match code {
        Ok(c) => c,
        Err(e) => {
            eprintln!("garz: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// Spec'd exit codes per error class.
fn exit_code_for(e: &GarzError) -> u8 {
    match e {
        GarzError::InvariantViolation { .. } | GarzError::FrontLost { .. } => 3,
        GarzError::NoIntermediateState { .. } => 4,
        _ => 2,
    }
}

fn load_config(path: &Path) -> Result<(RunConfig, ResolvedConfig), GarzError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GarzError::ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let config = RunConfig::from_json_str(&text)?;
    let resolved = config.resolve()?;
    Ok((config, resolved))
}

fn out_dir(cli_out: Option<&Path>, resolved: &ResolvedConfig) -> PathBuf {
    cli_out
        .map(Path::to_path_buf)
        .or_else(|| resolved.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn ensure_dir(dir: &Path) -> Result<(), GarzError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| GarzError::ConfigError(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), GarzError> {
    std::fs::write(path, contents)
        .map_err(|e| GarzError::ConfigError(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), GarzError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| GarzError::ConfigError(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_file(path, &text)
}

/// Compact time tag for snapshot file names: `0.5` -> `snap_0.5.csv`.
fn time_tag(t: f64) -> String {
    format!("{t}")
}

/// 17 significant digits: exact round-trip for f64.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Serialize)]
struct Meta {
    config: RunConfig,
    dx: f64,
    dt: f64,
    lambda: f64,
    lipschitz_l: f64,
    epsilon: f64,
    max_stable_lambda: f64,
    n_steps: usize,
    /// Requested snapshot time -> actual emitted step time.
    snapshot_times: Vec<(f64, f64)>,
    /// True when waves reached the outermost cells (outflow no longer exact).
    boundary_touched: bool,
}

fn build_meta(config: &RunConfig, r: &ResolvedConfig, output: &RunOutput) -> Meta {
    Meta {
        config: config.clone(),
        dx: r.mesh.dx(),
        dt: r.mesh.dt(),
        lambda: r.mesh.lambda(),
        lipschitz_l: r.family.lipschitz_bound(),
        epsilon: r.family.epsilon(),
        max_stable_lambda: r.family.max_stable_lambda(),
        n_steps: output.stats.n_steps,
        snapshot_times: r
            .snapshots
            .iter()
            .zip(&output.snapshots)
            .map(|(&req, s)| (req, s.t))
            .collect(),
        boundary_touched: output.stats.boundary_touched,
    }
}

fn execute(r: &ResolvedConfig) -> Result<RunOutput, GarzError> {
    let options = RunOptions {
        keep_trajectory: r.diagnostics.enabled,
        entropy_k_grid: if r.diagnostics.enabled { r.diagnostics.k_grid } else { 0 },
    };
    run(&r.init, &r.family, &r.mesh, &r.snapshots, &options)
}

fn cmd_run(config_path: &Path, cli_out: Option<&Path>) -> Result<ExitCode, GarzError> {
    let (config, resolved) = load_config(config_path)?;
    let dir = out_dir(cli_out, &resolved);
    ensure_dir(&dir)?;
    let output = execute(&resolved)?;

    for (&req, state) in resolved.snapshots.iter().zip(&output.snapshots) {
        let mut csv = String::from("x,rho,w\n");
        for j in 0..resolved.mesh.n_cells() {
            csv.push_str(&format!(
                "{},{},{}\n",
                fmt(resolved.mesh.cell_center(j)),
                fmt(state.u[j]),
                fmt(state.w[j])
            ));
        }
        write_file(&dir.join(format!("snap_{}.csv", time_tag(req))), &csv)?;
    }
    let report = compute_report(
        &output,
        &resolved.init,
        &resolved.family,
        &resolved.mesh,
        &resolved.diagnostics,
    )?;
    write_json(&dir.join("report.json"), &report)?;
    write_json(&dir.join("meta.json"), &build_meta(&config, &resolved, &output))?;
    if output.stats.boundary_touched {
        eprintln!("garz: warning: waves reached the domain boundary; outflow is no longer exact");
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct RiemannSummary {
    wave1: &'static str,
    rho_mid: f64,
    contact_speed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    shock_speed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fan_speeds: Option<(f64, f64)>,
    /// Per snapshot: time, L1 error in rho, L1 error in w.
    l1_errors: Vec<(f64, f64, f64)>,
}

fn wave_name(sol: &RiemannSolution) -> &'static str {
    match sol.wave1 {
        Wave1::None => "none",
        Wave1::Shock { .. } => "shock",
        Wave1::Rarefaction { .. } => "rarefaction",
    }
}

fn cmd_riemann(config_path: &Path, cli_out: Option<&Path>) -> Result<ExitCode, GarzError> {
    let (config, resolved) = load_config(config_path)?;
    if config.initial.is_some() {
        return Err(GarzError::ConfigError(
            "the riemann command takes its data from the `riemann` block; remove `initial`".into(),
        ));
    }
    let data = resolved.riemann.ok_or_else(|| {
        GarzError::ConfigError("the riemann command needs a `riemann` block".into())
    })?;
    let sol = solve_riemann(&resolved.family, data)?;
    let dir = out_dir(cli_out, &resolved);
    ensure_dir(&dir)?;
    let output = execute(&resolved)?;

    let mut l1_errors = Vec::new();
    for (&req, state) in resolved.snapshots.iter().zip(&output.snapshots) {
        let mut csv = String::from("x,rho_num,w_num,rho_exact,w_exact\n");
        for j in 0..resolved.mesh.n_cells() {
            let x = resolved.mesh.cell_center(j);
            let (re, we) = sol.evaluate_xt(x, state.t);
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt(x),
                fmt(state.u[j]),
                fmt(state.w[j]),
                fmt(re),
                fmt(we)
            ));
        }
        write_file(&dir.join(format!("riemann_{}.csv", time_tag(req))), &csv)?;
        let (eu, ew) = l1_error_vs_oracle(state, &sol, &resolved.mesh);
        l1_errors.push((state.t, eu, ew));
    }

    let summary = RiemannSummary {
        wave1: wave_name(&sol),
        rho_mid: sol.rho_mid,
        contact_speed: sol.contact_speed,
        shock_speed: match sol.wave1 {
            Wave1::Shock { speed } => Some(speed),
            _ => None,
        },
        fan_speeds: match sol.wave1 {
            Wave1::Rarefaction { speed_lo, speed_hi } => Some((speed_lo, speed_hi)),
            _ => None,
        },
        l1_errors,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    write_json(&dir.join("meta.json"), &build_meta(&config, &resolved, &output))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ConvergenceLevel {
    n_cells: usize,
    dx: f64,
    dt: f64,
    t_final: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    l1_vs_oracle: Option<(f64, f64)>,
}

#[derive(Serialize)]
struct Convergence {
    levels: Vec<ConvergenceLevel>,
    /// `||state_i - aggregate(state_{i+1})||_{L1}` on the coarse grid.
    self_distances: Vec<f64>,
    /// log2 ratios of successive oracle errors (rho + w combined).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    oracle_orders: Vec<f64>,
}

fn cmd_converge(config_path: &Path, levels: usize, cli_out: Option<&Path>) -> Result<ExitCode, GarzError> {
    if levels < 3 {
        return Err(GarzError::ConfigError(format!(
            "converge needs at least 3 levels, got {levels}"
        )));
    }
    let (config, resolved) = load_config(config_path)?;
    let dir = out_dir(cli_out, &resolved);
    ensure_dir(&dir)?;
    let sol = match resolved.riemann {
        Some(data) => Some(solve_riemann(&resolved.family, data)?),
        None => None,
    };

    // One run per level at doubled resolution, final state only.
    let run_level = |i: usize| -> Result<(MeshConfig, GridState), GarzError> {
        let n = config.mesh.n_cells << i;
        let mesh = MeshConfig::new(
            config.mesh.x_min,
            config.mesh.x_max,
            n,
            config.mesh.lambda,
            config.mesh.t_end,
            &resolved.family,
        )?;
        let options = RunOptions { keep_trajectory: false, entropy_k_grid: 0 };
        let out = run(&resolved.init, &resolved.family, &mesh, &[config.mesh.t_end], &options)?;
        Ok((mesh, out.snapshots.into_iter().next().expect("one snapshot")))
    };

    let threads = std::env::var("GARZ_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .unwrap_or(0);
    let mut results: Vec<Option<(MeshConfig, GridState)>> = (0..levels).map(|_| None).collect();
    if threads <= 1 {
        for (i, slot) in results.iter_mut().enumerate() {
            *slot = Some(run_level(i)?);
        }
    } else {
        let run_level = &run_level;
        let mut first_err = None;
        std::thread::scope(|scope| {
            for chunk in (0..levels).collect::<Vec<_>>().chunks(threads) {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|&i| scope.spawn(move || (i, run_level(i))))
                    .collect();
                for h in handles {
                    let (i, r) = h.join().expect("level thread panicked");
                    match r {
                        Ok(v) => results[i] = Some(v),
                        Err(e) => {
                            first_err.get_or_insert(e);
                        }
                    }
                }
            }
        });
        if let Some(e) = first_err {
            return Err(e);
        }
    }
    let results: Vec<(MeshConfig, GridState)> = results.into_iter().map(Option::unwrap).collect();

    let mut level_rows = Vec::new();
    let mut oracle_totals = Vec::new();
    for (mesh, state) in &results {
        let l1 = sol.as_ref().map(|s| l1_error_vs_oracle(state, s, mesh));
        if let Some((eu, ew)) = l1 {
            oracle_totals.push(eu + ew);
        }
        level_rows.push(ConvergenceLevel {
            n_cells: mesh.n_cells(),
            dx: mesh.dx(),
            dt: mesh.dt(),
            t_final: state.t,
            l1_vs_oracle: l1,
        });
    }
    // Coarse-grid comparison by cell aggregation of the next finer level.
    let mut self_distances = Vec::new();
    for pair in results.windows(2) {
        let (coarse_mesh, coarse) = &pair[0];
        let (_, fine) = &pair[1];
        let n = coarse_mesh.n_cells();
        let mut acc = 0.0;
        for j in 0..n {
            let uf = 0.5 * (fine.u[2 * j] + fine.u[2 * j + 1]);
            let wf = 0.5 * (fine.w[2 * j] + fine.w[2 * j + 1]);
            acc += ((coarse.u[j] - uf).abs() + (coarse.w[j] - wf).abs()) * coarse_mesh.dx();
        }
        self_distances.push(acc);
    }
    let oracle_orders = oracle_totals
        .windows(2)
        .map(|p| (p[0] / p[1]).log2())
        .collect();

    write_json(
        &dir.join("convergence.json"),
        &Convergence { levels: level_rows, self_distances, oracle_orders },
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(config_path: &Path, cli_out: Option<&Path>) -> Result<ExitCode, GarzError> {
    let (_, resolved) = load_config(config_path)?;
    let results = run_property_battery(&resolved.family, resolved.diagnostics.seed)?;
    let text = serde_json::to_string_pretty(&results)
        .map_err(|e| GarzError::ConfigError(format!("serialization failed: {e}")))?;
    println!("{text}");
    if let Some(out) = cli_out {
        ensure_dir(out)?;
        write_file(&out.join("check.json"), &format!("{text}\n"))?;
    }
    if results.iter().all(|r| r.pass) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(5))
    }
}
