//! `wed` command line front end.
//!
//! Settings are resolved in increasing precedence: built-in defaults, the
//! `--instance` file, `--set key=value` pairs in the order given, then the
//! dedicated flags (`--epsilon`, `--lambda`, `--R`, `--samples`, `--seed`, ...).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use wed_core::assumptions::verify_assumptions;
use wed_core::config::RunConfig;
use wed_core::experiments::{causal_sweep, lambda_sweep, SweepRun};
use wed_core::functional::chain_rule_check;
use wed_core::io::{self, Report};
use wed_core::optimizer::{minimize, Init, SolveReport};
use wed_core::reference::solve_flow_detailed;
use wed_core::{Trajectory, WedError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const SHIPPED: [(&str, &str); 3] = [
    ("heat", include_str!("../instances/heat.cfg")),
    ("kirchhoff", include_str!("../instances/kirchhoff.cfg")),
    ("bounded-sign", include_str!("../instances/bounded-sign.cfg")),
];

#[derive(Debug, Parser)]
#[command(name = "wed", version, about = "Weighted energy-dissipation minimization and reference flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize the WED functional at one (epsilon, lambda).
    Minimize(Common),
    /// Implicit Euler reference flow.
    Reference(Common),
    /// Minimizers over descending epsilon against the reference flow.
    CausalSweep(Common),
    /// Minimizers over descending lambda at fixed epsilon.
    LambdaSweep(Common),
    /// Sample the structural inequalities with closed-form constants.
    VerifyAssumptions(Common),
    /// Chain-rule defect of a trajectory at M, 2M and 4M time steps.
    ChainCheck(ChainArgs),
    /// Minimizer at one epsilon against the reference flow.
    Compare(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Instance file, or one of the shipped names: heat, kirchhoff, bounded-sign.
    #[arg(long)]
    pub instance: String,
    #[arg(long, default_value = "out")]
    pub output_dir: PathBuf,
    /// Extra `key=value` assignments applied after the instance file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Comma-separated epsilon list for causal sweeps.
    #[arg(long)]
    pub epsilons: Option<String>,
    /// Comma-separated lambda list for lambda sweeps.
    #[arg(long)]
    pub lambdas: Option<String>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long = "M")]
    pub m: Option<usize>,
    #[arg(long)]
    pub g_tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long = "R")]
    pub radius: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for concurrent solves and node assembly.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Write measured wall times into sweep CSVs (makes them run-dependent).
    #[arg(long)]
    pub record_timing: bool,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Trajectory CSV to check instead of `exp(-t) u0` sampled at M, 2M, 4M.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
}

impl Common {
    fn flag_overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        push("instance.N", self.n.map(|v| v.to_string()));
        push("instance.M", self.m.map(|v| v.to_string()));
        push("wed.epsilon", self.epsilon.map(|v| format!("{v:e}")));
        push("wed.lambda", self.lambda.map(|v| format!("{v:e}")));
        push("sweep.epsilons", self.epsilons.clone());
        push("sweep.lambdas", self.lambdas.clone());
        push("opt.g_tol", self.g_tol.map(|v| format!("{v:e}")));
        push("opt.max_iters", self.max_iters.map(|v| v.to_string()));
        push("opt.method", self.method.clone());
        push("opt.seed", self.seed.map(|v| v.to_string()));
        push("sweep.R", self.radius.map(|v| format!("{v:e}")));
        push("sweep.samples", self.samples.map(|v| v.to_string()));
        out
    }
}

/// Loads the instance file and applies overrides in precedence order.
pub fn resolve_config(common: &Common) -> Result<RunConfig, WedError> {
    let text = read_instance(&common.instance)?;
    let mut cfg = RunConfig::parse(&text)?;
    for pair in &common.set {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| WedError::config(format!("--set expects KEY=VALUE, got '{pair}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    for (k, v) in common.flag_overrides() {
        cfg.set(k, &v)?;
    }
    Ok(cfg)
}

fn read_instance(spec: &str) -> Result<String, WedError> {
    let path = Path::new(spec);
    if path.exists() {
        return fs::read_to_string(path).map_err(|e| WedError::config(format!("cannot read {spec}: {e}")));
    }
    let stem = spec.strip_suffix(".cfg").unwrap_or(spec);
    SHIPPED
        .iter()
        .find(|(name, _)| *name == stem)
        .map(|(_, text)| text.to_string())
        .ok_or_else(|| WedError::config(format!("instance file '{spec}' not found")))
}

pub fn shipped_instance(name: &str) -> Option<&'static str> {
    SHIPPED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

struct Output {
    dir: PathBuf,
    record_timing: bool,
    meta: Report,
    start: Instant,
}

impl Output {
    fn new(common: &Common, command: &str, cfg: &RunConfig) -> Result<Self, WedError> {
        fs::create_dir_all(&common.output_dir).map_err(|e| {
            WedError::config(format!("cannot create output directory {}: {e}", common.output_dir.display()))
        })?;
        let mut meta = Report::new();
        let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        meta.put("command", command)
            .put("instance", &common.instance)
            .put("version", env!("CARGO_PKG_VERSION"))
            .put("started_unix_s", format!("{started:.3}"))
            .put("record_timing", common.record_timing);
        for line in cfg.to_text().lines() {
            if let Some((k, v)) = line.split_once(" = ") {
                meta.put(format!("config.{k}"), v);
            }
        }
        Ok(Output { dir: common.output_dir.clone(), record_timing: common.record_timing, meta, start: Instant::now() })
    }

    fn write(&self, name: &str, body: &str) -> Result<(), WedError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| WedError::config(format!("cannot write {}: {e}", path.display())))
    }

    fn finish(mut self) -> Result<(), WedError> {
        let elapsed = self.start.elapsed().as_secs_f64();
        self.meta.float("wall_time_s", elapsed);
        self.write("metadata.txt", &self.meta.to_text())
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let common = match &cli.command {
        Command::ChainCheck(a) => &a.common,
        Command::Minimize(c)
        | Command::Reference(c)
        | Command::CausalSweep(c)
        | Command::LambdaSweep(c)
        | Command::VerifyAssumptions(c)
        | Command::Compare(c) => c,
    };
    let result = match common.workers {
        Some(0) => Err(WedError::config("--workers must be at least 1")),
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command)),
            Err(e) => Err(WedError::config(format!("cannot start {w} workers: {e}"))),
        },
        None => dispatch(&cli.command),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("wed: {e}");
            if e.is_configuration() {
                EXIT_CONFIG
            } else {
                write_diagnostics(&common.output_dir, &e);
                EXIT_NUMERICAL
            }
        }
    }
}

fn write_diagnostics(dir: &Path, e: &WedError) {
    let _ = fs::create_dir_all(dir);
    let mut r = Report::new();
    r.put("error", e.to_string());
    match e {
        WedError::StalledLineSearch { iteration, value, last } => {
            r.put("kind", "stalled_line_search").put("iteration", iteration).float("value", *value);
            let grid = wed_core::SpatialGrid::new(last.space_len(), 1.0);
            if let Ok(grid) = grid {
                r.put("last_iterate", "diagnostics_last_iterate.csv (node coordinates on the unit interval)");
                let _ = fs::write(dir.join("diagnostics_last_iterate.csv"), io::trajectory_csv(last, &grid));
            }
        }
        WedError::StepFailure { t, diagnostics } => {
            r.put("kind", "step_failure").float("t", *t).put("detail", diagnostics);
        }
        WedError::Evaluation { node, what } => {
            r.put("kind", "evaluation").put("node", node).put("detail", what);
        }
        _ => {
            r.put("kind", "numerical");
        }
    }
    let _ = fs::write(dir.join("diagnostics.txt"), r.to_text());
}

fn dispatch(cmd: &Command) -> Result<i32, WedError> {
    match cmd {
        Command::Minimize(c) => cmd_minimize(c),
        Command::Reference(c) => cmd_reference(c),
        Command::CausalSweep(c) => cmd_causal(c),
        Command::LambdaSweep(c) => cmd_lambda(c),
        Command::VerifyAssumptions(c) => cmd_verify(c),
        Command::ChainCheck(a) => cmd_chain(a),
        Command::Compare(c) => cmd_compare(c),
    }
}

fn write_solve(out: &Output, rep: &SolveReport, grid: &wed_core::SpatialGrid) -> Result<(), WedError> {
    out.write("minimizer.csv", &io::trajectory_csv(&rep.minimizer, grid))?;
    out.write("el_residual.csv", &io::el_csv(&rep.el))?;
    out.write("value_history.csv", &io::value_history_csv(&rep.value_history))?;
    out.write("solve_report.txt", &io::solve_report(rep).to_text())
}

fn not_converged(out: &Output, rep: &SolveReport) -> Result<i32, WedError> {
    let mut d = Report::new();
    d.put("kind", "not_converged")
        .put("iterations", rep.iterations)
        .float("grad_norm", rep.grad_norm)
        .put("detail", "iteration limit reached before the gradient tolerance");
    out.write("diagnostics.txt", &d.to_text())?;
    eprintln!("wed: no convergence after {} iterations (grad_norm {:e})", rep.iterations, rep.grad_norm);
    Ok(EXIT_NUMERICAL)
}

fn cmd_minimize(c: &Common) -> Result<i32, WedError> {
    let cfg = resolve_config(c)?;
    let inst = cfg.instance()?;
    let wed = cfg.wed()?;
    let opt = cfg.optimize()?;
    let mut out = Output::new(c, "minimize", &cfg)?;
    let rep = minimize(&inst, &wed, &opt, &Init::ConstantU0)?;
    write_solve(&out, &rep, &inst.grid)?;
    out.meta.float("solve_wall_time_s", rep.wall_time);
    println!(
        "{}: W = {:.10e}, grad_norm = {:.3e}, iterations = {}",
        rep.label, rep.value.total, rep.grad_norm, rep.iterations
    );
    let converged = rep.converged;
    let code = if converged { EXIT_OK } else { not_converged(&out, &rep)? };
    out.finish()?;
    Ok(code)
}

fn cmd_reference(c: &Common) -> Result<i32, WedError> {
    let cfg = resolve_config(c)?;
    let inst = cfg.instance()?;
    let stepper = cfg.stepper()?;
    let out = Output::new(c, "reference", &cfg)?;
    let sol = solve_flow_detailed(&inst, &stepper)?;
    out.write("reference.csv", &io::trajectory_csv(&sol.trajectory, &inst.grid))?;
    let mut body = String::from("m,t,energy,newton_iterations\n");
    for (m, e) in sol.energies.iter().enumerate() {
        let its = if m == 0 { 0 } else { sol.newton_iterations[m - 1] };
        body += &format!("{m},{:.16e},{e:.16e},{its}\n", sol.trajectory.time(m));
    }
    out.write("reference_energy.csv", &body)?;
    println!("reference flow: {} steps, final energy {:.10e}", stepper.steps, sol.energies.last().unwrap_or(&f64::NAN));
    out.finish()?;
    Ok(EXIT_OK)
}

fn write_sweep(out: &mut Output, run: &SweepRun, grid: &wed_core::SpatialGrid, target: &str) -> Result<(), WedError> {
    out.write("sweep.csv", &run.table.to_csv(out.record_timing))?;
    let mut summary = io::sweep_summary(run);
    summary.put("target", target);
    out.write("sweep_summary.txt", &summary.to_text())?;
    out.write("target.csv", &io::trajectory_csv(&run.target, grid))?;
    for (i, m) in run.minimizers.iter().enumerate() {
        if let Some(t) = m {
            out.write(&format!("minimizer_{i}.csv"), &io::trajectory_csv(t, grid))?;
        }
    }
    for (i, row) in run.table.rows.iter().enumerate() {
        out.meta.float(format!("row.{i}.wall_time_s"), row.wall_time);
    }
    print!("{}", run.table.to_csv(out.record_timing));
    Ok(())
}

fn sweep_code(run: &SweepRun) -> i32 {
    if run.table.rows.iter().all(|r| r.failure.is_none()) {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    }
}

fn cmd_causal(c: &Common) -> Result<i32, WedError> {
    let cfg = resolve_config(c)?;
    let inst = cfg.instance()?;
    let lambda = cfg.wed()?.lambda;
    let opt = cfg.optimize()?;
    let settings = cfg.sweep()?;
    let eps = cfg.epsilons()?;
    let mut out = Output::new(c, "causal-sweep", &cfg)?;
    let run = causal_sweep(&inst, &eps, lambda, &opt, &settings)?;
    write_sweep(&mut out, &run, &inst.grid, &format!("reference flow ({})", settings.reference.g_evaluation.name()))?;
    let code = sweep_code(&run);
    if code != EXIT_OK {
        out.write("diagnostics.txt", &failed_rows(&run))?;
    }
    out.finish()?;
    Ok(code)
}

fn cmd_lambda(c: &Common) -> Result<i32, WedError> {
    let cfg = resolve_config(c)?;
    let inst = cfg.instance()?;
    let eps = cfg.wed()?.epsilon;
    let opt = cfg.optimize()?;
    let settings = cfg.sweep()?;
    let lambdas = cfg.lambdas()?;
    let mut out = Output::new(c, "lambda-sweep", &cfg)?;
    let run = lambda_sweep(&inst, eps, &lambdas, &opt, &settings)?;
    let target = if inst.potential.is_smooth() { "lambda = 0 minimizer" } else { "smallest-lambda minimizer" };
    write_sweep(&mut out, &run, &inst.grid, target)?;
    let code = sweep_code(&run);
    if code != EXIT_OK {
        out.write("diagnostics.txt", &failed_rows(&run))?;
    }
    out.finish()?;
    Ok(code)
}

fn failed_rows(run: &SweepRun) -> String {
    let mut r = Report::new();
    r.put("kind", "failed_rows");
    for (i, row) in run.table.rows.iter().enumerate() {
        if let Some(f) = &row.failure {
            r.put(format!("row.{i}"), f);
        }
    }
    r.to_text()
}

fn cmd_verify(c: &Common) -> Result<i32, WedError> {
    let cfg = resolve_config(c)?;
    let inst = cfg.instance()?;
    let out = Output::new(c, "verify-assumptions", &cfg)?;
    let rep = verify_assumptions(&inst, cfg.radius()?, cfg.samples()?, cfg.seed()?)?;
    out.write("assumptions.txt", &io::assumption_report(&rep).to_text())?;
    for r in &rep.records {
        println!("{:<12} {} worst_ratio = {:.6e}", r.name, if r.pass { "pass" } else { "FAIL" }, r.worst_ratio);
    }
    out.finish()?;
    Ok(EXIT_OK)
}

fn cmd_chain(a: &ChainArgs) -> Result<i32, WedError> {
    let c = &a.common;
    let cfg = resolve_config(c)?;
    let inst = cfg.instance()?;
    let wed = cfg.wed()?;
    let out = Output::new(c, "chain-check", &cfg)?;
    let mut r = Report::new();
    if let Some(path) = &a.trajectory {
        let text = fs::read_to_string(path).map_err(|e| WedError::config(format!("cannot read {}: {e}", path.display())))?;
        let file = io::read_trajectory_csv(&text)?;
        let traj = file.trajectory;
        let cfg_m = wed_core::WedConfig::new(wed.epsilon, wed.lambda, traj.steps())?.with_quadrature(wed.quadrature);
        let d = chain_rule_check(&traj, &inst, &cfg_m)?;
        r.put("trajectory", path.display()).put("steps", traj.steps()).float("defect", d);
        println!("defect = {d:.6e}");
    } else {
        r.put("trajectory", "exp(-t) u0");
        let mut prev: Option<f64> = None;
        for (i, m) in [wed.steps, 2 * wed.steps, 4 * wed.steps].into_iter().enumerate() {
            let u0 = inst.u0.clone();
            let traj = Trajectory::new(
                (0..=m).map(|k| {
                    let t = inst.horizon * k as f64 / m as f64;
                    u0.iter().map(|v| (-t).exp() * v).collect::<Vec<_>>().into()
                }).collect(),
                inst.horizon,
            )?;
            let cfg_m = wed_core::WedConfig::new(wed.epsilon, wed.lambda, m)?.with_quadrature(wed.quadrature);
            let d = chain_rule_check(&traj, &inst, &cfg_m)?;
            r.put(format!("run.{i}.steps"), m).float(format!("run.{i}.defect"), d);
            if let Some(p) = prev {
                r.float(format!("run.{i}.ratio"), p / d);
            }
            println!("M = {m:>5}  defect = {d:.6e}{}", prev.map(|p| format!("  ratio = {:.4}", p / d)).unwrap_or_default());
            prev = Some(d);
        }
    }
    out.write("chain_check.txt", &r.to_text())?;
    out.finish()?;
    Ok(EXIT_OK)
}

fn cmd_compare(c: &Common) -> Result<i32, WedError> {
    let cfg = resolve_config(c)?;
    let inst = cfg.instance()?;
    let wed = cfg.wed()?;
    let opt = cfg.optimize()?;
    let stepper = cfg.stepper()?;
    let mut out = Output::new(c, "compare", &cfg)?;
    let reference = solve_flow_detailed(&inst, &stepper)?.trajectory;
    let rep = minimize(&inst, &wed, &opt, &Init::ConstantU0)?;
    write_solve(&out, &rep, &inst.grid)?;
    out.write("reference.csv", &io::trajectory_csv(&reference, &inst.grid))?;
    let err = rep.minimizer.l2h_distance(&reference, &inst.grid)?;
    let err_final = inst.grid.distance(rep.minimizer.last(), reference.last());
    let mut r = Report::new();
    r.float("epsilon", wed.epsilon)
        .float("lambda", wed.lambda)
        .float("err_L2H", err)
        .float("err_final", err_final)
        .put("converged", rep.converged)
        .put("error_norm", "err_L2H = sqrt(sum_{m=1..M} tau |u_m - v_m|_H^2), |w|_H^2 = h sum_i w_i^2");
    out.write("compare.txt", &r.to_text())?;
    out.meta.float("solve_wall_time_s", rep.wall_time);
    println!("err_L2H = {err:.16e}");
    println!("err_final = {err_final:.16e}");
    let code = if rep.converged { EXIT_OK } else { not_converged(&out, &rep)? };
    out.finish()?;
    Ok(code)
}
