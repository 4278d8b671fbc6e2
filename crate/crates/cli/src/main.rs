//! Command line front end: loads a scenario file, runs one check or
//! simulation, and writes the verdict plus supporting artifacts into an
//! output directory.
//!
//! Every run writes `manifest.txt` recording the effective seed, tolerances,
//! and resolutions, so rerunning the same command on the same scenario file
//! reproduces every output byte for byte. Nothing here reads the clock.
//!
//! Exit codes: 0 the property held at the checked resolution, 1 it failed
//! with a witness, 2 the run could not decide (bad input, missing section,
//! or an inconclusive verdict).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use invar_core::{
    check_hamiltonian_condition, check_monotone_cone, check_monotone_gamma,
    check_normal_cone_condition, check_tangent_condition, falsify_invariance, load_scenario,
    refine, simulate_order_preservation, violation_csv, OrderKind, OrderedPairSample, Scenario,
    Verdict, Witness,
};

const MANIFEST_FORMAT: u32 = 1;

#[derive(Parser)]
#[command(name = "invar", version, about = "checks and simulations for product differential inclusions", max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    scenario: Option<PathBuf>,

    /// Output directory for verdicts, manifests, and trajectories.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Override the scenario seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Override the scenario tolerance.
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,

    /// Override the window grid spacing.
    #[arg(long, global = true, value_name = "H")]
    grid: Option<f64>,

    /// Override the enumeration budget.
    #[arg(long, global = true, value_name = "N")]
    budget: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sweep the window grid for points where the upper Hamiltonian of the
    /// constraint is positive.
    CheckHamiltonian,
    /// Test the proximal normal cone inequality at sampled boundary points.
    CheckNormalCone,
    /// Test velocity membership in the Clarke tangent cone at sampled
    /// boundary points.
    CheckTangent,
    /// Check that ordered states stay ordered: tangency of velocity
    /// differences at the order boundary, cross-validated on the stacked
    /// system.
    CheckMonotone,
    /// Integrate one trajectory, or an ordered pair when the scenario names
    /// two start points.
    Simulate,
    /// Run the Euler refinement schedule for the scenario's feedback and
    /// verification function.
    ViableEuler,
    /// Search for a trajectory that leaves the constraint set.
    Falsify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::CheckHamiltonian => "check-hamiltonian",
            Command::CheckNormalCone => "check-normal-cone",
            Command::CheckTangent => "check-tangent",
            Command::CheckMonotone => "check-monotone",
            Command::Simulate => "simulate",
            Command::ViableEuler => "viable-euler",
            Command::Falsify => "falsify",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            2
        }
    };
    match code {
        0 => ExitCode::SUCCESS,
        1 => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn run(cli: &Cli) -> Result<i32, String> {
    let path = cli
        .scenario
        .as_ref()
        .ok_or("--scenario PATH is required")?;
    let bytes = fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut scenario = load_scenario(path).map_err(|e| e.to_string())?;
    apply_overrides(&mut scenario, cli)?;

    fs::create_dir_all(&cli.out)
        .map_err(|e| format!("cannot create {}: {e}", cli.out.display()))?;

    print!("{}", scenario.banner());

    let mut manifest = Vec::new();
    manifest.push(("artifact".into(), format!("invar {}", env!("CARGO_PKG_VERSION"))));
    manifest.push(("format".into(), MANIFEST_FORMAT.to_string()));
    manifest.push(("command".into(), cli.command.name().to_string()));
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    manifest.push(("scenario".into(), file_name));
    manifest.push(("scenario_bytes".into(), bytes.len().to_string()));
    manifest.push(("scenario_fnv64".into(), format!("{:016x}", fnv64(&bytes))));
    manifest.push(("name".into(), scenario.name.clone()));
    manifest.push(("version".into(), scenario.version.to_string()));
    push_settings(&mut manifest, &scenario);

    let outcome = dispatch(cli.command, &scenario, &cli.out);
    let (code, extras) = match outcome {
        Ok((code, extras)) => (code, extras),
        Err(msg) => {
            manifest.push(("error".into(), msg.clone()));
            manifest.push(("exit".into(), "2".into()));
            write_file(&cli.out, "manifest.txt", &render_manifest(&manifest))?;
            return Err(msg);
        }
    };
    manifest.extend(extras);
    manifest.push(("exit".into(), code.to_string()));
    write_file(&cli.out, "manifest.txt", &render_manifest(&manifest))?;
    Ok(code)
}

fn apply_overrides(s: &mut Scenario, cli: &Cli) -> Result<(), String> {
    if let Some(seed) = cli.seed {
        s.run.seed = seed;
        if let Some(w) = &mut s.window {
            w.seed = seed;
        }
    }
    if let Some(tol) = cli.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(format!("--tol must be positive and finite, got {tol:?}"));
        }
        s.run.tol = tol;
        if let Some(w) = &mut s.window {
            w.tol = tol;
        }
    }
    if let Some(grid) = cli.grid {
        if !(grid.is_finite() && grid > 0.0) {
            return Err(format!("--grid must be positive and finite, got {grid:?}"));
        }
        if let Some(w) = &mut s.window {
            w.grid = grid;
        }
    }
    if let Some(budget) = cli.budget {
        if budget == 0 {
            return Err("--budget must be at least 1".into());
        }
        s.run.budget = budget;
    }
    Ok(())
}

fn push_settings(manifest: &mut Vec<(String, String)>, s: &Scenario) {
    let r = &s.run;
    manifest.push(("seed".into(), r.seed.to_string()));
    manifest.push(("tol".into(), format!("{:?}", r.tol)));
    manifest.push(("exit_tol".into(), format!("{:?}", r.exit_tol)));
    manifest.push(("trials".into(), r.trials.to_string()));
    manifest.push(("horizon".into(), format!("{:?}", r.horizon)));
    manifest.push(("step".into(), format!("{:?}", r.step)));
    manifest.push(("budget".into(), r.budget.to_string()));
    if let Some(w) = &s.window {
        manifest.push(("grid".into(), format!("{:?}", w.grid)));
        manifest.push(("samples".into(), w.samples.to_string()));
    }
    if s.order.is_some() {
        manifest.push(("order_samples".into(), s.order_samples.to_string()));
    }
}

type Outcome = Result<(i32, Vec<(String, String)>), String>;

fn dispatch(cmd: Command, s: &Scenario, out: &Path) -> Outcome {
    match cmd {
        Command::CheckHamiltonian => cmd_hamiltonian(s, out),
        Command::CheckNormalCone => cmd_boundary(s, out, false),
        Command::CheckTangent => cmd_boundary(s, out, true),
        Command::CheckMonotone => cmd_monotone(s, out),
        Command::Simulate => cmd_simulate(s, out),
        Command::ViableEuler => cmd_euler(s, out),
        Command::Falsify => cmd_falsify(s, out),
    }
}

fn cmd_hamiltonian(s: &Scenario, out: &Path) -> Outcome {
    let target = s
        .target()
        .ok_or("missing section: constraint (check-hamiltonian needs a constraint)")?;
    let region = s
        .window
        .clone()
        .ok_or("missing section: window (check-hamiltonian sweeps a grid over it)")?;
    let v = check_hamiltonian_condition(&s.inclusion, &target, &region);
    finish_verdict(out, "verdict.txt", &v)?;
    Ok((v.status.exit_code(), vec![("status".into(), v.status.label().into())]))
}

fn cmd_boundary(s: &Scenario, out: &Path, tangent: bool) -> Outcome {
    let cmd = if tangent { "check-tangent" } else { "check-normal-cone" };
    let set = s
        .constraint
        .clone()
        .ok_or(format!("missing section: constraint ({cmd} needs a constraint set)"))?;
    let region = s
        .window
        .clone()
        .ok_or(format!("missing section: window ({cmd} samples boundary points inside it)"))?;
    let v = if tangent {
        check_tangent_condition(&s.inclusion, &set, &region)
    } else {
        check_normal_cone_condition(&s.inclusion, &set, &region)
    };
    finish_verdict(out, "verdict.txt", &v)?;
    Ok((v.status.exit_code(), vec![("status".into(), v.status.label().into())]))
}

/// Runs the order-boundary tangency check. For cone orders the order-set
/// route on the stacked system runs as a cross-check; when the two routes
/// disagree on the outcome the final answer is inconclusive.
fn cmd_monotone(s: &Scenario, out: &Path) -> Outcome {
    let order = s
        .order
        .clone()
        .ok_or("missing section: order (check-monotone needs an order)")?;
    let primary = match order.kind {
        OrderKind::Cone { .. } => check_monotone_cone(&s.inclusion, &order, s.order_samples, s.run.seed),
        OrderKind::Gamma(_) => check_monotone_gamma(&s.inclusion, &order, s.order_samples, s.run.seed),
    };
    let mut extras = vec![("route".into(), route_name(&order.kind).into())];
    let final_v = if matches!(order.kind, OrderKind::Cone { .. }) {
        let cross = check_monotone_gamma(&s.inclusion, &order, s.order_samples, s.run.seed);
        write_file(out, "cross_verdict.txt", &cross.render())?;
        extras.push(("cross_route".into(), "order-set".into()));
        extras.push(("cross_status".into(), cross.status.label().into()));
        if cross.status == primary.status {
            primary
        } else {
            let mut v = Verdict::inconclusive(
                format!(
                    "cone route says {} but the order-set route says {}; the routes must agree",
                    primary.status.label(),
                    cross.status.label()
                ),
                primary.resolution.clone(),
            );
            v.witnesses = primary.witnesses.clone();
            v
        }
    } else {
        primary
    };
    finish_verdict(out, "verdict.txt", &final_v)?;
    extras.push(("status".into(), final_v.status.label().into()));
    Ok((final_v.status.exit_code(), extras))
}

fn route_name(kind: &OrderKind) -> &'static str {
    match kind {
        OrderKind::Cone { .. } => "cone",
        OrderKind::Gamma(_) => "order-set",
    }
}

fn cmd_simulate(s: &Scenario, out: &Path) -> Outcome {
    let plan = s
        .simulate
        .clone()
        .ok_or("missing section: simulate (simulate needs start point and policy)")?;
    let inc = &s.inclusion;
    match &plan.start2 {
        None => {
            let traj = inc
                .integrate(&plan.policy, &plan.start, plan.horizon, plan.step)
                .map_err(|e| format!("integration failed: {e}"))?;
            write_file(out, "trajectory.csv", &traj.to_csv())?;
            let mut summary = String::from("simulate summary\n");
            let _ = writeln!(summary, "steps: {}", traj.steps());
            let _ = writeln!(summary, "final_time: {:?}", traj.final_time());
            let _ = writeln!(summary, "final_state: {}", join_floats(traj.final_state()));
            if let Some(target) = s.target() {
                let m = target
                    .measure(traj.final_state())
                    .map_err(|e| format!("measure evaluation failed: {e}"))?;
                let _ = writeln!(summary, "final_measure: {m:?}");
            }
            print!("{summary}");
            write_file(out, "summary.txt", &summary)?;
            Ok((0, vec![("mode".into(), "single".into()), ("steps".into(), traj.steps().to_string())]))
        }
        Some(start2) => {
            let order = s
                .order
                .clone()
                .ok_or("missing section: order (a pair simulation compares against an order)")?;
            let u = inc.control_points().into_iter().next().unwrap_or_default();
            let pair = OrderedPairSample::new(&order, plan.start.clone(), start2.clone(), u.clone(), u)
                .map_err(|e| format!("start points are not an ordered pair: {e}"))?;
            let policy2 = plan.policy2.clone().unwrap_or_else(|| plan.policy.clone());
            let violation =
                simulate_order_preservation(inc, &order, &pair, &plan.policy, &policy2, plan.horizon, plan.step)
                    .map_err(|e| format!("pair integration failed: {e}"))?;
            let (traj1, traj2) = match &violation {
                Some(v) => (v.traj1.clone(), v.traj2.clone()),
                None => (
                    inc.integrate(&plan.policy, &plan.start, plan.horizon, plan.step)
                        .map_err(|e| format!("integration failed: {e}"))?,
                    inc.integrate(&policy2, start2, plan.horizon, plan.step)
                        .map_err(|e| format!("integration failed: {e}"))?,
                ),
            };
            let csv = violation_csv(&order, &traj1, &traj2)
                .map_err(|e| format!("margin evaluation failed: {e}"))?;
            write_file(out, "pair.csv", &csv)?;
            let mut summary = String::from("order preservation summary\n");
            let mut extras = vec![("mode".into(), "pair".into())];
            let code = match &violation {
                Some(v) => {
                    let _ = writeln!(summary, "violated: yes");
                    let _ = writeln!(summary, "t_star: {:?}", v.t_star);
                    let _ = writeln!(summary, "margin: {:?}", v.margin);
                    let _ = writeln!(summary, "phi1: {}", join_floats(&v.phi1));
                    let _ = writeln!(summary, "phi2: {}", join_floats(&v.phi2));
                    let w = Witness {
                        t: Some(v.t_star),
                        x: v.phi1.iter().chain(&v.phi2).copied().collect(),
                        direction: Vec::new(),
                        velocity: Vec::new(),
                        margin: v.margin,
                        note: "flowed pair left the order set".into(),
                    };
                    write_file(out, "witness.csv", &witness_csv(&[w]))?;
                    extras.push(("violated".into(), "yes".into()));
                    1
                }
                None => {
                    let _ = writeln!(summary, "violated: no");
                    let _ = writeln!(summary, "horizon: {:?}", plan.horizon);
                    extras.push(("violated".into(), "no".into()));
                    0
                }
            };
            print!("{summary}");
            write_file(out, "summary.txt", &summary)?;
            Ok((code, extras))
        }
    }
}

fn cmd_euler(s: &Scenario, out: &Path) -> Outcome {
    let plan = s
        .euler
        .clone()
        .ok_or("missing section: euler (viable-euler needs a feedback and schedule)")?;
    let psi = s
        .psi
        .clone()
        .ok_or("missing section: constraint with psi (viable-euler descends a verification function)")?;
    let report = refine(
        &plan.realization,
        &psi,
        &plan.start,
        &plan.stages,
        plan.quad_nodes,
        plan.ball_samples,
        s.run.seed,
        plan.tol,
    )
    .map_err(|e| format!("refinement failed: {e}"))?;
    print!("{}", report.render());
    write_file(out, "report.txt", &report.render())?;
    for (arc, (k, _)) in report.arcs.iter().zip(&plan.stages) {
        write_file(out, &format!("arc_k{k}.csv"), &arc.to_csv())?;
    }
    let mut extras = vec![
        ("stages".into(), report.stages.len().to_string()),
        ("converged".into(), report.converged.to_string()),
        ("final_margin".into(), format!("{:?}", report.final_margin)),
    ];
    let code = match &report.failure {
        None => 0,
        Some(f) => {
            let w = Witness {
                t: None,
                x: plan.start.clone(),
                direction: Vec::new(),
                velocity: Vec::new(),
                margin: f64::NAN,
                note: f.clone(),
            };
            write_file(out, "witness.csv", &witness_csv(&[w]))?;
            extras.push(("failure".into(), f.clone()));
            1
        }
    };
    Ok((code, extras))
}

fn cmd_falsify(s: &Scenario, out: &Path) -> Outcome {
    let target = s
        .target()
        .ok_or("missing section: constraint (falsify needs a set to escape from)")?;
    let plan = s
        .simulate
        .clone()
        .ok_or("missing section: simulate (falsify starts trials from its start point)")?;
    let r = &s.run;
    let report = falsify_invariance(
        &s.inclusion,
        &target,
        &plan.start,
        r.trials,
        r.horizon,
        r.step,
        r.exit_tol,
        r.seed,
    );
    print!("{}", report.render());
    write_file(out, "report.txt", &report.render())?;
    let mut extras = vec![
        ("trials_run".into(), report.trials.to_string()),
        ("skipped".into(), report.skipped.to_string()),
    ];
    let code = match &report.escape {
        Some(esc) => {
            write_file(out, "escape.csv", &esc.trajectory.to_csv())?;
            let w = Witness {
                t: Some(esc.t_exit),
                x: esc.trajectory.state_at(esc.t_exit),
                direction: Vec::new(),
                velocity: Vec::new(),
                margin: esc.margin,
                note: format!("escape by {} on trial {}", esc.policy, esc.trial),
            };
            write_file(out, "witness.csv", &witness_csv(&[w]))?;
            extras.push(("escaped".into(), "yes".into()));
            1
        }
        None if report.trials == 0 => {
            extras.push(("escaped".into(), "undetermined".into()));
            if let Some(e) = &report.first_error {
                extras.push(("first_error".into(), e.clone()));
            }
            2
        }
        None => {
            extras.push(("escaped".into(), "no".into()));
            0
        }
    };
    Ok((code, extras))
}

/// Prints the verdict, writes it to `name`, and writes `witness.csv` next to
/// it whenever the verdict carries witnesses.
fn finish_verdict(out: &Path, name: &str, v: &Verdict) -> Result<(), String> {
    print!("{}", v.render());
    write_file(out, name, &v.render())?;
    if !v.witnesses.is_empty() {
        write_file(out, "witness.csv", &witness_csv(&v.witnesses))?;
    }
    Ok(())
}

fn witness_csv(ws: &[Witness]) -> String {
    let mut out = String::from("index,t,x,direction,velocity,margin,note\n");
    for (i, w) in ws.iter().enumerate() {
        let t = w.t.map(|t| format!("{t:?}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{i},{t},\"{}\",\"{}\",\"{}\",{:?},\"{}\"",
            join_floats(&w.x),
            join_floats(&w.direction),
            join_floats(&w.velocity),
            w.margin,
            w.note.replace('"', "\"\"")
        );
    }
    out
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

fn render_manifest(lines: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in lines {
        let _ = writeln!(out, "{k}: {v}");
    }
    out
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), String> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn fnv64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
