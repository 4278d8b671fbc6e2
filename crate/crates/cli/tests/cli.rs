//! End-to-end tests driving the compiled binary over the fixture scenarios.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn outdir(tag: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(tag);
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn invar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invar"))
        .args(args)
        .output()
        .expect("binary should run")
}

fn run(cmd: &str, fixture_name: &str, tag: &str) -> (Output, PathBuf) {
    let out = outdir(tag);
    let output = invar(&[
        cmd,
        "--scenario",
        fixture(fixture_name).to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    (output, out)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("process should exit with a code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|_| panic!("expected artifact {name}"))
}

#[test]
fn hamiltonian_passes_on_the_sign_construction() {
    let (o, dir) = run("check-hamiltonian", "ex2_1.scenario", "ham_ex21");
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("status: PASS"), "stdout: {text}");
    assert!(text.contains("hypothesis flags"), "banner missing: {text}");
    let manifest = read(&dir, "manifest.txt");
    assert!(manifest.contains("command: check-hamiltonian"));
    assert!(manifest.contains("status: PASS"));
    assert!(manifest.contains("exit: 0"));
    assert!(manifest.contains("scenario_fnv64: "));
    assert!(!dir.join("witness.csv").exists(), "a PASS run should not leave a witness");
}

#[test]
fn hamiltonian_fails_on_the_nonneg_gain_with_witness() {
    let (o, dir) = run("check-hamiltonian", "zero_one.scenario", "ham_zero_one");
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("status: FAIL"));
    let witness = read(&dir, "witness.csv");
    let row = witness.lines().nth(1).expect("one witness row");
    let fields: Vec<&str> = row.split(',').collect();
    let x: f64 = fields[2].trim_matches('"').parse().unwrap();
    let margin: f64 = fields[5].parse().unwrap();
    assert!(x > 0.0, "witness should sit at positive x, got {x}");
    assert!((margin - 2.0 * x).abs() <= 1e-9, "margin {margin} should be 2x at x={x}");
}

#[test]
fn falsify_escapes_the_nonneg_gain_along_the_ray() {
    let (o, dir) = run("falsify", "zero_one.scenario", "falsify_zero_one");
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("escape: found"));
    let csv = read(&dir, "escape.csv");
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("t,x1"));
    for line in lines.take(20) {
        let fields: Vec<&str> = line.split(',').collect();
        let t: f64 = fields[0].parse().unwrap();
        let x: f64 = fields[1].parse().unwrap();
        assert!((x - t).abs() <= 2.0 * 0.001, "escape should track x(t)=t, got x={x} at t={t}");
    }
    assert!(dir.join("witness.csv").exists());
    assert!(read(&dir, "manifest.txt").contains("escaped: yes"));
}

#[test]
fn falsify_finds_no_escape_from_the_sign_equilibrium() {
    let (o, dir) = run("falsify", "sign_intro.scenario", "falsify_sign");
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let report = read(&dir, "report.txt");
    assert!(report.contains("escape: none"));
    assert!(report.contains("trials: 1000"));
    assert!(report.contains("max_node_measure: 0.0"));
    assert!(!dir.join("escape.csv").exists());
}

#[test]
fn boundary_checks_fail_on_the_sign_equilibrium() {
    let (o, dir) = run("check-normal-cone", "sign_intro.scenario", "ncone_sign");
    assert_eq!(code(&o), 1);
    assert!(read(&dir, "verdict.txt").contains("status: FAIL"));

    let (o, dir) = run("check-tangent", "sign_intro.scenario", "tangent_sign");
    assert_eq!(code(&o), 1);
    let verdict = read(&dir, "verdict.txt");
    assert!(verdict.contains("status: FAIL"));
    assert!(
        verdict.contains("sufficient-only"),
        "without the convex-value flags the tangent FAIL must be qualified: {verdict}"
    );
}

#[test]
fn monotone_agrees_on_both_routes_per_fixture() {
    let (o, dir) = run("check-monotone", "coop2d.scenario", "mono_coop");
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let manifest = read(&dir, "manifest.txt");
    assert!(manifest.contains("status: PASS"));
    assert!(manifest.contains("cross_status: PASS"));
    assert!(dir.join("cross_verdict.txt").exists());

    let (o, dir) = run("check-monotone", "coop2d_flip.scenario", "mono_flip");
    assert_eq!(code(&o), 1);
    let manifest = read(&dir, "manifest.txt");
    assert!(manifest.contains("status: FAIL"));
    assert!(manifest.contains("cross_status: FAIL"));

    let (o, dir) = run("check-monotone", "gain1d.scenario", "mono_gain");
    assert_eq!(code(&o), 1);
    let witness = read(&dir, "witness.csv");
    let row = witness.lines().nth(1).expect("one witness row");
    let direction = row.split(',').nth(3).unwrap().trim_matches('"');
    assert_eq!(direction, "0.0", "the gain violation sits on the diagonal");
}

#[test]
fn simulate_single_descends_to_the_invariant_point() {
    let (o, dir) = run("simulate", "ex2_1.scenario", "sim_ex21");
    assert_eq!(code(&o), 0);
    let csv = read(&dir, "trajectory.csv");
    assert!(csv.starts_with("t,x1"));
    let summary = read(&dir, "summary.txt");
    assert!(summary.contains("final_state: 0.0"));
    assert!(summary.contains("final_measure: 0.0"));
}

#[test]
fn simulate_pair_reports_the_gain_order_violation() {
    let (o, dir) = run("simulate", "gain1d.scenario", "sim_gain");
    assert_eq!(code(&o), 1);
    let summary = read(&dir, "summary.txt");
    assert!(summary.contains("violated: yes"));
    let csv = read(&dir, "pair.csv");
    assert!(csv.starts_with("t,x1_1,x2_1,margin"));
    assert!(dir.join("witness.csv").exists());

    let (o, dir) = run("simulate", "coop2d.scenario", "sim_coop");
    assert_eq!(code(&o), 0);
    assert!(read(&dir, "summary.txt").contains("violated: no"));
    assert!(dir.join("pair.csv").exists());
}

#[test]
fn viable_euler_writes_arcs_and_a_converged_report() {
    let (o, dir) = run("viable-euler", "ex2_1.scenario", "euler_ex21");
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let report = read(&dir, "report.txt");
    assert!(report.contains("converged: yes"));
    for k in [4, 8, 16] {
        let csv = read(&dir, &format!("arc_k{k}.csv"));
        assert!(csv.starts_with("t,x1"), "arc csv header: {}", csv.lines().next().unwrap());
        assert!(csv.lines().count() > k, "arc for k={k} should have at least k nodes");
    }
    assert!(read(&dir, "manifest.txt").contains("converged: true"));
}

#[test]
fn reruns_reproduce_every_artifact_byte_for_byte() {
    for (cmd, fix) in [
        ("check-hamiltonian", "ex2_1.scenario"),
        ("falsify", "zero_one.scenario"),
        ("check-monotone", "gain1d.scenario"),
    ] {
        let tag_a = format!("rerun_a_{cmd}");
        let tag_b = format!("rerun_b_{cmd}");
        let (oa, da) = run(cmd, fix, &tag_a);
        let (ob, db) = run(cmd, fix, &tag_b);
        assert_eq!(code(&oa), code(&ob));
        assert_eq!(oa.stdout, ob.stdout, "{cmd} stdout should be deterministic");
        let mut names: Vec<String> = fs::read_dir(&da)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert!(!names.is_empty());
        for name in names {
            let a = fs::read(da.join(&name)).unwrap();
            let b = fs::read(db.join(&name)).unwrap_or_else(|_| panic!("{name} missing in rerun"));
            assert_eq!(a, b, "{cmd}: {name} should be byte-identical across reruns");
        }
    }
}

#[test]
fn overrides_change_the_effective_settings() {
    let out = outdir("overrides");
    let o = invar(&[
        "check-hamiltonian",
        "--scenario",
        fixture("ex2_1.scenario").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "7",
        "--tol",
        "1e-8",
        "--grid",
        "0.002",
        "--budget",
        "512",
    ]);
    assert_eq!(code(&o), 0);
    let manifest = read(&out, "manifest.txt");
    assert!(manifest.contains("seed: 7"));
    assert!(manifest.contains("tol: 1e-8"));
    assert!(manifest.contains("grid: 0.002"));
    assert!(manifest.contains("budget: 512"));
}

#[test]
fn missing_sections_and_files_exit_inconclusive() {
    let (o, dir) = run("check-monotone", "ex2_1.scenario", "missing_order");
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("missing section: order"));
    let manifest = read(&dir, "manifest.txt");
    assert!(manifest.contains("error: missing section: order"));
    assert!(manifest.contains("exit: 2"));

    let out = outdir("missing_file");
    let o = invar(&[
        "simulate",
        "--scenario",
        "/definitely/not/there.scenario",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("cannot read"));
}
