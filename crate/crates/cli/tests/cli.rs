use std::f64::consts::FRAC_PI_4;
use std::path::Path;
use std::process::{Command, Output};

use qsteer_cli::{
    parse_config, run_experiment, sweep, to_csv_string, ExperimentConfig, ExperimentKind,
};

fn qsteer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsteer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let idx = reader
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == name)
        .unwrap();
    reader
        .records()
        .map(|r| r.unwrap()[idx].to_string())
        .collect()
}

#[test]
fn figure1a_writes_39_rows_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let res = qsteer(&[
            "figure1a",
            "--seed",
            "5",
            "--trajectories",
            "2000",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(
            res.status.success(),
            "{}",
            String::from_utf8_lossy(&res.stderr)
        );
        assert!(res.stdout.is_empty());
        assert!(
            res.stderr.is_empty(),
            "seed was given, so no notice is expected"
        );
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 40);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(column(&text, "seed").iter().all(|s| s == "5"));
}

#[test]
fn stdout_output_and_seed_notice() {
    let res = qsteer(&["figure1b", "--exact-only"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.starts_with(
        "experiment,d,N,theta,gamma_sq,exact,closed_form,mc_estimate,mc_stderr,seed\n"
    ));
    assert_eq!(text.lines().count(), 40);
    assert!(String::from_utf8_lossy(&res.stderr).contains("seed 0"));
    assert!(column(&text, "mc_estimate").iter().all(String::is_empty));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.toml",
        "kind = \"single\"\nrounds = 2\ntargets = [7]\n",
    );
    let res = qsteer(&["run", &bad]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("targets[0]"));

    let huge = write(
        dir.path(),
        "huge.toml",
        "kind = \"single\"\nmethod = \"brute_force\"\nd = 6\nrounds = 30\n",
    );
    assert_eq!(
        qsteer(&["run", &huge, "--seed", "1"]).status.code(),
        Some(3)
    );

    assert_eq!(
        qsteer(&["run", "/nonexistent/config.toml"]).status.code(),
        Some(4)
    );
    let good = write(dir.path(), "good.toml", "kind = \"single\"\nrounds = 2\n");
    assert_eq!(
        qsteer(&["run", &good, "--out", "/nonexistent/dir/out.csv"])
            .status
            .code(),
        Some(4)
    );
    assert_eq!(
        qsteer(&["run", &good, "--trajectories", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(qsteer(&["sweep", &good]).status.code(), Some(2));
    assert_eq!(qsteer(&["run", &good]).status.code(), Some(0));
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "mc.toml",
        "kind = \"single\"\nrounds = 3\nseed = 1\ntrajectories = 500\n[initial]\nkind = \"pure\"\nindex = 1\n",
    );
    let from_file = String::from_utf8(qsteer(&["run", &cfg]).stdout).unwrap();
    assert_eq!(column(&from_file, "seed"), vec!["1"]);
    let overridden = String::from_utf8(qsteer(&["run", &cfg, "--seed", "9"]).stdout).unwrap();
    assert_eq!(column(&overridden, "seed"), vec!["9"]);
    let exact = String::from_utf8(qsteer(&["run", &cfg, "--exact-only"]).stdout).unwrap();
    assert_eq!(column(&exact, "mc_estimate"), vec![""]);
}

#[test]
fn matrix_file_initial_state() {
    let dir = tempfile::tempdir().unwrap();
    let rho = write(dir.path(), "rho.txt", "# diag(0, 1)\n0 0\n0 1\n");
    let cfg = write(
        dir.path(),
        "file.toml",
        &format!("kind = \"single\"\nrounds = 4\n[initial]\nkind = \"file\"\npath = \"{rho}\"\n"),
    );
    let out = qsteer(&["run", &cfg, "--seed", "0"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(column(&text, "exact"), vec!["0.937500000000"]);

    let bad = write(dir.path(), "bad.txt", "2 0\n0 -1\n");
    let cfg = write(
        dir.path(),
        "bad.toml",
        &format!("kind = \"single\"\nrounds = 4\n[initial]\nkind = \"file\"\npath = \"{bad}\"\n"),
    );
    assert_eq!(qsteer(&["run", &cfg]).status.code(), Some(2));
}

#[test]
fn theta_sweep_peaks_at_quarter_pi() {
    let cfg = parse_config(
        r#"
        kind = "sweep"
        rounds = 5
        basis = "param2d"
        [initial]
        kind = "pure"
        index = 1
        [sweep]
        theta = { from = 0.0, to = "pi/2", points = 181 }
        "#,
    )
    .unwrap();
    let rows = sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 181);
    let best = rows
        .iter()
        .max_by(|a, b| a.exact.total_cmp(&b.exact))
        .unwrap();
    assert!((best.theta.unwrap() - FRAC_PI_4).abs() < 1e-12);
    for r in &rows {
        assert!((r.exact - r.closed_form.unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn coherence_sweep_for_singlet_like_target_decreases() {
    let cfg = parse_config(
        r#"
        kind = "sweep"
        rounds = 3
        [bipartite]
        alpha = 0.7071067811865476
        beta = -0.7071067811865476
        p = 0.5
        [sweep]
        over = "bipartite"
        gamma_sq = [0.0, 0.5, 1.0]
        "#,
    )
    .unwrap();
    let rows = sweep(&cfg).unwrap();
    let values: Vec<f64> = rows.iter().map(|r| r.exact).collect();
    assert_eq!(
        rows.iter().map(|r| r.gamma_sq.unwrap()).collect::<Vec<_>>(),
        vec![0.0, 0.5, 1.0]
    );
    assert!(values[0] > values[1] && values[1] > values[2], "{values:?}");
    assert!(rows.iter().all(|r| r.experiment == "bipartite"));
}

#[test]
fn single_point_sweep_matches_single_run() {
    let body = "rounds = 4\nseed = 11\ntrajectories = 3000\nd = 3\ntargets = [0, 2]\n[initial]\nkind = \"qubit_like\"\np = 0.2\ngamma = [0.0, 0.6]\n";
    let single =
        run_experiment(&parse_config(&format!("kind = \"single\"\n{body}")).unwrap()).unwrap();
    let swept =
        sweep(&parse_config(&format!("kind = \"sweep\"\n{body}[sweep]\nd = [3]\n")).unwrap())
            .unwrap();
    assert_eq!(single, swept);
    assert_eq!(to_csv_string(&single), to_csv_string(&swept));
}

#[test]
fn sweep_rows_follow_axis_order() {
    let cfg = parse_config(
        "kind = \"sweep\"\nrounds = [1, 2]\nbasis = \"param2d\"\n[sweep]\ntheta = [\"pi/4\", \"pi/8\"]\nd = [2]\n",
    )
    .unwrap();
    let rows = sweep(&cfg).unwrap();
    let keys: Vec<(u64, usize)> = rows
        .iter()
        .map(|r| ((r.theta.unwrap() * 1e6) as u64, r.rounds))
        .collect();
    assert_eq!(
        keys,
        vec![(785398, 1), (785398, 2), (392699, 1), (392699, 2)]
    );

    let cfg =
        parse_config("kind = \"sweep\"\nrounds = { from = 0, to = 2 }\n[sweep]\nd = [2, 3, 5]\n")
            .unwrap();
    let rows = sweep(&cfg).unwrap();
    let keys: Vec<(usize, usize)> = rows.iter().map(|r| (r.d, r.rounds)).collect();
    assert_eq!(
        keys,
        vec![
            (2, 0),
            (2, 1),
            (2, 2),
            (3, 0),
            (3, 1),
            (3, 2),
            (5, 0),
            (5, 1),
            (5, 2)
        ]
    );
    for r in rows {
        assert!((r.exact - r.closed_form.unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn rows_stay_in_the_unit_interval() {
    let configs = [
        ExperimentConfig::of_kind(ExperimentKind::Figure1a),
        ExperimentConfig::of_kind(ExperimentKind::Figure1b),
        parse_config("kind = \"haar_average\"\nd = 3\nrounds = { from = 0, to = 5 }\ntrajectories = 200\n").unwrap(),
        parse_config("kind = \"copies\"\nd = 3\nrounds = [0, 7]\n[copies]\ncopies = 2\noverlaps = [0.5, 0.25]\n").unwrap(),
    ];
    for cfg in configs {
        for r in run_experiment(&cfg).unwrap() {
            for v in [Some(r.exact), r.closed_form, r.mc_estimate]
                .into_iter()
                .flatten()
            {
                assert!((0.0..=1.0).contains(&v), "{r:?}");
            }
            assert!(r.mc_stderr.unwrap_or(0.0) >= 0.0);
        }
    }
}
