use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const TOY: &str = "kappa = 1.0\n[model]\nkind = \"toy\"\npole = -1.0\n";

fn satreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_satreg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: TempDir::new().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self, name: &str, text: &str) -> String {
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p.to_string_lossy().into_owned()
    }

    fn out(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn read(&self, rel: &str) -> String {
        fs::read_to_string(self.path(rel)).unwrap()
    }

    fn json(&self, rel: &str) -> serde_json::Value {
        serde_json::from_str(&self.read(rel)).unwrap()
    }
}

/// `(re, im)` of the `pc` entry `(1, 1)` in each row of `transfer.csv`.
fn pc_values(csv: &str) -> Vec<(f64, f64)> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[2] == "pc" && f[3] == "1" && f[4] == "1")
        .map(|f| (f[5].parse().unwrap(), f[6].parse().unwrap()))
        .collect()
}

#[test]
fn toy_transfer_at_zero_is_one() {
    let ws = Workspace::new();
    let cfg = ws.config(
        "toy.toml",
        &format!(
            "{}[transfer]\nlambdas = [[0.0, 0.0]]\n",
            TOY.replace("1.0\n[model]", "0.0\n[model]")
        ),
    );
    let out = satreg(&["transfer", "--config", &cfg, "--out", &ws.out("o")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(pc_values(&ws.read("o/transfer.csv")), vec![(1.0, 0.0)]);
}

#[test]
fn wave_transfer_matches_exact_value() {
    let ws = Workspace::new();
    let cfg = ws.config(
        "w.toml",
        "kappa = 0.75\n[model]\nkind = \"wave1d\"\nmodes = 40\n[transfer]\nomegas_pi = [1.0]\n",
    );
    let out = satreg(&["transfer", "--config", &cfg, "--out", &ws.out("o")]);
    assert_eq!(code(&out), 0);
    let (re, im) = pc_values(&ws.read("o/transfer.csv"))[0];
    assert!(
        (re - 4.0 / 3.0).abs() <= 0.05 * 4.0 / 3.0 && im.abs() < 1e-6,
        "{re} {im}"
    );
}

#[test]
fn heat_without_feedback_fails_the_gate_at_zero() {
    let ws = Workspace::new();
    let cfg = ws.config(
        "h.toml",
        "kappa = 0.0\n[model]\nkind = \"heat2d\"\nmodes = 6\n[transfer]\nlambdas = [[0.0, 0.0]]\n",
    );
    let out = satreg(&["transfer", "--config", &cfg, "--out", &ws.out("o")]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_errors_exit_with_two() {
    let ws = Workspace::new();
    let missing = ws.out("missing.toml");
    let cases = [
        ws.config("syntax.toml", "kappa = [\n"),
        ws.config("unknown.toml", &format!("{TOY}[extra]\nx = 1\n")),
        ws.config("negative.toml", &TOY.replace("kappa = 1.0", "kappa = -1.0")),
        ws.config(
            "nofile.toml",
            "kappa = 1.0\n[model]\nkind = \"matrix-file\"\npath = \"absent.txt\"\n",
        ),
        ws.config(
            "dims.toml",
            &format!(
                "{TOY}[signals]\na0 = [1.0, 2.0]\n[saturation]\ncenters = [0.0]\nradii = [1.0]\n"
            ),
        ),
        missing,
    ];
    for cfg in &cases {
        let out = satreg(&["regulate", "--config", cfg, "--out", &ws.out("o")]);
        assert_eq!(
            code(&out),
            2,
            "{cfg}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    // Simulation needs a [simulation] section.
    let cfg = ws.config(
        "nosim.toml",
        &format!("{TOY}[saturation]\ncenters = [0.0]\nradii = [1.0]\n"),
    );
    assert_eq!(
        code(&satreg(&[
            "simulate",
            "--config",
            &cfg,
            "--out",
            &ws.out("o")
        ])),
        2
    );
    // Sampling too coarse for the signal frequencies.
    let cfg = ws.config(
        "coarse.toml",
        &format!("{TOY}[saturation]\ncenters = [0.0]\nradii = [5.0]\n[signals]\nfrequencies = [200.0]\nb = [[1.0]]\n[simulation]\nt_end = 1.0\ndt = 1e-2\n"),
    );
    assert_eq!(
        code(&satreg(&[
            "simulate",
            "--config",
            &cfg,
            "--out",
            &ws.out("o")
        ])),
        2
    );
}

#[test]
fn zero_signals_give_zero_coefficients_and_center_margin() {
    let ws = Workspace::new();
    let cfg = ws.config(
        "z.toml",
        "kappa = 3.0\n[model]\nkind = \"heat2d\"\nmodes = 5\n[saturation]\ncenters = [0.5, -0.25]\nradii = [2.0, 1.0]\n",
    );
    let out = satreg(&["regulate", "--config", &cfg, "--out", &ws.out("o")]);
    assert_eq!(code(&out), 0);
    let csv = ws.read("o/coefficients.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1]
        .split(',')
        .skip(2)
        .all(|v| v.parse::<f64>().unwrap() == 0.0));
    assert_eq!(ws.json("o/metrics.json")["linear_regime_margin"], 0.75);
}

#[test]
fn heat_regulate_lists_two_channels_and_four_frequencies() {
    let ws = Workspace::new();
    let out = satreg(&[
        "regulate",
        "--config",
        shipped("heat2d_paper.toml").to_str().unwrap(),
        "--out",
        &ws.out("o"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = ws.read("o/coefficients.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "k,omega,re_f_1,im_f_1,re_g_1,im_g_1,re_f_2,im_f_2,re_g_2,im_g_2"
    );
    let omegas: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let pi = std::f64::consts::PI;
    assert_eq!(omegas, vec![0.0, pi, 3.0 * pi, 5.0 * pi]);
    assert!(
        ws.json("o/metrics.json")["linear_regime_margin"]
            .as_f64()
            .unwrap()
            > 0.0
    );
}

fn oversized(ws: &Workspace) -> String {
    ws.config(
        "big.toml",
        &format!("{TOY}[saturation]\ncenters = [0.0]\nradii = [1.0]\n[signals]\na0 = [50.0]\n[simulation]\nt_end = 1.0\n"),
    )
}

#[test]
fn nonpositive_margin_warns_with_four() {
    let ws = Workspace::new();
    let cfg = oversized(&ws);
    let out = satreg(&["regulate", "--config", &cfg, "--out", &ws.out("r")]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("margin"));
    assert!(
        ws.json("r/metrics.json")["linear_regime_margin"]
            .as_f64()
            .unwrap()
            < 0.0
    );

    // Without --strict the simulation still runs.
    let out = satreg(&["simulate", "--config", &cfg, "--out", &ws.out("s")]);
    assert_eq!(code(&out), 4);
    assert!(ws.path("s/trajectory.csv").is_file());

    let out = satreg(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        &ws.out("strict"),
        "--strict",
    ]);
    assert_eq!(code(&out), 4);
    assert!(!ws.path("strict/trajectory.csv").exists());
}

#[test]
fn zero_signal_simulation_has_zero_outputs() {
    let ws = Workspace::new();
    let cfg = ws.config(
        "z.toml",
        "kappa = 0.75\n[model]\nkind = \"wave1d\"\nmodes = 6\n[saturation]\ncenters = [0.0]\nradii = [1.0]\n[simulation]\nt_end = 1.0\ninitial_state = \"zero\"\n",
    );
    let out = satreg(&["simulate", "--config", &cfg, "--out", &ws.out("o")]);
    assert_eq!(code(&out), 0);
    let csv = ws.read("o/trajectory.csv");
    assert_eq!(csv.lines().count(), 1002);
    for line in csv.lines().skip(1) {
        assert!(
            line.split(',')
                .skip(1)
                .all(|v| v.parse::<f64>().unwrap() == 0.0),
            "{line}"
        );
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let ws = Workspace::new();
    let cfg = shipped("wave1d_paper.toml");
    for dir in ["a", "b"] {
        let out = satreg(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            &ws.out(dir),
        ]);
        assert_eq!(code(&out), 0);
    }
    for file in ["trajectory.csv", "coefficients.csv", "metrics.json"] {
        assert_eq!(
            ws.read(&format!("a/{file}")),
            ws.read(&format!("b/{file}")),
            "{file}"
        );
    }
}

#[test]
fn shipped_wave_config_tracks() {
    let ws = Workspace::new();
    let out = satreg(&[
        "simulate",
        "--config",
        shipped("wave1d_paper.toml").to_str().unwrap(),
        "--out",
        &ws.out("o"),
    ]);
    assert_eq!(code(&out), 0);
    let m = ws.json("o/metrics.json");
    assert_eq!(m["state_dim"], 59);
    assert_eq!(m["coefficient_state_dim"], 79);
    assert!(m["decay_ratio"].as_f64().unwrap() <= 0.05, "{m}");
    let header = ws
        .read("o/trajectory.csv")
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(header, "t,y_1,yref_1,e_1,u_1,phi_u_1,xnorm,sat_active");
}

#[test]
fn measured_reference_of_toy_constant() {
    let ws = Workspace::new();
    let cfg = ws.config("m.toml", &format!("{TOY}[signals]\nc0 = [1.0]\n"));
    let out = satreg(&[
        "measure-disturbance",
        "--config",
        &cfg,
        "--out",
        &ws.out("o"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let measured: toml::Table = ws.read("o/measured_signals.toml").parse().unwrap();
    assert_eq!(
        measured["signals"]["a0"].as_array().unwrap()[0].as_float(),
        Some(0.5)
    );
    assert!(ws.json("o/metrics.json")["identity_gap"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn measured_reference_of_heat_disturbance_cancels_feedforward() {
    let ws = Workspace::new();
    let cfg = ws.config(
        "h.toml",
        "kappa = 3.0\n[model]\nkind = \"heat2d\"\nmodes = 12\n[signals]\nfrequencies_pi = [1.0, 5.0]\nc0 = [2.0]\nc = [[0.0], [3.0]]\nd = [[1.0], [0.0]]\n",
    );
    let out = satreg(&[
        "measure-disturbance",
        "--config",
        &cfg,
        "--out",
        &ws.out("o"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(ws.json("o/metrics.json")["identity_gap"].as_f64().unwrap() <= 1e-9);

    // The emitted file is itself a valid config whose feedforward is −κ y_ref.
    let out = satreg(&[
        "transfer",
        "--config",
        &ws.out("o/measured_signals.toml"),
        "--out",
        &ws.out("t"),
    ]);
    assert_eq!(code(&out), 0);
}

#[test]
fn zero_disturbance_measures_zero_reference() {
    let ws = Workspace::new();
    let cfg = ws.config(
        "z.toml",
        &format!("{TOY}[signals]\nfrequencies = [2.0]\nb = [[1.0]]\n"),
    );
    let out = satreg(&[
        "measure-disturbance",
        "--config",
        &cfg,
        "--out",
        &ws.out("o"),
    ]);
    assert_eq!(code(&out), 0);
    let measured: toml::Table = ws.read("o/measured_signals.toml").parse().unwrap();
    let signals = measured["signals"].as_table().unwrap();
    for key in ["a0", "c0"] {
        assert!(signals[key]
            .as_array()
            .unwrap()
            .iter()
            .all(|v| v.as_float() == Some(0.0)));
    }
    for key in ["a", "b", "c", "d"] {
        let rows = signals[key].as_array().unwrap();
        assert!(rows
            .iter()
            .flat_map(|r| r.as_array().unwrap())
            .all(|v| v.as_float() == Some(0.0)));
    }
}

#[test]
fn exported_model_reproduces_transfer_values() {
    let ws = Workspace::new();
    let text =
        "kappa = 3.0\n[model]\nkind = \"heat2d\"\nmodes = 6\n[transfer]\nomegas_pi = [1.0, 3.0]\n";
    let cfg = ws.config("h.toml", text);
    let out = satreg(&[
        "transfer",
        "--config",
        &cfg,
        "--out",
        &ws.out("a"),
        "--export-model",
    ]);
    assert_eq!(code(&out), 0);
    let file_cfg = ws.config(
        "f.toml",
        "kappa = 3.0\n[model]\nkind = \"matrix-file\"\npath = \"a/model.txt\"\n[transfer]\nomegas_pi = [1.0, 3.0]\n",
    );
    let out = satreg(&["transfer", "--config", &file_cfg, "--out", &ws.out("b")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(ws.read("a/transfer.csv"), ws.read("b/transfer.csv"));
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let ws = Workspace::new();
    let cfg = ws.config(
        "s.toml",
        &format!("{TOY}[saturation]\ncenters = [0.0]\nradii = [5.0]\n[signals]\nfrequencies = [1.0]\nb = [[1.0]]\n[simulation]\nt_end = 2.0\n"),
    );
    let out = satreg(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        &ws.out("o"),
        "--sweep",
        "kappa=0.5,2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let k05 = ws.json("o/kappa=0.5/metrics.json");
    let k2 = ws.json("o/kappa=2/metrics.json");
    assert_eq!(k05["kappa"], 0.5);
    assert_eq!(k2["kappa"], 2.0);

    let out = satreg(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        &ws.out("p"),
        "--sweep",
        "simulation.scheme=\"exponential-midpoint\"",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(ws
        .read("p/simulation.scheme=\"exponential-midpoint\"/metrics.json")
        .contains("exponential-midpoint"));

    for bad in ["kappa", "kappa=", "model.pole.x=1"] {
        let out = satreg(&[
            "simulate",
            "--config",
            &cfg,
            "--out",
            &ws.out("q"),
            "--sweep",
            bad,
        ]);
        assert_eq!(code(&out), 2, "{bad}");
    }
}

#[test]
fn sweep_reports_the_worst_exit_code() {
    let ws = Workspace::new();
    let cfg = ws.config(
        "s.toml",
        &format!("{TOY}[saturation]\ncenters = [0.0]\nradii = [1.0]\n[signals]\na0 = [0.5]\n"),
    );
    let out = satreg(&[
        "regulate",
        "--config",
        &cfg,
        "--out",
        &ws.out("o"),
        "--sweep",
        "signals.a0=[0.5],[50.0]",
    ]);
    // Commas split the list, so "[0.5]" and "[50.0]" are two values.
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(ws.path("o/signals.a0=[0.5]/coefficients.csv").is_file());
}

#[test]
fn verify_suites_and_fault_injection() {
    let ws = Workspace::new();
    let out = satreg(&["verify", "--suite", "saturation", "--out", &ws.out("v")]);
    assert_eq!(code(&out), 0);
    let records = ws.json("v/verify.json");
    assert!(records
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["passed"] == true && r["suite"] == "saturation"));

    let out = satreg(&[
        "verify",
        "--suite",
        "regulator",
        "--inject-fault",
        "corrupt-pi",
    ]);
    assert_eq!(code(&out), 1);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout
            .lines()
            .any(|l| l.starts_with("FAIL regulator/residual")),
        "{stdout}"
    );

    assert_eq!(code(&satreg(&["verify", "--suite", "nonsense"])), 2);
}

#[test]
fn full_verification_passes() {
    let out = satreg(&["verify"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(code(&out), 0, "{stdout}");
    assert!(stdout.trim_end().ends_with("0 failed"));
}
