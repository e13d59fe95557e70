use std::path::Path;
use std::process::{Command, Output};

use resetq::hbeta::ClosedLoop;
use resetq::metrics::{s_sigma, AmplitudePolicy, SteadyStatePolicy};
use resetq::presets;
use resetq::scalar::logspace;
use resetq::TimeRegularization;
use resetq_cli::config::{Config, System};
use resetq_cli::csvio::read_table;
use serde_json::Value;

fn resetq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resetq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn column(path: &Path, name: &str) -> Vec<Option<f64>> {
    let (header, rows) = read_table(path).unwrap();
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i]).collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn clegg_phase_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = resetq(&["sidf", "--element", "clegg", "--wmin", "0.1", "--wmax", "100", "--out", out]);
    assert!(o.status.success(), "{o:?}");
    let phase = column(&dir.path().join("sidf.csv"), "phase_deg");
    assert_eq!(phase.len(), 200);
    for p in phase {
        assert!((p.unwrap() + 38.15).abs() < 0.01);
    }
}

#[test]
fn linear_cglp_matches_linear_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = resetq(&["sidf", "--preset", "table1-cglp", "--gamma", "1", "--out", out]);
    assert!(o.status.success());
    let p = dir.path().join("sidf.csv");
    for (a, b) in column(&p, "magnitude_dB").iter().zip(column(&p, "linear_magnitude_dB")) {
        assert!((a.unwrap() - b.unwrap()).abs() < 1e-9);
    }
    for (a, b) in column(&p, "phase_deg").iter().zip(column(&p, "linear_phase_deg")) {
        assert!((a.unwrap() - b.unwrap()).abs() < 1e-7);
    }
}

#[test]
fn table1_cglp_is_flat_in_gain() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = resetq(&[
        "sidf", "--preset", "table1-cglp", "--wmin", "10rad/s", "--wmax", "9420rad/s", "--out", out,
    ]);
    assert!(o.status.success());
    let summary = json(&dir.path().join("sidf.json"));
    assert!(summary["magnitude_spread_dB"].as_f64().unwrap() < 3.0);
}

#[test]
fn holding_time_annotates_validity_limit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = resetq(&["sidf", "--element", "gfore", "--wr", "10", "--rho", "10ms", "--out", out]);
    assert!(o.status.success());
    let s = json(&dir.path().join("sidf.json"));
    let limit = s["validity_limit_rad_s"].as_f64().unwrap();
    assert!((limit - std::f64::consts::PI / 0.01).abs() < 1e-9);
    let grid = logspace(0.1, 1e4, 200);
    let above = grid.iter().filter(|&&w| w > limit).count() as u64;
    assert_eq!(s["points_above_validity_limit"].as_u64().unwrap(), above);
}

#[test]
fn missing_element_parameter_is_config_error() {
    let o = resetq(&["sidf", "--element", "gsore", "--wr", "10", "--out", "/tmp/unused"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_reference_gives_zero_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = resetq(&["simulate", "--preset", "stage-table2", "--ref", "zero", "--out", out]);
    assert!(o.status.success());
    let p = dir.path().join("trace.csv");
    for name in ["r", "e", "u", "y", "y_q", "reset"] {
        assert!(column(&p, name).iter().all(|v| *v == Some(0.0)), "{name}");
    }
    let meta = json(&dir.path().join("trace.json"));
    assert_eq!(meta["system"]["preset"], "stage-table2");
    assert_eq!(meta["resets"], 0);
    assert_eq!(meta["samples"], 20000);
}

#[test]
fn quantization_clusters_resets_and_holding_time_thins_them() {
    let run = |extra: &[&str]| {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap().to_owned();
        let mut args = vec![
            "simulate", "--preset", "mass-table1", "--ref", "sin:63rad", "--amplitude", "1mm",
            "--out", &out,
        ];
        args.extend_from_slice(extra);
        let o = resetq(&args);
        assert!(o.status.success(), "{o:?}");
        json(&dir.path().join("trace.json"))["resets_per_period"].as_f64().unwrap()
    };
    let ideal = run(&[]);
    let quantized = run(&["--quantizer", "bits=9 range=5000um"]);
    let held = run(&["--quantizer", "bits=9 range=5000um", "--tr", "k=2.5"]);
    assert!(quantized > 2.0 && quantized > 5.0 * ideal, "{quantized} vs {ideal}");
    assert!(held < quantized);
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(
        &cfg,
        r#"{
            "preset": "mass-table1",
            "quantizer": {"bits": 9, "range": "5000um"},
            "noise": {"amplitude": "1um", "seed": 7},
            "reference": {"kind": "sine", "frequency": "10Hz"},
            "amplitude": "2mm",
            "duration": "0.5s"
        }"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = resetq(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--gamma",
        "0.2",
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let meta = json(&out.join("trace.json"));
    assert_eq!(meta["system"]["controller"]["gamma"], 0.2);
    assert_eq!(meta["system"]["noise"]["seed"], 9);
    assert_eq!(meta["system"]["noise"]["max_amplitude"], 1e-6);
    assert_eq!(meta["system"]["quantizer"]["q"], 5e-3 / 512.0);
    assert_eq!(meta["duration_s"], 0.5);
    assert_eq!(meta["reference"]["amplitude"], 2e-3);
}

#[test]
fn unitless_quantity_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"preset": "mass-table1", "amplitude": "0.002"}"#).unwrap();
    let o = resetq(&["simulate", "--config", cfg.to_str().unwrap(), "--ref", "step"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unit"));
}

#[test]
fn diverging_simulation_is_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = resetq(&[
        "simulate", "--preset", "mass-table1", "--gain-scale", "-1", "--ref", "step", "--duration",
        "20s", "--out", out,
    ]);
    assert_eq!(o.status.code(), Some(3), "{o:?}");
}

#[test]
fn empty_k_list_is_usage_error() {
    assert_eq!(resetq(&["sweep", "k", "--preset", "mass-table1", "--list", ""]).status.code(), Some(2));
    assert_eq!(resetq(&["sweep", "k", "--preset", "mass-table1"]).status.code(), Some(2));
}

#[test]
fn sweep_csv_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = resetq(&[
        "sweep", "ssigma", "--preset", "mass-table1", "--quantizer", "bits=9", "--tr", "k=2.5",
        "--fmin", "1Hz", "--fmax", "100Hz", "--points", "6", "--amplitude", "10mm", "--out", out,
    ]);
    assert!(o.status.success(), "{o:?}");

    let cfg = Config {
        preset: Some("mass-table1".into()),
        quantizer: resetq_cli::config::parse_quantizer_flag("bits=9").unwrap(),
        ..Config::default()
    };
    let setup = System::from_config(&cfg).unwrap().loop_setup().unwrap();
    let grid = logspace(1.0, 100.0, 6);
    let direct = s_sigma(
        &setup,
        &grid,
        &AmplitudePolicy::constant(10e-3),
        &SteadyStatePolicy::default(),
        "standard",
    )
    .unwrap();
    let path = dir.path().join("ssigma_standard.csv");
    let (header, rows) = read_table(&path).unwrap();
    assert_eq!(header, ["f_Hz", "value_dB", "resets_per_period"]);
    for (row, p) in rows.iter().zip(&direct.points) {
        assert_eq!(row[0], Some(p.f_hz));
        assert_eq!(row[1], p.value_db);
    }

    // writing the re-read table reproduces the file byte for byte
    let copy = dir.path().join("copy.csv");
    resetq_cli::csvio::write_table(&copy, &["f_Hz", "value_dB", "resets_per_period"], rows).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&copy).unwrap());

    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["curves"].as_array().unwrap().len(), 3);
    let floor = summary["quantization_floor_dB"].as_f64().unwrap();
    assert!((floor - 20.0 * (5e-3 / 512.0 / 10e-3f64).log10()).abs() < 1e-12);
}

#[test]
fn k_sweep_writes_one_curve_per_k() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = resetq(&[
        "sweep", "k", "--preset", "stage-table2", "--quantizer", "q=80nm", "--amplitude", "30um",
        "--points", "4", "--list", "1,2.5", "--out", out,
    ]);
    assert!(o.status.success(), "{o:?}");
    assert!(dir.path().join("ssigma_k=1.csv").exists());
    assert!(dir.path().join("ssigma_k=2.5.csv").exists());
    let s = json(&dir.path().join("summary.json"));
    let rows = s["k"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["rho"], 1.0 / (2.0 * 2.5 * 150.0));
}

#[test]
fn cpsd_bundle_is_monotone_and_matches_mean_square() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = resetq(&[
        "sweep", "cpsd", "--preset", "stage-table2", "--quantizer", "q=10nm", "--noise", "700nm",
        "--seed", "1", "--out", out,
    ]);
    assert!(o.status.success(), "{o:?}");
    for name in ["standard", "k=2.5", "k=1"] {
        let c: Vec<f64> = column(&dir.path().join(format!("cpsd_{name}.csv")), "cpsd")
            .into_iter()
            .map(Option::unwrap)
            .collect();
        assert!(c.windows(2).all(|w| w[1] >= w[0]));
    }
    let s = json(&dir.path().join("summary.json"));
    for run in s["runs"].as_array().unwrap() {
        let total = run["total"].as_f64().unwrap();
        let ms = run["mean_square"].as_f64().unwrap();
        assert!((total - ms).abs() / ms < 0.05);
    }
}

#[test]
fn stage_certificate_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = resetq(&["stability", "--preset", "stage-table2", "--out", out]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("certificate found"));
    let s = json(&dir.path().join("stability.json"));
    assert_eq!(s["result"]["verdict"], "certificate found");
    assert_eq!(s["result"]["dense_recheck"]["passed"], true);
    assert!(s["result"]["spr_margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn identity_reset_verdict_is_hurwitz_test() {
    for (preset, scale) in [("mass-table1", "1"), ("stage-table2", "1"), ("mass-table1", "-1")] {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let o = resetq(&[
            "stability", "--preset", preset, "--gamma", "1", "--gain-scale", scale, "--out", out,
        ]);
        assert!(o.status.success());
        let p = presets::by_name(preset).unwrap();
        let c = p.controller.with_gamma(1.0).with_gain_scale(scale.parse().unwrap());
        let el = c.element().unwrap();
        let hurwitz = ClosedLoop::new(&p.plant_model(), el.base(), el.selector())
            .unwrap()
            .is_hurwitz();
        let s = json(&dir.path().join("stability.json"));
        assert_eq!(s["result"]["hurwitz"], hurwitz, "{preset} x{scale}");
    }
}

#[test]
fn unstable_base_loop_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = resetq(&["stability", "--preset", "mass-table1", "--gain-scale", "-1", "--out", out]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "base loop unstable");
}

#[test]
fn holding_time_in_config_matches_library() {
    let cfg: Config =
        serde_json::from_str(r#"{"preset":"stage-table2","tr":{"rho":"1ms"}}"#).unwrap();
    let tr = System::from_config(&cfg).unwrap().time_regularization().unwrap();
    assert_eq!(tr, TimeRegularization::new(1e-3, 1e4).unwrap());
}
