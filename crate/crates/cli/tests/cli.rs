use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pff"))
        .args(args)
        .env_remove("PFF_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn small_config(rate: f64, extra: &str) -> String {
    format!(
        r#"
[time]
T = 1.0
steps = 6

[viscosity]
delta = 0.1

[mesh]
nx = 4
ny = 4

[bc]
preset = "tension"
rate = {rate}

[init.notch]
start = [0.0, 0.5]
end = [0.5, 0.5]
width = 0.125
{extra}
"#
    )
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn zero_load_run_has_constant_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config(0.0, ""));
    let out = tmp.path().join("out");
    let o = pff(&["run", &cfg, "-o", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(out.join("trace.csv")).unwrap();
    let f: Vec<f64> = rdr
        .records()
        .map(|r| r.unwrap()[2].parse().unwrap())
        .collect();
    assert_eq!(f.len(), 7);
    assert!(f.iter().all(|&v| v == f[0]), "{f:?}");
}

#[test]
fn missing_time_section_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = small_config(1.0, "").replace("[time]\nT = 1.0\nsteps = 6\n", "");
    let cfg = write_config(tmp.path(), &text);
    let o = pff(&["run", &cfg, "-o", tmp.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("time"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config(1.0, "[material]\nlambda = 3.0\n"));
    let o = pff(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lambda"), "{}", stderr(&o));
}

#[test]
fn check_flags_the_corrupted_step() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config(1.0, ""));
    let out = tmp.path().join("out");
    let o = pff(&["run", &cfg, "-o", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = pff(&["check", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let phase = out.join("phase.csv");
    let text = fs::read_to_string(&phase).unwrap();
    let corrupted: Vec<String> = text
        .lines()
        .map(|l| if l.starts_with("3,7,") { "3,7,1.5".to_owned() } else { l.to_owned() })
        .collect();
    fs::write(&phase, corrupted.join("\n") + "\n").unwrap();
    let o = pff(&["check", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("step 3: irreversibility violated at node 7"), "{err}");
}

#[test]
fn starved_inner_loop_reports_nonconvergence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config(1.0, "[tol]\nmax_inner = 1\n"));
    let o = pff(&["run", &cfg, "-o", tmp.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn output_dir_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("env-out");
    let o = Command::new(env!("CARGO_BIN_EXE_pff"))
        .args(["mesh-gen", "--nx", "3", "--ny", "2", "--quiet"])
        .env("PFF_OUTPUT_DIR", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("mesh.txt")).unwrap();
    assert!(!text.is_empty());
}

#[test]
fn oracle_suite_passes() {
    let o = pff(&["oracle", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("name,value,oracle,err,pass"));
    assert!(!stdout.contains(",false"));
}

#[test]
fn separate_processes_write_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config(1.0, ""));
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("out{k}"));
        let o = pff(&["run", &cfg, "-o", out.to_str().unwrap(), "--seed", &k.to_string(), "--quiet"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let files: Vec<Vec<u8>> = ["trace.csv", "phase.csv", "displacement.csv", "energy_inequality.csv"]
            .iter()
            .map(|f| fs::read(out.join(f)).unwrap())
            .collect();
        outputs.push(files);
    }
    assert!(outputs[0] == outputs[1]);
}

#[test]
fn sweep_writes_one_trace_and_curve_per_delta() {
    let tmp = tempfile::tempdir().unwrap();
    let text = small_config(1.0, "").replace(
        "[viscosity]\ndelta = 0.1\n",
        "[viscosity]\ndelta = 0.2\ndelta_list = [0.2, 0.1]\ntau_over_delta = 0.5\ngrid_intervals = 50\n",
    );
    let cfg = write_config(tmp.path(), &text);
    let out = tmp.path().join("sweep");
    let o = pff(&["sweep", &cfg, "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["sweep.csv", "trace_delta_0.csv", "trace_delta_1.csv", "reparam_delta_0.csv", "reparam_delta_1.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("arc-length growth factor"));
}
