//! End-to-end checks of the CLI binary: screening and fitting a small
//! synthetic CSV, determinism of emitted files, and exit codes.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tailscreen"))
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("tailscreen_cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_demo_csv(dir: &PathBuf) -> PathBuf {
    let mut state = 5u64;
    let mut unif = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    };
    let mut csv = String::from("y,a,b,c\n");
    for _ in 0..400 {
        let (a, b, c) = (unif(), unif(), unif());
        let gamma = 0.3 * (-2.5 * a).exp();
        let u = unif();
        let y = (u / (1.2 - u)).powf(-gamma);
        csv.push_str(&format!("{y},{a},{b},{c}\n"));
    }
    let path = dir.join("demo.csv");
    std::fs::write(&path, csv).unwrap();
    path
}

#[test]
fn screen_emits_deterministic_rankings() {
    let dir = temp_dir("screen");
    let data = write_demo_csv(&dir);
    let out1 = dir.join("run1");
    let out2 = dir.join("run2");
    for out in [&out1, &out2] {
        let status = bin()
            .args([
                "screen",
                data.to_str().unwrap(),
                "--response",
                "y",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let ranked1 = std::fs::read(out1.join("utilities_ranked.csv")).unwrap();
    let ranked2 = std::fs::read(out2.join("utilities_ranked.csv")).unwrap();
    assert_eq!(ranked1, ranked2, "repeated runs must emit identical bytes");
    let text = String::from_utf8(ranked1).unwrap();
    let first_data_line = text.lines().nth(1).unwrap();
    assert!(
        first_data_line.starts_with("1,a,"),
        "active covariate should rank first: {first_data_line}"
    );
}

#[test]
fn single_covariate_dataset_screens_to_single_row() {
    let dir = temp_dir("single");
    let mut csv = String::from("y,a\n");
    let mut state = 77u64;
    let mut unif = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    };
    for _ in 0..200 {
        csv.push_str(&format!("{},{}\n", unif().powf(-0.4), unif()));
    }
    let data = dir.join("one.csv");
    std::fs::write(&data, csv).unwrap();
    let status = bin()
        .args([
            "screen",
            data.to_str().unwrap(),
            "--response",
            "y",
            "--out",
            dir.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(dir.join("utilities.csv")).unwrap();
    assert_eq!(text.lines().count(), 2, "header plus one covariate row");
}

#[test]
fn simulate_runs_from_config() {
    let dir = temp_dir("simulate");
    let conf = dir.join("spec.conf");
    std::fs::write(
        &conf,
        "model = a\nn = 300\np = 5\nr = 0.2\nm = 0.2\nreplications = 2\nseed = 9\nq_cap = 0\nreporting_size = 5\n",
    )
    .unwrap();
    let output = bin()
        .args([
            "simulate",
            conf.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let table = std::fs::read_to_string(dir.join("simulation_metrics.csv")).unwrap();
    assert!(table.starts_with("model,n,p,r,m,replications,s5,"));
    assert_eq!(table.lines().count(), 2);
}

#[test]
fn exit_codes_distinguish_failures() {
    // missing file -> data error (2)
    let status = bin()
        .args(["screen", "/definitely/not/here.csv", "--response", "y"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // bad flag value -> config error (4)
    let dir = temp_dir("exitcodes");
    let data = write_demo_csv(&dir);
    let status = bin()
        .args([
            "screen",
            data.to_str().unwrap(),
            "--response",
            "y",
            "--k",
            "sometimes",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
}
