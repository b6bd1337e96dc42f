use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn orka(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orka"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = orka(dir, args);
    assert!(
        out.status.success(),
        "orka {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    orka(dir, args).status.code().expect("exit code")
}

fn field<'a>(report: &'a str, key: &str) -> &'a str {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
        .unwrap_or_else(|| panic!("no {key} in report:\n{report}"))
}

fn numbers(path: &PathBuf) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn gap_matrix_is_recovered_at_full_band() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let report = ok(dir, &["gen-gap", "--out", "gap.csv"]);
    assert_eq!(field(&report, "size"), "121");
    let d = numbers(&dir.join("gap.csv"));
    assert_eq!(d.len(), 121);
    assert_eq!((d[0][0], d[1][1], d[2][2]), (1.0, 1.0, 0.0));

    let report = ok(
        dir,
        &[
            "extract", "gap.csv", "--mu", "1000", "--c", "1", "--k", "15", "--out", "run",
        ],
    );
    let lambda = std::fs::read_to_string(dir.join("run/lambda.csv")).unwrap();
    let expected: String = (0..121).map(|i| format!("{i}\n")).collect();
    assert_eq!(lambda, expected);
    for key in [
        "objective",
        "time_graph_s",
        "partition_nodes",
        "residual_norms",
        "node_budget",
        "k",
    ] {
        field(&report, key);
    }
    assert_eq!(
        std::fs::read_to_string(dir.join("run/report.txt")).unwrap(),
        report
    );
}

#[test]
fn zero_mu_leaves_a_zero_residual() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    ok(
        dir,
        &[
            "gen-scene",
            "--rows",
            "24",
            "--cols",
            "8",
            "--out",
            "scene.csv",
        ],
    );
    ok(dir, &["extract", "scene.csv", "--mu", "0", "--out", "run"]);
    let residual = numbers(&dir.join("run/residual.csv"));
    assert_eq!(residual.len(), 24);
    assert!(residual.iter().flatten().all(|v| *v == 0.0));
}

#[test]
fn pulse_scene_shifts_are_recovered() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    ok(
        dir,
        &[
            "gen-scene",
            "--rows",
            "48",
            "--cols",
            "12",
            "--velocity",
            "1",
            "--out",
            "scene.bin",
            "--format",
            "bin",
        ],
    );
    ok(
        dir,
        &[
            "extract",
            "scene.bin",
            "--mu",
            "inf",
            "--k",
            "4",
            "--out",
            "run",
            "--format",
            "bin",
        ],
    );
    let found = std::fs::read_to_string(dir.join("run/lambda.csv")).unwrap();
    let truth = std::fs::read_to_string(dir.join("scene.truth.csv")).unwrap();
    assert_eq!(found, truth);
    assert!(dir.join("run/u.bin").exists());
}

#[test]
fn noisy_scene_hits_the_target_psnr() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let report = ok(
        dir,
        &[
            "gen-scene",
            "--rows",
            "128",
            "--cols",
            "64",
            "--noise-db",
            "5",
            "--seed",
            "3",
            "--out",
            "noisy.csv",
        ],
    );
    let measured: f64 = field(&report, "measured_psnr_db").parse().unwrap();
    assert!((measured - 5.0).abs() <= 0.2, "{measured}");
    let again = ok(dir, &["psnr", "noisy.clean.csv", "noisy.csv"]);
    let db: f64 = field(&again, "psnr_db").parse().unwrap();
    assert!((db - measured).abs() < 1e-9);
}

#[test]
fn psnr_sentinels() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("ones.csv"), "1,1\n1,1\n").unwrap();
    std::fs::write(dir.join("zeros.csv"), "0,0\n0,0\n").unwrap();
    std::fs::write(dir.join("row.csv"), "0,0\n").unwrap();
    assert_eq!(
        field(&ok(dir, &["psnr", "ones.csv", "ones.csv"]), "psnr_db"),
        "inf"
    );
    assert_eq!(
        field(&ok(dir, &["psnr", "ones.csv", "zeros.csv"]), "psnr_db"),
        "0"
    );
    assert_eq!(code(dir, &["psnr", "ones.csv", "row.csv"]), 2);
}

#[test]
fn denoising_sums_the_objects() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    ok(
        dir,
        &[
            "gen-scene",
            "--rows",
            "32",
            "--cols",
            "10",
            "--out",
            "scene.csv",
        ],
    );
    ok(
        dir,
        &[
            "denoise",
            "scene.csv",
            "--objects",
            "0",
            "--out",
            "none.csv",
        ],
    );
    assert!(numbers(&dir.join("none.csv"))
        .iter()
        .flatten()
        .all(|v| *v == 0.0));

    ok(
        dir,
        &[
            "denoise",
            "scene.csv",
            "--objects",
            "1",
            "--mu",
            "inf",
            "--k",
            "4",
            "--out",
            "den.csv",
        ],
    );
    ok(
        dir,
        &[
            "decompose",
            "scene.csv",
            "--objects",
            "1",
            "--mu",
            "inf",
            "--k",
            "4",
            "--out",
            "dec",
        ],
    );
    let input = numbers(&dir.join("scene.csv"));
    let den = numbers(&dir.join("den.csv"));
    let res = numbers(&dir.join("dec/residual.csv"));
    for i in 0..input.len() {
        for j in 0..input[0].len() {
            assert!((den[i][j] + res[i][j] - input[i][j]).abs() < 1e-12);
        }
    }
    let db: f64 = field(&ok(dir, &["psnr", "scene.csv", "den.csv"]), "psnr_db")
        .parse()
        .unwrap();
    assert!(db > 30.0, "{db}");
}

#[test]
fn decompose_writes_one_file_set_per_object() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    ok(
        dir,
        &[
            "gen-scene",
            "--rows",
            "64",
            "--cols",
            "10",
            "--velocity",
            "1,-1",
            "--out",
            "two.csv",
        ],
    );
    let report = ok(
        dir,
        &[
            "decompose",
            "two.csv",
            "--objects",
            "2",
            "--mu",
            "inf,inf",
            "--k",
            "4",
            "--out",
            "dec",
        ],
    );
    for f in [
        "u_1.csv",
        "u_2.csv",
        "lambda_1.csv",
        "lambda_2.csv",
        "residual.csv",
        "report.txt",
    ] {
        assert!(dir.join("dec").join(f).exists(), "{f}");
    }
    assert_eq!(field(&report, "residual_norms").split(',').count(), 2);
    field(&report, "object2_lambda_axis0");
    assert_eq!(
        code(
            dir,
            &[
                "decompose",
                "two.csv",
                "--objects",
                "3",
                "--mu",
                "1,2",
                "--out",
                "x"
            ]
        ),
        2
    );
}

#[test]
fn video_scene_round_trips_through_binary_files() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    ok(
        dir,
        &[
            "gen-scene",
            "--dims",
            "2",
            "--rows",
            "16",
            "--cols",
            "16",
            "--frames",
            "4",
            "--side",
            "4",
            "--velocity",
            "1,1",
            "--out",
            "clip.bin",
        ],
    );
    let report = ok(
        dir,
        &[
            "extract", "clip.bin", "--mu", "inf", "--c", "1", "--k", "2", "--out", "run",
        ],
    );
    assert_eq!(field(&report, "dims"), "2");
    field(&report, "lambda_axis1");
    assert!(dir.join("run/u.bin").exists());
    assert_eq!(
        code(
            dir,
            &["extract", "clip.bin", "--format", "csv", "--out", "run2"]
        ),
        2
    );
}

#[test]
fn video_frames_can_come_from_a_pgm_directory() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let frames = dir.join("frames");
    std::fs::create_dir(&frames).unwrap();
    for k in 0..3u8 {
        let mut bytes = b"P5\n4 4\n255\n".to_vec();
        bytes.extend((0..16u8).map(|i| if (i + k) % 4 == 0 { 255 } else { 0 }));
        std::fs::write(frames.join(format!("f{k}.pgm")), bytes).unwrap();
    }
    let report = ok(
        dir,
        &[
            "extract", "frames", "--mu", "inf", "--k", "2", "--out", "run",
        ],
    );
    assert_eq!(field(&report, "dims"), "2");
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    ok(
        dir,
        &["gen-scene", "--rows", "8", "--cols", "20", "--out", "d.csv"],
    );
    assert_eq!(
        code(
            dir,
            &[
                "extract",
                "d.csv",
                "--c",
                "2",
                "--k",
                "12",
                "--node-budget",
                "1000",
                "--out",
                "r"
            ]
        ),
        3
    );
    let out = orka(
        dir,
        &[
            "extract",
            "d.csv",
            "--c",
            "2",
            "--k",
            "12",
            "--node-budget",
            "1000",
            "--out",
            "r",
        ],
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("nodes"));
    assert_eq!(code(dir, &["extract", "missing.csv", "--out", "r"]), 4);
    std::fs::write(dir.join("bad.csv"), "1,2\nx,y\n").unwrap();
    assert_eq!(code(dir, &["extract", "bad.csv", "--out", "r"]), 4);
    std::fs::write(dir.join("bad.bin"), b"ORKA\x01\x02\0\0\0\0\0\0\0").unwrap();
    assert_eq!(code(dir, &["extract", "bad.bin", "--out", "r"]), 4);
    assert_eq!(
        code(dir, &["extract", "d.csv", "--mu", "-1", "--out", "r"]),
        2
    );
    assert_eq!(code(dir, &["extract", "d.csv"]), 2);
    assert_eq!(code(dir, &["frobnicate"]), 2);
    assert_eq!(
        code(dir, &["extract", "d.csv", "--workers", "0", "--out", "r"]),
        2
    );
    assert_eq!(code(dir, &["--help"]), 0);
}

#[test]
fn flags_override_the_config_file() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    ok(
        dir,
        &["gen-scene", "--rows", "16", "--cols", "6", "--out", "d.csv"],
    );
    std::fs::write(
        dir.join("run.conf"),
        "# defaults\nmu = 1000\nk = 2\nout = fromfile\n",
    )
    .unwrap();
    let report = ok(
        dir,
        &["extract", "d.csv", "--config", "run.conf", "--k", "3"],
    );
    assert_eq!(field(&report, "mu"), "1000");
    assert_eq!(field(&report, "k"), "3");
    assert!(dir.join("fromfile/report.txt").exists());
    std::fs::write(dir.join("bad.conf"), "colour = red\n").unwrap();
    assert_eq!(code(dir, &["extract", "d.csv", "--config", "bad.conf"]), 2);
    assert_eq!(
        code(dir, &["extract", "d.csv", "--config", "nowhere.conf"]),
        4
    );
}

#[test]
fn worker_cap_does_not_change_results() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    ok(
        dir,
        &[
            "gen-scene",
            "--rows",
            "32",
            "--cols",
            "12",
            "--noise-db",
            "10",
            "--out",
            "d.bin",
            "--format",
            "bin",
        ],
    );
    ok(
        dir,
        &[
            "extract",
            "d.bin",
            "--k",
            "5",
            "--workers",
            "1",
            "--out",
            "one",
            "--format",
            "bin",
        ],
    );
    ok(
        dir,
        &[
            "extract",
            "d.bin",
            "--k",
            "5",
            "--workers",
            "2",
            "--out",
            "two",
            "--format",
            "bin",
        ],
    );
    for f in ["u.bin", "residual.bin", "lambda.csv"] {
        assert_eq!(
            std::fs::read(dir.join("one").join(f)).unwrap(),
            std::fs::read(dir.join("two").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn benchmarks_and_oracle_emit_csv() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let csv = ok(
        dir,
        &[
            "bench-k",
            "--n",
            "16",
            "--m",
            "16",
            "--ks",
            "3..5",
            "--min-time-ms",
            "1",
        ],
    );
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "k,seconds");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..]
        .iter()
        .all(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() > 0.0));

    ok(
        dir,
        &[
            "bench-n",
            "--ns",
            "16,32",
            "--k",
            "3",
            "--min-time-ms",
            "1",
            "--out",
            "n.csv",
        ],
    );
    assert_eq!(
        std::fs::read_to_string(dir.join("n.csv"))
            .unwrap()
            .lines()
            .count(),
        3
    );

    let csv = ok(
        dir,
        &[
            "compare-oracle",
            "--m",
            "8",
            "--n",
            "6",
            "--trials",
            "3",
            "--mu",
            "1,1000",
        ],
    );
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 10);
    for mu in [1.0, 1000.0] {
        let errs: Vec<f64> = rows.iter().filter(|r| r[1] == mu).map(|r| r[2]).collect();
        assert!(errs.last().unwrap().abs() <= 1e-12);
    }
}
