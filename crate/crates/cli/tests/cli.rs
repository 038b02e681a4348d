use std::process::{Command, Output};

use sector_count::counting::{count_sector, GroupConfig};
use sector_count::Point;

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sector-count"));
    cmd.args(args).env_remove("SECTOR_COUNT_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn count_matches_library() {
    let out = stdout(&run(&["count", "--p", "0.1,0.2,1.3", "--X", "50"], &[]));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("# sector-count v1"));
    assert_eq!(lines.next(), Some("x1,x2,y,X,N,M,err,candidates,cosets"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 9);
    assert!(lines.next().is_none());
    let want = count_sector(&Point::new(0.1, 0.2, 1.3).unwrap(), 50.0, &GroupConfig::picard()).unwrap();
    assert_eq!(row[4].parse::<u64>().unwrap(), want.n);
    assert_eq!(row[5].parse::<f64>().unwrap(), want.main);
    // 17 significant digits.
    assert_eq!(row[5].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
}

#[test]
fn invalid_arguments_fail() {
    for args in [
        &["count", "--p", "0,0,1", "--X", "0.5"][..],
        &["count", "--p", "0,0,-1", "--X", "5"],
        &["count", "--p", "0,0", "--X", "5"],
        &["count", "--X", "5"],
        &["spatial", "--X", "10", "--r", "10"],
        &["radial", "--p", "0,0,1", "--X", "25", "--r", "2"],
        &["sweep", "--p", "0,0,1", "--from", "20", "--to", "40"],
        &["verify", "nonsense"],
    ] {
        let o = run(args, &[]);
        assert!(!o.status.success(), "{args:?} should fail");
        assert!(!o.stderr.is_empty());
    }
    let o = run(&["spatial", "--X", "10", "--r", "10"], &[]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("R > X"));
}

#[test]
fn every_subcommand_has_help() {
    for cmd in ["count", "sweep", "radial", "spatial", "ball", "verify"] {
        let out = stdout(&run(&[cmd, "--help"], &[]));
        assert!(out.contains("Usage"), "{cmd}");
    }
}

#[test]
fn sweep_rows_and_fit() {
    let out = stdout(&run(&["sweep", "--p", "0.1,0.2,1.3", "--from", "20", "--to", "320", "--ratio", "2"], &[]));
    assert_eq!(data_rows(&out).len(), 5);
    let fit = out.lines().last().unwrap();
    assert!(fit.starts_with("# fit slope_N="));
    let slope: f64 = fit["# fit slope_N=".len()..].split('±').next().unwrap().parse().unwrap();
    assert!((slope - 2.0).abs() < 0.05, "{slope}");
}

#[test]
fn radial_emits_r_rows_per_x() {
    let out = stdout(&run(&["radial", "--p", "0.1,0.2,1.3", "--X", "8,27"], &[]));
    let rows = data_rows(&out);
    // R = ceil(X^(2/3)) + 1 gives 5 and 10.
    assert_eq!(rows.iter().filter(|r| r[1].parse::<f64>().unwrap() == 8.0).count(), 5);
    assert_eq!(rows.iter().filter(|r| r[1].parse::<f64>().unwrap() == 27.0).count(), 10);
    assert!(rows.iter().all(|r| r[0] == "radial" && r.len() == 6));
    assert!(out.contains("# fit radial unavailable"));
}

#[test]
fn spatial_deterministic_and_seeded() {
    let args = ["spatial", "--X", "3,4", "--r", "5", "--eps", "0.1"];
    let one = stdout(&run(&[&args[..], &["--threads", "1", "--seed", "9"]].concat(), &[]));
    let many = stdout(&run(&[&args[..], &["--threads", "4", "--seed", "9"]].concat(), &[]));
    assert_eq!(one, many);
    assert!(one.contains("# seed 9"));
    assert_eq!(one.lines().filter(|l| l.starts_with("# point")).count(), 10);
    assert_eq!(data_rows(&one).len(), 10);

    let from_env = stdout(&run(&args, &[("SECTOR_COUNT_SEED", "9")]));
    assert_eq!(from_env, one);
    let flag_wins = stdout(&run(&[&args[..], &["--seed", "10"]].concat(), &[("SECTOR_COUNT_SEED", "9")]));
    assert!(flag_wins.contains("# seed 10"));
    let default = stdout(&run(&args, &[]));
    assert!(default.contains(&format!("# seed {}\n", sector_count::experiments::DEFAULT_SEED)));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = std::env::temp_dir().join(format!("sector-count-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.cfg");
    std::fs::write(&path, "# sample\np = 0.1,0.2,1.3\nX = 30\nseed = 5\n").unwrap();
    let cfg = path.to_str().unwrap();
    let from_cfg = stdout(&run(&["count", "--config", cfg], &[]));
    assert_eq!(data_rows(&from_cfg)[0][3].parse::<f64>().unwrap(), 30.0);
    let flag = stdout(&run(&["count", "--config", cfg, "--X", "20"], &[]));
    assert_eq!(data_rows(&flag)[0][3].parse::<f64>().unwrap(), 20.0);
    let seeded = stdout(&run(&["spatial", "--config", cfg, "--X", "3", "--r", "4", "--eps", "0.1"], &[("SECTOR_COUNT_SEED", "9")]));
    assert!(seeded.contains("# seed 5"));

    let out_path = dir.join("count.csv");
    stdout(&run(&["count", "--config", cfg, "--output", out_path.to_str().unwrap()], &[]));
    assert_eq!(std::fs::read_to_string(&out_path).unwrap(), from_cfg);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn ball_ratio_column() {
    let out = stdout(&run(&["ball", "--p", "0.1,0.2,1.3", "--x", "10"], &[]));
    let row = &data_rows(&out)[0];
    let n: f64 = row[7].parse().unwrap();
    assert_eq!(row[8].parse::<f64>().unwrap(), n / 100.0);
}

#[test]
fn verify_suites_report() {
    let out = stdout(&run(&["verify", "transforms"], &[]));
    assert!(out.lines().last().unwrap().ends_with("checks passed"));
    let json = stdout(&run(&["verify", "sandwich", "--X", "30", "--width", "0.18", "--n", "5", "--json"], &[]));
    let lines: Vec<serde_json::Value> = json.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 5);
    assert!(lines.iter().all(|v| v["passed"] == true && v["suite"] == "sandwich"));
    stdout(&run(&["verify", "oracle", "--depth", "5"], &[]));
}
