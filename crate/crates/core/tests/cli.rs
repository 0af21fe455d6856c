use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use benford_track::report::{CellVerdict, PeriodReport, TrackReport};

fn benford(args: &[&str], stdin: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_benford"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin).unwrap();
    child.wait_with_output().unwrap()
}

fn synth_file(dir: &Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(name);
    let path_str = path.to_str().unwrap().to_string();
    let mut args = vec!["synth", "--out", &path_str];
    args.extend_from_slice(extra);
    let out = benford(&args, b"");
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stdout.is_empty());
    path_str
}

#[test]
fn analyze_csv_for_one_tenor() {
    let dir = tempfile::tempdir().unwrap();
    let a = std::fs::read_to_string(synth_file(
        dir.path(),
        "a.csv",
        &["--kind", "benford", "--n", "1749", "--seed", "1"],
    ))
    .unwrap();
    let b = std::fs::read_to_string(synth_file(
        dir.path(),
        "b.csv",
        &[
            "--kind",
            "uniform-digit",
            "--n",
            "1749",
            "--seed",
            "2",
            "--entity",
            "Spain",
            "--tenor",
            "10Y",
        ],
    ))
    .unwrap();
    let panel = format!(
        "{a}{}",
        b.lines()
            .skip(1)
            .map(|l| format!("{l}\n"))
            .collect::<String>()
    );
    let input = dir.path().join("panel.csv");
    std::fs::write(&input, panel).unwrap();

    let out = benford(
        &[
            "analyze",
            "--input",
            input.to_str().unwrap(),
            "--tenor",
            "5Y",
            "--alpha",
            "0.05",
            "--format",
            "csv",
        ],
        b"",
    );
    assert!(out.status.success());
    let report = PeriodReport::from_csv(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(report.rows.len(), 5);
    assert!(report
        .rows
        .iter()
        .all(|r| r.entity == "SYNTH" && r.tenor == "5Y"));
    let periods: Vec<&str> = report.rows.iter().map(|r| r.period.as_str()).collect();
    assert_eq!(
        periods,
        ["full", "pre_crisis", "crisis", "post_crisis", "post2010"]
    );

    let out = benford(
        &[
            "analyze",
            "--input",
            input.to_str().unwrap(),
            "--period",
            "full",
            "--format",
            "json",
        ],
        b"",
    );
    assert!(out.status.success());
    let report = PeriodReport::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert_eq!(report.meta.command, "analyze");
    let spain = report.rows.iter().find(|r| r.entity == "Spain").unwrap();
    assert_eq!(spain.verdict, CellVerdict::Reject);
}

#[test]
fn track_of_1750_observations_has_38_windows() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_file(
        dir.path(),
        "panel.csv",
        &["--kind", "benford", "--n", "1750", "--seed", "9"],
    );
    let out_path = dir.path().join("track.json");
    let out = benford(
        &[
            "track",
            "--input",
            &input,
            "--format",
            "json",
            "--out",
            out_path.to_str().unwrap(),
        ],
        b"",
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = TrackReport::from_json(&std::fs::read_to_string(out_path).unwrap()).unwrap();
    assert_eq!(report.series.len(), 1);
    let rows: Vec<_> = report.rows().collect();
    assert_eq!(rows.len(), 38);
    assert_eq!(rows[37].n, 85);
    assert_eq!(report.series[0].trends.len(), 3);

    let out = benford(
        &[
            "track",
            "--input",
            &input,
            "--window-len",
            "120",
            "--step",
            "60",
            "--format",
            "csv",
        ],
        b"",
    );
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().lines().count(),
        1 + 28
    );

    let out = benford(&["track", "--input", &input], b"");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("XXXVIII"), "{text}");
}

#[test]
fn track_restricted_to_a_period() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_file(
        dir.path(),
        "panel.csv",
        &["--kind", "benford", "--n", "1750", "--seed", "3"],
    );
    let out = benford(
        &[
            "track", "--input", &input, "--period", "crisis", "--format", "csv",
        ],
        b"",
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = TrackReport::from_csv(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    for row in report.rows() {
        assert!(row.start_date >= chrono::NaiveDate::from_ymd_opt(2010, 1, 1).unwrap());
        assert!(row.end_date <= chrono::NaiveDate::from_ymd_opt(2013, 10, 31).unwrap());
    }
}

#[test]
fn manipulated_synth_is_rejected() {
    let out = benford(
        &[
            "synth",
            "--kind",
            "benford",
            "--n",
            "1500",
            "--seed",
            "5",
            "--manipulate",
            "0.3",
            "--target-digit",
            "7",
        ],
        b"",
    );
    assert!(out.status.success());
    let out = benford(
        &["analyze", "--period", "full", "--format", "csv"],
        &out.stdout,
    );
    let report = PeriodReport::from_csv(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(report.rows[0].verdict, CellVerdict::Reject);
}

#[test]
fn gaps_and_relative_mode() {
    let panel = "date,entity,tenor,spread_bps\n\
        2010-01-04,X,5Y,100\n2010-01-05,X,5Y,120\n2010-03-01,X,5Y,90\n2010-03-02,X,5Y,99\n";
    let out = benford(
        &[
            "analyze",
            "--period",
            "full",
            "--format",
            "csv",
            "--max-gap-days",
            "5",
            "--change-mode",
            "relative",
        ],
        panel.as_bytes(),
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("dropped 1"));
    let report = PeriodReport::from_csv(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(report.rows[0].n, 2);
    assert!(report.rows[0].small_sample);
}

#[test]
fn exit_codes() {
    assert_eq!(
        benford(&["analyze", "--alpha", "2"], b"").status.code(),
        Some(1)
    );
    assert_eq!(benford(&["nonsense"], b"").status.code(), Some(1));
    assert_eq!(
        benford(&["analyze"], b"wrong,header\n").status.code(),
        Some(2)
    );
    let dup = "date,entity,tenor,spread_bps\n2010-01-04,X,5Y,100\n2010-01-04,X,5Y,101\n";
    let out = benford(&["analyze"], dup.as_bytes());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    assert_eq!(benford(&["--version"], b"").status.code(), Some(0));
}
