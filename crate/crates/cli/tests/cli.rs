use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn planted(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_planted"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const CONFIG: &str = r#"
trials = 3
seed = 100

[model]
sizes = [120, 90]
counts = [1, 1]
p = 0.9
q = 0.1
epsilon = 0.05

[recovery]
noise_constant = 0.7
"#;

fn workspace(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.toml"), config).unwrap();
    dir
}

#[test]
fn generate_follows_the_seed_schedule_and_is_reproducible() {
    let dir = workspace(CONFIG);
    let out = planted(&["generate", "--config", "exp.toml", "--out", "a"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 3);
    for (t, seed) in [(0, 100), (1, 101), (2, 102)] {
        let text = fs::read_to_string(dir.path().join(format!("a/point-000-trial-{t:04}.txt"))).unwrap();
        let header: Vec<&str> = text.lines().next().unwrap().split(' ').collect();
        assert_eq!(header[5], seed.to_string());
        assert!(dir.path().join(format!("a/point-000-trial-{t:04}.truth")).exists());
    }
    planted(&["generate", "--config", "exp.toml", "--out", "b"], dir.path());
    for t in 0..3 {
        for ext in ["txt", "truth"] {
            let name = format!("point-000-trial-{t:04}.{ext}");
            assert_eq!(
                fs::read(dir.path().join("a").join(&name)).unwrap(),
                fs::read(dir.path().join("b").join(&name)).unwrap()
            );
        }
    }
}

#[test]
fn sweep_points_get_disjoint_seed_blocks() {
    let dir = workspace(&format!("{CONFIG}\n[sweep]\np = [0.8, 0.9]\n"));
    let out = planted(&["generate", "--config", "exp.toml", "--out", "g", "--trials", "2"], dir.path());
    assert!(out.status.success());
    let seed = |name: &str| {
        let text = fs::read_to_string(dir.path().join("g").join(name)).unwrap();
        text.lines().next().unwrap().split(' ').nth(5).unwrap().to_string()
    };
    assert_eq!(seed("point-000-trial-0001.txt"), "101");
    assert_eq!(seed("point-001-trial-0000.txt"), "102");
}

#[test]
fn malformed_sizes_are_a_config_error() {
    let dir = workspace(&CONFIG.replace("sizes = [120, 90]", "sizes = [90, 120]"));
    let out = planted(&["generate", "--config", "exp.toml", "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-increasing"));
}

#[test]
fn recover_rows_and_summary() {
    let dir = workspace(CONFIG);
    let out = planted(&["recover", "--config", "exp.toml"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("record,point,trial,n,p,q,sizes,seed,status,exact,misclassified"));
    for line in &lines[1..4] {
        assert!(line.starts_with("trial,0,"));
        assert!(line.contains(",success,true,0,"), "{line}");
    }
    assert!(lines[4].starts_with("summary,0,,"));
    assert!(lines[4].ends_with(",1.0") || lines[4].ends_with(",1"), "{}", lines[4]);
}

#[test]
fn recover_from_files_uses_truth_siblings() {
    let dir = workspace(CONFIG);
    planted(&["generate", "--config", "exp.toml", "--out", "g"], dir.path());
    let out = planted(
        &[
            "recover",
            "g/point-000-trial-0000.txt",
            "g/point-000-trial-0001.txt",
            "--epsilon",
            "0.05",
            "--nu",
            "0.7",
            "--format",
            "jsonl",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<serde_json::Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["exact"], true);
    assert_eq!(rows[1]["seed"], 101);
    assert_eq!(rows[2]["record"], "summary");

    // without the truth file exactness is unknown
    fs::remove_file(dir.path().join("g/point-000-trial-0000.truth")).unwrap();
    let out = planted(&["recover", "g/point-000-trial-0000.txt", "--nu", "0.7", "--epsilon", "0.05"], dir.path());
    let line = stdout(&out).lines().nth(1).unwrap().to_string();
    assert!(line.contains(",success,,,"), "{line}");
}

#[test]
fn stalled_runs_are_rows_not_errors() {
    // a huge nu inflates the size estimate past every cluster
    let dir = workspace(&CONFIG.replace("noise_constant = 0.7", "noise_constant = 20.0\nmin_success = 0.5"));
    let out = planted(&["recover", "--config", "exp.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.lines().skip(1).take(3).all(|l| l.contains(",stalled ") && l.contains(",false,")), "{text}");
}

#[test]
fn uniform_and_auto_flags() {
    let dir = workspace(&CONFIG.replace("sizes = [120, 90]", "sizes = [100, 100]").replace("counts = [1, 1]", "counts = [2]"));
    let out = planted(&["recover", "--config", "exp.toml", "--uniform", "100"], dir.path());
    assert!(out.status.success());
    assert!(stdout(&out).lines().last().unwrap().ends_with(",1.0"));

    let dir = workspace(CONFIG);
    let out = planted(&["recover", "--config", "exp.toml", "--auto-counts"], dir.path());
    assert!(out.status.success());
    assert!(stdout(&out).lines().last().unwrap().contains("3/3 succeeded"));
}

#[test]
fn certify_reports_and_exit_status() {
    let dir = workspace(CONFIG);
    let out = planted(&["certify", "weyl", "--config", "exp.toml"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("point,bound,trial,seed,observed,bound_value,hypothesis,violated\n"));
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().last().unwrap().starts_with("0,weyl,summary,,"));

    let out = planted(&["certify", "spectral-norm", "--config", "exp.toml", "--format", "jsonl"], dir.path());
    assert!(out.status.success());
    let last: serde_json::Value = serde_json::from_str(stdout(&out).lines().last().unwrap()).unwrap();
    assert_eq!(last["violations"], 0);
    assert_eq!(last["passes"], true);

    // a noise constant far too small is violated
    let dir = workspace(&CONFIG.replace("noise_constant = 0.7", "noise_constant = 0.1"));
    let out = planted(&["certify", "spectral-norm", "--config", "exp.toml", "--out", "r.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(fs::read_to_string(dir.path().join("r.csv")).unwrap().contains(",true\n"));
}

#[test]
fn unknown_bound_lists_valid_names() {
    let dir = workspace(CONFIG);
    let out = planted(&["certify", "nope", "--config", "exp.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["spectral-norm", "weyl", "separation", "projector", "degree-events"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn spectrum_is_sorted_and_marks_supercluster_gaps() {
    let noiseless = r#"
[model]
sizes = [30, 29, 10]
counts = [2, 1]
p = 1.0
q = 0.0
"#;
    let dir = workspace(noiseless);
    planted(&["generate", "--config", "exp.toml", "--out", "g"], dir.path());
    let out = planted(&["spectrum", "g/point-000-trial-0000.txt", "--nu", "0.05"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let rows: Vec<Vec<String>> = text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 69);
    let values: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[0] >= w[1]));
    let marked: Vec<usize> = rows.iter().filter(|r| r[3] == "true").map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(marked, vec![2, 3]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("[2, 1]"));
}

#[test]
fn missing_input_file() {
    let dir = workspace(CONFIG);
    let out = planted(&["spectrum", "nothing.txt"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
