use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_rittlab"))
}

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.ini");
    fs::write(&cfg, config).unwrap();
    Command::new(bin())
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

/// All files under `out`, sorted by name.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir.join("out"))
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

const CASES: &[(&str, &str)] = &[
    ("measure", "[measure]\nkind = atoms\natoms = -1 0.25, 0 0.5, 1 0.25\n"),
    ("check-ba", "[measure]\nalpha = 0.5\n[spectral]\nlevels = 6\n"),
    ("ritt", "[measure]\nk = 512\n[operator]\nn_max = 64\n"),
    ("sqfn", "[model]\nn = 64\n[operator]\nn_max = 128\n[output]\nplot = true\n"),
    ("var", "[measure]\nkind = lazy_walk\n[model]\nn = 32\n[signal]\nkind = random\n[operator]\nn_max = 64\n"),
    ("cz", "[model]\nn = 64\n[signal]\nkind = random\nseed = 5\n[lambda]\nvalues = 3, 10\n"),
    ("weak11", "[model]\nn = 64\n[operator]\nn_max = 128\n[lambda]\ncount = 9\n"),
    ("lemmalab", "[lemmalab]\nlevels = 6\nn_max = 4096\n[operator]\nalpha = 0.8\n"),
    (
        "sweep",
        "[sweep]\ncommand = ritt\nmeasure.alpha = 0.3, 0.5\noperator.n_max = 16, 32\n[measure]\nk = 256\n",
    ),
];

#[test]
fn every_subcommand_is_byte_identical_across_runs() {
    for (cmd, config) in CASES {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = run(a.path(), &[cmd, "--jobs", "1"], config);
        let rb = run(b.path(), &[cmd, "--jobs", "3"], config);
        assert!(ra.status.success(), "{cmd}: {}", String::from_utf8_lossy(&ra.stderr));
        assert!(rb.status.success(), "{cmd}: {}", String::from_utf8_lossy(&rb.stderr));
        let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
        assert!(!sa.is_empty(), "{cmd} wrote nothing");
        assert_eq!(sa, sb, "{cmd} output differs between runs");
        assert_eq!(ra.stdout, rb.stdout, "{cmd} stdout differs");
        for (name, bytes) in &sa {
            let text = String::from_utf8(bytes.clone()).unwrap();
            assert!(text.starts_with("# rittlab "), "{cmd}/{name} lacks provenance");
            assert!(text.contains(&format!("# command {cmd}\n")), "{cmd}/{name}");
            assert!(text.contains("# config_sha256 "), "{cmd}/{name}");
        }
    }
}

#[test]
fn sqfn_writes_q_trace_and_plot_companion() {
    let d = tempfile::tempdir().unwrap();
    let r = run(d.path(), &["sqfn"], CASES[3].1);
    assert!(r.status.success());
    let csv = fs::read_to_string(d.path().join("out/q_trace.csv")).unwrap();
    let body: Vec<_> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "x,q_value,partial_q_quarter,partial_q_half,argmax_n");
    assert_eq!(body.len(), 65);
    assert!(d.path().join("out/q_trace.dat").exists());
}

#[test]
fn sweep_of_27_cells_gives_27_rows_in_grid_order() {
    let d = tempfile::tempdir().unwrap();
    let config = "[sweep]\ncommand = lemmalab\noperator.alpha = 0.5, 0.8, 1\noperator.s = 2, 3, 4\noperator.r = 0.4, 1, 2\n[lemmalab]\nlevels = 8\n";
    let r = run(d.path(), &["sweep", "--jobs", "4"], config);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = fs::read_to_string(d.path().join("out/sweep.csv")).unwrap();
    let body: Vec<_> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(body[0].starts_with("operator.alpha,operator.s,operator.r,status,A_value,A_verdict,"));
    assert_eq!(body.len(), 28);
    assert!(body[1].starts_with("0.5,2,0.4,ok,"));
    assert!(body[2].starts_with("0.5,2,1,ok,"));
    assert!(body[27].starts_with("1,4,2,ok,"));
    // sr > α + 1 well inside the bounded region
    assert!(body[27].contains(",converged,") && !body[27].contains("diverging"));
    let cells: Vec<&str> = body[19].split(',').collect();
    assert_eq!(&cells[..4], ["1", "2", "0.4", "ok"]);
    // A..D verdicts; E is a diagnostic and may converge here
    assert!([5, 7, 9, 11].iter().all(|&i| cells[i] == "diverging"), "{cells:?}");
}

#[test]
fn seed_flag_changes_the_hash_and_the_data() {
    let config = "[model]\nn = 16\n[signal]\nkind = random\n[operator]\nn_max = 16\n";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run(a.path(), &["sqfn", "--seed", "1"], config).status.success());
    assert!(run(b.path(), &["sqfn", "--seed", "2"], config).status.success());
    let qa = fs::read_to_string(a.path().join("out/q_trace.csv")).unwrap();
    let qb = fs::read_to_string(b.path().join("out/q_trace.csv")).unwrap();
    assert_ne!(qa.lines().nth(2), qb.lines().nth(2));
    assert_ne!(qa.lines().skip(3).collect::<Vec<_>>(), qb.lines().skip(3).collect::<Vec<_>>());
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let code = |args: &[&str], cfg: &str| run(d.path(), args, cfg).status.code();
    // unknown key and bad value
    assert_eq!(code(&["ritt"], "[operator]\nn_maxx = 4\n"), Some(2));
    assert_eq!(code(&["ritt"], "[operator]\nn_max = many\n"), Some(2));
    // parameter rejected by the core
    assert_eq!(code(&["sqfn"], "[operator]\ns = 0.5\n"), Some(2));
    // support capacity
    assert_eq!(code(&["ritt"], "[measure]\nk = 4096\n[operator]\nn_max = 5000000\n"), Some(3));
    // degenerate CZ height
    assert_eq!(code(&["cz"], "[model]\nn = 8\n[lambda]\nvalues = 0.01\n"), Some(4));
    assert_eq!(code(&["ritt"], "[measure]\nk = 64\n[operator]\nn_max = 8\n"), Some(0));
}
