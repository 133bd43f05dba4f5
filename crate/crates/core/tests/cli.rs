use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lifelong_mc::matrix_io::load_matrix;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lifelong-mc"));
    c.env("LIFELONG_MC_THREADS", "2");
    c
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

const SMALL_RUN: &str = "\
algorithm = exact
generator = gaussian
m = 30
n = 80
r = 2
noise = sparse
s0 = 4
d = 12
trials = 3
seed = 9
";

#[test]
fn run_is_reproducible_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.conf", SMALL_RUN);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--trials", "5"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).starts_with("5 trials"));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.contains("# trials = 5"));

    let c = dir.path().join("c.csv");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", c.to_str().unwrap(), "--trials", "5", "--seed", "10"]);
    assert!(o.status.success());
    assert_ne!(text, std::fs::read_to_string(&c).unwrap());
}

#[test]
fn gen_writes_loadable_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "gen.conf", SMALL_RUN);
    let out = dir.path().join("inst");
    let o = run(&["gen", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = load_matrix(dir.path().join("inst.M.txt")).unwrap();
    let l = load_matrix(dir.path().join("inst.L.txt")).unwrap();
    assert_eq!((m.rows(), m.cols()), (30, 80));
    let meta = std::fs::read_to_string(dir.path().join("inst.meta.txt")).unwrap();
    let support: Vec<usize> = meta
        .lines()
        .find_map(|l| l.strip_prefix("noise_support = "))
        .unwrap()
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(support.len(), 4);
    for j in 0..80 {
        assert_eq!(m.column(j) == l.column(j), !support.contains(&j), "column {j}");
    }
}

#[test]
fn failed_recoveries_still_exit_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL_RUN.replace("d = 12", "d = 1");
    let cfg = write_config(dir.path(), "hard.conf", &body);
    let out = dir.path().join("hard.csv");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 successes"));
}

#[test]
fn exit_codes_distinguish_io_from_configuration_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.conf");
    let o = run(&["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let bad = write_config(dir.path(), "bad.conf", "generator = gaussian\nm = 10\nn = 10\nr = 2\ncolour = blue\n");
    let o = run(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key 'colour'"));

    let o = run(&["sweep", "--config", write_config(dir.path(), "s.conf", SMALL_RUN).to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_and_compare_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = write_config(
        dir.path(),
        "sweep.conf",
        "generator = gaussian\nm = 20\nn = 40\nr = 1\nnoise = sparse\ns0 = auto\ntrials = 2\nrank_ratios = 0.1\nsample_ratios = 0.5, 1.0\n",
    );
    let out = dir.path().join("sweep.csv");
    let o = run(&["sweep", "--config", sweep.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = std::fs::read_to_string(&out).unwrap();
    assert_eq!(rows.lines().filter(|l| !l.starts_with('#')).count(), 3);

    let mix = write_config(
        dir.path(),
        "mix.conf",
        "algorithm = mixture\ngenerator = mixture\nm = 20\nper_subspace = 4\nh = 2\ntau = 2\ntrials = 2\nd_values = 5..6\n",
    );
    let out = dir.path().join("mix.csv");
    let o = run(&["compare-mixture", "--config", mix.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = std::fs::read_to_string(&out).unwrap();
    assert_eq!(rows.lines().filter(|l| !l.starts_with('#')).count(), 5);
}
