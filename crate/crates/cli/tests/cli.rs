use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
methods = ["expert", "all_bands", "attention", "bayes_opt"]
expert_bands = [1, 4, 6]
seeds = [0, 1]
tile_size = 16
epochs = 1
batch_size = 4
lr = 0.001

[data.synthetic]
train_scenes = 2
test_scenes = 1

[data.synthetic.scene]
height = 32
width = 32
seed = 3

[bo]
n_warm = 2
n_iters = 2
top_k = 2
"#;

fn bandsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bandsel")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tiny_config(dir: &Path) -> String {
    let p = dir.join("tiny.toml");
    fs::write(&p, TINY).unwrap();
    p.to_string_lossy().into_owned()
}

fn fixture() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/table1_summary.tsv").to_string()
}

#[test]
fn unknown_subcommand_and_flag_exit_1() {
    for args in [&["frobnicate"][..], &["report", "--bogus"][..], &[][..]] {
        let o = bandsel(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"), "{args:?}");
    }
    assert_eq!(bandsel(&["--help"]).status.code(), Some(0));
}

#[test]
fn report_on_table1_fixture() {
    let o = bandsel(&["report", &fixture()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6, "{text}");
    assert!(lines[0].ends_with("| Dice Coefficient (%)"));
    let rows = [
        ("Expert band selection", "81.15 ± 2.95"),
        ("All bands selected", "84.72 ± 1.85"),
        ("Attention over bands", "84.68 ± 1.81"),
        ("Bayesian optimisation", "86.53 ± 0.55"),
    ];
    for (line, (label, cell)) in lines[2..].iter().zip(rows) {
        assert!(line.starts_with(label) && line.ends_with(cell), "{line}");
    }
    let bar = lines[0].find('|').unwrap();
    assert!(lines[2..].iter().all(|l| l.find('|') == Some(bar)));
}

#[test]
fn missing_input_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bandsel(&["report", dir.path().join("nope.tsv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(&p, TINY.replace("seeds = [0, 1]", "seeds = []")).unwrap();
    let o = bandsel(&["compare", "--config", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seeds must not be empty"));
}

#[test]
fn gradcheck_passes() {
    let o = bandsel(&["gradcheck"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().count() > 10);
    for line in text.lines() {
        assert!(line.ends_with(" ok"), "{line}");
        let err: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
        assert!(err < 1e-3, "{line}");
    }
}

#[test]
fn compare_writes_everything_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o =
            bandsel(&["compare", "--config", &cfg, "--out", out.to_str().unwrap(), "--reproducible", "--threads", "2"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a");
    let b = run("b");
    for f in ["results.tsv", "summary.tsv", "table.txt", "bo_trace.tsv"] {
        assert!(a.join(f).exists(), "{f}");
    }
    assert_eq!(fs::read(a.join("results.tsv")).unwrap(), fs::read(b.join("results.tsv")).unwrap());
    assert_eq!(fs::read(a.join("bo_trace.tsv")).unwrap(), fs::read(b.join("bo_trace.tsv")).unwrap());

    let results = fs::read_to_string(a.join("results.tsv")).unwrap();
    // 2 seeds for each fixed-mask method plus top_k = 2 BO rows.
    assert_eq!(results.lines().count(), 2 + 8);
    assert_eq!(fs::read_dir(a.join("checkpoints")).unwrap().count(), 8);
    let trace = fs::read_to_string(a.join("bo_trace.tsv")).unwrap();
    assert_eq!(trace.lines().count(), 2 + 4);

    let o = bandsel(&["report", "--out", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), fs::read_to_string(a.join("table.txt")).unwrap());
}

#[test]
fn gen_data_then_train_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let data = dir.path().join("data");
    let o = bandsel(&["gen-data", "--config", &cfg, "--out", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(data.join("manifest.tsv").exists());
    assert!(data.join("train_001.bsr").exists() && data.join("test_000.bsr").exists());

    let manifest_cfg = dir.path().join("manifest.toml");
    let text =
        TINY.split("[data.synthetic]").next().unwrap().to_string() + "\n[data]\nmanifest = \"data/manifest.tsv\"\n";
    fs::write(&manifest_cfg, text).unwrap();
    let out = dir.path().join("train");
    let args = [
        "train",
        "--config",
        manifest_cfg.to_str().unwrap(),
        "--method",
        "expert",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ];
    let o = bandsel(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("expert seed 7 mask 01001010 dice"));
    assert!(out.join("expert_7.ckpt").exists());

    let o = bandsel(&["train", "--config", manifest_cfg.to_str().unwrap(), "--method", "bayes_opt"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn optimize_resumes_an_interrupted_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let full = dir.path().join("full");
    let part = dir.path().join("part");
    let optimize = |out: &Path, resume: bool| {
        let mut args = vec!["optimize", "--config", &cfg, "--reproducible", "--out", out.to_str().unwrap()];
        if resume {
            args.push("--resume");
        }
        let o = bandsel(&args);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    };
    optimize(&full, false);
    let trace = fs::read_to_string(full.join("bo_trace.tsv")).unwrap();

    fs::create_dir_all(&part).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    let cut = format!("{}\n{}", lines[..4].join("\n"), &lines[4][..3]);
    fs::write(part.join("bo_trace.tsv"), cut).unwrap();
    optimize(&part, true);

    assert_eq!(fs::read_to_string(part.join("bo_trace.tsv")).unwrap(), trace);
    assert_eq!(fs::read(part.join("results.tsv")).unwrap(), fs::read(full.join("results.tsv")).unwrap());
}
