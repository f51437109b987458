use bandsel_core::harness::{
    checkpoint_path, compare, load_report, read_results, run_method, summarize, ExperimentConfig, Method, ResultRow,
    RunOptions, CHECKPOINT_DIR, RESULTS_FILE,
};
use bandsel_core::segnet::{evaluate, load_checkpoint};
use bandsel_core::synthdata::{SceneSpec, SyntheticBenchmark};
use bandsel_core::BandMask;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::statistics::Statistics;

fn tiny() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::planted_benchmark();
    cfg.data.synthetic = Some(SyntheticBenchmark {
        scene: SceneSpec { height: 32, width: 32, seed: 11, ..SceneSpec::default() },
        train_scenes: 2,
        test_scenes: 2,
        ..SyntheticBenchmark::default()
    });
    cfg.tile_size = 16;
    cfg.epochs = 2;
    cfg.seeds = vec![0, 1, 2];
    cfg.bo.n_warm = 2;
    cfg.bo.n_iters = 3;
    cfg.bo.top_k = 3;
    cfg
}

#[test]
fn shipped_config_matches_the_preset() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/planted.toml");
    assert_eq!(ExperimentConfig::load(path).unwrap(), ExperimentConfig::planted_benchmark());
}

#[test]
fn table1_fixture_round_trips() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/table1_summary.tsv");
    let r = load_report(path).unwrap();
    let cells: Vec<String> = r.summaries.iter().map(|s| s.formatted()).collect();
    assert_eq!(cells, ["81.15 ± 2.95", "84.72 ± 1.85", "84.68 ± 1.81", "86.53 ± 0.55"]);
}

#[test]
fn summary_statistics_match_statrs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let mut rows = Vec::new();
        for m in Method::ALL {
            for i in 0..rng.random_range(2..12) {
                let mask = if matches!(m, Method::AllBands | Method::Attention) {
                    BandMask::all(8)
                } else {
                    BandMask::from_code(8, 3)
                };
                rows.push(ResultRow {
                    method: m,
                    seed_or_rank: i,
                    mask,
                    dice: rng.random_range(0.0..1.0),
                    seconds: 0.0,
                });
            }
        }
        let report = summarize(&rows);
        for s in &report.summaries {
            let pct: Vec<f64> = rows.iter().filter(|r| r.method == s.method).map(|r| r.dice * 100.0).collect();
            assert!((s.mean_pct - pct.iter().mean()).abs() < 1e-10);
            assert!((s.std_pct - pct.iter().std_dev()).abs() < 1e-10);
        }
    }
}

#[test]
fn expert_with_every_band_equals_all_bands() {
    let mut cfg = tiny();
    cfg.expert_bands = (0..8).collect();
    let ds = cfg.load_dataset().unwrap();
    let opts = RunOptions { threads: 1, ..RunOptions::default() };
    let ex = run_method(&cfg, &ds, Method::Expert, &opts).unwrap().rows;
    let all = run_method(&cfg, &ds, Method::AllBands, &opts).unwrap().rows;
    let dice = |rows: &[ResultRow]| rows.iter().map(|r| r.dice.to_bits()).collect::<Vec<_>>();
    assert_eq!(dice(&ex), dice(&all));
}

#[test]
fn bayes_opt_reports_top_k_of_all_evaluations() {
    let mut cfg = tiny();
    cfg.epochs = 1;
    cfg.bo.n_warm = 5;
    cfg.bo.n_iters = 35;
    cfg.bo.top_k = 10;
    let ds = cfg.load_dataset().unwrap();
    let run = run_method(&cfg, &ds, Method::BayesOpt, &RunOptions { threads: 1, ..RunOptions::default() }).unwrap();
    let trace = run.bo_trace.unwrap();
    assert_eq!(trace.len(), 40);
    assert_eq!(run.rows.len(), 10);
    let ranks: Vec<u64> = run.rows.iter().map(|r| r.seed_or_rank).collect();
    assert_eq!(ranks, (1..=10).collect::<Vec<_>>());
    assert!(run.rows.windows(2).all(|w| w[0].dice >= w[1].dice));
    let worst_reported = run.rows.last().unwrap().dice;
    let better_unreported = trace
        .iter()
        .filter(|t| !run.rows.iter().any(|r| r.mask == t.mask))
        .any(|t| 1.0 - t.y.unwrap() > worst_reported);
    assert!(!better_unreported);
}

#[test]
fn every_row_is_recomputable_from_its_checkpoint() {
    let cfg = tiny();
    let ds = cfg.load_dataset().unwrap();
    let dir = tempfile::tempdir().unwrap();
    compare(&cfg, &ds, dir.path(), &RunOptions { threads: 2, ..RunOptions::default() }).unwrap();
    let rows = read_results(dir.path().join(RESULTS_FILE)).unwrap();
    assert_eq!(rows.len(), 3 * 3 + 3);
    for r in &rows {
        let model =
            load_checkpoint(checkpoint_path(&dir.path().join(CHECKPOINT_DIR), r.method, r.seed_or_rank)).unwrap();
        let expect_channels = if r.method == Method::Attention { 8 } else { r.mask.popcount() };
        assert_eq!(model.config().in_channels, expect_channels);
        assert_eq!(evaluate(&model, &ds).unwrap(), r.dice, "{} {}", r.method, r.seed_or_rank);
    }
}

#[test]
fn mismatched_dataset_is_rejected_before_training() {
    let mut cfg = tiny();
    let ds = cfg.load_dataset().unwrap();
    cfg.tile_size = 32;
    let err = run_method(&cfg, &ds, Method::AllBands, &RunOptions::default()).unwrap_err();
    assert!(err.is_validation());
    cfg.tile_size = 16;
    cfg.expert_bands = vec![0, 9];
    assert!(run_method(&cfg, &ds, Method::Expert, &RunOptions::default()).unwrap_err().is_validation());
}
