use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{BoOptions, GpParams, SearchStrategy};
use crate::mask::BandMask;
use crate::segnet::{TrainOptions, UNetConfig};
use crate::synthdata::{RasterDataset, SceneSpec, SyntheticBenchmark};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Expert,
    AllBands,
    Attention,
    BayesOpt,
}

impl Method {
    /// Report order.
    pub const ALL: [Method; 4] = [Method::Expert, Method::AllBands, Method::Attention, Method::BayesOpt];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Expert => "expert",
            Method::AllBands => "all_bands",
            Method::Attention => "attention",
            Method::BayesOpt => "bayes_opt",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Method::Expert => "Expert band selection",
            Method::AllBands => "All bands selected",
            Method::Attention => "Attention over bands",
            Method::BayesOpt => "Bayesian optimisation",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| {
            Error::Config(format!("unknown method {s:?}; expected expert, all_bands, attention or bayes_opt"))
        })
    }
}

/// Where rasters come from: a manifest of raster files, or a synthetic
/// planted-band benchmark generated on the fly. Exactly one must be set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub manifest: Option<PathBuf>,
    pub synthetic: Option<SyntheticBenchmark>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoConfig {
    pub n_warm: usize,
    pub n_iters: usize,
    /// Best observed masks reported as result rows.
    pub top_k: usize,
    /// Seeds the warm start and the acquisition search.
    pub seed: u64,
    /// Training seed shared by every candidate mask.
    pub inner_seed: u64,
    pub gp: GpParams,
    pub search: SearchStrategy,
    pub max_failure_fraction: f64,
}

impl Default for BoConfig {
    fn default() -> Self {
        let bo = BoOptions::default();
        Self {
            n_warm: bo.n_warm,
            n_iters: bo.n_iters,
            top_k: 10,
            seed: 0,
            inner_seed: 0,
            gp: bo.gp,
            search: bo.search,
            max_failure_fraction: bo.max_failure_fraction,
        }
    }
}

impl BoConfig {
    pub fn options(&self) -> BoOptions {
        BoOptions {
            n_warm: self.n_warm,
            n_iters: self.n_iters,
            seed: self.seed,
            gp: self.gp,
            search: self.search,
            max_failure_fraction: self.max_failure_fraction,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub tile_size: usize,
    /// Method for single runs (`train`).
    pub method: Option<Method>,
    /// Methods run by `compare`, reported in Table 1 order.
    pub methods: Vec<Method>,
    pub expert_bands: Vec<usize>,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub base_filters: usize,
    pub depth: usize,
    pub se_reduction: usize,
    pub bo: BoConfig,
    /// Write 0 for every timing so reruns produce identical files.
    pub reproducible: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainOptions::default();
        let net = UNetConfig::new(1);
        Self {
            data: DataConfig::default(),
            tile_size: 32,
            method: None,
            methods: Method::ALL.to_vec(),
            expert_bands: Vec::new(),
            seeds: (0..10).collect(),
            epochs: train.epochs,
            batch_size: train.batch_size,
            lr: train.lr,
            base_filters: net.base_filters,
            depth: net.depth,
            se_reduction: net.se_reduction,
            bo: BoConfig::default(),
            reproducible: false,
        }
    }
}

impl ExperimentConfig {
    /// Desk-scale planted benchmark: 8 bands with 1, 4 and 6 planted, 50
    /// training scenes of 64×64 (200 tiles of 32×32), and a wrong expert
    /// made of one planted band and two distractors.
    pub fn planted_benchmark() -> Self {
        let desk = TrainOptions::desk();
        Self {
            data: DataConfig {
                manifest: None,
                synthetic: Some(SyntheticBenchmark {
                    scene: SceneSpec::default(),
                    train_scenes: 50,
                    test_scenes: 4,
                    test_height: 0,
                    test_width: 0,
                }),
            },
            expert_bands: vec![0, 6, 7],
            seeds: (0..5).collect(),
            epochs: desk.epochs,
            batch_size: desk.batch_size,
            lr: desk.lr,
            bo: BoConfig { n_warm: 5, n_iters: 15, top_k: 5, ..BoConfig::default() },
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Relative manifest paths are resolved against the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let Some(m) = &cfg.data.manifest {
            if m.is_relative() {
                cfg.data.manifest = Some(path.parent().unwrap_or(Path::new(".")).join(m));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        match (&self.data.manifest, &self.data.synthetic) {
            (Some(_), Some(_)) => return fail("set only one of data.manifest and data.synthetic".into()),
            (None, None) => return fail("set data.manifest or data.synthetic".into()),
            (None, Some(s)) => s.scene.validate().map_err(|e| Error::Config(e.to_string()))?,
            _ => {}
        }
        if self.seeds.is_empty() {
            return fail("seeds must not be empty".into());
        }
        if self.methods.is_empty() {
            return fail("methods must not be empty".into());
        }
        let counts = [
            ("tile_size", self.tile_size),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("base_filters", self.base_filters),
            ("depth", self.depth),
            ("se_reduction", self.se_reduction),
            ("bo.n_warm", self.bo.n_warm),
            ("bo.n_iters", self.bo.n_iters),
            ("bo.top_k", self.bo.top_k),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return fail(format!("{name} must be >= 1"));
        }
        if self.tile_size % (1 << self.depth) != 0 {
            return fail(format!("tile_size {} must be a multiple of 2^depth = {}", self.tile_size, 1 << self.depth));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return fail(format!("lr must be finite and > 0, got {}", self.lr));
        }
        let wants_expert = self.method == Some(Method::Expert) || self.methods.contains(&Method::Expert);
        if wants_expert && self.expert_bands.is_empty() {
            return fail("expert_bands must be nonempty when the expert method is used".into());
        }
        self.bo.gp.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.bo.max_failure_fraction) {
            return fail("bo.max_failure_fraction must lie in [0, 1]".into());
        }
        Ok(())
    }

    /// Checks band-dependent settings against a loaded dataset.
    pub fn check_dataset(&self, dataset: &RasterDataset) -> Result<()> {
        if dataset.tile_size() != self.tile_size {
            return Err(Error::Config(format!(
                "dataset tiles are {} px but tile_size is {}",
                dataset.tile_size(),
                self.tile_size
            )));
        }
        if !self.expert_bands.is_empty() {
            self.expert_mask(dataset.bands())?;
        }
        Ok(())
    }

    pub fn expert_mask(&self, bands: usize) -> Result<BandMask> {
        BandMask::from_indices(bands, &self.expert_bands)
            .ok()
            .filter(|m| !m.is_zero())
            .ok_or_else(|| Error::Config(format!("expert_bands {:?} invalid for {bands} bands", self.expert_bands)))
    }

    pub fn load_dataset(&self) -> Result<RasterDataset> {
        let ds = match (&self.data.manifest, &self.data.synthetic) {
            (Some(m), None) => RasterDataset::from_manifest(m, self.tile_size)?,
            (None, Some(s)) => s.build(self.tile_size)?,
            _ => return Err(Error::Config("set exactly one of data.manifest and data.synthetic".into())),
        };
        self.check_dataset(&ds)?;
        Ok(ds)
    }

    pub fn train_options(&self, seed: u64) -> TrainOptions {
        TrainOptions { epochs: self.epochs, batch_size: self.batch_size, lr: self.lr, seed }
    }

    pub fn unet_config(&self, in_channels: usize, attention: bool, seed: u64) -> UNetConfig {
        UNetConfig {
            in_channels,
            base_filters: self.base_filters,
            depth: self.depth,
            use_input_attention: attention,
            se_reduction: self.se_reduction,
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::planted_benchmark();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn defaults_follow_the_paper() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.seeds.len(), 10);
        assert_eq!((cfg.epochs, cfg.lr), (25, 0.01));
        assert_eq!((cfg.bo.n_warm, cfg.bo.n_iters, cfg.bo.top_k), (5, 35, 10));
    }

    #[test]
    fn validation_errors() {
        let ok = ExperimentConfig::planted_benchmark();
        let bad = |f: &dyn Fn(&mut ExperimentConfig)| {
            let mut c = ok.clone();
            f(&mut c);
            c.validate().unwrap_err()
        };
        assert!(matches!(bad(&|c| c.seeds.clear()), Error::Config(_)));
        assert!(matches!(bad(&|c| c.expert_bands.clear()), Error::Config(_)));
        assert!(matches!(bad(&|c| c.epochs = 0), Error::Config(_)));
        assert!(matches!(bad(&|c| c.tile_size = 30), Error::Config(_)));
        assert!(matches!(bad(&|c| c.data.manifest = Some("m".into())), Error::Config(_)));
        let text = "tile_size = 32\nbogus = 1\n";
        assert!(ExperimentConfig::from_toml_str(text).is_err());
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("nope".parse::<Method>().is_err());
    }
}
