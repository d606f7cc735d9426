//! Experiment configuration.
//!
//! Configs are TOML files with nested sections; every field has a default so
//! a file only lists what it changes. The digest stamped on every output is
//! the SHA-256 of a canonical JSON rendering (keys sorted, numbers in their
//! shortest round-trip form) of the whole config minus `[paths]`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use xai_chest_core::channel::{make_profile, ProfileName};
use xai_chest_core::estimators::{EstimatorKind, StaParams, StaReference};
use xai_chest_core::eval::{LinkChannel, LinkConfig};
use xai_chest_core::neural::TrainConfig;
use xai_chest_core::phy::{FrameSpec, HpaKind, HpaModel, Modulation, ModulationScheme};

use crate::error::{HarnessError, Result};
use crate::seeds::SeedPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelModel {
    /// Low frequency selectivity (LFS).
    VtvEx,
    /// High frequency selectivity (HFS).
    VtvSdww,
    /// Static unit-gain channel.
    Flat,
}

impl ChannelModel {
    pub fn name(self) -> &'static str {
        match self {
            ChannelModel::VtvEx => "vtv_ex",
            ChannelModel::VtvSdww => "vtv_sdww",
            ChannelModel::Flat => "flat",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSection {
    /// Data symbols per frame.
    pub n_symbols: usize,
}

impl Default for FrameSection {
    fn default() -> Self {
        FrameSection { n_symbols: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub model: ChannelModel,
    pub doppler_hz: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection {
            model: ChannelModel::VtvSdww,
            doppler_hz: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulationSection {
    pub scheme: Modulation,
}

impl Default for ModulationSection {
    fn default() -> Self {
        ModulationSection { scheme: Modulation::Qpsk }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HpaSection {
    pub kind: HpaKind,
    /// Input back-off of the Rapp amplifier in dB.
    pub ibo_db: f64,
    /// Rapp smoothness factor `p`.
    pub smoothness: f64,
}

impl Default for HpaSection {
    fn default() -> Self {
        HpaSection {
            kind: HpaKind::Linear,
            ibo_db: 2.0,
            smoothness: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    pub kind: EstimatorKind,
    pub alpha: f64,
    pub beta: usize,
    pub sta_reference: StaReference,
    pub feedback_fnn: bool,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        let sta = StaParams::default();
        EstimatorSection {
            kind: EstimatorKind::Sta,
            alpha: sta.alpha,
            beta: sta.beta,
            sta_reference: sta.reference,
            feedback_fnn: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Frames simulated for the dataset; each contributes one row per data symbol.
    pub n_frames: usize,
    /// Leading fraction of frames that goes to the training cache.
    pub train_fraction: f64,
    pub train_snr_db: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            n_frames: 2000,
            train_fraction: 0.8,
            train_snr_db: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: Option<usize>,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        OptimizerSection {
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            epochs: t.epochs,
            patience: t.patience,
            adam_beta1: t.adam_beta1,
            adam_beta2: t.adam_beta2,
            adam_eps: t.adam_eps,
        }
    }
}

impl OptimizerSection {
    fn to_train_config(&self, seed: u64, lambda: f64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed,
            lambda,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_eps: self.adam_eps,
            patience: self.patience,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    /// Hidden widths shared by `U` and `N`.
    pub hidden: Vec<usize>,
    /// Weight of the mask term in the `N` loss.
    pub lambda: f64,
    pub u: OptimizerSection,
    pub n: OptimizerSection,
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection {
            hidden: vec![15, 15, 15],
            lambda: 0.1,
            u: OptimizerSection::default(),
            n: OptimizerSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub gammas: Vec<f64>,
    pub eval_snr_db: f64,
    /// Extra `λ` values whose mean masks the threshold suite reports.
    pub lambda_grid: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            gammas: (1..=8).map(|i| i as f64 / 10.0).collect(),
            eval_snr_db: 40.0,
            lambda_grid: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub snr_grid_db: Vec<f64>,
    /// Frames per SNR point.
    pub n_frames: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            snr_grid_db: (0..=8).map(|i| 5.0 * i as f64).collect(),
            n_frames: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub directions: usize,
    /// The scan covers `t ∈ [-t_max, t_max]`.
    pub t_max: f64,
    pub points: usize,
}

impl Default for ProbeSection {
    fn default() -> Self {
        ProbeSection {
            directions: 3,
            t_max: 2.0,
            points: 401,
        }
    }
}

impl ProbeSection {
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points.max(2);
        (0..n).map(|i| -self.t_max + 2.0 * self.t_max * i as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSection {
    /// Independent repetitions of multi-seed studies.
    pub replicates: usize,
    pub train_snr_grid_db: Vec<f64>,
    pub modulations: Vec<Modulation>,
    pub architectures: Vec<Vec<usize>>,
    /// Channel of the architecture-reduction study.
    pub arch_channel: ChannelModel,
    pub nonlinear_ibo_db: f64,
}

impl Default for SuiteSection {
    fn default() -> Self {
        SuiteSection {
            replicates: 3,
            train_snr_grid_db: (0..=8).map(|i| 5.0 * i as f64).collect(),
            modulations: vec![Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64],
            architectures: vec![vec![15, 15, 15], vec![15, 15], vec![15], vec![10], vec![5]],
            arch_channel: ChannelModel::VtvEx,
            nonlinear_ibo_db: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub out: PathBuf,
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection { out: PathBuf::from("runs") }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub frame: FrameSection,
    pub channel: ChannelSection,
    pub modulation: ModulationSection,
    pub hpa: HpaSection,
    pub estimator: EstimatorSection,
    pub data: DataSection,
    pub training: TrainingSection,
    pub sweep: SweepSection,
    pub eval: EvalSection,
    pub probe: ProbeSection,
    pub suite: SuiteSection,
    pub paths: PathsSection,
}

fn check(ok: bool, field: &str, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(HarnessError::Config(format!("{field}: {msg}")))
    }
}

fn check_optimizer(o: &OptimizerSection, prefix: &str) -> Result<()> {
    check(o.learning_rate > 0.0 && o.learning_rate.is_finite(), &format!("{prefix}.learning_rate"), "must be positive")?;
    check(o.batch_size >= 1, &format!("{prefix}.batch_size"), "must be at least 1")?;
    check((0.0..1.0).contains(&o.adam_beta1), &format!("{prefix}.adam_beta1"), "must lie in [0, 1)")?;
    check((0.0..1.0).contains(&o.adam_beta2), &format!("{prefix}.adam_beta2"), "must lie in [0, 1)")?;
    check(o.adam_eps > 0.0, &format!("{prefix}.adam_eps"), "must be positive")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        check(self.frame.n_symbols >= 1, "frame.n_symbols", "must be at least 1")?;
        check(self.channel.doppler_hz >= 0.0 && self.channel.doppler_hz.is_finite(), "channel.doppler_hz", "must be non-negative")?;
        check(self.hpa.ibo_db.is_finite(), "hpa.ibo_db", "must be finite")?;
        check(self.hpa.smoothness > 0.0, "hpa.smoothness", "must be positive")?;
        check(self.estimator.alpha >= 1.0, "estimator.alpha", "must be at least 1")?;
        check(self.data.n_frames >= 2, "data.n_frames", "must be at least 2")?;
        check(
            self.data.train_fraction > 0.0 && self.data.train_fraction < 1.0,
            "data.train_fraction",
            "must lie in (0, 1)",
        )?;
        let n_train = self.n_train_frames();
        check(n_train >= 1 && n_train < self.data.n_frames, "data.train_fraction", "leaves an empty split")?;
        check(self.data.train_snr_db.is_finite(), "data.train_snr_db", "must be finite")?;
        check(!self.training.hidden.contains(&0), "training.hidden", "widths must be positive")?;
        check(self.training.lambda >= 0.0 && self.training.lambda.is_finite(), "training.lambda", "must be non-negative")?;
        check_optimizer(&self.training.u, "training.u")?;
        check_optimizer(&self.training.n, "training.n")?;
        check(!self.sweep.gammas.is_empty(), "sweep.gammas", "must not be empty")?;
        check(self.sweep.gammas.iter().all(|g| *g > 0.0 && *g <= 1.0), "sweep.gammas", "values must lie in (0, 1]")?;
        check(self.sweep.lambda_grid.iter().all(|l| *l >= 0.0), "sweep.lambda_grid", "values must be non-negative")?;
        check(!self.eval.snr_grid_db.is_empty(), "eval.snr_grid_db", "must not be empty")?;
        check(self.eval.n_frames >= 1, "eval.n_frames", "must be at least 1")?;
        check(self.probe.directions >= 1, "probe.directions", "must be at least 1")?;
        check(self.probe.points >= 3, "probe.points", "must be at least 3")?;
        check(self.probe.t_max > 0.0, "probe.t_max", "must be positive")?;
        check(self.suite.replicates >= 1, "suite.replicates", "must be at least 1")?;
        check(!self.suite.train_snr_grid_db.is_empty(), "suite.train_snr_grid_db", "must not be empty")?;
        check(!self.suite.modulations.is_empty(), "suite.modulations", "must not be empty")?;
        check(
            self.suite.architectures.iter().all(|a| !a.is_empty() && !a.contains(&0)),
            "suite.architectures",
            "each entry needs positive hidden widths",
        )?;
        Ok(())
    }

    /// Reduced scale: 200 frames (10,000 symbols) and 100 epochs.
    pub fn desk_scale(&mut self) {
        self.data.n_frames = 200;
        self.training.u.epochs = 100;
        self.training.n.epochs = 100;
    }

    pub fn n_train_frames(&self) -> usize {
        (self.data.n_frames as f64 * self.data.train_fraction).round() as usize
    }

    /// Stable hash of everything that affects results.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.paths = PathsSection::default();
        digest_value(&serde_json::to_value(&c).expect("config serialises"))
    }

    pub fn frame_spec(&self) -> FrameSpec {
        FrameSpec::ieee80211p().with_n_symbols(self.frame.n_symbols)
    }

    pub fn sta_params(&self) -> StaParams {
        StaParams {
            alpha: self.estimator.alpha,
            beta: self.estimator.beta,
            reference: self.estimator.sta_reference,
        }
    }

    pub fn hpa_model(&self) -> HpaModel {
        match self.hpa.kind {
            HpaKind::Linear => HpaModel::linear(),
            HpaKind::Rapp => HpaModel::rapp(self.hpa.ibo_db, self.hpa.smoothness),
        }
    }

    /// Link without a model, seeded with `seed`.
    pub fn link(&self, seed: u64) -> Result<LinkConfig> {
        let channel = match self.channel.model {
            ChannelModel::VtvEx => LinkChannel::Fading(make_profile(ProfileName::VtvEx, self.channel.doppler_hz)?),
            ChannelModel::VtvSdww => LinkChannel::Fading(make_profile(ProfileName::VtvSdww, self.channel.doppler_hz)?),
            ChannelModel::Flat => LinkChannel::Flat,
        };
        let mut link = LinkConfig::new(self.frame_spec(), ModulationScheme::new(self.modulation.scheme), channel);
        link.hpa = self.hpa_model();
        link.estimator = self.estimator.kind;
        link.sta = self.sta_params();
        link.feedback_fnn = self.estimator.feedback_fnn;
        link.snr_grid_db = self.eval.snr_grid_db.clone();
        link.n_frames = self.eval.n_frames;
        link.seed = seed;
        Ok(link)
    }

    pub fn u_train_config(&self, plan: &SeedPlan) -> TrainConfig {
        self.training.u.to_train_config(plan.u_training, 0.0)
    }

    pub fn n_train_config(&self, plan: &SeedPlan) -> TrainConfig {
        self.training.n.to_train_config(plan.n_training, self.training.lambda)
    }

    /// Cache key of the datasets of replicate `replicate`.
    pub fn data_key(&self, replicate: u64) -> String {
        digest_value(&serde_json::json!({
            "artifact": "data",
            "master_seed": self.master_seed,
            "replicate": replicate,
            "frame": self.frame,
            "channel": self.channel,
            "modulation": self.modulation,
            "hpa": self.hpa,
            "estimator": self.estimator,
            "data": self.data,
        }))
    }

    /// Cache key of a `U` model trained on `relevant` subcarriers.
    pub fn u_key(&self, replicate: u64, hidden: &[usize], relevant: &[usize]) -> String {
        digest_value(&serde_json::json!({
            "artifact": "u",
            "data": self.data_key(replicate),
            "hidden": hidden,
            "relevant": relevant,
            "optimizer": self.training.u,
        }))
    }

    /// Cache key of the `N` model explaining the full-input `U`.
    pub fn n_key(&self, replicate: u64) -> String {
        let full: Vec<usize> = (0..self.frame_spec().k_on).collect();
        digest_value(&serde_json::json!({
            "artifact": "n",
            "u": self.u_key(replicate, &self.training.hidden, &full),
            "lambda": self.training.lambda,
            "optimizer": self.training.n,
        }))
    }
}

/// JSON with object keys sorted at every level.
pub fn canonical_json(v: &Value) -> String {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let body: Vec<String> = keys
                .iter()
                .map(|k| format!("{}:{}", Value::String((*k).clone()), canonical_json(&map[k.as_str()])))
                .collect();
            format!("{{{}}}", body.join(","))
        }
        Value::Array(items) => format!("[{}]", items.iter().map(canonical_json).collect::<Vec<_>>().join(",")),
        other => other.to_string(),
    }
}

pub fn digest_value(v: &Value) -> String {
    hex::encode(Sha256::digest(canonical_json(v).as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.digest(), cfg.digest());
    }

    #[test]
    fn digest_ignores_paths_and_numeral_spelling() {
        let a = ExperimentConfig::from_toml("[data]\ntrain_snr_db = 40\n[paths]\nout = \"x\"").unwrap();
        let b = ExperimentConfig::from_toml("[data]\ntrain_snr_db = 40.0").unwrap();
        assert_eq!(a.digest(), b.digest());
        let c = ExperimentConfig::from_toml("master_seed = 9").unwrap();
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn validation_names_the_field() {
        let err = ExperimentConfig::from_toml("[training.u]\nlearning_rate = -1.0").unwrap_err();
        assert!(err.to_string().contains("training.u.learning_rate"), "{err}");
        assert!(ExperimentConfig::from_toml("[sweep]\ngammas = [1.5]").is_err());
        assert!(ExperimentConfig::from_toml("[nope]\nx = 1").is_err());
    }

    #[test]
    fn desk_scale_counts() {
        let mut cfg = ExperimentConfig::default();
        assert_eq!(cfg.data.n_frames * cfg.frame.n_symbols, 100_000);
        assert_eq!(cfg.n_train_frames() * cfg.frame.n_symbols, 80_000);
        cfg.desk_scale();
        assert_eq!(cfg.data.n_frames * cfg.frame.n_symbols, 10_000);
    }

    #[test]
    fn canonical_json_sorts_keys() {
        let v: Value = serde_json::from_str(r#"{"b":1,"a":{"d":2.5,"c":[1,2]}}"#).unwrap();
        assert_eq!(canonical_json(&v), r#"{"a":{"c":[1,2],"d":2.5},"b":1}"#);
    }
}
