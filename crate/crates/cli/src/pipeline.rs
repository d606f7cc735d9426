//! Building blocks shared by the commands and the suites: datasets, trained
//! models and their evaluation, with an optional on-disk cache keyed by the
//! config digest of everything that determines each artifact.

use std::path::{Path, PathBuf};

use log::info;
use xai_chest_core::eval::{collect_dataset, run_link, LinkResult};
use xai_chest_core::neural::{load_model, model_to_string, train_u, Dataset, Mlp};
use xai_chest_core::xai::{
    architecture, filter_dataset, loss_landscape_probe, mean_aggregated_mask, threshold_sweep, train_n_model,
    AggregatedMask, ProbeResult, RelevanceSet, SweepResult, SweepSetup,
};

use crate::cache;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::io::write_atomic;
use crate::seeds::SeedPlan;
use crate::stats::ascending_ranks;

#[derive(Debug, Clone)]
pub struct Datasets {
    pub train: Dataset,
    pub test: Dataset,
}

/// Simulates the dataset frames of `plan` at the training SNR and splits
/// them by frame: the leading `train_fraction` of frames trains, the rest
/// tests.
pub fn generate_datasets(cfg: &ExperimentConfig, plan: &SeedPlan) -> Result<Datasets> {
    let link = cfg.link(plan.data)?;
    let n_frames = cfg.data.n_frames as u64;
    let n_train = cfg.n_train_frames() as u64;
    let snr = cfg.data.train_snr_db;
    let mut train = collect_dataset(&link, snr, 0..n_train)?;
    let mut test = collect_dataset(&link, snr, n_train..n_frames)?;
    for (ds, split, lo, hi) in [(&mut train, "train", 0, n_train), (&mut test, "test", n_train, n_frames)] {
        ds.meta.insert("split".into(), split.into());
        ds.meta.insert("frames".into(), format!("{lo}..{hi}"));
        ds.meta.insert("data_key".into(), cfg.data_key(plan.replicate));
        ds.meta.insert("config_digest".into(), cfg.digest());
        ds.meta.insert("train_snr_db".into(), snr.to_string());
        ds.meta.insert("channel".into(), cfg.channel.model.name().into());
        ds.meta.insert("estimator".into(), cfg.estimator.kind.name().into());
        ds.meta.insert("modulation".into(), cfg.modulation.scheme.name().into());
    }
    Ok(Datasets { train, test })
}

/// Artifact cache. Without a root every request recomputes.
#[derive(Debug, Clone, Default)]
pub struct Store {
    root: Option<PathBuf>,
}

impl Store {
    pub fn on_disk(root: &Path) -> Self {
        Store {
            root: Some(root.to_path_buf()),
        }
    }

    pub fn in_memory() -> Self {
        Store { root: None }
    }

    fn file(&self, kind: &str, key: &str, ext: &str) -> Option<PathBuf> {
        self.root.as_ref().map(|r| r.join(format!("{kind}-{}.{ext}", &key[..20])))
    }

    pub fn datasets(&self, cfg: &ExperimentConfig, replicate: u64) -> Result<Datasets> {
        let key = cfg.data_key(replicate);
        let paths = self.file("train", &key, "xcds").zip(self.file("test", &key, "xcds"));
        if let Some((tr, te)) = &paths {
            if tr.exists() && te.exists() {
                return Ok(Datasets {
                    train: cache::load(tr)?,
                    test: cache::load(te)?,
                });
            }
        }
        info!("simulating {} dataset frames (replicate {replicate})", cfg.data.n_frames);
        let data = generate_datasets(cfg, &SeedPlan::new(cfg.master_seed, replicate))?;
        if let Some((tr, te)) = &paths {
            cache::save(&data.train, tr)?;
            cache::save(&data.test, te)?;
        }
        Ok(data)
    }

    fn model(&self, kind: &str, key: &str, build: impl FnOnce() -> Result<Mlp>) -> Result<Mlp> {
        let path = self.file(kind, key, "mlp");
        if let Some(p) = path.as_ref().filter(|p| p.exists()) {
            return Ok(load_model(p)?);
        }
        let model = build()?;
        if let Some(p) = &path {
            write_atomic(p, model_to_string(&model).as_bytes())?;
        }
        Ok(model)
    }

    /// `U` with hidden widths `hidden`, trained on the relevant columns of `train`.
    pub fn u_model(&self, cfg: &ExperimentConfig, replicate: u64, hidden: &[usize], rel: &RelevanceSet, train: &Dataset) -> Result<Mlp> {
        let key = cfg.u_key(replicate, hidden, &rel.relevant);
        self.model("u", &key, || {
            info!("training U {hidden:?} on {} subcarriers (replicate {replicate})", rel.relevant.len());
            let data = filter_dataset(train, rel)?;
            let plan = SeedPlan::new(cfg.master_seed, replicate);
            let arch = architecture(data.d_in, hidden, data.d_out);
            Ok(train_u(&data, &arch, &cfg.u_train_config(&plan))?.0)
        })
    }

    /// `N` explaining the full-input `U` of the same replicate.
    pub fn n_model(&self, cfg: &ExperimentConfig, replicate: u64, u: &Mlp, train: &Dataset) -> Result<Mlp> {
        let key = cfg.n_key(replicate);
        self.model("n", &key, || {
            info!("training N with lambda {} (replicate {replicate})", cfg.training.lambda);
            let plan = SeedPlan::new(cfg.master_seed, replicate);
            Ok(train_n_model(u, train, &cfg.n_train_config(&plan))?.0)
        })
    }
}

/// One trained `U`/`N` pair with its mean aggregated mask on the test split.
#[derive(Debug, Clone)]
pub struct MaskStudy {
    pub plan: SeedPlan,
    pub data: Datasets,
    pub u: Mlp,
    pub n: Mlp,
    pub mask: AggregatedMask,
    /// 0-based rank of each pilot among the 52 weights, ascending.
    pub pilot_ranks: Vec<usize>,
}

impl MaskStudy {
    pub fn pilots_in_lowest_quartile(&self) -> bool {
        let q = crate::stats::lowest_quartile_len(self.mask.values.len());
        self.pilot_ranks.iter().all(|r| *r < q)
    }
}

pub fn mask_study(store: &Store, cfg: &ExperimentConfig, replicate: u64) -> Result<MaskStudy> {
    let plan = SeedPlan::new(cfg.master_seed, replicate);
    let spec = cfg.frame_spec();
    let data = store.datasets(cfg, replicate)?;
    let full = RelevanceSet::all(spec.k_on);
    let u = store.u_model(cfg, replicate, &cfg.training.hidden, &full, &data.train)?;
    let n = store.n_model(cfg, replicate, &u, &data.train)?;
    let mask = mean_aggregated_mask(&n, &data.test, spec.k_on)?;
    let pilot_ranks = ascending_ranks(&mask.values, &spec.pilot_indices);
    Ok(MaskStudy {
        plan,
        data,
        u,
        n,
        mask,
        pilot_ranks,
    })
}

/// BER at the sweep SNR on the evaluation frames of `plan`.
pub fn evaluate(cfg: &ExperimentConfig, plan: &SeedPlan, model: Option<&Mlp>, rel: Option<&RelevanceSet>) -> Result<LinkResult> {
    let mut link = cfg.link(plan.eval)?;
    link.model = model.cloned();
    link.relevance = rel.filter(|r| !r.irrelevant.is_empty()).cloned();
    Ok(run_link(&link, cfg.sweep.eval_snr_db, plan.eval)?)
}

/// Threshold sweep around the study's `U` and mask.
pub fn sweep_study(cfg: &ExperimentConfig, study: &MaskStudy) -> Result<SweepResult> {
    let link = cfg.link(study.plan.eval)?;
    let train_config = cfg.u_train_config(&study.plan);
    let setup = SweepSetup {
        hidden: &cfg.training.hidden,
        train: &study.data.train,
        mask: &study.mask,
        gammas: &cfg.sweep.gammas,
        train_config: &train_config,
        link: &link,
        snr_db: cfg.sweep.eval_snr_db,
        eval_seed: study.plan.eval,
        baseline: Some(&study.u),
    };
    info!("threshold sweep over {} gammas (replicate {})", cfg.sweep.gammas.len(), study.plan.replicate);
    Ok(threshold_sweep(&setup)?)
}

/// Restricted-loss scans of `model` along the configured directions.
pub fn probe_study(cfg: &ExperimentConfig, plan: &SeedPlan, model: &Mlp, data: &Dataset) -> Result<Vec<ProbeResult>> {
    let grid = cfg.probe.grid();
    (0..cfg.probe.directions)
        .map(|i| Ok(loss_landscape_probe(model, data, plan.probe_direction(i), &grid)?))
        .collect()
}
