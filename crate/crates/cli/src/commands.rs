//! Single-step commands. Each reads its prerequisites from the output
//! directory, writes its artifacts there and finishes with a manifest.
//!
//! ```text
//! <out>/data/{train,test}.xcds     gen-data
//! <out>/models/u.mlp               train-u
//! <out>/models/n.mlp               train-n
//! <out>/models/sweep/*.mlp         sweep
//! <out>/*.csv, *.manifest.json
//! ```

use std::path::{Path, PathBuf};

use xai_chest_core::eval::{ber_curve, count_flops, noise_weight_histogram};
use xai_chest_core::neural::{evaluate_mse, load_model, model_to_string, train_u, Mlp};
use xai_chest_core::xai::{aggregated_masks, architecture, mean_aggregated_mask, train_n_model};

use crate::cache;
use crate::config::ExperimentConfig;
use crate::error::{require, Result};
use crate::io::{num, write_atomic, RunRecorder, Table};
use crate::pipeline::{generate_datasets, probe_study, sweep_study, MaskStudy};
use crate::seeds::SeedPlan;
use crate::stats::ascending_ranks;
use crate::tables::{ber_table, flops_table, histogram_table, mask_rows, mask_table, probe_tables, sweep_table};

pub const HISTOGRAM_BINS: usize = 20;

/// Layer dims of the FLOPS table: the full-input model and the pilots-only
/// models of decreasing size.
pub fn reference_architectures(k_on: usize, n_pilots: usize) -> Vec<(String, Vec<usize>)> {
    let full = 2 * k_on;
    let p = 2 * n_pilots;
    vec![
        ("full (15-15-15)".into(), vec![full, 15, 15, 15, full]),
        ("relevant (15-15-15)".into(), vec![p, 15, 15, 15, full]),
        ("relevant (15-15)".into(), vec![p, 15, 15, full]),
        ("relevant (15)".into(), vec![p, 15, full]),
        ("relevant (10)".into(), vec![p, 10, full]),
        ("relevant (5)".into(), vec![p, 5, full]),
    ]
}

pub struct Layout {
    pub out: PathBuf,
}

impl Layout {
    pub fn new(out: &Path) -> Self {
        Layout { out: out.to_path_buf() }
    }
    pub fn train(&self) -> PathBuf {
        self.out.join("data/train.xcds")
    }
    pub fn test(&self) -> PathBuf {
        self.out.join("data/test.xcds")
    }
    pub fn u_model(&self) -> PathBuf {
        self.out.join("models/u.mlp")
    }
    pub fn n_model(&self) -> PathBuf {
        self.out.join("models/n.mlp")
    }
}

fn save_model(model: &Mlp, path: &Path) -> Result<()> {
    write_atomic(path, model_to_string(model).as_bytes())
}

fn plan(cfg: &ExperimentConfig) -> SeedPlan {
    SeedPlan::new(cfg.master_seed, 0)
}

pub fn gen_data(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let l = Layout::new(out);
    let mut rec = RunRecorder::new("gen_data", out);
    let p = plan(cfg);
    rec.seeds(p);
    let data = generate_datasets(cfg, &p)?;
    cache::save(&data.train, &l.train())?;
    cache::save(&data.test, &l.test())?;
    rec.add(l.train());
    rec.add(l.test());
    rec.finish(cfg)
}

pub fn train_u_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let l = Layout::new(out);
    require(&l.train(), "gen-data")?;
    let mut rec = RunRecorder::new("train_u", out);
    let p = plan(cfg);
    rec.seeds(p);
    let train = cache::load(&l.train())?;
    let arch = architecture(train.d_in, &cfg.training.hidden, train.d_out);
    let (model, history) = train_u(&train, &arch, &cfg.u_train_config(&p))?;
    save_model(&model, &l.u_model())?;
    rec.add(l.u_model());

    let mut t = Table::new(&["epoch", "train_mse"]);
    for (e, loss) in history.iter().enumerate() {
        t.push(vec![(e + 1).to_string(), num(*loss)]);
    }
    rec.table("train_u.csv", &t)?;
    let mut s = Table::new(&["layer_dims", "n_params", "flops", "train_mse", "test_mse"]);
    let test_mse = if l.test().exists() {
        num(evaluate_mse(&model, &cache::load(&l.test())?)?)
    } else {
        String::new()
    };
    s.push(vec![
        arch.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("-"),
        model.params.num_params().to_string(),
        count_flops(&arch)?.total.to_string(),
        num(evaluate_mse(&model, &train)?),
        test_mse,
    ]);
    rec.table("train_u_summary.csv", &s)?;
    rec.finish(cfg)
}

fn load_u(l: &Layout) -> Result<Mlp> {
    require(&l.u_model(), "train-u")?;
    Ok(load_model(&l.u_model())?)
}

fn load_n(l: &Layout) -> Result<Mlp> {
    require(&l.n_model(), "train-n")?;
    Ok(load_model(&l.n_model())?)
}

pub fn train_n_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let l = Layout::new(out);
    require(&l.train(), "gen-data")?;
    require(&l.test(), "gen-data")?;
    let u = load_u(&l)?;
    let mut rec = RunRecorder::new("train_n", out);
    let p = plan(cfg);
    rec.seeds(p);
    let train = cache::load(&l.train())?;
    let test = cache::load(&l.test())?;
    let (n, history) = train_n_model(&u, &train, &cfg.n_train_config(&p))?;
    save_model(&n, &l.n_model())?;
    rec.add(l.n_model());

    let mut t = Table::new(&["epoch", "l_n", "l_u", "l_x", "mean_mask"]);
    for (e, h) in history.iter().enumerate() {
        t.push(vec![(e + 1).to_string(), num(h.loss.l_n), num(h.loss.l_u), num(h.loss.l_x), num(h.mean_mask)]);
    }
    rec.table("train_n.csv", &t)?;
    let spec = cfg.frame_spec();
    let mask = mean_aggregated_mask(&n, &test, spec.k_on)?;
    let mut m = mask_table(&[]);
    mask_rows(&mut m, &[], &mask, &spec);
    rec.table("mask.csv", &m)?;
    let hist = noise_weight_histogram(&aggregated_masks(&n, &test, spec.k_on)?, HISTOGRAM_BINS, &spec)?;
    rec.table("histogram.csv", &histogram_table(&hist))?;
    rec.finish(cfg)
}

pub fn sweep_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let l = Layout::new(out);
    require(&l.train(), "gen-data")?;
    require(&l.test(), "gen-data")?;
    let u = load_u(&l)?;
    let n = load_n(&l)?;
    let mut rec = RunRecorder::new("sweep", out);
    let p = plan(cfg);
    rec.seeds(p);
    let spec = cfg.frame_spec();
    let data = crate::pipeline::Datasets {
        train: cache::load(&l.train())?,
        test: cache::load(&l.test())?,
    };
    let mask = mean_aggregated_mask(&n, &data.test, spec.k_on)?;
    let pilot_ranks = ascending_ranks(&mask.values, &spec.pilot_indices);
    let study = MaskStudy {
        plan: p,
        data,
        u,
        n,
        mask,
        pilot_ranks,
    };
    let sweep = sweep_study(cfg, &study)?;
    rec.table("sweep.csv", &sweep_table(&sweep))?;
    for r in &sweep.records {
        let irrelevant: Vec<usize> = (0..spec.k_on).filter(|k| !r.relevant.contains(k)).collect();
        for (set, idx) in [("relevant", &r.relevant), ("irrelevant", &irrelevant)] {
            if let Some((_, model)) = sweep.models.iter().find(|(m, _)| m == idx) {
                let path = out.join(format!("models/sweep/gamma{}-{set}.mlp", num(r.gamma)));
                save_model(model, &path)?;
                rec.add(path);
            }
        }
    }
    rec.finish(cfg)
}

/// BER curves of the conventional estimator and, when `models/u.mlp`
/// exists, of the network-refined estimator.
pub fn ber_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let l = Layout::new(out);
    let mut rec = RunRecorder::new("ber", out);
    let p = plan(cfg);
    rec.seeds(p);
    let digest = cfg.digest();
    let est = cfg.estimator.kind.name();
    let link = cfg.link(p.eval)?;
    rec.table(&format!("ber_{est}.csv"), &ber_table(&ber_curve(&link, &digest)?))?;
    if l.u_model().exists() {
        let mut fnn = link.clone();
        fnn.model = Some(load_model(&l.u_model())?);
        rec.table(&format!("ber_{est}_fnn.csv"), &ber_table(&ber_curve(&fnn, &digest)?))?;
    }
    rec.finish(cfg)
}

/// FLOPS of `dims`, or of the standard architecture table when absent.
pub fn flops_cmd(cfg: &ExperimentConfig, out: &Path, dims: Option<&[usize]>) -> Result<PathBuf> {
    let mut rec = RunRecorder::new("flops", out);
    let spec = cfg.frame_spec();
    let archs = match dims {
        Some(d) => vec![("custom".to_string(), d.to_vec())],
        None => reference_architectures(spec.k_on, spec.k_pilot),
    };
    let reports = archs
        .into_iter()
        .map(|(name, d)| Ok((name, count_flops(&d)?)))
        .collect::<Result<Vec<_>>>()?;
    rec.table("flops.csv", &flops_table(&reports))?;
    rec.finish(cfg)
}

pub fn probe_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let l = Layout::new(out);
    require(&l.train(), "gen-data")?;
    let u = load_u(&l)?;
    let mut rec = RunRecorder::new("probe", out);
    let p = plan(cfg);
    rec.seeds(p);
    let train = cache::load(&l.train())?;
    let results = probe_study(cfg, &p, &u, &train)?;
    let (curve, cert) = probe_tables(&results);
    rec.table("probe.csv", &curve)?;
    rec.table("probe_certificates.csv", &cert)?;
    rec.finish(cfg)
}
