//! The experiment studies. Each suite runs data generation, training, mask
//! extraction and evaluation end to end, writes its CSVs to
//! `<out>/suite-<name>/` and returns a typed report.
//!
//! Intermediate datasets and models go to `<out>/cache/`, keyed by the
//! digest of what determines them, so suites sharing a configuration reuse
//! each other's work.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use xai_chest_core::estimators::EstimatorKind;
use xai_chest_core::eval::{count_flops, noise_weight_histogram, LinkResult};
use xai_chest_core::neural::Mlp;
use xai_chest_core::phy::{HpaKind, Modulation};
use xai_chest_core::xai::{aggregated_masks, AggregatedMask, RelevanceSet, SweepResult};

use crate::commands::HISTOGRAM_BINS;
use crate::config::{ChannelModel, ExperimentConfig};
use crate::error::Result;
use crate::io::{index_list, num, opt_num, RunRecorder, Table};
use crate::pipeline::{evaluate, mask_study, sweep_study, MaskStudy, Store};
use crate::seeds::SeedPlan;
use crate::stats::spearman;
use crate::tables::{histogram_table, link_fields, mask_rows, mask_table, sweep_table, LINK_COLUMNS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SuiteName {
    #[value(name = "threshold")]
    Threshold,
    #[value(name = "modulation")]
    Modulation,
    #[value(name = "selectivity")]
    Selectivity,
    #[value(name = "nonlinear")]
    Nonlinear,
    #[value(name = "train_snr")]
    TrainSnr,
    #[value(name = "estimators")]
    Estimators,
    #[value(name = "arch_reduction")]
    ArchReduction,
}

impl SuiteName {
    pub const ALL: [SuiteName; 7] = [
        SuiteName::Threshold,
        SuiteName::Modulation,
        SuiteName::Selectivity,
        SuiteName::Nonlinear,
        SuiteName::TrainSnr,
        SuiteName::Estimators,
        SuiteName::ArchReduction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteName::Threshold => "threshold",
            SuiteName::Modulation => "modulation",
            SuiteName::Selectivity => "selectivity",
            SuiteName::Nonlinear => "nonlinear",
            SuiteName::TrainSnr => "train_snr",
            SuiteName::Estimators => "estimators",
            SuiteName::ArchReduction => "arch_reduction",
        }
    }
}

pub fn suite_dir(out: &Path, name: SuiteName) -> PathBuf {
    out.join(format!("suite-{}", name.name()))
}

pub fn store_for(out: &Path) -> Store {
    Store::on_disk(&out.join("cache"))
}

/// A full-input `U`/`N` pair of replicate 0 with its threshold sweep.
#[derive(Debug, Clone)]
pub struct SweptStudy {
    pub label: String,
    pub mask: AggregatedMask,
    pub pilot_ranks: Vec<usize>,
    pub u: Mlp,
    pub sweep: SweepResult,
    pub conventional: LinkResult,
}

impl SweptStudy {
    /// Selected subcarrier set; the full input when no threshold qualified.
    pub fn selected_set(&self) -> Vec<usize> {
        self.sweep
            .selected_record()
            .map(|r| r.relevant.clone())
            .unwrap_or_else(|| (0..self.mask.values.len()).collect())
    }

    pub fn n_relevant(&self) -> usize {
        self.selected_set().len()
    }

    pub fn gamma_star(&self) -> Option<f64> {
        self.sweep.selected_record().map(|r| r.gamma)
    }

    pub fn selected_result(&self) -> LinkResult {
        self.sweep
            .selected_record()
            .and_then(|r| r.ber_relevant)
            .unwrap_or(self.sweep.full)
    }
}

fn swept_from(cfg: &ExperimentConfig, label: &str, study: &MaskStudy) -> Result<SweptStudy> {
    let sweep = sweep_study(cfg, study)?;
    let conventional = evaluate(cfg, &study.plan, None, None)?;
    Ok(SweptStudy {
        label: label.to_string(),
        mask: study.mask.clone(),
        pilot_ranks: study.pilot_ranks.clone(),
        u: study.u.clone(),
        sweep,
        conventional,
    })
}

fn swept(store: &Store, cfg: &ExperimentConfig, label: &str) -> Result<SweptStudy> {
    swept_from(cfg, label, &mask_study(store, cfg, 0)?)
}

fn summary_header(labels: &[&str]) -> Vec<String> {
    let mut h: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
    h.extend(["mean_mask", "pilot_ranks", "gamma_star", "n_relevant", "pilots_relevant"].map(String::from));
    for prefix in ["conventional", "full", "selected"] {
        h.extend(LINK_COLUMNS.iter().map(|c| format!("{prefix}_{c}")));
    }
    h
}

fn summary_row(labels: Vec<String>, s: &SweptStudy, pilots: &[usize]) -> Vec<String> {
    let set = s.selected_set();
    let mut row = labels;
    row.extend([
        num(s.mask.mean()),
        index_list(&s.pilot_ranks),
        opt_num(s.gamma_star()),
        s.n_relevant().to_string(),
        pilots.iter().filter(|p| set.contains(p)).count().to_string(),
    ]);
    row.extend(link_fields(Some(&s.conventional)));
    row.extend(link_fields(Some(&s.sweep.full)));
    row.extend(link_fields(Some(&s.selected_result())));
    row
}

fn write_swept(rec: &mut RunRecorder, cfg: &ExperimentConfig, label_cols: &[&str], studies: &[(Vec<String>, &SweptStudy)]) -> Result<()> {
    let spec = cfg.frame_spec();
    let mut summary = Table::new(&summary_header(label_cols));
    let mut masks = mask_table(label_cols);
    for (labels, s) in studies {
        summary.push(summary_row(labels.clone(), s, &spec.pilot_indices));
        mask_rows(&mut masks, labels, &s.mask, &spec);
        rec.table(&format!("sweep_{}.csv", s.label), &sweep_table(&s.sweep))?;
    }
    rec.table("summary.csv", &summary)?;
    rec.table("masks.csv", &masks)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ThresholdReport {
    pub replicates: Vec<MaskStudy>,
    pub main: SweptStudy,
    /// `(λ, replicate, mean mask)` for the extra `λ` grid.
    pub lambda_means: Vec<(f64, u64, f64)>,
}

/// Mask distribution over replicates, pilot ranks, and the threshold sweep
/// of replicate 0.
pub fn threshold(cfg: &ExperimentConfig, out: &Path) -> Result<ThresholdReport> {
    let dir = suite_dir(out, SuiteName::Threshold);
    let store = store_for(out);
    let mut rec = RunRecorder::new("suite_threshold", &dir);
    let spec = cfg.frame_spec();
    let replicates = (0..cfg.suite.replicates as u64)
        .into_par_iter()
        .map(|r| mask_study(&store, cfg, r))
        .collect::<Result<Vec<_>>>()?;
    let main = swept_from(cfg, "sta", &replicates[0])?;

    let mut masks = mask_table(&["replicate"]);
    let mut ranks = Table::new(&["replicate", "pilot_ranks", "max_pilot_rank", "lowest_quartile"]);
    for s in &replicates {
        rec.seeds(s.plan);
        mask_rows(&mut masks, &[s.plan.replicate.to_string()], &s.mask, &spec);
        ranks.push(vec![
            s.plan.replicate.to_string(),
            index_list(&s.pilot_ranks),
            s.pilot_ranks.iter().max().unwrap().to_string(),
            s.pilots_in_lowest_quartile().to_string(),
        ]);
    }
    rec.table("replicate_masks.csv", &masks)?;
    rec.table("pilot_ranks.csv", &ranks)?;
    let first = &replicates[0];
    let hist = noise_weight_histogram(&aggregated_masks(&first.n, &first.data.test, spec.k_on)?, HISTOGRAM_BINS, &spec)?;
    rec.table("histogram.csv", &histogram_table(&hist))?;
    write_swept(&mut rec, cfg, &["estimator"], &[(vec!["sta".into()], &main)])?;

    let jobs: Vec<(f64, u64)> = cfg
        .sweep
        .lambda_grid
        .iter()
        .flat_map(|&l| (0..cfg.suite.replicates as u64).map(move |r| (l, r)))
        .collect();
    let lambda_means = jobs
        .par_iter()
        .map(|&(l, r)| {
            let mut c = cfg.clone();
            c.training.lambda = l;
            Ok((l, r, mask_study(&store, &c, r)?.mask.mean()))
        })
        .collect::<Result<Vec<_>>>()?;
    if !lambda_means.is_empty() {
        let mut t = Table::new(&["lambda", "replicate", "mean_mask"]);
        for (l, r, m) in &lambda_means {
            t.push(vec![num(*l), r.to_string(), num(*m)]);
        }
        rec.table("lambda.csv", &t)?;
    }
    rec.finish(cfg)?;
    Ok(ThresholdReport {
        replicates,
        main,
        lambda_means,
    })
}

#[derive(Debug, Clone)]
pub struct LabelledStudies<L> {
    pub entries: Vec<(L, SweptStudy)>,
}

impl<L: PartialEq> LabelledStudies<L> {
    pub fn get(&self, label: &L) -> Option<&SweptStudy> {
        self.entries.iter().find(|(l, _)| l == label).map(|(_, s)| s)
    }
}

fn labelled<L: Copy + Send + Sync>(
    cfg: &ExperimentConfig,
    out: &Path,
    name: SuiteName,
    label_col: &str,
    labels: &[L],
    label_name: impl Fn(L) -> String + Sync,
    configure: impl Fn(&mut ExperimentConfig, L) + Sync,
) -> Result<LabelledStudies<L>> {
    let store = store_for(out);
    let mut rec = RunRecorder::new(&format!("suite_{}", name.name()), &suite_dir(out, name));
    let entries = labels
        .par_iter()
        .map(|&l| {
            let mut c = cfg.clone();
            configure(&mut c, l);
            Ok((l, swept(&store, &c, &label_name(l))?))
        })
        .collect::<Result<Vec<_>>>()?;
    rec.seeds(SeedPlan::new(cfg.master_seed, 0));
    let rows: Vec<(Vec<String>, &SweptStudy)> = entries.iter().map(|(l, s)| (vec![label_name(*l)], s)).collect();
    write_swept(&mut rec, cfg, &[label_col], &rows)?;
    rec.finish(cfg)?;
    Ok(LabelledStudies { entries })
}

/// One study per modulation order.
pub fn modulation(cfg: &ExperimentConfig, out: &Path) -> Result<LabelledStudies<Modulation>> {
    labelled(cfg, out, SuiteName::Modulation, "modulation", &cfg.suite.modulations, |m| m.name().to_string(), |c, m| {
        c.modulation.scheme = m
    })
}

/// Conventional-estimator comparison: DPA, STA and TRFI inputs.
pub fn estimators(cfg: &ExperimentConfig, out: &Path) -> Result<LabelledStudies<EstimatorKind>> {
    let kinds = [EstimatorKind::Dpa, EstimatorKind::Sta, EstimatorKind::Trfi];
    labelled(cfg, out, SuiteName::Estimators, "estimator", &kinds, |k| k.name().to_string(), |c, k| c.estimator.kind = k)
}

#[derive(Debug, Clone)]
pub struct SelectivityEntry {
    pub channel: ChannelModel,
    pub study: SweptStudy,
    /// `U` retrained on the pilot subcarriers only.
    pub pilots_only: LinkResult,
}

#[derive(Debug, Clone)]
pub struct SelectivityReport {
    pub entries: Vec<SelectivityEntry>,
}

impl SelectivityReport {
    pub fn get(&self, channel: ChannelModel) -> Option<&SelectivityEntry> {
        self.entries.iter().find(|e| e.channel == channel)
    }
}

fn pilots_set(cfg: &ExperimentConfig) -> Result<RelevanceSet> {
    let spec = cfg.frame_spec();
    Ok(RelevanceSet::from_indices(&spec.pilot_indices, spec.k_on)?)
}

/// High versus low frequency selectivity, each with a pilots-only model.
pub fn selectivity(cfg: &ExperimentConfig, out: &Path) -> Result<SelectivityReport> {
    let store = store_for(out);
    let mut rec = RunRecorder::new("suite_selectivity", &suite_dir(out, SuiteName::Selectivity));
    let channels = [ChannelModel::VtvSdww, ChannelModel::VtvEx];
    let entries = channels
        .par_iter()
        .map(|&ch| {
            let mut c = cfg.clone();
            c.channel.model = ch;
            let study = mask_study(&store, &c, 0)?;
            let s = swept_from(&c, ch.name(), &study)?;
            let pilots = pilots_set(&c)?;
            let u = store.u_model(&c, 0, &c.training.hidden, &pilots, &study.data.train)?;
            let pilots_only = evaluate(&c, &study.plan, Some(&u), Some(&pilots))?;
            Ok(SelectivityEntry {
                channel: ch,
                study: s,
                pilots_only,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rec.seeds(SeedPlan::new(cfg.master_seed, 0));
    let rows: Vec<(Vec<String>, &SweptStudy)> = entries.iter().map(|e| (vec![e.channel.name().to_string()], &e.study)).collect();
    write_swept(&mut rec, cfg, &["channel"], &rows)?;
    let mut t = Table::new(&crate::tables::with_link(&["channel", "inputs"]));
    for e in &entries {
        for (inputs, r) in [("full", &e.study.sweep.full), ("pilots", &e.pilots_only)] {
            let mut row = vec![e.channel.name().to_string(), inputs.to_string()];
            row.extend(link_fields(Some(r)));
            t.push(row);
        }
    }
    rec.table("pilots_only.csv", &t)?;
    rec.finish(cfg)?;
    Ok(SelectivityReport { entries })
}

#[derive(Debug, Clone)]
pub struct NonlinearReport {
    pub ibo_db: f64,
    pub rho: f64,
    pub study: SweptStudy,
}

/// Rapp amplifier at the configured back-off.
pub fn nonlinear(cfg: &ExperimentConfig, out: &Path) -> Result<NonlinearReport> {
    let store = store_for(out);
    let mut rec = RunRecorder::new("suite_nonlinear", &suite_dir(out, SuiteName::Nonlinear));
    let mut c = cfg.clone();
    c.hpa.kind = HpaKind::Rapp;
    c.hpa.ibo_db = cfg.suite.nonlinear_ibo_db;
    let rho = c.hpa_model().rho.re;
    let study = swept(&store, &c, "rapp")?;
    rec.seeds(SeedPlan::new(cfg.master_seed, 0));
    write_swept(&mut rec, &c, &["ibo_db"], &[(vec![num(c.hpa.ibo_db)], &study)])?;
    let mut t = Table::new(&["ibo_db", "smoothness", "rho"]);
    t.push(vec![num(c.hpa.ibo_db), num(c.hpa.smoothness), num(rho)]);
    rec.table("hpa.csv", &t)?;
    rec.finish(&c)?;
    Ok(NonlinearReport {
        ibo_db: c.hpa.ibo_db,
        rho,
        study,
    })
}

#[derive(Debug, Clone)]
pub struct TrainSnrReport {
    /// `(training SNR, replicate, mean mask)`.
    pub points: Vec<(f64, u64, f64)>,
    /// Spearman correlation of SNR and mean mask per replicate.
    pub per_replicate: Vec<(u64, f64)>,
    /// Spearman correlation over all points.
    pub pooled: f64,
}

impl TrainSnrReport {
    /// Mean over replicates of the mean mask at each SNR, in grid order.
    pub fn mean_by_snr(&self) -> Vec<(f64, f64)> {
        let mut snrs: Vec<f64> = Vec::new();
        for p in &self.points {
            if !snrs.contains(&p.0) {
                snrs.push(p.0);
            }
        }
        snrs.iter()
            .map(|&s| {
                let v: Vec<f64> = self.points.iter().filter(|p| p.0 == s).map(|p| p.2).collect();
                (s, v.iter().sum::<f64>() / v.len() as f64)
            })
            .collect()
    }
}

/// Mask statistics as a function of the training SNR.
pub fn train_snr(cfg: &ExperimentConfig, out: &Path) -> Result<TrainSnrReport> {
    let store = store_for(out);
    let mut rec = RunRecorder::new("suite_train_snr", &suite_dir(out, SuiteName::TrainSnr));
    let spec = cfg.frame_spec();
    let jobs: Vec<(f64, u64)> = cfg
        .suite
        .train_snr_grid_db
        .iter()
        .flat_map(|&s| (0..cfg.suite.replicates as u64).map(move |r| (s, r)))
        .collect();
    let studies = jobs
        .par_iter()
        .map(|&(s, r)| {
            let mut c = cfg.clone();
            c.data.train_snr_db = s;
            mask_study(&store, &c, r).map(|m| (s, r, m.mask))
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, u64, f64)> = studies.iter().map(|(s, r, m)| (*s, *r, m.mean())).collect();
    let per_replicate: Vec<(u64, f64)> = (0..cfg.suite.replicates as u64)
        .map(|r| {
            let (x, y): (Vec<f64>, Vec<f64>) = points.iter().filter(|p| p.1 == r).map(|p| (p.0, p.2)).unzip();
            (r, spearman(&x, &y))
        })
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().map(|p| (p.0, p.2)).unzip();
    let pooled = spearman(&x, &y);

    for r in 0..cfg.suite.replicates as u64 {
        rec.seeds(SeedPlan::new(cfg.master_seed, r));
    }
    let mut t = Table::new(&["train_snr_db", "replicate", "mean_mask"]);
    let mut masks = mask_table(&["train_snr_db", "replicate"]);
    for (s, r, m) in &studies {
        t.push(vec![num(*s), r.to_string(), num(m.mean())]);
        mask_rows(&mut masks, &[num(*s), r.to_string()], m, &spec);
    }
    rec.table("mean_mask.csv", &t)?;
    rec.table("masks.csv", &masks)?;
    let mut sp = Table::new(&["replicate", "spearman"]);
    for (r, rho) in &per_replicate {
        sp.push(vec![r.to_string(), num(*rho)]);
    }
    sp.push(vec!["pooled".into(), num(pooled)]);
    rec.table("spearman.csv", &sp)?;
    rec.finish(cfg)?;
    Ok(TrainSnrReport {
        points,
        per_replicate,
        pooled,
    })
}

#[derive(Debug, Clone)]
pub struct ArchEntry {
    pub label: String,
    pub layer_dims: Vec<usize>,
    pub flops: usize,
    pub result: LinkResult,
}

#[derive(Debug, Clone)]
pub struct ArchReport {
    /// The full-input baseline first, then the pilots-only architectures.
    pub entries: Vec<ArchEntry>,
}

impl ArchReport {
    pub fn baseline(&self) -> &ArchEntry {
        &self.entries[0]
    }

    pub fn find(&self, hidden: &[usize]) -> Option<&ArchEntry> {
        self.entries[1..].iter().find(|e| &e.layer_dims[1..e.layer_dims.len() - 1] == hidden)
    }
}

fn dims_label(hidden: &[usize]) -> String {
    hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join("-")
}

/// Smaller networks on the pilot subcarriers of the low-selectivity channel.
pub fn arch_reduction(cfg: &ExperimentConfig, out: &Path) -> Result<ArchReport> {
    let store = store_for(out);
    let mut rec = RunRecorder::new("suite_arch_reduction", &suite_dir(out, SuiteName::ArchReduction));
    let mut c = cfg.clone();
    c.channel.model = cfg.suite.arch_channel;
    let plan = SeedPlan::new(c.master_seed, 0);
    rec.seeds(plan);
    let data = store.datasets(&c, 0)?;
    let spec = c.frame_spec();
    let full = RelevanceSet::all(spec.k_on);
    let pilots = pilots_set(&c)?;
    let mut jobs: Vec<(String, &[usize], &RelevanceSet)> = vec![(format!("full ({})", dims_label(&c.training.hidden)), &c.training.hidden, &full)];
    for a in &cfg.suite.architectures {
        jobs.push((format!("pilots ({})", dims_label(a)), a, &pilots));
    }
    let entries = jobs
        .par_iter()
        .map(|(label, hidden, rel)| {
            let u = store.u_model(&c, 0, hidden, rel, &data.train)?;
            Ok(ArchEntry {
                label: label.clone(),
                layer_dims: u.layer_dims.clone(),
                flops: count_flops(&u.layer_dims)?.total,
                result: evaluate(&c, &plan, Some(&u), Some(rel))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&crate::tables::with_link(&["architecture", "layer_dims", "flops"]));
    for e in &entries {
        let mut row = vec![e.label.clone(), dims_label(&e.layer_dims), e.flops.to_string()];
        row.extend(link_fields(Some(&e.result)));
        t.push(row);
    }
    rec.table("summary.csv", &t)?;
    rec.finish(&c)?;
    Ok(ArchReport { entries })
}

/// Runs a suite and returns its output directory.
pub fn run_suite(cfg: &ExperimentConfig, out: &Path, name: SuiteName) -> Result<PathBuf> {
    match name {
        SuiteName::Threshold => threshold(cfg, out).map(drop),
        SuiteName::Modulation => modulation(cfg, out).map(drop),
        SuiteName::Selectivity => selectivity(cfg, out).map(drop),
        SuiteName::Nonlinear => nonlinear(cfg, out).map(drop),
        SuiteName::TrainSnr => train_snr(cfg, out).map(drop),
        SuiteName::Estimators => estimators(cfg, out).map(drop),
        SuiteName::ArchReduction => arch_reduction(cfg, out).map(drop),
    }?;
    Ok(suite_dir(out, name))
}

