use rayon::prelude::*;

use super::mask::{classify_subcarriers, filter_dataset, AggregatedMask, RelevanceSet};
use crate::error::{Error, Result};
use crate::eval::{run_link, LinkConfig, LinkResult};
use crate::neural::{evaluate_mse, train_u, Dataset, Mlp, TrainConfig};

/// Inputs of a threshold sweep.
#[derive(Debug, Clone)]
pub struct SweepSetup<'a> {
    /// Hidden widths of `U`; the input width follows the relevance set and
    /// the output stays `2·k_on`.
    pub hidden: &'a [usize],
    pub train: &'a Dataset,
    pub mask: &'a AggregatedMask,
    pub gammas: &'a [f64],
    pub train_config: &'a TrainConfig,
    /// Link used for BER; its `model` and `relevance` are replaced per run.
    pub link: &'a LinkConfig,
    pub snr_db: f64,
    pub eval_seed: u64,
    /// Already trained full-input model; retrained when absent.
    pub baseline: Option<&'a Mlp>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub gamma: f64,
    pub relevant: Vec<usize>,
    /// `None` when the relevant set is empty.
    pub ber_relevant: Option<LinkResult>,
    /// `None` when the irrelevant set is empty.
    pub ber_irrelevant: Option<LinkResult>,
}

impl SweepRecord {
    pub fn n_relevant(&self) -> usize {
        self.relevant.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub full: LinkResult,
    /// Index into `records` of the selected threshold.
    pub selected: Option<usize>,
    /// No threshold met `BER_relevant <= BER_full`: keep the full input.
    pub no_improvement: bool,
    /// Every distinct subcarrier set with its model, the full set first.
    pub models: Vec<(Vec<usize>, Mlp)>,
}

impl SweepResult {
    pub fn selected_record(&self) -> Option<&SweepRecord> {
        self.selected.map(|i| &self.records[i])
    }
}

/// A trained model with its link statistics.
#[derive(Debug, Clone)]
pub struct TrainedVariant {
    pub relevance: RelevanceSet,
    pub model: Mlp,
    pub result: LinkResult,
    pub train_mse: f64,
}

/// Trains `U` on the relevant columns of `train` and measures its BER.
pub fn train_and_evaluate(
    hidden: &[usize],
    train: &Dataset,
    relevance: &RelevanceSet,
    config: &TrainConfig,
    link: &LinkConfig,
    snr_db: f64,
    eval_seed: u64,
) -> Result<TrainedVariant> {
    let filtered = filter_dataset(train, relevance)?;
    let arch = architecture(filtered.d_in, hidden, train.d_out);
    let (model, _) = train_u(&filtered, &arch, config)?;
    evaluate_variant(model, &filtered, relevance, link, snr_db, eval_seed)
}

fn evaluate_variant(
    model: Mlp,
    filtered: &Dataset,
    relevance: &RelevanceSet,
    link: &LinkConfig,
    snr_db: f64,
    eval_seed: u64,
) -> Result<TrainedVariant> {
    let mut cfg = link.clone();
    cfg.model = Some(model);
    cfg.relevance = if relevance.irrelevant.is_empty() { None } else { Some(relevance.clone()) };
    let result = run_link(&cfg, snr_db, eval_seed)?;
    let model = cfg.model.take().unwrap();
    let train_mse = evaluate_mse(&model, filtered)?;
    Ok(TrainedVariant {
        relevance: relevance.clone(),
        model,
        result,
        train_mse,
    })
}

pub fn architecture(d_in: usize, hidden: &[usize], d_out: usize) -> Vec<usize> {
    std::iter::once(d_in).chain(hidden.iter().copied()).chain(std::iter::once(d_out)).collect()
}

/// Chooses the threshold with the lowest relevant-input BER among those not
/// worse than the full input; ties prefer fewer inputs, then the smaller
/// threshold.
pub fn select_threshold(records: &[SweepRecord], ber_full: f64) -> Option<usize> {
    records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.ber_relevant.map(|b| (i, b.ber, r.n_relevant(), r.gamma)))
        .filter(|&(_, ber, _, _)| ber <= ber_full)
        .min_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then(a.2.cmp(&b.2))
                .then(a.3.total_cmp(&b.3))
        })
        .map(|(i, ..)| i)
}

/// For every threshold, retrains `U` from scratch on the relevant and on
/// the irrelevant subcarriers and measures both BERs. Identical subcarrier
/// sets are trained once. Independent trainings run on the current rayon
/// pool; results do not depend on the pool size.
pub fn threshold_sweep(setup: &SweepSetup) -> Result<SweepResult> {
    if setup.gammas.is_empty() {
        return Err(Error::Config("threshold sweep needs at least one gamma".into()));
    }
    if let Some(g) = setup.gammas.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
        return Err(Error::Config(format!("gamma {g} outside (0, 1]")));
    }
    let k_on = setup.mask.values.len();
    let full = RelevanceSet::all(k_on);
    let sets: Vec<RelevanceSet> = setup.gammas.iter().map(|&g| classify_subcarriers(setup.mask, g)).collect();

    let mut jobs: Vec<Vec<usize>> = vec![full.relevant.clone()];
    for s in &sets {
        for idx in [&s.relevant, &s.irrelevant] {
            if !idx.is_empty() && !jobs.contains(idx) {
                jobs.push(idx.clone());
            }
        }
    }
    let results = jobs
        .par_iter()
        .enumerate()
        .map(|(j, idx)| {
            let rel = RelevanceSet::from_indices(idx, k_on)?;
            match (j, setup.baseline) {
                (0, Some(model)) => evaluate_variant(model.clone(), setup.train, &rel, setup.link, setup.snr_db, setup.eval_seed),
                _ => train_and_evaluate(
                    setup.hidden,
                    setup.train,
                    &rel,
                    setup.train_config,
                    setup.link,
                    setup.snr_db,
                    setup.eval_seed,
                ),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let lookup = |idx: &Vec<usize>| -> Option<LinkResult> { jobs.iter().position(|j| j == idx).map(|p| results[p].result) };

    let records: Vec<SweepRecord> = sets
        .iter()
        .map(|s| SweepRecord {
            gamma: s.gamma,
            relevant: s.relevant.clone(),
            ber_relevant: if s.relevant.is_empty() { None } else { lookup(&s.relevant) },
            ber_irrelevant: if s.irrelevant.is_empty() { None } else { lookup(&s.irrelevant) },
        })
        .collect();
    let full_result = results[0].result;
    let selected = select_threshold(&records, full_result.ber);
    Ok(SweepResult {
        records,
        full: full_result,
        selected,
        no_improvement: selected.is_none(),
        models: jobs.into_iter().zip(results).map(|(idx, v)| (idx, v.model)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lr(ber: f64) -> LinkResult {
        LinkResult {
            ber,
            ..Default::default()
        }
    }

    fn rec(gamma: f64, n: usize, ber: Option<f64>) -> SweepRecord {
        SweepRecord {
            gamma,
            relevant: (0..n).collect(),
            ber_relevant: ber.map(lr),
            ber_irrelevant: None,
        }
    }

    #[test]
    fn selection_rules() {
        let records = vec![rec(0.1, 4, Some(0.02)), rec(0.2, 10, Some(0.008)), rec(0.3, 20, Some(0.008)), rec(0.4, 30, Some(0.009))];
        assert_eq!(select_threshold(&records, 0.01), Some(1));
        assert_eq!(select_threshold(&records, 0.001), None);
        assert_eq!(select_threshold(&[rec(0.1, 0, None)], 0.5), None);
    }

    #[test]
    fn architecture_keeps_full_output() {
        assert_eq!(architecture(8, &[15, 15], 104), vec![8, 15, 15, 104]);
    }
}
