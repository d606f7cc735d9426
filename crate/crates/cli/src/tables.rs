//! CSV layouts of the harness outputs.

use xai_chest_core::eval::{BerCurve, FlopsReport, LinkResult, WeightHistogram};
use xai_chest_core::phy::FrameSpec;
use xai_chest_core::xai::{AggregatedMask, ProbeResult, SweepResult};

use crate::io::{index_list, num, opt_num, Table};
use crate::stats::{ascending_ranks, ber_interval};

/// `snr_db, bit_errors, total_bits, ber, mse_channel, config_digest`.
pub fn ber_table(curve: &BerCurve) -> Table {
    let mut t = Table::new(&["snr_db", "bit_errors", "total_bits", "ber", "mse_channel", "config_digest"]);
    for p in &curve.points {
        t.push(vec![
            num(p.snr_db),
            p.bit_errors.to_string(),
            p.total_bits.to_string(),
            num(p.ber),
            num(p.mse),
            curve.config_digest.clone(),
        ]);
    }
    t
}

pub const LINK_COLUMNS: [&str; 5] = ["bit_errors", "total_bits", "ber", "ber_ci_low", "ber_ci_high"];

pub fn link_fields(r: Option<&LinkResult>) -> Vec<String> {
    match r {
        Some(r) => {
            let (lo, hi) = ber_interval(r);
            vec![r.bit_errors.to_string(), r.total_bits.to_string(), num(r.ber), num(lo), num(hi)]
        }
        None => vec![String::new(); LINK_COLUMNS.len()],
    }
}

pub fn with_link(head: &[&str]) -> Vec<String> {
    head.iter().chain(LINK_COLUMNS.iter()).map(|h| h.to_string()).collect()
}

/// One `full` row, then a `relevant` and an `irrelevant` row per threshold.
pub fn sweep_table(sweep: &SweepResult) -> Table {
    let header = with_link(&["gamma", "set", "n_subcarriers", "subcarriers", "selected"]);
    let mut t = Table::new(&header);
    let k_on = sweep.models.first().map(|m| m.0.len()).unwrap_or(0);
    let mut row = vec![String::new(), "full".into(), k_on.to_string(), index_list(&(0..k_on).collect::<Vec<_>>()), String::new()];
    row.extend(link_fields(Some(&sweep.full)));
    t.push(row);
    for (i, r) in sweep.records.iter().enumerate() {
        let irrelevant: Vec<usize> = (0..k_on).filter(|k| !r.relevant.contains(k)).collect();
        for (set, idx, res) in [("relevant", &r.relevant, &r.ber_relevant), ("irrelevant", &irrelevant, &r.ber_irrelevant)] {
            let mut row = vec![
                num(r.gamma),
                set.into(),
                idx.len().to_string(),
                index_list(idx),
                (set == "relevant" && sweep.selected == Some(i)).to_string(),
            ];
            row.extend(link_fields(res.as_ref()));
            t.push(row);
        }
    }
    t
}

/// Per-subcarrier weights with their ascending rank.
pub fn mask_rows(t: &mut Table, prefix: &[String], mask: &AggregatedMask, spec: &FrameSpec) {
    let all: Vec<usize> = (0..mask.values.len()).collect();
    let ranks = ascending_ranks(&mask.values, &all);
    for (k, w) in mask.values.iter().enumerate() {
        let mut row = prefix.to_vec();
        row.extend([
            k.to_string(),
            spec.active_subcarriers[k].to_string(),
            spec.is_pilot(k).to_string(),
            num(*w),
            ranks[k].to_string(),
        ]);
        t.push(row);
    }
}

pub fn mask_table(prefix_cols: &[&str]) -> Table {
    let mut h: Vec<&str> = prefix_cols.to_vec();
    h.extend(["position", "subcarrier", "pilot", "weight", "rank"]);
    Table::new(&h)
}

/// `bin_low, bin_high, count_data, count_pilot`.
pub fn histogram_table(h: &WeightHistogram) -> Table {
    let mut t = Table::new(&["bin_low", "bin_high", "count_data", "count_pilot"]);
    for b in 0..h.bins() {
        t.push(vec![num(h.edges[b]), num(h.edges[b + 1]), h.count_data[b].to_string(), h.count_pilot[b].to_string()]);
    }
    t
}

pub fn flops_table(reports: &[(String, FlopsReport)]) -> Table {
    let mut t = Table::new(&["architecture", "layer_dims", "multiply_adds", "bias_adds", "activations", "total"]);
    for (name, r) in reports {
        t.push(vec![
            name.clone(),
            r.layer_dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("-"),
            r.layers.iter().map(|l| l.multiply_adds).sum::<usize>().to_string(),
            r.layers.iter().map(|l| l.bias_adds).sum::<usize>().to_string(),
            r.layers.iter().map(|l| l.activations).sum::<usize>().to_string(),
            r.total.to_string(),
        ]);
    }
    t
}

pub fn probe_tables(results: &[ProbeResult]) -> (Table, Table) {
    let mut curve = Table::new(&["direction", "t", "loss"]);
    let mut cert = Table::new(&["direction", "violation", "a", "m", "b", "excess"]);
    for (i, r) in results.iter().enumerate() {
        for (t, g) in &r.curve {
            curve.push(vec![i.to_string(), num(*t), num(*g)]);
        }
        let c = r.certificate;
        cert.push(vec![
            i.to_string(),
            c.is_some().to_string(),
            opt_num(c.map(|c| c.a)),
            opt_num(c.map(|c| c.m)),
            opt_num(c.map(|c| c.b)),
            opt_num(c.map(|c| c.excess)),
        ]);
    }
    (curve, cert)
}
