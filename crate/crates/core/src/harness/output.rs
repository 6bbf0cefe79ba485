//! Run records, aggregates and plot data as CSV.

use crate::error::{Error, Result};
use crate::learners::LearnerId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

pub const RUNS_HEADER: &str = "seed,learner,t,step_reward,time_avg_reward,cum_reward";
pub const AGGREGATE_HEADER: &str = "learner,t,mean_time_avg,se_time_avg,mean_centered,se_centered,n_seeds";
pub const PLOT_HEADER: &str = "learner,t,mean_centered,lower,upper";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub learner: LearnerId,
    pub t: usize,
    pub step_reward: usize,
    pub time_avg_reward: f64,
    pub cum_reward: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub learner: LearnerId,
    pub t: usize,
    pub mean_time_avg: f64,
    pub se_time_avg: f64,
    pub mean_centered: f64,
    pub se_centered: f64,
    pub n_seeds: usize,
}

fn write_csv<T: Serialize, W: Write>(rows: &[T], header: &str, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header.split(','))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv<T: for<'de> Deserialize<'de>, R: Read>(input: R, header: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    let got = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if got != header {
        return Err(Error::Config(format!("unexpected CSV header {got:?}, expected {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_runs_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    write_csv(records, RUNS_HEADER, out)
}

pub fn read_runs_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    read_csv(input, RUNS_HEADER)
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    write_csv(rows, AGGREGATE_HEADER, out)
}

pub fn read_aggregate_csv<R: Read>(input: R) -> Result<Vec<AggregateRow>> {
    read_csv(input, AGGREGATE_HEADER)
}

/// Mean and standard error (sample sd / √n; zero for a single value).
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per (learner, t) summaries over seeds. The centered series is the
/// per-seed difference from `center_on` at the same t.
pub fn aggregate(records: &[RunRecord], center_on: LearnerId) -> Result<Vec<AggregateRow>> {
    let center: BTreeMap<(u64, usize), f64> = records
        .iter()
        .filter(|r| r.learner == center_on)
        .map(|r| ((r.seed, r.t), r.time_avg_reward))
        .collect();
    if center.is_empty() {
        return Err(Error::MissingCenteringLearner(center_on.to_string()));
    }
    let mut groups: BTreeMap<(&str, usize), BTreeMap<u64, f64>> = BTreeMap::new();
    for r in records {
        groups.entry((r.learner.as_str(), r.t)).or_default().insert(r.seed, r.time_avg_reward);
    }
    groups
        .into_iter()
        .map(|((learner, t), by_seed)| {
            let values: Vec<f64> = by_seed.values().copied().collect();
            let diffs = by_seed
                .iter()
                .map(|(&seed, &v)| {
                    center
                        .get(&(seed, t))
                        .map(|c| v - c)
                        .ok_or_else(|| Error::MissingCenteringLearner(format!("{center_on} at seed {seed}, t = {t}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean_time_avg, se_time_avg) = mean_se(&values);
            let (mean_centered, se_centered) = mean_se(&diffs);
            Ok(AggregateRow {
                learner: learner.parse()?,
                t,
                mean_time_avg,
                se_time_avg,
                mean_centered,
                se_centered,
                n_seeds: values.len(),
            })
        })
        .collect()
}

/// `x` to `sig` significant digits, `%g` style: fixed notation for
/// moderate exponents, trailing zeros trimmed.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -5 || exp >= sig as i32 {
        format!("{}e{exp}", trim(mant))
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}"))
    }
}

/// Plot-ready rows: centered mean and its ±2 SE band, 10 significant
/// digits, ordered by learner then t.
pub fn emit_plot_data(rows: &[AggregateRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Config("no aggregate rows to plot".into()));
    }
    let mut sorted: Vec<&AggregateRow> = rows.iter().collect();
    sorted.sort_by(|a, b| (a.learner.as_str(), a.t).cmp(&(b.learner.as_str(), b.t)));
    let mut out = String::from(PLOT_HEADER);
    out.push('\n');
    for r in sorted {
        let half = 2.0 * r.se_centered;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.learner,
            r.t,
            format_sig(r.mean_centered, 10),
            format_sig(r.mean_centered - half, 10),
            format_sig(r.mean_centered + half, 10)
        ));
    }
    Ok(out)
}

pub fn write_plot_data(rows: &[AggregateRow], path: &Path) -> Result<()> {
    std::fs::write(path, emit_plot_data(rows)?)?;
    Ok(())
}
