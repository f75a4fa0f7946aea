//! Partition scores against gold forme labels and the random baselines they
//! are compared with.
//!
//! Labels are any ordered type; "lower label" in tie rules means lower in
//! that order.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Display;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::prng;

/// Counts of co-occurring (pred, gold) labels. Rows and columns follow the
/// sorted distinct labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contingency<P, G> {
    pub pred_labels: Vec<P>,
    pub gold_labels: Vec<G>,
    pub counts: Vec<Vec<usize>>,
}

fn index_labels<L: Ord + Clone>(labels: &[L]) -> (Vec<L>, Vec<usize>) {
    let mut distinct = labels.to_vec();
    distinct.sort();
    distinct.dedup();
    let idx = labels
        .iter()
        .map(|l| distinct.binary_search(l).expect("label present"))
        .collect();
    (distinct, idx)
}

fn check_lengths(gold: usize, pred: usize) -> Result<()> {
    if gold != pred {
        return Err(Error::LengthMismatch {
            left: gold,
            right: pred,
        });
    }
    if gold == 0 {
        return Err(Error::InvalidArgument("label vectors are empty".into()));
    }
    Ok(())
}

pub fn contingency<G: Ord + Clone, P: Ord + Clone>(gold: &[G], pred: &[P]) -> Result<Contingency<P, G>> {
    check_lengths(gold.len(), pred.len())?;
    let (gold_labels, gi) = index_labels(gold);
    let (pred_labels, pi) = index_labels(pred);
    let mut counts = vec![vec![0usize; gold_labels.len()]; pred_labels.len()];
    for (&p, &g) in pi.iter().zip(&gi) {
        counts[p][g] += 1;
    }
    Ok(Contingency {
        pred_labels,
        gold_labels,
        counts,
    })
}

impl<P, G> Contingency<P, G> {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    fn col_sums(&self) -> Vec<usize> {
        (0..self.gold_labels.len())
            .map(|g| self.counts.iter().map(|r| r[g]).sum())
            .collect()
    }
}

fn entropy(sizes: &[usize], n: f64) -> f64 {
    sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// H(A | B) where `counts[b][a]` holds joint counts.
fn conditional_entropy(counts: &[Vec<usize>], n: f64) -> f64 {
    counts
        .iter()
        .map(|row| {
            let nb: usize = row.iter().sum();
            row.iter()
                .filter(|&&c| c > 0)
                .map(|&c| -(c as f64 / n) * (c as f64 / nb as f64).ln())
                .sum::<f64>()
        })
        .sum()
}

fn transpose(counts: &[Vec<usize>], cols: usize) -> Vec<Vec<usize>> {
    (0..cols).map(|c| counts.iter().map(|r| r[c]).collect()).collect()
}

fn v_measure_of<P, G>(t: &Contingency<P, G>) -> f64 {
    let n = t.total() as f64;
    let h_gold = entropy(&t.col_sums(), n);
    let h_pred = entropy(&t.row_sums(), n);
    let homogeneity = if h_gold == 0.0 {
        1.0
    } else {
        1.0 - conditional_entropy(&t.counts, n) / h_gold
    };
    let completeness = if h_pred == 0.0 {
        1.0
    } else {
        1.0 - conditional_entropy(&transpose(&t.counts, t.gold_labels.len()), n) / h_pred
    };
    if homogeneity + completeness == 0.0 {
        0.0
    } else {
        (2.0 * homogeneity * completeness / (homogeneity + completeness)).clamp(0.0, 1.0)
    }
}

/// Harmonic mean of homogeneity and completeness, natural-log entropies.
pub fn v_measure<G: Ord + Clone, P: Ord + Clone>(gold: &[G], pred: &[P]) -> Result<f64> {
    Ok(v_measure_of(&contingency(gold, pred)?))
}

/// Minimum-cost perfect matching on a square cost matrix; returns the column
/// assigned to each row.
pub fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // Potentials over 1-based rows/columns; column 0 is a sentinel.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r = owner[col0];
            let mut delta = i64::MAX;
            let mut next = 0;
            for c in 1..=n {
                if !used[c] {
                    let reduced = cost[r - 1][c - 1] - u[r] - v[c];
                    if reduced < minv[c] {
                        minv[c] = reduced;
                        way[c] = col0;
                    }
                    if minv[c] < delta {
                        delta = minv[c];
                        next = c;
                    }
                }
            }
            for c in 0..=n {
                if used[c] {
                    u[owner[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            col0 = next;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for c in 1..=n {
        assignment[owner[c] - 1] = c - 1;
    }
    assignment
}

/// Best injective pred → gold pairing; returns (pred index, gold index)
/// pairs for real labels and the number of items they agree on.
fn best_matching<P, G>(t: &Contingency<P, G>) -> (Vec<(usize, usize)>, usize) {
    let rows = t.pred_labels.len();
    let cols = t.gold_labels.len();
    let size = rows.max(cols);
    let max = t.counts.iter().flatten().copied().max().unwrap_or(0) as i64;
    let cost: Vec<Vec<i64>> = (0..size)
        .map(|r| {
            (0..size)
                .map(|c| {
                    let count = if r < rows && c < cols { t.counts[r][c] } else { 0 };
                    max - count as i64
                })
                .collect()
        })
        .collect();
    let assignment = hungarian(&cost);
    let pairs: Vec<(usize, usize)> = assignment
        .into_iter()
        .enumerate()
        .filter(|&(r, c)| r < rows && c < cols)
        .collect();
    let matched = pairs.iter().map(|&(r, c)| t.counts[r][c]).sum();
    (pairs, matched)
}

/// Accuracy under the best one-to-one label mapping.
pub fn one_to_one<G: Ord + Clone, P: Ord + Clone>(gold: &[G], pred: &[P]) -> Result<f64> {
    let t = contingency(gold, pred)?;
    Ok(best_matching(&t).1 as f64 / gold.len() as f64)
}

fn majority_matched<P, G>(t: &Contingency<P, G>) -> usize {
    t.counts.iter().map(|row| row.iter().copied().max().unwrap_or(0)).sum()
}

/// Accuracy when every predicted cluster takes its most frequent gold label.
pub fn many_to_one<G: Ord + Clone, P: Ord + Clone>(gold: &[G], pred: &[P]) -> Result<f64> {
    let t = contingency(gold, pred)?;
    Ok(majority_matched(&t) as f64 / gold.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    RandomUniform,
    AssignMajority,
    ShuffleGold,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [
        BaselineKind::RandomUniform,
        BaselineKind::AssignMajority,
        BaselineKind::ShuffleGold,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::RandomUniform => "random_uniform",
            BaselineKind::AssignMajority => "assign_majority",
            BaselineKind::ShuffleGold => "shuffle_gold",
        }
    }
}

impl std::fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown baseline `{s}`")))
    }
}

/// Most frequent label, ties to the lowest.
fn majority_label<L: Ord + Clone>(labels: &[L]) -> L {
    let mut counts: BTreeMap<&L, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let mut best: Option<(&L, usize)> = None;
    for (l, c) in counts {
        if best.is_none_or(|(_, b)| c > b) {
            best = Some((l, c));
        }
    }
    best.expect("nonempty labels").0.clone()
}

/// A label vector produced without looking at the data.
///
/// `RandomUniform` draws i.i.d. from the distinct gold labels,
/// `AssignMajority` repeats the most frequent gold label, and `ShuffleGold`
/// permutes the gold vector.
pub fn baseline<L: Ord + Clone>(gold: &[L], kind: BaselineKind, seed: u64) -> Result<Vec<L>> {
    if gold.is_empty() {
        return Err(Error::InvalidArgument("gold labels are empty".into()));
    }
    let mut rng = prng(seed);
    Ok(match kind {
        BaselineKind::RandomUniform => {
            let (distinct, _) = index_labels(gold);
            (0..gold.len())
                .map(|_| distinct[rng.random_range(0..distinct.len())].clone())
                .collect()
        }
        BaselineKind::AssignMajority => vec![majority_label(gold); gold.len()],
        BaselineKind::ShuffleGold => {
            let mut out = gold.to_vec();
            out.shuffle(&mut rng);
            out
        }
    })
}

/// Scores of one prediction. Raw values lie in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub v_measure: f64,
    pub one_to_one: f64,
    pub many_to_one: f64,
    /// Predicted label → gold label under the best one-to-one pairing.
    pub mapping: BTreeMap<String, String>,
    pub n: usize,
    pub pred_labels: Vec<String>,
    pub gold_labels: Vec<String>,
    /// Rows follow `pred_labels`, columns `gold_labels`.
    pub contingency: Vec<Vec<usize>>,
}

impl EvalReport {
    /// `(V, 1-to-1, many-to-1)` as percentages.
    pub fn percentages(&self) -> [f64; 3] {
        [self.v_measure, self.one_to_one, self.many_to_one].map(|x| 100.0 * x)
    }
}

pub fn evaluate<G, P>(gold: &[G], pred: &[P]) -> Result<EvalReport>
where
    G: Ord + Clone + Display,
    P: Ord + Clone + Display,
{
    let t = contingency(gold, pred)?;
    let n = gold.len();
    let (pairs, matched) = best_matching(&t);
    let mapping = pairs
        .iter()
        .map(|&(p, g)| (t.pred_labels[p].to_string(), t.gold_labels[g].to_string()))
        .collect();
    Ok(EvalReport {
        v_measure: v_measure_of(&t),
        one_to_one: matched as f64 / n as f64,
        many_to_one: majority_matched(&t) as f64 / n as f64,
        mapping,
        n,
        pred_labels: t.pred_labels.iter().map(ToString::to_string).collect(),
        gold_labels: t.gold_labels.iter().map(ToString::to_string).collect(),
        contingency: t.counts,
    })
}

/// Reads a two-column `unit_id,<label>` CSV with a header row.
pub fn read_label_csv(text: &str) -> Result<Vec<(String, String)>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        if rec.len() != 2 {
            return Err(Error::Csv(format!(
                "expected 2 columns, found {} on line {}",
                rec.len(),
                rec.position().map_or(0, |p| p.line())
            )));
        }
        out.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(out)
}

/// Writes `unit_id,<column>` rows.
pub fn write_label_csv<'a>(column: &str, rows: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["unit_id", column])
        .map_err(|e| Error::Csv(e.to_string()))?;
    for (id, label) in rows {
        w.write_record([id, label]).map_err(|e| Error::Csv(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Pairs gold and predicted labels by unit id, in prediction order.
///
/// Predicted units without a gold label are dropped. A gold unit without a
/// prediction, or a repeated id, is an error.
pub fn align_labels(
    gold: &[(String, String)],
    pred: &[(String, String)],
) -> Result<(Vec<String>, Vec<String>, Vec<String>)> {
    let mut by_id: HashMap<&str, &str> = HashMap::with_capacity(gold.len());
    for (id, label) in gold {
        if by_id.insert(id, label).is_some() {
            return Err(Error::Csv(format!("unit `{id}` appears twice in gold labels")));
        }
    }
    let mut ids = Vec::new();
    let mut g = Vec::new();
    let mut p = Vec::new();
    let mut skipped = 0;
    for (id, label) in pred {
        match by_id.get(id.as_str()) {
            Some(gl) => {
                ids.push(id.clone());
                g.push(gl.to_string());
                p.push(label.clone());
            }
            None => skipped += 1,
        }
    }
    let predicted: std::collections::HashSet<&str> = pred.iter().map(|(id, _)| id.as_str()).collect();
    if let Some((id, _)) = gold.iter().find(|(id, _)| !predicted.contains(id.as_str())) {
        return Err(Error::InvalidArgument(format!(
            "unit `{id}` has a gold label but no prediction"
        )));
    }
    if skipped > 0 {
        log::warn!("{skipped} predicted units have no gold label and are not scored");
    }
    if ids.is_empty() {
        return Err(Error::InvalidArgument("no predicted unit has a gold label".into()));
    }
    Ok((ids, g, p))
}
