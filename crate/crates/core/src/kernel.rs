//! Quantized Levenshtein kernel over clustering units.
//!
//! Each unit carries one title per forme position. Two units are compared
//! position by position with the edit distance of their quantized titles,
//! and the per-position distances are reduced with a p-norm.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiling::QuantizedTitle;

/// Edit distance with unit-cost insertions, deletions and substitutions.
///
/// Bit-parallel over 64-row blocks of the shorter string; agrees exactly
/// with [`levenshtein_dp`].
pub fn levenshtein(a: &[u8], b: &[u8]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return long.len();
    }
    let m = short.len();
    let blocks = m.div_ceil(64);
    let alphabet = usize::from(*short.iter().max().expect("nonempty")) + 1;
    // match masks: bit i of block k set where short[64k + i] == symbol
    let mut peq = vec![0u64; alphabet * blocks];
    for (i, &c) in short.iter().enumerate() {
        peq[usize::from(c) * blocks + i / 64] |= 1u64 << (i % 64);
    }
    let last_bit = 1u64 << ((m - 1) % 64);
    let mut pv = vec![u64::MAX; blocks];
    let mut mv = vec![0u64; blocks];
    let zeros = vec![0u64; blocks];
    let mut score = m;
    for &c in long {
        let eq_row = match usize::from(c) {
            c if c < alphabet => &peq[c * blocks..(c + 1) * blocks],
            _ => &zeros[..],
        };
        // the first row grows by one per column
        let mut carry: i8 = 1;
        for k in 0..blocks {
            let high = if k + 1 == blocks { last_bit } else { 1u64 << 63 };
            let (p, mm) = (pv[k], mv[k]);
            let mut eq = eq_row[k];
            let xv = eq | mm;
            if carry < 0 {
                eq |= 1;
            }
            let xh = ((eq & p).wrapping_add(p) ^ p) | eq;
            let mut ph = mm | !(xh | p);
            let mut mh = p & xh;
            let out: i8 = if ph & high != 0 {
                1
            } else if mh & high != 0 {
                -1
            } else {
                0
            };
            ph <<= 1;
            mh <<= 1;
            match carry {
                c if c < 0 => mh |= 1,
                c if c > 0 => ph |= 1,
                _ => {}
            }
            pv[k] = mh | !(xv | ph);
            mv[k] = ph & xv;
            carry = out;
        }
        score = score.wrapping_add_signed(isize::from(carry));
    }
    score
}

/// Row-by-row dynamic program; the reference for [`levenshtein`].
pub fn levenshtein_dp(a: &[u8], b: &[u8]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return long.len();
    }
    let mut row: Vec<u32> = (0..=short.len() as u32).collect();
    for (j, &lc) in long.iter().enumerate() {
        let mut diag = row[0];
        row[0] = j as u32 + 1;
        for i in 0..short.len() {
            let above = row[i + 1];
            let sub = diag + u32::from(short[i] != lc);
            row[i + 1] = sub.min(above + 1).min(row[i] + 1);
            diag = above;
        }
    }
    row[short.len()] as usize
}

/// Distance between two possibly absent titles. A missing title costs as
/// many insertions as the present one has symbols.
pub fn title_distance(x: Option<&QuantizedTitle>, y: Option<&QuantizedTitle>) -> Result<f64> {
    Ok(match (x, y) {
        (Some(x), Some(y)) => {
            if !x.same_binning(y) {
                return Err(Error::BinningMismatch);
            }
            levenshtein(&x.symbols, &y.symbols) as f64
        }
        (Some(t), None) | (None, Some(t)) => t.len() as f64,
        (None, None) => 0.0,
    })
}

/// [`title_distance`] divided by the longer title length, in `[0, 1]`.
pub fn normalized_title_distance(x: Option<&QuantizedTitle>, y: Option<&QuantizedTitle>) -> Result<f64> {
    let longest = x.map_or(0, QuantizedTitle::len).max(y.map_or(0, QuantizedTitle::len));
    let d = title_distance(x, y)?;
    Ok(if longest == 0 { 0.0 } else { d / longest as f64 })
}

/// `(sum d_k^p)^(1/p)`, or the maximum for `p = inf`.
pub fn p_norm(d: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        d.iter().copied().fold(0.0, f64::max)
    } else if p == 1.0 {
        d.iter().sum()
    } else {
        d.iter().map(|x| x.powf(p)).sum::<f64>().powf(p.recip())
    }
}

fn check_order(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "norm order must be in [1, inf], got {p}"
        )));
    }
    Ok(())
}

/// A unit to be clustered: a page, a recto page, or a sheet side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterUnit {
    pub id: String,
    /// One entry per forme position; `None` for blank or missing titles.
    pub slots: Vec<Option<QuantizedTitle>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Order of the reduction norm; `f64::INFINITY` takes the maximum.
    pub p: f64,
    /// Divide each title distance by the longer title length.
    pub normalize: bool,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            p: 4.0,
            normalize: false,
        }
    }
}

pub fn unit_distance(u: &ClusterUnit, v: &ClusterUnit, p: f64) -> Result<f64> {
    unit_distance_with(u, v, &KernelConfig { p, normalize: false })
}

pub fn unit_distance_with(u: &ClusterUnit, v: &ClusterUnit, config: &KernelConfig) -> Result<f64> {
    check_order(config.p)?;
    if u.slots.len() != v.slots.len() {
        return Err(Error::SlotMismatch {
            left: u.id.clone(),
            right: v.id.clone(),
        });
    }
    let per_position = u
        .slots
        .iter()
        .zip(&v.slots)
        .map(|(x, y)| {
            if config.normalize {
                normalized_title_distance(x.as_ref(), y.as_ref())
            } else {
                title_distance(x.as_ref(), y.as_ref())
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(p_norm(&per_position, config.p))
}

/// Symmetric pairwise distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    unit_ids: Vec<String>,
    d: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from dense row-major values, checking symmetry,
    /// finiteness and the zero diagonal.
    pub fn from_dense(unit_ids: Vec<String>, d: Vec<f64>) -> Result<Self> {
        let n = unit_ids.len();
        if d.len() != n * n {
            return Err(Error::LengthMismatch {
                left: d.len(),
                right: n * n,
            });
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(Error::InvalidArgument(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let x = d[i * n + j];
                if !x.is_finite() || x < 0.0 || x != d[j * n + i] {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({i}, {j}) = {x} breaks symmetry or nonnegativity"
                    )));
                }
            }
        }
        Ok(DistanceMatrix { unit_ids, d })
    }

    pub fn len(&self) -> usize {
        self.unit_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit_ids.is_empty()
    }

    pub fn unit_ids(&self) -> &[String] {
        &self.unit_ids
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.d[i * n..(i + 1) * n]
    }

    /// Header row of unit ids followed by the dense matrix.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.unit_ids).map_err(|e| Error::Csv(e.to_string()))?;
        for i in 0..self.len() {
            w.write_record(self.row(i).iter().map(|x| x.to_string()))
                .map_err(|e| Error::Csv(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(text.as_bytes());
        let mut records = r.records();
        let header = records
            .next()
            .ok_or_else(|| Error::Csv("empty distance file".into()))?
            .map_err(|e| Error::Csv(e.to_string()))?;
        let unit_ids: Vec<String> = header.iter().map(str::to_string).collect();
        let mut d = Vec::with_capacity(unit_ids.len() * unit_ids.len());
        for record in records {
            let record = record.map_err(|e| Error::Csv(e.to_string()))?;
            for field in record.iter() {
                d.push(
                    field
                        .parse::<f64>()
                        .map_err(|e| Error::Csv(format!("`{field}`: {e}")))?,
                );
            }
        }
        DistanceMatrix::from_dense(unit_ids, d)
    }
}

/// Pairwise unit distances. Pairs are evaluated in parallel; every cell is
/// computed by exactly one task, so the result does not depend on the
/// number of threads.
pub fn distance_matrix(units: &[ClusterUnit], config: &KernelConfig) -> Result<DistanceMatrix> {
    check_order(config.p)?;
    let n = units.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 units, got {n}")));
    }
    let slots = units[0].slots.len();
    if let Some(u) = units.iter().find(|u| u.slots.len() != slots) {
        return Err(Error::SlotMismatch {
            left: units[0].id.clone(),
            right: u.id.clone(),
        });
    }
    let mut titles = units.iter().flat_map(|u| u.slots.iter().flatten());
    if let Some(first) = titles.next() {
        if titles.any(|t| !t.same_binning(first)) {
            return Err(Error::BinningMismatch);
        }
    }

    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| unit_distance_with(&units[i], &units[j], config))
        .collect::<Result<Vec<f64>>>()?;

    let mut d = vec![0.0; n * n];
    for (&(i, j), &x) in pairs.iter().zip(&values) {
        d[i * n + j] = x;
        d[j * n + i] = x;
    }
    Ok(DistanceMatrix {
        unit_ids: units.iter().map(|u| u.id.clone()).collect(),
        d,
    })
}
