//! From a cropped running-title image to a quantized symbol string.
//!
//! The pipeline is `load -> binarize -> column_profile -> quantize`: the ink
//! in each pixel column is averaged over the crop height and the resulting
//! 1-D profile is binned into a small alphabet, so that the spacing between
//! letterforms shows up as runs of low symbols.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grayscale title crop with ink = 1.0 and bare paper = 0.0, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TitleImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl TitleImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("title image has a zero dimension".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::LengthMismatch {
                left: pixels.len(),
                right: width * height,
            });
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(TitleImage { width, height, pixels })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidArgument("ragged pixel rows".into()));
        }
        TitleImage::new(width, height, rows.concat())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.pixels.chunks_exact(self.width)
    }

    /// Applies `f` to every pixel, clamping the result into `[0, 1]`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> TitleImage {
        TitleImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| f(v).clamp(0.0, 1.0)).collect(),
        }
    }

    /// 8-bit rendering on white paper (ink is dark).
    pub fn to_gray8(&self) -> image::GrayImage {
        image::GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            let ink = self.get(y as usize, x as usize);
            image::Luma([(255.0 * (1.0 - ink)).round() as u8])
        })
    }

    pub fn from_gray8(img: &image::GrayImage) -> Result<Self> {
        let pixels = img.as_raw().iter().map(|&v| f64::from(255 - v) / 255.0).collect();
        TitleImage::new(img.width() as usize, img.height() as usize, pixels)
    }
}

/// Reads a PNG or PGM (grayscale or RGB) title crop.
pub fn load_title_image(path: &Path) -> Result<TitleImage> {
    let image_err = |message: String| Error::Image {
        path: path.to_path_buf(),
        message,
    };
    let decoded = image::ImageReader::open(path)?
        .with_guessed_format()?
        .decode()
        .map_err(|e| image_err(e.to_string()))?;
    if decoded.width() == 0 || decoded.height() == 0 {
        return Err(image_err("zero-dimension image".into()));
    }
    TitleImage::from_gray8(&decoded.to_luma8()).map_err(|e| image_err(e.to_string()))
}

/// Relative gap below which two neighbouring values are the same level.
/// Covers the rounding of float sums; real ink differences are far larger.
const REL_TIE: f64 = 1e-12;

fn same_level(lo: f64, hi: f64) -> bool {
    hi - lo <= REL_TIE * lo.abs().max(hi.abs())
}

/// Global Otsu binarization.
///
/// The threshold is searched over the distinct pixel values, which for 8-bit
/// input is the classic 256-level histogram search. Pixels strictly above the
/// threshold become ink. Images with a single level map to all paper.
pub fn binarize(img: &TitleImage) -> TitleImage {
    let mut values = img.pixels.clone();
    values.sort_by(f64::total_cmp);

    // (value, count) per distinct level
    let mut levels: Vec<(f64, usize)> = Vec::new();
    for v in values {
        match levels.last_mut() {
            Some((lv, c)) if *lv == v => *c += 1,
            _ => levels.push((v, 1)),
        }
    }
    if levels.len() < 2 {
        return img.map(|_| 0.0);
    }

    let total = img.pixels.len() as f64;
    let total_mass: f64 = levels.iter().map(|&(v, c)| v * c as f64).sum();
    let mut scores = Vec::with_capacity(levels.len() - 1);
    let (mut count0, mut mass0) = (0.0, 0.0);
    for &(v, c) in &levels[..levels.len() - 1] {
        count0 += c as f64;
        mass0 += v * c as f64;
        let count1 = total - count0;
        let mu0 = mass0 / count0;
        let mu1 = (total_mass - mass0) / count1;
        scores.push(count0 * count1 * (mu0 - mu1) * (mu0 - mu1));
    }
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let split = scores
        .iter()
        .position(|&s| same_level(s, best))
        .expect("at least one split");
    let threshold = levels[split].0;
    img.map(|v| if v > threshold { 1.0 } else { 0.0 })
}

/// Mean ink per pixel column.
#[derive(Debug, Clone, PartialEq)]
pub struct InkProfile(pub Vec<f64>);

impl InkProfile {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn column_profile(img: &TitleImage) -> InkProfile {
    let mut sums = vec![0.0; img.width];
    for row in img.rows() {
        for (s, &v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    let h = img.height as f64;
    InkProfile(sums.into_iter().map(|s| s / h).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinStrategy {
    Uniform,
    Quantile,
    Kmeans,
}

impl BinStrategy {
    pub fn name(self) -> &'static str {
        match self {
            BinStrategy::Uniform => "uniform",
            BinStrategy::Quantile => "quantile",
            BinStrategy::Kmeans => "kmeans",
        }
    }
}

impl fmt::Display for BinStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BinStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(BinStrategy::Uniform),
            "quantile" => Ok(BinStrategy::Quantile),
            "kmeans" => Ok(BinStrategy::Kmeans),
            other => Err(Error::InvalidArgument(format!("unknown bin strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuantizedTitle {
    pub symbols: Vec<u8>,
    pub n_bins: usize,
    pub strategy: BinStrategy,
}

impl QuantizedTitle {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn same_binning(&self, other: &QuantizedTitle) -> bool {
        self.n_bins == other.n_bins && self.strategy == other.strategy
    }
}

pub const MAX_BINS: usize = 255;

/// Bins a profile into `n_bins` symbols. Bin edges are computed from this
/// profile alone.
pub fn quantize(profile: &InkProfile, n_bins: usize, strategy: BinStrategy) -> Result<QuantizedTitle> {
    if !(2..=MAX_BINS).contains(&n_bins) {
        return Err(Error::InvalidArgument(format!(
            "n_bins must be in 2..={MAX_BINS}, got {n_bins}"
        )));
    }
    let values = profile.values();
    let (min, max) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let symbols = if values.is_empty() || min == max {
        vec![0; values.len()]
    } else {
        match strategy {
            BinStrategy::Uniform => uniform_bins(values, n_bins, min, max),
            BinStrategy::Quantile => quantile_bins(values, n_bins),
            BinStrategy::Kmeans => kmeans_bins(values, n_bins),
        }
    };
    Ok(QuantizedTitle {
        symbols,
        n_bins,
        strategy,
    })
}

fn uniform_bins(values: &[f64], n_bins: usize, min: f64, max: f64) -> Vec<u8> {
    let range = max - min;
    values
        .iter()
        .map(|&v| {
            let bin = (n_bins as f64 * (v - min) / range).floor() as usize;
            bin.min(n_bins - 1) as u8
        })
        .collect()
}

fn quantile_bins(values: &[f64], n_bins: usize) -> Vec<u8> {
    let w = values.len();
    let mut order: Vec<usize> = (0..w).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut symbols = vec![0u8; w];
    let mut rank = 0;
    for (pos, &i) in order.iter().enumerate() {
        // tied values share the rank of their first occurrence
        if pos > 0 && !same_level(values[order[pos - 1]], values[i]) {
            rank = pos;
        }
        symbols[i] = (rank * n_bins / w).min(n_bins - 1) as u8;
    }
    symbols
}

const KMEANS_MAX_ITER: usize = 50;

fn nearest(centroids: &[f64], v: f64) -> usize {
    let mut best = 0;
    for (i, &c) in centroids.iter().enumerate().skip(1) {
        if (v - c).abs() < (v - centroids[best]).abs() {
            best = i;
        }
    }
    best
}

fn kmeans_bins(values: &[f64], n_bins: usize) -> Vec<u8> {
    let w = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut centroids: Vec<f64> = (0..n_bins)
        .map(|i| sorted[((2 * i + 1) * w / (2 * n_bins)).min(w - 1)])
        .collect();

    let mut assignment = vec![usize::MAX; w];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (a, &v) in assignment.iter_mut().zip(values) {
            let c = nearest(&centroids, v);
            changed |= *a != c;
            *a = c;
        }
        if !changed {
            break;
        }
        let mut sums = vec![(0.0, 0usize); n_bins];
        for (&a, &v) in assignment.iter().zip(values) {
            sums[a].0 += v;
            sums[a].1 += 1;
        }
        for (c, (s, n)) in centroids.iter_mut().zip(sums) {
            if n > 0 {
                *c = s / n as f64;
            }
        }
    }
    centroids.sort_by(f64::total_cmp);
    values.iter().map(|&v| nearest(&centroids, v) as u8).collect()
}

/// Profiling options; the defaults are binarized, height-normalized,
/// 5 quantile bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub binarize: bool,
    pub normalize_height: bool,
    pub n_bins: usize,
    pub strategy: BinStrategy,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            binarize: true,
            normalize_height: true,
            n_bins: 5,
            strategy: BinStrategy::Quantile,
        }
    }
}

pub fn profile_title(img: &TitleImage, config: &ProfileConfig) -> Result<QuantizedTitle> {
    let mut profile = if config.binarize {
        column_profile(&binarize(img))
    } else {
        column_profile(img)
    };
    if !config.normalize_height {
        let h = img.height() as f64;
        profile.0.iter_mut().for_each(|v| *v *= h);
    }
    quantize(&profile, config.n_bins, config.strategy)
}

const DIGITS: &[u8; 36] = b"0123456789abcdefghijklmnopqrstuvwxyz";

/// Sidecar row: a page, its slot position, and its quantized title.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SidecarRow {
    pub page_index: usize,
    pub position: usize,
    pub title: QuantizedTitle,
}

/// Writes `page_index,position,symbols` CSV with symbols as a base-36 digit
/// string.
pub fn write_sidecar(rows: &[SidecarRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["page_index", "position", "symbols"])
        .map_err(|e| Error::Csv(e.to_string()))?;
    for row in rows {
        if row.title.n_bins > DIGITS.len() {
            return Err(Error::InvalidArgument(format!(
                "sidecar digit strings support at most {} bins",
                DIGITS.len()
            )));
        }
        let symbols: String = row.title.symbols.iter().map(|&s| DIGITS[s as usize] as char).collect();
        w.write_record([row.page_index.to_string(), row.position.to_string(), symbols])
            .map_err(|e| Error::Csv(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_sidecar(text: &str, n_bins: usize, strategy: BinStrategy) -> Result<Vec<SidecarRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let field = |i: usize| record.get(i).ok_or_else(|| Error::Csv("short row".into()));
        let parse_usize = |s: &str| s.parse::<usize>().map_err(|e| Error::Csv(format!("`{s}`: {e}")));
        let symbols = field(2)?
            .bytes()
            .map(|b| {
                DIGITS
                    .iter()
                    .position(|&d| d == b)
                    .filter(|&s| s < n_bins)
                    .map(|s| s as u8)
                    .ok_or_else(|| Error::Csv(format!("symbol `{}` outside alphabet", b as char)))
            })
            .collect::<Result<Vec<u8>>>()?;
        rows.push(SidecarRow {
            page_index: parse_usize(field(0)?)?,
            position: parse_usize(field(1)?)?,
            title: QuantizedTitle {
                symbols,
                n_bins,
                strategy,
            },
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img(rows: &[&[f64]]) -> TitleImage {
        TitleImage::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn save_png(dir: &Path, name: &str, gray: image::GrayImage) -> std::path::PathBuf {
        let path = dir.join(name);
        gray.save(&path).unwrap();
        path
    }

    #[test]
    fn white_and_black_pixels_invert() {
        let dir = tempfile::tempdir().unwrap();
        let white = save_png(
            dir.path(),
            "w.png",
            image::GrayImage::from_pixel(1, 1, image::Luma([255])),
        );
        let black = save_png(
            dir.path(),
            "b.png",
            image::GrayImage::from_pixel(1, 1, image::Luma([0])),
        );
        assert_eq!(load_title_image(&white).unwrap().pixels(), &[0.0]);
        assert_eq!(load_title_image(&black).unwrap().pixels(), &[1.0]);
    }

    #[test]
    fn pgm_rows_rescale() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        let mut bytes = b"P5\n3 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 128, 255, 0, 128, 255]);
        std::fs::write(&path, bytes).unwrap();
        let t = load_title_image(&path).unwrap();
        assert_eq!((t.width(), t.height()), (3, 2));
        for row in t.rows() {
            assert_eq!(row[0], 1.0);
            assert!((row[1] - 0.498).abs() < 1e-3);
            assert_eq!(row[2], 0.0);
        }
    }

    #[test]
    fn rgb_is_converted_to_luma() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        image::RgbImage::from_pixel(2, 1, image::Rgb([0, 0, 0]))
            .save(&path)
            .unwrap();
        assert_eq!(load_title_image(&path).unwrap().pixels(), &[1.0, 1.0]);
    }

    #[test]
    fn unreadable_file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.png");
        std::fs::write(&path, b"not an image").unwrap();
        assert!(matches!(load_title_image(&path), Err(Error::Image { .. })));
        assert!(load_title_image(&dir.path().join("missing.png")).is_err());
    }

    #[test]
    fn zero_dimension_is_rejected() {
        assert!(TitleImage::new(0, 3, vec![]).is_err());
        assert!(TitleImage::new(1, 1, vec![1.5]).is_err());
    }

    #[test]
    fn constant_image_binarizes_to_paper() {
        let t = TitleImage::new(4, 3, vec![0.9; 12]).unwrap();
        assert!(binarize(&t).pixels().iter().all(|&v| v == 0.0));
    }

    /// Classic Otsu over 256 integer levels, maximizing between-class
    /// variance by exhaustive search. Near-equal maxima go to the lowest
    /// threshold.
    fn otsu_256(levels: &[u8]) -> u8 {
        let n = levels.len() as f64;
        let mut scores = Vec::new();
        for t in 0..=255u8 {
            let (lo, hi): (Vec<f64>, Vec<f64>) = {
                let lo: Vec<f64> = levels.iter().filter(|&&l| l <= t).map(|&l| l as f64).collect();
                let hi: Vec<f64> = levels.iter().filter(|&&l| l > t).map(|&l| l as f64).collect();
                (lo, hi)
            };
            if lo.is_empty() || hi.is_empty() {
                continue;
            }
            let m0 = lo.iter().sum::<f64>() / lo.len() as f64;
            let m1 = hi.iter().sum::<f64>() / hi.len() as f64;
            let s = (lo.len() as f64 / n) * (hi.len() as f64 / n) * (m0 - m1).powi(2);
            scores.push((t, s));
        }
        let best = scores.iter().map(|&(_, s)| s).fold(f64::NEG_INFINITY, f64::max);
        scores
            .iter()
            .find(|&&(_, s)| s >= best * (1.0 - 1e-9))
            .map(|&(t, _)| t)
            .unwrap()
    }

    #[test]
    fn bimodal_image_matches_brute_force_otsu() {
        let mut pixels = vec![0.1; 50];
        pixels.extend(vec![0.9; 50]);
        let t = TitleImage::new(10, 10, pixels.clone()).unwrap();
        let b = binarize(&t);
        let levels: Vec<u8> = pixels.iter().map(|v| (v * 255.0f64).round() as u8).collect();
        let thr = otsu_256(&levels);
        for (&l, &out) in levels.iter().zip(b.pixels()) {
            assert_eq!(out, if l > thr { 1.0 } else { 0.0 });
        }
        assert!(b.pixels()[..50].iter().all(|&v| v == 0.0));
        assert!(b.pixels()[50..].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn binary_image_is_unchanged() {
        let t = img(&[&[0.0, 1.0, 1.0], &[1.0, 0.0, 0.0]]);
        assert_eq!(binarize(&t), t);
    }

    proptest! {
        #[test]
        fn otsu_agrees_with_256_level_search(levels in prop::collection::vec(0u8..=255, 2..80)) {
            let pixels: Vec<f64> = levels.iter().map(|&l| f64::from(l) / 255.0).collect();
            let t = TitleImage::new(levels.len(), 1, pixels).unwrap();
            let b = binarize(&t);
            if levels.iter().all(|&l| l == levels[0]) {
                prop_assert!(b.pixels().iter().all(|&v| v == 0.0));
            } else {
                let thr = otsu_256(&levels);
                for (&l, &out) in levels.iter().zip(b.pixels()) {
                    prop_assert_eq!(out, if l > thr { 1.0 } else { 0.0 });
                }
            }
        }

        #[test]
        fn binarize_is_idempotent(pixels in prop::collection::vec(0.0f64..=1.0, 12)) {
            let t = TitleImage::new(4, 3, pixels).unwrap();
            let once = binarize(&t);
            prop_assert_eq!(binarize(&once), once);
        }

        #[test]
        fn profile_ignores_flips_and_row_duplication(
            pixels in prop::collection::vec(0.0f64..=1.0, 20)
        ) {
            let t = TitleImage::new(5, 4, pixels).unwrap();
            let p = column_profile(&t);
            let flipped: Vec<Vec<f64>> = t.rows().rev().map(<[f64]>::to_vec).collect();
            let doubled: Vec<Vec<f64>> = t.rows().flat_map(|r| [r.to_vec(), r.to_vec()]).collect();
            for other in [flipped, doubled] {
                let q = column_profile(&TitleImage::from_rows(&other).unwrap());
                for (a, b) in p.values().iter().zip(q.values()) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn quantile_bins_survive_monotone_transforms(
            values in prop::collection::vec(0.0f64..=1.0, 1..60),
            n_bins in 2usize..8,
        ) {
            let p = InkProfile(values.clone());
            let q = quantize(&p, n_bins, BinStrategy::Quantile).unwrap();
            for f in [|v: f64| v * v * v + 2.0 * v, |v: f64| (3.0 * v).exp(), |v: f64| 0.37 * v] {
                let t = InkProfile(values.iter().map(|&v| f(v)).collect());
                prop_assert_eq!(&quantize(&t, n_bins, BinStrategy::Quantile).unwrap().symbols, &q.symbols);
            }
        }

        #[test]
        fn uniform_bins_scale_with_range(
            values in prop::collection::vec(0.0f64..=1.0, 1..60),
            n_bins in 2usize..8,
            exp in -6i32..6,
        ) {
            let c = 2f64.powi(exp);
            let p = InkProfile(values.clone());
            let s = InkProfile(values.iter().map(|v| v * c).collect());
            prop_assert_eq!(
                quantize(&p, n_bins, BinStrategy::Uniform).unwrap().symbols,
                quantize(&s, n_bins, BinStrategy::Uniform).unwrap().symbols
            );
        }

        #[test]
        fn symbols_are_monotone_in_values(
            values in prop::collection::vec(prop_oneof![0.0f64..=1.0, Just(0.5)], 1..60),
            n_bins in 2usize..8,
        ) {
            for strategy in [BinStrategy::Uniform, BinStrategy::Quantile, BinStrategy::Kmeans] {
                let q = quantize(&InkProfile(values.clone()), n_bins, strategy).unwrap();
                for a in 0..values.len() {
                    prop_assert!((q.symbols[a] as usize) < n_bins);
                    for b in 0..values.len() {
                        if values[a] <= values[b] {
                            prop_assert!(q.symbols[a] <= q.symbols[b], "{:?} {:?}", strategy, q.symbols);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn column_profile_examples() {
        assert_eq!(column_profile(&img(&[&[1.0; 3], &[1.0; 3]])).0, vec![1.0, 1.0, 1.0]);
        assert_eq!(column_profile(&img(&[&[1.0, 0.0], &[0.0, 0.0]])).0, vec![0.5, 0.0]);
        assert_eq!(column_profile(&img(&[&[1.0], &[1.0], &[0.0], &[0.0]])).0, vec![0.5]);
    }

    #[test]
    fn uniform_edges_are_half_open() {
        let q = quantize(&InkProfile(vec![0.0, 0.5, 1.0]), 2, BinStrategy::Uniform).unwrap();
        assert_eq!(q.symbols, vec![0, 1, 1]);
    }

    #[test]
    fn quantile_rank_formula() {
        let values: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let q = quantize(&InkProfile(values), 5, BinStrategy::Quantile).unwrap();
        assert_eq!(q.symbols, vec![0, 0, 1, 1, 2, 2, 3, 3, 4, 4]);
    }

    #[test]
    fn constant_profiles_map_to_zero() {
        for strategy in [BinStrategy::Uniform, BinStrategy::Quantile, BinStrategy::Kmeans] {
            let q = quantize(&InkProfile(vec![0.3; 3]), 5, strategy).unwrap();
            assert_eq!(q.symbols, vec![0, 0, 0]);
        }
    }

    #[test]
    fn too_few_bins_is_an_error() {
        assert!(quantize(&InkProfile(vec![0.1, 0.2]), 1, BinStrategy::Quantile).is_err());
    }

    #[test]
    fn kmeans_separates_clear_levels() {
        let values = vec![0.0, 0.01, 0.5, 0.51, 1.0, 0.99, 0.0];
        let q = quantize(&InkProfile(values), 3, BinStrategy::Kmeans).unwrap();
        assert_eq!(q.symbols, vec![0, 0, 1, 1, 2, 2, 0]);
    }

    #[test]
    fn sidecar_round_trips() {
        let title = QuantizedTitle {
            symbols: vec![0, 4, 2, 11],
            n_bins: 12,
            strategy: BinStrategy::Quantile,
        };
        let rows = vec![SidecarRow {
            page_index: 3,
            position: 1,
            title,
        }];
        let text = write_sidecar(&rows).unwrap();
        assert_eq!(text, "page_index,position,symbols\n3,1,042b\n");
        assert_eq!(read_sidecar(&text, 12, BinStrategy::Quantile).unwrap(), rows);
    }
}
