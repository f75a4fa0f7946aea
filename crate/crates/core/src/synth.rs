//! Synthetic books with known skeleton formes.
//!
//! Every forme sets each title position from the same sequence of letter
//! glyphs; formes differ only in the spacing between letters and words.
//! Each printed title is that setting under noise: a per-title horizontal
//! shift (as if cropped independently), a per-impression inking scale, and
//! additive pixel noise clipped to `[0, 1]`.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imposition::{build_units, parse_manifest, side_tables, BookManifest, Format, UnitScheme};
use crate::metrics::write_label_csv;
use crate::profiling::{InkProfile, TitleImage};
use crate::spectral::{prng, Prng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleName {
    RoundRobin,
}

/// Which forme printed each sheet side, in book order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FormeSchedule {
    Named(ScheduleName),
    Explicit(Vec<usize>),
}

impl Default for FormeSchedule {
    fn default() -> Self {
        FormeSchedule::Named(ScheduleName::RoundRobin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Largest shift as a fraction of the title width.
    #[serde(default)]
    pub offset_max_frac: f64,
    #[serde(default)]
    pub pixel_noise_sd: f64,
    /// Inclusive range of the multiplicative inking scale.
    #[serde(default = "unit_range")]
    pub inking_scale_range: [f64; 2],
}

fn unit_range() -> [f64; 2] {
    [1.0, 1.0]
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            offset_max_frac: 0.0,
            pixel_noise_sd: 0.0,
            inking_scale_range: unit_range(),
        }
    }

    /// Shift up to 10% of the width, pixel noise sd 0.05, inking ±20%.
    pub fn moderate() -> Self {
        NoiseSpec {
            offset_max_frac: 0.10,
            pixel_noise_sd: 0.05,
            inking_scale_range: [0.8, 1.2],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(0.0..=0.2).contains(&self.offset_max_frac) {
            return bad(format!("offset_max_frac {} outside [0, 0.2]", self.offset_max_frac));
        }
        if !(self.pixel_noise_sd.is_finite() && self.pixel_noise_sd >= 0.0) {
            return bad(format!("pixel_noise_sd {} must be >= 0", self.pixel_noise_sd));
        }
        let [lo, hi] = self.inking_scale_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
            return bad(format!("inking_scale_range [{lo}, {hi}] must satisfy 0 < lo <= hi"));
        }
        Ok(())
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    #[serde(default = "default_title")]
    pub title: String,
    pub format: Format,
    pub leaves_per_gathering: usize,
    pub n_gatherings: usize,
    pub n_formes: usize,
    pub title_width: usize,
    #[serde(default = "default_height")]
    pub title_height: usize,
    #[serde(default)]
    pub forme_schedule: FormeSchedule,
    #[serde(default)]
    pub noise: NoiseSpec,
}

fn default_title() -> String {
    "synthetic".into()
}

fn default_height() -> usize {
    32
}

pub const MIN_TITLE_WIDTH: usize = 40;
pub const MIN_TITLE_HEIGHT: usize = 8;

impl SynthSpec {
    /// A quarto book the size of a typical small edition: 4 leaves per
    /// gathering, 21 gatherings.
    pub fn quarto(n_formes: usize, noise: NoiseSpec) -> Self {
        SynthSpec {
            title: default_title(),
            format: Format::Quarto,
            leaves_per_gathering: 4,
            n_gatherings: 21,
            n_formes,
            title_width: 240,
            title_height: default_height(),
            forme_schedule: FormeSchedule::default(),
            noise,
        }
    }

    pub fn sides_per_gathering(&self) -> usize {
        2 * self.leaves_per_gathering / self.format.leaves_per_sheet()
    }

    pub fn n_sheet_sides(&self) -> usize {
        self.n_gatherings * self.sides_per_gathering()
    }

    pub fn n_pages(&self) -> usize {
        self.n_gatherings * 2 * self.leaves_per_gathering
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        side_tables(self.format, self.leaves_per_gathering)?;
        if self.n_gatherings == 0 {
            return bad("n_gatherings must be >= 1".into());
        }
        if self.n_formes == 0 {
            return bad("n_formes must be >= 1".into());
        }
        if self.title_width < MIN_TITLE_WIDTH || self.title_height < MIN_TITLE_HEIGHT {
            return bad(format!(
                "titles must be at least {MIN_TITLE_WIDTH}x{MIN_TITLE_HEIGHT} pixels"
            ));
        }
        if let FormeSchedule::Explicit(ids) = &self.forme_schedule {
            if ids.len() != self.n_sheet_sides() {
                return bad(format!(
                    "forme_schedule has {} entries for {} sheet sides",
                    ids.len(),
                    self.n_sheet_sides()
                ));
            }
            if let Some(&f) = ids.iter().find(|&&f| f >= self.n_formes) {
                return bad(format!("forme_schedule entry {f} >= n_formes {}", self.n_formes));
            }
        }
        self.noise.validate()
    }

    /// Forme of each sheet side in book order.
    pub fn schedule(&self) -> Vec<usize> {
        match &self.forme_schedule {
            FormeSchedule::Named(ScheduleName::RoundRobin) => {
                (0..self.n_sheet_sides()).map(|i| i % self.n_formes).collect()
            }
            FormeSchedule::Explicit(ids) => ids.clone(),
        }
    }
}

/// Column heights (fractions of the title height) of one letter glyph.
#[derive(Debug, Clone, PartialEq)]
struct Glyph {
    columns: Vec<f64>,
}

/// The text of one title position: words of glyphs.
#[derive(Debug, Clone, PartialEq)]
struct TitleText {
    words: Vec<Vec<Glyph>>,
}

/// One forme's spacing of a title: gap before every glyph after the first
/// in each word, and before every word after the first.
#[derive(Debug, Clone, PartialEq)]
struct Setting {
    letter_gaps: Vec<Vec<usize>>,
    word_gaps: Vec<usize>,
}

const GLYPH_HEIGHTS: [f64; 3] = [0.45, 0.7, 0.8];

fn draw_glyph(rng: &mut Prng, em: f64) -> Glyph {
    let width = ((em * rng.random_range(1.6..3.2)).round() as usize).max(2);
    let height = GLYPH_HEIGHTS[rng.random_range(0..GLYPH_HEIGHTS.len())];
    let columns = (0..width)
        .map(|c| {
            if c == 0 || c + 1 == width || rng.random_bool(0.25) {
                height
            } else {
                height * [0.25, 0.5][rng.random_range(0..2)]
            }
        })
        .collect();
    Glyph { columns }
}

fn draw_text(rng: &mut Prng, em: f64) -> TitleText {
    let n_words = rng.random_range(2..=4);
    let mut budget: usize = 16;
    let mut words = Vec::with_capacity(n_words);
    for _ in 0..n_words {
        let len = rng.random_range(2..=6).min(budget);
        if len == 0 {
            break;
        }
        budget -= len;
        words.push((0..len).map(|_| draw_glyph(rng, em)).collect());
    }
    TitleText { words }
}

fn draw_setting(rng: &mut Prng, text: &TitleText, em: f64) -> Setting {
    let mut gap = |lo: f64, hi: f64| (em * rng.random_range(lo..hi)).round() as usize;
    let letter_gaps = text
        .words
        .iter()
        .map(|w| (1..w.len()).map(|_| gap(0.3, 1.3)).collect())
        .collect();
    let word_gaps = (1..text.words.len()).map(|_| gap(2.0, 4.5)).collect();
    Setting { letter_gaps, word_gaps }
}

/// Renders a set title with its left edge at `margin`, clipping at the
/// right edge.
fn render(text: &TitleText, setting: &Setting, width: usize, height: usize, margin: usize) -> TitleImage {
    let baseline = ((height as f64) * 0.85).round() as usize;
    let mut pixels = vec![0.0; width * height];
    let mut x = margin;
    for (w, word) in text.words.iter().enumerate() {
        if w > 0 {
            x += setting.word_gaps[w - 1];
        }
        for (g, glyph) in word.iter().enumerate() {
            if g > 0 {
                x += setting.letter_gaps[w][g - 1];
            }
            for &h in &glyph.columns {
                if x < width {
                    let rows = ((h * height as f64).round() as usize).min(baseline);
                    for row in baseline - rows..baseline {
                        pixels[row * width + x] = 1.0;
                    }
                }
                x += 1;
            }
        }
    }
    TitleImage::new(width, height, pixels).expect("rendered pixels are in range")
}

/// Noise draws for one printed title.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impression {
    pub shift: usize,
    pub inking_scale: f64,
}

fn draw_shift(rng: &mut Prng, noise: &NoiseSpec, width: usize) -> usize {
    let max = (noise.offset_max_frac * width as f64).floor() as usize;
    if max == 0 {
        0
    } else {
        rng.random_range(0..=max)
    }
}

fn draw_scale(rng: &mut Prng, noise: &NoiseSpec) -> f64 {
    let [lo, hi] = noise.inking_scale_range;
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn add_noise(values: &mut [f64], sd: f64, rng: &mut Prng) {
    if sd > 0.0 {
        let normal = Normal::new(0.0, sd).expect("validated sd");
        for v in values {
            *v += normal.sample(rng);
        }
    }
}

/// Delays `values` by `shift` places with zero padding; a negative shift
/// advances them.
pub fn shift_values(values: &[f64], shift: isize) -> Vec<f64> {
    let n = values.len() as isize;
    (0..n)
        .map(|i| {
            let src = i - shift;
            if (0..n).contains(&src) {
                values[src as usize]
            } else {
                0.0
            }
        })
        .collect()
}

/// Applies one impression's noise to a 1-D ink profile.
pub fn perturb_profile(profile: &InkProfile, noise: &NoiseSpec, seed: u64) -> Result<InkProfile> {
    noise.validate()?;
    let mut rng = prng(seed);
    let shift = draw_shift(&mut rng, noise, profile.len());
    let scale = draw_scale(&mut rng, noise);
    let mut values: Vec<f64> = shift_values(profile.values(), shift as isize)
        .into_iter()
        .map(|v| v * scale)
        .collect();
    add_noise(&mut values, noise.pixel_noise_sd, &mut rng);
    Ok(InkProfile(values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect()))
}

fn perturb_image(img: &TitleImage, imp: Impression, sd: f64, rng: &mut Prng) -> TitleImage {
    let mut pixels: Vec<f64> = img
        .rows()
        .flat_map(|row| shift_values(row, imp.shift as isize))
        .map(|v| v * imp.inking_scale)
        .collect();
    add_noise(&mut pixels, sd, rng);
    for v in &mut pixels {
        *v = v.clamp(0.0, 1.0);
    }
    TitleImage::new(img.width(), img.height(), pixels).expect("clamped pixels")
}

#[derive(Debug, Clone)]
pub struct SynthBook {
    pub manifest: BookManifest,
    /// Title image of every page, keyed by page index.
    pub images: BTreeMap<usize, TitleImage>,
    /// Sheet-side unit ids with the forme that printed them.
    pub gold: Vec<(String, usize)>,
}

/// Signature letters in the order printers used them (no J, U or W), then
/// doubled letters.
pub fn signature(ordinal: usize) -> String {
    const LETTERS: &str = "ABCDEFGHIKLMNOPQRSTVXYZ";
    let letters: Vec<char> = LETTERS.chars().collect();
    let c = letters[ordinal % letters.len()];
    let repeat = ordinal / letters.len() + 1;
    std::iter::once(c)
        .chain(std::iter::repeat_n(c.to_ascii_lowercase(), repeat - 1))
        .collect()
}

pub fn page_image_path(index: usize) -> String {
    format!("titles/p{index}.png")
}

/// Draws a book from `spec`. The same (spec, seed) always yields the same
/// book.
pub fn generate_book(spec: &SynthSpec, seed: u64) -> Result<SynthBook> {
    spec.validate()?;
    let mut rng = prng(seed);
    let (w, h) = (spec.title_width, spec.title_height);
    let em = w as f64 / 100.0;
    let margin = (0.08 * w as f64).round() as usize;
    let positions = spec.format.pages_per_sheet_side();

    // verso and recto positions carry different title text
    let texts = [draw_text(&mut rng, em), draw_text(&mut rng, em)];
    let text_of = |position: usize| &texts[(position + 1) % 2];
    let clean: Vec<Vec<TitleImage>> = (0..spec.n_formes)
        .map(|_| {
            (0..positions)
                .map(|k| {
                    let setting = draw_setting(&mut rng, text_of(k), em);
                    render(text_of(k), &setting, w, h, margin)
                })
                .collect()
        })
        .collect();

    let schedule = spec.schedule();
    let page_formes = page_formes(spec, &schedule)?;
    let manifest = synth_manifest(spec, &page_formes)?;
    let units = build_units(&manifest, UnitScheme::SheetSides)?;

    let mut images = BTreeMap::new();
    for (unit, &forme) in units.iter().zip(&schedule) {
        let inking_scale = draw_scale(&mut rng, &spec.noise);
        for (k, &page) in unit.pages.iter().enumerate() {
            let imp = Impression {
                shift: draw_shift(&mut rng, &spec.noise, w),
                inking_scale,
            };
            let img = perturb_image(&clean[forme][k], imp, spec.noise.pixel_noise_sd, &mut rng);
            images.insert(page, img);
        }
    }
    let gold = units.iter().zip(&schedule).map(|(u, &f)| (u.id.clone(), f)).collect();
    Ok(SynthBook { manifest, images, gold })
}

/// Forme of every page (1-based index → forme), from the sheet-side schedule.
fn page_formes(spec: &SynthSpec, schedule: &[usize]) -> Result<BTreeMap<usize, usize>> {
    let tables = side_tables(spec.format, spec.leaves_per_gathering)?;
    let pages_per_gathering = 2 * spec.leaves_per_gathering;
    let mut sides: Vec<(usize, Vec<usize>)> = Vec::with_capacity(spec.n_sheet_sides());
    for g in 0..spec.n_gatherings {
        let base = g * pages_per_gathering;
        for t in &tables {
            let pages: Vec<usize> = t.pages.iter().map(|&p| base + p).collect();
            sides.push((*pages.iter().min().expect("nonempty side"), pages));
        }
    }
    sides.sort_by_key(|(first, _)| *first);
    Ok(sides
        .into_iter()
        .zip(schedule)
        .flat_map(|((_, pages), &f)| pages.into_iter().map(move |p| (p, f)))
        .collect())
}

fn synth_manifest(spec: &SynthSpec, page_formes: &BTreeMap<usize, usize>) -> Result<BookManifest> {
    let pages_per_gathering = 2 * spec.leaves_per_gathering;
    let gatherings: Vec<serde_json::Value> = (0..spec.n_gatherings)
        .map(|g| {
            let pages: Vec<serde_json::Value> = (1..=pages_per_gathering)
                .map(|p| {
                    let index = g * pages_per_gathering + p;
                    serde_json::json!({
                        "index": index,
                        "image": page_image_path(index),
                        "gold_label": page_formes[&index].to_string(),
                    })
                })
                .collect();
            serde_json::json!({ "id": signature(g), "pages": pages })
        })
        .collect();
    let doc = serde_json::json!({
        "title": spec.title,
        "format": spec.format.name(),
        "leaves_per_gathering": spec.leaves_per_gathering,
        "gatherings": gatherings,
    });
    parse_manifest(doc.to_string().as_bytes())
}

impl SynthBook {
    pub fn gold_csv(&self) -> Result<String> {
        let formes: Vec<String> = self.gold.iter().map(|(_, f)| f.to_string()).collect();
        write_label_csv(
            "forme_id",
            self.gold
                .iter()
                .zip(&formes)
                .map(|((id, _), f)| (id.as_str(), f.as_str())),
        )
    }

    /// Writes `manifest.json`, `titles/p{index}.png` and `gold.csv` into
    /// `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir.join("titles"))?;
        for (&index, img) in &self.images {
            let path = dir.join(page_image_path(index));
            img.to_gray8()
                .save_with_format(&path, image::ImageFormat::Png)
                .map_err(|e| Error::Image {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
        }
        std::fs::write(dir.join("manifest.json"), self.manifest.to_json())?;
        std::fs::write(dir.join("gold.csv"), self.gold_csv()?)?;
        Ok(())
    }
}
