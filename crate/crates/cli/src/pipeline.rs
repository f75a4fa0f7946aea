//! End-to-end run over one book: titles → units → distances → clusters →
//! scores.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use forme_core::imposition::{build_units, unit_gold_labels, BookManifest, UnitLayout, UnitScheme};
use forme_core::kernel::{distance_matrix, ClusterUnit, DistanceMatrix, KernelConfig};
use forme_core::metrics::{evaluate, EvalReport};
use forme_core::profiling::{load_title_image, profile_title, ProfileConfig, QuantizedTitle, TitleImage};
use forme_core::spectral::{cluster_with, ClusterAssignment, ClusterConfig, KMeansConfig};
use forme_core::{Error, Result};

/// Quantized title of every non-blank page, keyed by page index.
pub type PageTitles = BTreeMap<usize, QuantizedTitle>;

/// Loads and profiles every non-blank page image, resolving relative paths
/// against `base_dir`.
pub fn load_page_titles(manifest: &BookManifest, base_dir: &Path, config: &ProfileConfig) -> Result<PageTitles> {
    let pages: Vec<(usize, &str)> = manifest
        .pages
        .iter()
        .filter_map(|p| p.image.as_deref().map(|img| (p.index, img)))
        .collect();
    pages
        .par_iter()
        .map(|&(index, rel)| {
            let path = base_dir.join(rel);
            let img = load_title_image(&path).map_err(|e| Error::PageImage {
                page_index: index,
                path: path.clone(),
                message: match e {
                    Error::Image { message, .. } => message,
                    other => other.to_string(),
                },
            })?;
            Ok((index, profile_title(&img, config)?))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().collect())
}

/// Profiles in-memory title images.
pub fn profile_images(images: &BTreeMap<usize, TitleImage>, config: &ProfileConfig) -> Result<PageTitles> {
    images
        .par_iter()
        .map(|(&index, img)| Ok((index, profile_title(img, config)?)))
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().collect())
}

/// Attaches titles to the units of `scheme`; blank pages become absent slots.
pub fn cluster_units(
    manifest: &BookManifest,
    scheme: UnitScheme,
    titles: &PageTitles,
) -> Result<(Vec<UnitLayout>, Vec<ClusterUnit>)> {
    let layouts = build_units(manifest, scheme)?;
    let units = layouts
        .iter()
        .map(|u| ClusterUnit {
            id: u.id.clone(),
            slots: u.pages.iter().map(|p| titles.get(p).cloned()).collect(),
        })
        .collect();
    Ok((layouts, units))
}

/// Settings of the clustering stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub scheme: UnitScheme,
    pub kernel: KernelConfig,
    pub k_neighbors: usize,
    /// Number of clusters; taken from the gold labels when absent.
    pub k: Option<usize>,
    pub seeds: Vec<u64>,
    pub kmeans: KMeansConfig,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            scheme: UnitScheme::SheetSides,
            kernel: KernelConfig::default(),
            k_neighbors: 5,
            k: None,
            seeds: vec![17],
            kmeans: KMeansConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub profile_s: f64,
    pub distances_s: f64,
    pub cluster_s: f64,
    pub eval_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub labels: Vec<usize>,
    pub eval: Option<EvalReport>,
}

/// Mean scores over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanScores {
    pub v_measure: f64,
    pub one_to_one: f64,
    pub many_to_one: f64,
}

impl MeanScores {
    pub fn of<'a>(reports: impl IntoIterator<Item = &'a EvalReport>) -> Option<Self> {
        let mut n = 0usize;
        let mut sums = [0.0; 3];
        for r in reports {
            n += 1;
            sums[0] += r.v_measure;
            sums[1] += r.one_to_one;
            sums[2] += r.many_to_one;
        }
        (n > 0).then(|| MeanScores {
            v_measure: sums[0] / n as f64,
            one_to_one: sums[1] / n as f64,
            many_to_one: sums[2] / n as f64,
        })
    }

    pub fn percentages(&self) -> [f64; 3] {
        [self.v_measure, self.one_to_one, self.many_to_one].map(|x| 100.0 * x)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub units: Vec<UnitLayout>,
    pub gold: Vec<Option<String>>,
    pub k: usize,
    pub distances: DistanceMatrix,
    pub runs: Vec<SeedResult>,
    pub mean: Option<MeanScores>,
    pub timings: Timings,
}

impl RunOutcome {
    /// Labels of the first seed.
    pub fn assignment(&self) -> ClusterAssignment {
        ClusterAssignment {
            unit_ids: self.units.iter().map(|u| u.id.clone()).collect(),
            labels: self.runs[0].labels.clone(),
        }
    }
}

/// Gold labels of the annotated units as (unit index, label) pairs.
fn annotated(gold: &[Option<String>]) -> Vec<(usize, &str)> {
    gold.iter()
        .enumerate()
        .filter_map(|(i, g)| g.as_deref().map(|g| (i, g)))
        .collect()
}

/// Scores `labels` against the annotated subset of units.
pub fn score(gold: &[Option<String>], labels: &[usize]) -> Result<Option<EvalReport>> {
    let pairs = annotated(gold);
    if pairs.is_empty() {
        return Ok(None);
    }
    let g: Vec<&str> = pairs.iter().map(|&(_, g)| g).collect();
    // compared as text, exactly as when read back from labels.csv
    let p: Vec<String> = pairs.iter().map(|&(i, _)| labels[i].to_string()).collect();
    evaluate(&g, &p).map(Some)
}

/// Runs the distance and clustering stages for every seed on already
/// profiled titles.
pub fn run_on_titles(manifest: &BookManifest, titles: &PageTitles, params: &ClusterParams) -> Result<RunOutcome> {
    if params.seeds.is_empty() {
        return Err(Error::InvalidArgument("at least one seed is required".into()));
    }
    let (units, cluster_units) = cluster_units(manifest, params.scheme, titles)?;
    let gold = unit_gold_labels(manifest, &units);
    let k = match params.k {
        Some(k) => k,
        None => {
            let distinct: BTreeSet<&str> = annotated(&gold).into_iter().map(|(_, g)| g).collect();
            if distinct.is_empty() {
                return Err(Error::InvalidArgument(
                    "number of clusters not given and the manifest has no gold labels".into(),
                ));
            }
            distinct.len()
        }
    };

    let mut timings = Timings::default();
    let start = Instant::now();
    let distances = distance_matrix(&cluster_units, &params.kernel)?;
    timings.distances_s = start.elapsed().as_secs_f64();

    let mut runs = Vec::with_capacity(params.seeds.len());
    for &seed in &params.seeds {
        let start = Instant::now();
        let assignment = cluster_with(
            &distances,
            &ClusterConfig {
                k,
                k_neighbors: params.k_neighbors,
                seed,
                kmeans: params.kmeans,
            },
        )?;
        timings.cluster_s += start.elapsed().as_secs_f64();
        let start = Instant::now();
        let eval = score(&gold, &assignment.labels)?;
        timings.eval_s += start.elapsed().as_secs_f64();
        runs.push(SeedResult {
            seed,
            labels: assignment.labels,
            eval,
        });
    }
    let mean = MeanScores::of(runs.iter().filter_map(|r| r.eval.as_ref()));
    Ok(RunOutcome {
        units,
        gold,
        k,
        distances,
        runs,
        mean,
        timings,
    })
}

/// Profiles in-memory images, then runs [`run_on_titles`].
pub fn run_on_images(
    manifest: &BookManifest,
    images: &BTreeMap<usize, TitleImage>,
    profile: &ProfileConfig,
    params: &ClusterParams,
) -> Result<RunOutcome> {
    let start = Instant::now();
    let titles = profile_images(images, profile)?;
    let profile_s = start.elapsed().as_secs_f64();
    let mut out = run_on_titles(manifest, &titles, params)?;
    out.timings.profile_s = profile_s;
    Ok(out)
}
