use std::collections::{BTreeSet, HashMap};
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use forme_core::imposition::{build_units, parse_manifest, unit_gold_labels, BookManifest, UnitScheme};
use forme_core::kernel::KernelConfig;
use forme_core::metrics::{
    align_labels, baseline, evaluate, read_label_csv, write_label_csv, BaselineKind, EvalReport,
};
use forme_core::profiling::{BinStrategy, ProfileConfig};
use forme_core::spectral::{KMeansConfig, PRNG_ID};
use forme_core::synth::{generate_book, page_image_path, SynthSpec};
use forme_core::Error;

use crate::args::{AblateArgs, ClusterArgs, EvalArgs, MontageArgs, PipelineArgs, PlotArgs, SynthArgs};
use crate::error::{CliError, CliResult};
use crate::montage::{montage, MontageLayout};
use crate::output::{read_text, write_atomic, write_json};
use crate::pipeline::{load_page_titles, run_on_titles, ClusterParams, MeanScores, RunOutcome, SeedResult, Timings};
use crate::plot::{staircase_svg, Panel};

/// Every setting that influences a clustering run's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub manifest_path: PathBuf,
    pub unit_scheme: UnitScheme,
    pub n_bins: usize,
    pub bin_strategy: BinStrategy,
    #[serde(with = "norm_order")]
    pub p: f64,
    pub k_neighbors: usize,
    pub k: Option<usize>,
    pub seeds: Vec<u64>,
    pub binarize: bool,
    pub normalize: bool,
    pub output_dir: PathBuf,
}

/// Writes an infinite norm order as the string `"inf"`.
mod norm_order {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_finite() {
            Repr::Number(*p)
        } else {
            Repr::Text("inf".into())
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(p) => Ok(p),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl RunConfig {
    pub fn new(manifest: &Path, scheme: UnitScheme, args: &PipelineArgs, out: &Path) -> CliResult<Self> {
        if args.seeds == 0 {
            return Err(CliError::Usage("--seeds must be at least 1".into()));
        }
        Ok(RunConfig {
            manifest_path: manifest.to_path_buf(),
            unit_scheme: scheme,
            n_bins: args.bins,
            bin_strategy: args.strategy,
            p: args.p,
            k_neighbors: args.knn,
            k: args.k,
            seeds: (0..args.seeds as u64).map(|i| args.seed.wrapping_add(i)).collect(),
            binarize: !args.no_binarize,
            normalize: args.normalize,
            output_dir: out.to_path_buf(),
        })
    }

    pub fn profile(&self) -> ProfileConfig {
        ProfileConfig {
            binarize: self.binarize,
            n_bins: self.n_bins,
            strategy: self.bin_strategy,
            ..ProfileConfig::default()
        }
    }

    pub fn params(&self, scheme: UnitScheme) -> ClusterParams {
        ClusterParams {
            scheme,
            kernel: KernelConfig {
                p: self.p,
                normalize: self.normalize,
            },
            k_neighbors: self.k_neighbors,
            k: self.k,
            seeds: self.seeds.clone(),
            kmeans: KMeansConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRecord {
    pub unit_id: String,
    pub pages: Vec<usize>,
    pub label: usize,
    pub gold: Option<String>,
}

/// Run facts that vary between otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub created_unix_s: u64,
    pub threads: usize,
    pub timings: Timings,
}

impl Metadata {
    fn now(timings: Timings) -> Self {
        Metadata {
            version: env!("CARGO_PKG_VERSION").into(),
            created_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            threads: rayon::current_num_threads(),
            timings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub prng: String,
    pub k: usize,
    /// Units in book order with the first seed's labels.
    pub units: Vec<UnitRecord>,
    /// Scores of the first seed.
    pub eval: Option<EvalReport>,
    pub runs: Vec<SeedResult>,
    pub mean: Option<MeanScores>,
    pub metadata: Metadata,
}

pub fn read_manifest(path: &Path) -> CliResult<BookManifest> {
    let bytes = std::fs::read(path).map_err(|e| CliError::file(path, e))?;
    Ok(parse_manifest(&bytes)?)
}

/// Directory that relative image paths in a manifest resolve against.
pub fn manifest_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

fn format_scores(p: [f64; 3]) -> String {
    format!("V {:.1}  1-to-1 {:.1}  many-to-1 {:.1}", p[0], p[1], p[2])
}

pub fn cluster(args: &ClusterArgs) -> CliResult<RunReport> {
    let config = RunConfig::new(&args.manifest, args.scheme, &args.pipeline, &args.out)?;
    let manifest = read_manifest(&args.manifest)?;
    let start = Instant::now();
    let titles = load_page_titles(&manifest, manifest_dir(&args.manifest), &config.profile())?;
    let profile_s = start.elapsed().as_secs_f64();
    let mut outcome = run_on_titles(&manifest, &titles, &config.params(args.scheme))?;
    outcome.timings.profile_s = profile_s;

    let out = &args.out;
    write_atomic(&out.join("labels.csv"), outcome.assignment().to_csv()?.as_bytes())?;
    write_atomic(&out.join("distances.csv"), outcome.distances.to_csv()?.as_bytes())?;
    let annotated: Vec<(&str, &str)> = outcome
        .units
        .iter()
        .zip(&outcome.gold)
        .filter_map(|(u, g)| g.as_deref().map(|g| (u.id.as_str(), g)))
        .collect();
    if !annotated.is_empty() {
        write_atomic(
            &out.join("gold.csv"),
            write_label_csv("gold_label", annotated)?.as_bytes(),
        )?;
    }
    let report = run_report(config, outcome);
    write_json(&out.join("report.json"), &report)?;

    println!("{} units, {} clusters", report.units.len(), report.k);
    if let Some(mean) = &report.mean {
        let suffix = if report.runs.len() > 1 {
            format!(" (mean of {} seeds)", report.runs.len())
        } else {
            String::new()
        };
        println!("{}{suffix}", format_scores(mean.percentages()));
    }
    Ok(report)
}

fn run_report(config: RunConfig, outcome: RunOutcome) -> RunReport {
    let first = &outcome.runs[0];
    let units = outcome
        .units
        .iter()
        .zip(&first.labels)
        .zip(&outcome.gold)
        .map(|((u, &label), gold)| UnitRecord {
            unit_id: u.id.clone(),
            pages: u.pages.clone(),
            label,
            gold: gold.clone(),
        })
        .collect();
    RunReport {
        config,
        prng: PRNG_ID.into(),
        k: outcome.k,
        units,
        eval: first.eval.clone(),
        mean: outcome.mean,
        runs: outcome.runs,
        metadata: Metadata::now(outcome.timings),
    }
}

fn read_labels(path: &Path) -> CliResult<Vec<(String, String)>> {
    Ok(read_label_csv(&read_text(path)?)?)
}

pub fn eval(args: &EvalArgs) -> CliResult<EvalReport> {
    let gold = read_labels(&args.gold)?;
    let pred = read_labels(&args.pred)?;
    let (_, g, p) = align_labels(&gold, &pred)?;
    let report = evaluate(&g, &p)?;
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    println!("{} ({} units)", format_scores(report.percentages()), report.n);
    Ok(report)
}

pub fn plot(args: &PlotArgs) -> CliResult<String> {
    let manifest = read_manifest(&args.manifest)?;
    let units = build_units(&manifest, args.scheme)?;
    let labels: HashMap<String, String> = read_labels(&args.labels)?.into_iter().collect();
    let known: BTreeSet<&str> = units.iter().map(|u| u.id.as_str()).collect();
    if let Some(extra) = labels.keys().find(|id| !known.contains(id.as_str())) {
        return Err(Error::InvalidArgument(format!(
            "labelled unit `{extra}` is not a {} unit of the manifest",
            args.scheme
        ))
        .into());
    }
    let predicted = units
        .iter()
        .map(|u| {
            labels
                .get(&u.id)
                .cloned()
                .map(Some)
                .ok_or_else(|| Error::InvalidArgument(format!("unit `{}` has no label", u.id)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut panels = vec![Panel {
        name: "predicted".into(),
        labels: predicted,
    }];
    if let Some(gold_path) = &args.gold {
        let gold: HashMap<String, String> = read_labels(gold_path)?.into_iter().collect();
        panels.push(Panel {
            name: "gold".into(),
            labels: units.iter().map(|u| gold.get(&u.id).cloned()).collect(),
        });
    }
    let gatherings: Vec<(usize, String)> = units
        .iter()
        .map(|u| (u.gathering, manifest.gatherings[u.gathering].id.clone()))
        .collect();
    let svg = staircase_svg(&gatherings, &panels);
    write_atomic(&args.out, svg.as_bytes())?;
    Ok(svg)
}

pub fn png_bytes(img: &image::GrayImage) -> CliResult<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: PathBuf::from("<memory>"),
            message: e.to_string(),
        })?;
    Ok(buf.into_inner())
}

pub fn montage_cmd(args: &MontageArgs) -> CliResult<MontageLayout> {
    let manifest = read_manifest(&args.manifest)?;
    let units = build_units(&manifest, args.scheme)?;
    let (img, layout) = montage(&manifest, &units, manifest_dir(&args.manifest))?;
    write_atomic(&args.out, &png_bytes(&img)?)?;
    println!(
        "{} rows x {} columns, {}x{} px",
        layout.rows,
        layout.cols,
        img.width(),
        img.height()
    );
    Ok(layout)
}

pub fn synth(args: &SynthArgs) -> CliResult<()> {
    let spec: SynthSpec = serde_json::from_str(&read_text(&args.spec)?).map_err(Error::from)?;
    let book = generate_book(&spec, args.seed)?;
    for (&index, img) in &book.images {
        write_atomic(&args.out.join(page_image_path(index)), &png_bytes(&img.to_gray8())?)?;
    }
    write_atomic(&args.out.join("manifest.json"), book.manifest.to_json().as_bytes())?;
    write_atomic(&args.out.join("gold.csv"), book.gold_csv()?.as_bytes())?;
    println!(
        "{} pages, {} sheet sides, {} formes",
        book.manifest.n_pages(),
        book.gold.len(),
        spec.n_formes
    );
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub book: String,
    pub method: String,
    pub mean: MeanScores,
    pub per_seed: Vec<EvalReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub config: RunConfig,
    pub prng: String,
    pub k: usize,
    pub rows: Vec<AblationRow>,
    pub metadata: Metadata,
}

impl AblationReport {
    pub fn row(&self, method: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// `book,method,v_measure,one_to_one,many_to_one` in percent.
    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(["book", "method", "v_measure", "one_to_one", "many_to_one"])
            .map_err(csv_err)?;
        for r in &self.rows {
            let [v, o, m] = r.mean.percentages().map(|x| format!("{x:.1}"));
            w.write_record([r.book.as_str(), &r.method, &v, &o, &m])
                .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn scheme_method(scheme: UnitScheme) -> String {
    format!("lev_{scheme}")
}

/// Runs every unit scheme on one set of profiled titles, plus the random
/// baselines scored against the sheet-side gold labels.
pub fn ablate(args: &AblateArgs) -> CliResult<AblationReport> {
    let config = RunConfig::new(&args.manifest, UnitScheme::SheetSides, &args.pipeline, &args.out)?;
    let manifest = read_manifest(&args.manifest)?;
    let mut timings = Timings::default();
    let start = Instant::now();
    let titles = load_page_titles(&manifest, manifest_dir(&args.manifest), &config.profile())?;
    timings.profile_s = start.elapsed().as_secs_f64();

    let units = build_units(&manifest, UnitScheme::SheetSides)?;
    let gold: Vec<String> = unit_gold_labels(&manifest, &units).into_iter().flatten().collect();
    if gold.is_empty() {
        return Err(Error::InvalidArgument("ablation needs gold labels in the manifest".into()).into());
    }
    let k = config.k.unwrap_or_else(|| gold.iter().collect::<BTreeSet<_>>().len());

    let mut rows = Vec::new();
    for kind in BaselineKind::ALL {
        let per_seed = config
            .seeds
            .iter()
            .map(|&seed| {
                let pred = baseline(&gold, kind, seed)?;
                evaluate(&gold, &pred)
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(AblationRow {
            book: manifest.title.clone(),
            method: kind.name().into(),
            mean: MeanScores::of(&per_seed).expect("at least one seed"),
            per_seed,
        });
    }
    for scheme in UnitScheme::ALL {
        let params = ClusterParams {
            k: Some(k),
            ..config.params(scheme)
        };
        let outcome = run_on_titles(&manifest, &titles, &params)?;
        timings.distances_s += outcome.timings.distances_s;
        timings.cluster_s += outcome.timings.cluster_s;
        timings.eval_s += outcome.timings.eval_s;
        let per_seed: Vec<EvalReport> = outcome.runs.into_iter().filter_map(|r| r.eval).collect();
        rows.push(AblationRow {
            book: manifest.title.clone(),
            method: scheme_method(scheme),
            mean: MeanScores::of(&per_seed).expect("gold labels present"),
            per_seed,
        });
    }

    let report = AblationReport {
        config,
        prng: PRNG_ID.into(),
        k,
        rows,
        metadata: Metadata::now(timings),
    };
    write_atomic(&args.out.join("ablation.csv"), report.to_csv()?.as_bytes())?;
    write_json(&args.out.join("ablation.json"), &report)?;
    println!("{:<18} {:>6} {:>7} {:>10}", "method", "V", "1-to-1", "many-to-1");
    for r in &report.rows {
        let [v, o, m] = r.mean.percentages();
        println!("{:<18} {v:>6.1} {o:>7.1} {m:>10.1}", r.method);
    }
    Ok(report)
}
