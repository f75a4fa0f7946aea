//! Runs the `forme` binary end to end on synthetic books.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use forme_core::imposition::{build_units, parse_manifest, UnitScheme};
use serde_json::Value;
use tempfile::TempDir;

fn forme(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forme")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = forme(args);
    assert!(
        out.status.success(),
        "forme {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_spec(dir: &Path, format: &str, leaves: usize, gatherings: usize, noisy: bool) -> PathBuf {
    let mut spec = serde_json::json!({
        "format": format,
        "leaves_per_gathering": leaves,
        "n_gatherings": gatherings,
        "n_formes": 3,
        "title_width": 120,
        "title_height": 16,
    });
    if noisy {
        spec["noise"] = serde_json::json!({
            "offset_max_frac": 0.1,
            "pixel_noise_sd": 0.05,
            "inking_scale_range": [0.8, 1.2],
        });
    }
    let path = dir.join(format!("{format}.json"));
    std::fs::write(&path, spec.to_string()).unwrap();
    path
}

/// Generates a book into `<tmp>/book` and returns its manifest path.
fn synth_book(tmp: &TempDir, format: &str, leaves: usize, gatherings: usize, noisy: bool, seed: u64) -> PathBuf {
    let spec = write_spec(tmp.path(), format, leaves, gatherings, noisy);
    let out = tmp.path().join(format!("book{seed}"));
    ok(&[
        "synth",
        "--spec",
        p(&spec),
        "--seed",
        &seed.to_string(),
        "--out",
        p(&out),
    ]);
    out.join("manifest.json")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn error_json(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr
        .lines()
        .rev()
        .find(|l| l.starts_with('{'))
        .expect("no JSON error on stderr");
    serde_json::from_str(line).unwrap()
}

#[test]
fn labels_are_identical_across_runs_and_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let manifest = synth_book(&tmp, "quarto", 4, 6, true, 3);
    let mut outputs = Vec::new();
    for (run, threads) in [(0, "1"), (1, "1"), (2, "2"), (3, "4")] {
        let out = tmp.path().join(format!("run{run}"));
        ok(&[
            "--threads",
            threads,
            "cluster",
            "--manifest",
            p(&manifest),
            "--out",
            p(&out),
        ]);
        outputs.push((
            std::fs::read(out.join("labels.csv")).unwrap(),
            std::fs::read(out.join("distances.csv")).unwrap(),
        ));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn zero_noise_book_clusters_perfectly_and_eval_agrees() {
    let tmp = TempDir::new().unwrap();
    // eight sheet sides per forme, so each unit's neighbours share its forme
    let manifest = synth_book(&tmp, "quarto", 4, 12, false, 1);
    let out = tmp.path().join("run");
    ok(&["cluster", "--manifest", p(&manifest), "--out", p(&out)]);
    let report: Value = serde_json::from_str(&read(&out.join("report.json"))).unwrap();
    for key in ["v_measure", "one_to_one", "many_to_one"] {
        assert_eq!(report["eval"][key].as_f64(), Some(1.0), "{key}");
    }
    let eval_out = tmp.path().join("eval.json");
    ok(&[
        "eval",
        "--gold",
        p(&out.join("gold.csv")),
        "--pred",
        p(&out.join("labels.csv")),
        "--out",
        p(&eval_out),
    ]);
    let eval: Value = serde_json::from_str(&read(&eval_out)).unwrap();
    for key in ["v_measure", "one_to_one", "many_to_one", "n"] {
        assert_eq!(eval[key], report["eval"][key], "{key}");
    }
}

#[test]
fn missing_manifest_exits_with_io_class() {
    let tmp = TempDir::new().unwrap();
    let out = forme(&[
        "cluster",
        "--manifest",
        p(&tmp.path().join("nope.json")),
        "--out",
        p(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["class"], "io");
}

#[test]
fn missing_page_image_names_the_page() {
    let tmp = TempDir::new().unwrap();
    let manifest = synth_book(&tmp, "folio", 2, 4, false, 1);
    std::fs::remove_file(manifest.parent().unwrap().join("titles/p7.png")).unwrap();
    let out = forme(&[
        "cluster",
        "--manifest",
        p(&manifest),
        "--out",
        p(&tmp.path().join("run")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["error"]["page_index"], 7);
    assert!(!tmp.path().join("run/labels.csv").exists());
}

#[test]
fn bad_arguments_are_configuration_errors() {
    let tmp = TempDir::new().unwrap();
    let manifest = synth_book(&tmp, "folio", 2, 4, false, 1);
    let run = tmp.path().join("run");
    for extra in [&["--bins", "1"][..], &["--knn", "0"], &["--bogus"]] {
        let mut args = vec!["cluster", "--manifest", p(&manifest), "--out", p(&run)];
        args.extend_from_slice(extra);
        let out = forme(&args);
        assert_eq!(out.status.code(), Some(1), "{extra:?}");
        assert_eq!(error_json(&out)["error"]["class"], "config", "{extra:?}");
    }
}

fn label_csv(dir: &Path, name: &str, column: &str, rows: &[(&str, &str)]) -> PathBuf {
    let mut text = format!("unit_id,{column}\n");
    for (id, l) in rows {
        text.push_str(&format!("{id},{l}\n"));
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn eval_scores(gold: &Path, pred: &Path, out: &Path) -> [f64; 3] {
    ok(&["eval", "--gold", p(gold), "--pred", p(pred), "--out", p(out)]);
    let v: Value = serde_json::from_str(&read(out)).unwrap();
    ["v_measure", "one_to_one", "many_to_one"].map(|k| v[k].as_f64().unwrap())
}

#[test]
fn eval_scores_small_label_files() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let out = d.join("eval.json");
    let gold = label_csv(
        d,
        "gold.csv",
        "gold_label",
        &[("u1", "a"), ("u2", "a"), ("u3", "b"), ("u4", "b")],
    );

    assert_eq!(eval_scores(&gold, &gold, &out), [1.0, 1.0, 1.0]);

    let constant = label_csv(
        d,
        "c.csv",
        "label",
        &[("u1", "0"), ("u2", "0"), ("u3", "0"), ("u4", "0")],
    );
    assert_eq!(eval_scores(&gold, &constant, &out)[0], 0.0);

    // rows in a different order than the gold file
    let pred = label_csv(
        d,
        "p.csv",
        "label",
        &[("u4", "1"), ("u1", "0"), ("u3", "0"), ("u2", "0")],
    );
    let [v, o, m] = eval_scores(&gold, &pred, &out);
    assert!((v - 0.344).abs() < 1e-3, "{v}");
    assert_eq!((o, m), (0.75, 0.75));

    let short = label_csv(d, "s.csv", "label", &[("u1", "0"), ("u2", "1")]);
    let fail = forme(&["eval", "--gold", p(&gold), "--pred", p(&short)]);
    assert_eq!(fail.status.code(), Some(1));
}

#[test]
fn plot_draws_one_point_per_unit_and_panel() {
    let tmp = TempDir::new().unwrap();
    let manifest = synth_book(&tmp, "folio", 2, 2, false, 1);
    let units = build_units(
        &parse_manifest(&std::fs::read(&manifest).unwrap()).unwrap(),
        UnitScheme::SheetSides,
    )
    .unwrap();
    assert_eq!(units.len(), 4);
    let rows: Vec<(&str, &str)> = units
        .iter()
        .enumerate()
        .map(|(i, u)| (u.id.as_str(), if i < 2 { "0" } else { "1" }))
        .collect();
    let labels = label_csv(tmp.path(), "labels.csv", "label", &rows);
    let svg_path = tmp.path().join("plot.svg");
    ok(&[
        "plot",
        "--labels",
        p(&labels),
        "--manifest",
        p(&manifest),
        "--gold",
        p(&labels),
        "--out",
        p(&svg_path),
    ]);
    let svg = read(&svg_path);
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert_eq!(svg.matches("class=\"point\"").count(), 8);
    assert_eq!(svg.matches("class=\"panel\"").count(), 2);

    let unknown = label_csv(tmp.path(), "bad.csv", "label", &[("nowhere", "0")]);
    let fail = forme(&[
        "plot",
        "--labels",
        p(&unknown),
        "--manifest",
        p(&manifest),
        "--out",
        p(&svg_path),
    ]);
    assert_eq!(fail.status.code(), Some(1));
}

fn montage_grid(manifest: &Path, scheme: &str, out: &Path) -> (usize, usize) {
    let stdout = ok(&[
        "montage",
        "--manifest",
        p(manifest),
        "--scheme",
        scheme,
        "--out",
        p(out),
    ]);
    let words: Vec<&str> = stdout.split_whitespace().collect();
    assert!(image::open(out).is_ok());
    (words[0].parse().unwrap(), words[3].parse().unwrap())
}

#[test]
fn montage_has_one_row_per_unit() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("m.png");
    let folio = synth_book(&tmp, "folio", 2, 2, false, 1);
    assert_eq!(montage_grid(&folio, "sheet_sides", &out), (4, 2));
    assert_eq!(montage_grid(&folio, "all_pages", &out), (8, 1));
    let quarto = synth_book(&tmp, "quarto", 4, 2, false, 2);
    assert_eq!(montage_grid(&quarto, "sheet_sides", &out), (4, 4));
}

#[test]
fn synth_seeds_change_images_but_not_structure() {
    let tmp = TempDir::new().unwrap();
    let a = synth_book(&tmp, "quarto", 4, 3, true, 1);
    let b = synth_book(&tmp, "quarto", 4, 3, true, 2);
    assert_eq!(read(&a), read(&b));
    let img = |m: &Path, i: usize| std::fs::read(m.parent().unwrap().join(format!("titles/p{i}.png"))).unwrap();
    assert!((1..=24).any(|i| img(&a, i) != img(&b, i)));
    assert_eq!(read(&a.with_file_name("gold.csv")), read(&b.with_file_name("gold.csv")));
}

#[test]
fn zero_noise_formes_reprint_identical_titles() {
    let tmp = TempDir::new().unwrap();
    let manifest = synth_book(&tmp, "quarto", 4, 6, false, 5);
    let dir = manifest.parent().unwrap();
    let m = parse_manifest(&std::fs::read(&manifest).unwrap()).unwrap();
    let units = build_units(&m, UnitScheme::SheetSides).unwrap();
    let gold: std::collections::HashMap<String, String> = read(&dir.join("gold.csv"))
        .lines()
        .skip(1)
        .map(|l| {
            let (id, f) = l.split_once(',').unwrap();
            (id.to_string(), f.to_string())
        })
        .collect();
    let img = |i: usize| std::fs::read(dir.join(format!("titles/p{i}.png"))).unwrap();
    let mut differing_formes = 0;
    for (x, u) in units.iter().enumerate() {
        for v in &units[x + 1..] {
            let same_forme = gold[&u.id] == gold[&v.id];
            let identical = u.pages.iter().zip(&v.pages).all(|(&a, &b)| img(a) == img(b));
            if same_forme {
                assert!(identical, "{} vs {}", u.id, v.id);
            } else {
                differing_formes += usize::from(!identical);
            }
        }
    }
    assert!(differing_formes > 0);
}
