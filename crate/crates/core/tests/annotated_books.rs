//! Unit counts of the eight annotated books, from manifest skeletons.

use std::path::PathBuf;

use forme_core::imposition::{build_units, parse_manifest, BookManifest, UnitScheme};
use proptest::prelude::*;

fn fixture(name: &str) -> BookManifest {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", "books", name]
        .iter()
        .collect();
    parse_manifest(&std::fs::read(&path).unwrap()).unwrap()
}

fn count(m: &BookManifest, scheme: UnitScheme) -> usize {
    build_units(m, scheme).unwrap().len()
}

/// (file, pages, recto pages, sheet sides)
const BOOKS: [(&str, usize, usize, usize); 8] = [
    ("leviathan.json", 376, 188, 94),
    ("paradise_lost.json", 336, 168, 84),
    ("king_lear.json", 48, 24, 12),
    ("mayor.json", 72, 36, 18),
    ("parthenissa.json", 248, 124, 62),
    ("institution.json", 80, 40, 10),
    ("discourse.json", 192, 96, 24),
    ("wisdom.json", 240, 120, 30),
];

#[test]
fn unit_counts_match_the_annotated_books() {
    for (file, pages, rectos, sides) in BOOKS {
        let m = fixture(file);
        assert_eq!(m.n_pages(), pages, "{file}");
        assert_eq!(count(&m, UnitScheme::AllPages), pages, "{file}");
        assert_eq!(count(&m, UnitScheme::RectoPages), rectos, "{file}");
        assert_eq!(count(&m, UnitScheme::SheetSides), sides, "{file}");
    }
}

#[test]
fn leviathan_counts_whole_sheets() {
    let mut m = fixture("leviathan.json");
    assert!(m.merge_sheet_sides);
    m.merge_sheet_sides = false;
    assert_eq!(count(&m, UnitScheme::SheetSides), 188);
}

#[test]
fn fixtures_round_trip_through_json() {
    for (file, ..) in BOOKS {
        let m = fixture(file);
        assert_eq!(parse_manifest(m.to_json().as_bytes()).unwrap(), m, "{file}");
    }
}

fn manifest_json(format: &str, leaves: usize, gatherings: usize, blanks: &[usize], merge: bool) -> String {
    let per = 2 * leaves;
    let gs: Vec<serde_json::Value> = (0..gatherings)
        .map(|g| {
            let pages: Vec<serde_json::Value> = (g * per + 1..=(g + 1) * per)
                .map(|i| {
                    let image = (!blanks.contains(&i)).then(|| format!("t/{i}.png"));
                    serde_json::json!({"index": i, "image": image, "gold_label": (i % 3).to_string()})
                })
                .collect();
            serde_json::json!({"id": format!("G{g}"), "pages": pages})
        })
        .collect();
    serde_json::json!({
        "title": "t",
        "format": format,
        "leaves_per_gathering": leaves,
        "gatherings": gs,
        "merge_sheet_sides": merge,
    })
    .to_string()
}

proptest! {
    #[test]
    fn manifest_round_trip(
        (format, leaves) in prop_oneof![
            (1usize..5).prop_map(|s| ("folio", 2 * s)),
            Just(("quarto", 4)),
            Just(("octavo", 8)),
        ],
        gatherings in 1usize..5,
        blanks in proptest::collection::vec(1usize..40, 0..4),
        merge in any::<bool>(),
    ) {
        let m = parse_manifest(manifest_json(format, leaves, gatherings, &blanks, merge).as_bytes()).unwrap();
        prop_assert_eq!(m.n_pages(), gatherings * 2 * leaves);
        let again = parse_manifest(m.to_json().as_bytes()).unwrap();
        prop_assert_eq!(again, m);
    }
}
