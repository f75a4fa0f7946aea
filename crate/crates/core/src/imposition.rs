//! Book structure: formats, gatherings, and the imposition of pages onto
//! sheet sides.
//!
//! A gathering of `L` leaves holds pages `1..=2L` in local numbering. The
//! imposition tables below list, for every sheet side of a gathering, the
//! local pages it carries in *position order*. Position `k` refers to the
//! same physical spot of the forme on both sides of every sheet, so slot `k`
//! of one sheet side is only ever compared with slot `k` of another. In every
//! table even positions hold recto pages and odd positions hold versos.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Folio,
    Quarto,
    Octavo,
}

impl Format {
    pub fn pages_per_sheet_side(self) -> usize {
        match self {
            Format::Folio => 2,
            Format::Quarto => 4,
            Format::Octavo => 8,
        }
    }

    /// Leaves produced by folding a single sheet.
    pub fn leaves_per_sheet(self) -> usize {
        self.pages_per_sheet_side()
    }

    pub fn name(self) -> &'static str {
        match self {
            Format::Folio => "folio",
            Format::Quarto => "quarto",
            Format::Octavo => "octavo",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "folio" => Ok(Format::Folio),
            "quarto" => Ok(Format::Quarto),
            "octavo" => Ok(Format::Octavo),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Outer,
    Inner,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Outer => "outer",
            Side::Inner => "inner",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gathering {
    /// Signature label as printed, e.g. `"B"`. Not necessarily unique.
    pub id: String,
    /// Unique key: the id, suffixed `~n` for its n-th repeat in the book.
    pub key: String,
    pub leaves: usize,
    /// Global 1-based page indices, half-open.
    pub page_span: Range<usize>,
    /// Final gathering with fewer leaves than the book's norm.
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageRecord {
    pub index: usize,
    /// Ordinal of the gathering in [`BookManifest::gatherings`].
    pub gathering: usize,
    pub gathering_id: String,
    /// Title image path as written in the manifest; `None` for blank pages.
    pub image: Option<String>,
    pub gold_label: Option<String>,
}

impl PageRecord {
    pub fn is_blank(&self) -> bool {
        self.image.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BookManifest {
    pub title: String,
    pub format: Format,
    pub leaves_per_gathering: usize,
    pub gatherings: Vec<Gathering>,
    pub pages: Vec<PageRecord>,
    /// Treat both sides of a sheet as a single clustering unit.
    pub merge_sheet_sides: bool,
}

#[derive(Serialize, Deserialize)]
struct ManifestFile {
    title: String,
    format: String,
    leaves_per_gathering: usize,
    gatherings: Vec<GatheringFile>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    merge_sheet_sides: bool,
}

#[derive(Serialize, Deserialize)]
struct GatheringFile {
    id: String,
    pages: Vec<PageFile>,
}

#[derive(Serialize, Deserialize)]
struct PageFile {
    index: usize,
    image: Option<String>,
    #[serde(default)]
    gold_label: Option<String>,
}

/// Parses and validates a JSON manifest.
pub fn parse_manifest(bytes: &[u8]) -> Result<BookManifest> {
    let file: ManifestFile = serde_json::from_slice(bytes).map_err(|e| Error::MalformedManifest(e.to_string()))?;
    let format: Format = file.format.parse()?;
    let lpg = file.leaves_per_gathering;
    let fills_sheets = match format {
        Format::Folio => lpg.is_multiple_of(2),
        _ => lpg.is_multiple_of(format.leaves_per_sheet()),
    };
    if lpg == 0 || !fills_sheets {
        return Err(Error::MalformedManifest(format!(
            "{lpg} leaves per gathering cannot be made from {format} sheets"
        )));
    }
    if file.gatherings.is_empty() {
        return Err(Error::MalformedManifest("no gatherings".into()));
    }

    let mut gatherings = Vec::with_capacity(file.gatherings.len());
    let mut pages = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let n_gatherings = file.gatherings.len();
    for (ordinal, g) in file.gatherings.into_iter().enumerate() {
        let expected = 2 * lpg;
        let count = g.pages.len();
        let is_last = ordinal + 1 == n_gatherings;
        let partial = count < expected && is_last && count > 0 && count % 2 == 0;
        if count != expected && !partial {
            return Err(Error::GatheringSizeMismatch {
                gathering: g.id,
                pages: count,
                expected,
            });
        }
        if partial {
            log::warn!(
                "final gathering `{}` has {} of {} pages; it is excluded from sheet-side units",
                g.id,
                count,
                expected
            );
        }
        let repeat = seen.entry(g.id.clone()).or_insert(0);
        *repeat += 1;
        let key = if *repeat == 1 {
            g.id.clone()
        } else {
            format!("{}~{}", g.id, repeat)
        };
        let start = pages.len() + 1;
        for p in g.pages {
            let expected_index = pages.len() + 1;
            if p.index != expected_index {
                return Err(Error::NonContiguousPages {
                    expected: expected_index,
                    found: p.index,
                });
            }
            pages.push(PageRecord {
                index: p.index,
                gathering: ordinal,
                gathering_id: g.id.clone(),
                image: p.image,
                gold_label: p.gold_label,
            });
        }
        gatherings.push(Gathering {
            id: g.id,
            key,
            leaves: count / 2,
            page_span: start..pages.len() + 1,
            partial,
        });
    }

    Ok(BookManifest {
        title: file.title,
        format,
        leaves_per_gathering: lpg,
        gatherings,
        pages,
        merge_sheet_sides: file.merge_sheet_sides,
    })
}

impl BookManifest {
    pub fn n_pages(&self) -> usize {
        self.pages.len()
    }

    /// Looks up a page by its global 1-based index.
    pub fn page(&self, index: usize) -> Option<&PageRecord> {
        index.checked_sub(1).and_then(|i| self.pages.get(i))
    }

    pub fn to_json(&self) -> String {
        let file = ManifestFile {
            title: self.title.clone(),
            format: self.format.name().to_string(),
            leaves_per_gathering: self.leaves_per_gathering,
            gatherings: self
                .gatherings
                .iter()
                .map(|g| GatheringFile {
                    id: g.id.clone(),
                    pages: self.pages[g.page_span.start - 1..g.page_span.end - 1]
                        .iter()
                        .map(|p| PageFile {
                            index: p.index,
                            image: p.image.clone(),
                            gold_label: p.gold_label.clone(),
                        })
                        .collect(),
                })
                .collect(),
            merge_sheet_sides: self.merge_sheet_sides,
        };
        serde_json::to_string_pretty(&file).expect("manifest serialization is infallible")
    }
}

/// One sheet side of a gathering: the local pages it carries, in position order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideTable {
    pub sheet_index: usize,
    pub side: Side,
    pub pages: Vec<usize>,
}

/// Imposition table for a complete gathering of `leaves` leaves.
///
/// Folio gatherings of any even size are nested sheets, outermost first.
/// Quarto and octavo are supported only as single-sheet gatherings.
pub fn side_tables(format: Format, leaves: usize) -> Result<Vec<SideTable>> {
    let table = |sheet_index, side, pages: &[usize]| SideTable {
        sheet_index,
        side,
        pages: pages.to_vec(),
    };
    match (format, leaves) {
        (Format::Folio, l) if l >= 2 && l % 2 == 0 => {
            let last = 2 * l;
            Ok((0..l / 2)
                .flat_map(|s| {
                    [
                        table(s, Side::Outer, &[2 * s + 1, last - 2 * s]),
                        table(s, Side::Inner, &[last - 2 * s - 1, 2 * s + 2]),
                    ]
                })
                .collect())
        }
        (Format::Quarto, 4) => Ok(vec![
            table(0, Side::Outer, &[1, 4, 5, 8]),
            table(0, Side::Inner, &[7, 6, 3, 2]),
        ]),
        (Format::Octavo, 8) => Ok(vec![
            table(0, Side::Outer, &[1, 16, 13, 4, 5, 12, 9, 8]),
            table(0, Side::Inner, &[3, 14, 15, 2, 7, 10, 11, 6]),
        ]),
        _ => Err(Error::UnsupportedImposition {
            format: format.name().to_string(),
            leaves,
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SheetSideCoord {
    pub gathering_id: String,
    pub gathering: usize,
    pub sheet_index: usize,
    pub side: Side,
    pub position: usize,
}

/// Maps every page of every complete gathering to its sheet-side coordinate.
///
/// Partial gatherings have no conjugate leaves to impose and are left out.
pub fn impose(manifest: &BookManifest) -> Result<BTreeMap<usize, SheetSideCoord>> {
    let mut map = BTreeMap::new();
    for (ordinal, g) in manifest.gatherings.iter().enumerate() {
        if g.partial {
            continue;
        }
        let base = g.page_span.start - 1;
        for t in side_tables(manifest.format, g.leaves)? {
            for (position, &local) in t.pages.iter().enumerate() {
                map.insert(
                    base + local,
                    SheetSideCoord {
                        gathering_id: g.id.clone(),
                        gathering: ordinal,
                        sheet_index: t.sheet_index,
                        side: t.side,
                        position,
                    },
                );
            }
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitScheme {
    AllPages,
    RectoPages,
    SheetSides,
}

impl UnitScheme {
    pub const ALL: [UnitScheme; 3] = [UnitScheme::AllPages, UnitScheme::RectoPages, UnitScheme::SheetSides];

    pub fn name(self) -> &'static str {
        match self {
            UnitScheme::AllPages => "all_pages",
            UnitScheme::RectoPages => "recto_pages",
            UnitScheme::SheetSides => "sheet_sides",
        }
    }
}

impl fmt::Display for UnitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UnitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all_pages" => Ok(UnitScheme::AllPages),
            "recto_pages" => Ok(UnitScheme::RectoPages),
            "sheet_sides" => Ok(UnitScheme::SheetSides),
            other => Err(Error::InvalidArgument(format!("unknown unit scheme `{other}`"))),
        }
    }
}

/// A clustering unit before any titles are attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitLayout {
    pub id: String,
    pub gathering: usize,
    /// Global page index held by each slot, in position order.
    pub pages: Vec<usize>,
}

impl UnitLayout {
    pub fn first_page(&self) -> usize {
        self.pages.iter().copied().min().unwrap_or(0)
    }
}

pub fn page_unit_id(index: usize) -> String {
    format!("p{index}")
}

/// Builds the ordered list of clustering units for `scheme`.
///
/// Page schemes skip blank pages. Sheet sides keep blank pages as slots (the
/// kernel treats them as absent titles) and skip partial gatherings.
pub fn build_units(manifest: &BookManifest, scheme: UnitScheme) -> Result<Vec<UnitLayout>> {
    let page_unit = |p: &PageRecord| UnitLayout {
        id: page_unit_id(p.index),
        gathering: p.gathering,
        pages: vec![p.index],
    };
    match scheme {
        UnitScheme::AllPages => Ok(manifest.pages.iter().filter(|p| !p.is_blank()).map(page_unit).collect()),
        UnitScheme::RectoPages => Ok(manifest
            .pages
            .iter()
            .filter(|p| !p.is_blank() && p.index % 2 == 1)
            .map(page_unit)
            .collect()),
        UnitScheme::SheetSides => sheet_side_units(manifest),
    }
}

fn sheet_side_units(manifest: &BookManifest) -> Result<Vec<UnitLayout>> {
    let mut units = Vec::new();
    for (ordinal, g) in manifest.gatherings.iter().enumerate() {
        if g.partial {
            continue;
        }
        let base = g.page_span.start - 1;
        let tables = side_tables(manifest.format, g.leaves)?;
        if manifest.merge_sheet_sides {
            let mut sheets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for t in &tables {
                sheets
                    .entry(t.sheet_index)
                    .or_default()
                    .extend(t.pages.iter().map(|&p| base + p));
            }
            units.extend(sheets.into_iter().map(|(sheet, pages)| UnitLayout {
                id: format!("{}.s{}", g.key, sheet),
                gathering: ordinal,
                pages,
            }));
        } else {
            units.extend(tables.into_iter().map(|t| UnitLayout {
                id: format!("{}.s{}.{}", g.key, t.sheet_index, t.side.name()),
                gathering: ordinal,
                pages: t.pages.iter().map(|&p| base + p).collect(),
            }));
        }
    }
    if units.is_empty() {
        return Err(Error::InvalidArgument(
            "no complete gatherings to build sheet sides from".into(),
        ));
    }
    units.sort_by_key(UnitLayout::first_page);
    Ok(units)
}

/// Gold label of each unit: the most frequent gold label among its pages,
/// ties going to the label met first in slot order. `None` when no page of
/// the unit is annotated.
pub fn unit_gold_labels(manifest: &BookManifest, units: &[UnitLayout]) -> Vec<Option<String>> {
    units
        .iter()
        .map(|u| {
            let mut counts: Vec<(&str, usize)> = Vec::new();
            for label in u
                .pages
                .iter()
                .filter_map(|&i| manifest.page(i).and_then(|p| p.gold_label.as_deref()))
            {
                match counts.iter_mut().find(|(l, _)| *l == label) {
                    Some((_, c)) => *c += 1,
                    None => counts.push((label, 1)),
                }
            }
            let mut best: Option<(&str, usize)> = None;
            for (label, c) in counts {
                if best.is_none_or(|(_, bc)| c > bc) {
                    best = Some((label, c));
                }
            }
            best.map(|(l, _)| l.to_string())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest_json(format: &str, lpg: usize, gathering_sizes: &[usize]) -> String {
        let mut index = 1;
        let gatherings: Vec<String> = gathering_sizes
            .iter()
            .enumerate()
            .map(|(g, &n)| {
                let pages: Vec<String> = (0..n)
                    .map(|_| {
                        let s = format!(r#"{{"index": {index}, "image": "titles/p{index}.png", "gold_label": null}}"#);
                        index += 1;
                        s
                    })
                    .collect();
                format!(
                    r#"{{"id": "{}", "pages": [{}]}}"#,
                    (b'A' + g as u8) as char,
                    pages.join(",")
                )
            })
            .collect();
        format!(
            r#"{{"title": "t", "format": "{format}", "leaves_per_gathering": {lpg}, "gatherings": [{}]}}"#,
            gatherings.join(",")
        )
    }

    #[test]
    fn minimal_folio_parses() {
        let m = parse_manifest(manifest_json("folio", 4, &[8]).as_bytes()).unwrap();
        assert_eq!(m.pages.len(), 8);
        assert_eq!(m.gatherings[0].page_span, 1..9);
        assert!(!m.gatherings[0].partial);
    }

    #[test]
    fn seven_page_gathering_is_rejected() {
        let err = parse_manifest(manifest_json("folio", 4, &[7]).as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            Error::GatheringSizeMismatch {
                pages: 7,
                expected: 8,
                ..
            }
        ));
        assert!(err.to_string().contains("gathering size mismatch"));
    }

    #[test]
    fn short_gathering_before_the_end_is_rejected() {
        let err = parse_manifest(manifest_json("quarto", 4, &[6, 8]).as_bytes()).unwrap_err();
        assert!(matches!(err, Error::GatheringSizeMismatch { .. }));
    }

    #[test]
    fn partial_final_gathering_is_flagged() {
        let m = parse_manifest(manifest_json("quarto", 4, &[8, 4]).as_bytes()).unwrap();
        assert!(m.gatherings[1].partial);
        assert_eq!(build_units(&m, UnitScheme::AllPages).unwrap().len(), 12);
        assert_eq!(build_units(&m, UnitScheme::RectoPages).unwrap().len(), 6);
        assert_eq!(build_units(&m, UnitScheme::SheetSides).unwrap().len(), 2);
        assert_eq!(impose(&m).unwrap().len(), 8);
    }

    #[test]
    fn unknown_format_is_rejected() {
        let err = parse_manifest(manifest_json("sexto", 6, &[12]).as_bytes()).unwrap_err();
        assert!(matches!(err, Error::UnknownFormat(ref f) if f == "sexto"));
    }

    #[test]
    fn non_contiguous_indices_are_rejected() {
        let json = manifest_json("folio", 2, &[4]).replace(r#""index": 3"#, r#""index": 5"#);
        let err = parse_manifest(json.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::NonContiguousPages { expected: 3, found: 5 }));
    }

    #[test]
    fn malformed_json_is_rejected() {
        assert!(matches!(
            parse_manifest(b"{\"title\": 3}"),
            Err(Error::MalformedManifest(_))
        ));
    }

    #[test]
    fn octavo_leaf_count_must_fill_sheets() {
        let err = parse_manifest(manifest_json("octavo", 4, &[8]).as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MalformedManifest(_)));
    }

    fn side_sets(format: Format, leaves: usize) -> Vec<Vec<usize>> {
        side_tables(format, leaves)
            .unwrap()
            .into_iter()
            .map(|t| {
                let mut p = t.pages;
                p.sort();
                p
            })
            .collect()
    }

    #[test]
    fn folio_pairs_pages_across_the_fold() {
        assert_eq!(
            side_sets(Format::Folio, 4),
            vec![vec![1, 8], vec![2, 7], vec![3, 6], vec![4, 5]]
        );
        let t = side_tables(Format::Folio, 4).unwrap();
        assert_eq!((t[0].sheet_index, t[0].side), (0, Side::Outer));
        assert_eq!((t[3].sheet_index, t[3].side), (1, Side::Inner));
    }

    #[test]
    fn quarto_and_octavo_formes() {
        assert_eq!(side_sets(Format::Quarto, 4), vec![vec![1, 4, 5, 8], vec![2, 3, 6, 7]]);
        assert_eq!(
            side_sets(Format::Octavo, 8),
            vec![vec![1, 4, 5, 8, 9, 12, 13, 16], vec![2, 3, 6, 7, 10, 11, 14, 15]]
        );
    }

    #[test]
    fn positions_alternate_recto_and_verso() {
        for (format, leaves) in [
            (Format::Folio, 2),
            (Format::Folio, 4),
            (Format::Folio, 6),
            (Format::Quarto, 4),
            (Format::Octavo, 8),
        ] {
            for t in side_tables(format, leaves).unwrap() {
                assert_eq!(t.pages.len(), format.pages_per_sheet_side());
                for (k, p) in t.pages.iter().enumerate() {
                    assert_eq!(p % 2 == 1, k % 2 == 0, "{format} {leaves}: {:?}", t.pages);
                }
            }
        }
    }

    #[test]
    fn unsupported_tables_error() {
        assert!(matches!(
            side_tables(Format::Quarto, 8),
            Err(Error::UnsupportedImposition { .. })
        ));
        let m = parse_manifest(manifest_json("quarto", 8, &[16]).as_bytes()).unwrap();
        assert!(build_units(&m, UnitScheme::SheetSides).is_err());
        assert!(build_units(&m, UnitScheme::AllPages).is_ok());
    }

    #[test]
    fn folio_gathering_gives_four_two_slot_units() {
        let m = parse_manifest(manifest_json("folio", 4, &[8]).as_bytes()).unwrap();
        let units = build_units(&m, UnitScheme::SheetSides).unwrap();
        assert_eq!(units.len(), 4);
        assert!(units.iter().all(|u| u.pages.len() == 2));
        assert_eq!(units[0].id, "A.s0.outer");
        assert_eq!(units[1].pages, vec![7, 2]);
        let firsts: Vec<usize> = units.iter().map(UnitLayout::first_page).collect();
        assert_eq!(firsts, vec![1, 2, 3, 4]);
    }

    #[test]
    fn merged_sheets_hold_both_sides() {
        let json = manifest_json("folio", 4, &[8, 8]).replacen('{', r#"{"merge_sheet_sides": true, "#, 1);
        let m = parse_manifest(json.as_bytes()).unwrap();
        let units = build_units(&m, UnitScheme::SheetSides).unwrap();
        assert_eq!(units.len(), 4);
        assert_eq!(units[0].pages, vec![1, 8, 7, 2]);
        assert_eq!(units[0].id, "A.s0");
    }

    #[test]
    fn repeated_gathering_ids_get_unique_keys() {
        let json = manifest_json("folio", 2, &[4, 4]).replace(r#""id": "B""#, r#""id": "A""#);
        let m = parse_manifest(json.as_bytes()).unwrap();
        assert_eq!(m.gatherings[1].key, "A~2");
        let units = build_units(&m, UnitScheme::SheetSides).unwrap();
        let ids: std::collections::HashSet<_> = units.iter().map(|u| u.id.clone()).collect();
        assert_eq!(ids.len(), units.len());
    }

    #[test]
    fn blank_pages_are_slots_but_not_page_units() {
        let json = manifest_json("folio", 2, &[4]).replace(r#""image": "titles/p2.png""#, r#""image": null"#);
        let m = parse_manifest(json.as_bytes()).unwrap();
        assert_eq!(build_units(&m, UnitScheme::AllPages).unwrap().len(), 3);
        let sides = build_units(&m, UnitScheme::SheetSides).unwrap();
        assert_eq!(sides.iter().map(|u| u.pages.len()).sum::<usize>(), 4);
    }

    #[test]
    fn unit_gold_is_the_majority_page_label() {
        let json = manifest_json("folio", 2, &[4])
            .replace(r#"p1.png", "gold_label": null"#, r#"p1.png", "gold_label": "x""#)
            .replace(r#"p4.png", "gold_label": null"#, r#"p4.png", "gold_label": "y""#)
            .replace(r#"p2.png", "gold_label": null"#, r#"p2.png", "gold_label": "y""#);
        let m = parse_manifest(json.as_bytes()).unwrap();
        let units = build_units(&m, UnitScheme::SheetSides).unwrap();
        // units: [1,4] and [3,2]
        let gold = unit_gold_labels(&m, &units);
        assert_eq!(gold, vec![Some("x".to_string()), Some("y".to_string())]);
        let pages = build_units(&m, UnitScheme::AllPages).unwrap();
        assert_eq!(unit_gold_labels(&m, &pages)[2], None);
    }
}
