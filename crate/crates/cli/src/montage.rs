//! Grids of title crops: one row per unit, one column per forme position.

use std::path::Path;

use image::{GrayImage, Luma};

use forme_core::imposition::{BookManifest, UnitLayout};
use forme_core::{Error, Result};

const GAP: u32 = 2;
const PAPER: Luma<u8> = Luma([255]);
const RULE: Luma<u8> = Luma([160]);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MontageLayout {
    pub rows: usize,
    pub cols: usize,
    pub cell_width: u32,
    pub cell_height: u32,
}

impl MontageLayout {
    pub fn image_size(&self) -> (u32, u32) {
        let span = |cells: usize, cell: u32| cells as u32 * cell + (cells as u32 + 1) * GAP;
        (span(self.cols, self.cell_width), span(self.rows, self.cell_height))
    }
}

fn load_gray(path: &Path, page_index: usize) -> Result<GrayImage> {
    image::ImageReader::open(path)
        .and_then(|r| r.with_guessed_format())
        .map_err(|e| e.to_string())
        .and_then(|r| r.decode().map_err(|e| e.to_string()))
        .map(|img| img.to_luma8())
        .map_err(|message| Error::PageImage {
            page_index,
            path: path.to_path_buf(),
            message,
        })
}

/// Builds the grid for `units`. Crops are placed top-left in equal cells
/// sized to the largest crop; blank pages leave their cell empty.
pub fn montage(manifest: &BookManifest, units: &[UnitLayout], base_dir: &Path) -> Result<(GrayImage, MontageLayout)> {
    let cols = units.iter().map(|u| u.pages.len()).max().unwrap_or(0);
    let mut cells: Vec<Vec<Option<GrayImage>>> = Vec::with_capacity(units.len());
    for u in units {
        let row = u
            .pages
            .iter()
            .map(|&p| {
                let page = manifest
                    .page(p)
                    .ok_or_else(|| Error::InvalidArgument(format!("page {p} not in manifest")))?;
                page.image
                    .as_deref()
                    .map(|rel| load_gray(&base_dir.join(rel), p))
                    .transpose()
            })
            .collect::<Result<Vec<_>>>()?;
        cells.push(row);
    }
    let crops = || cells.iter().flatten().flatten();
    let layout = MontageLayout {
        rows: units.len(),
        cols,
        cell_width: crops().map(GrayImage::width).max().unwrap_or(1),
        cell_height: crops().map(GrayImage::height).max().unwrap_or(1),
    };
    let (w, h) = layout.image_size();
    let mut out = GrayImage::from_pixel(w, h, RULE);
    for (r, row) in cells.iter().enumerate() {
        for c in 0..cols {
            let x0 = GAP + c as u32 * (layout.cell_width + GAP);
            let y0 = GAP + r as u32 * (layout.cell_height + GAP);
            for y in 0..layout.cell_height {
                for x in 0..layout.cell_width {
                    out.put_pixel(x0 + x, y0 + y, PAPER);
                }
            }
            if let Some(Some(crop)) = row.get(c) {
                image::imageops::replace(&mut out, crop, i64::from(x0), i64::from(y0));
            }
        }
    }
    Ok((out, layout))
}
