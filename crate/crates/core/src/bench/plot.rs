//! Minimal deterministic PNG rendering for study results: a bar chart for
//! R²-success percentages and a three-panel heatmap (prediction, truth,
//! absolute error) for PDE solutions. Layout is fixed so identical inputs
//! produce identical bytes; labels ship in a sidecar text file written by
//! the caller.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};

const BAR_W: u32 = 64;
const BAR_GAP: u32 = 24;
const CHART_H: u32 = 320;
const MARGIN: u32 = 20;
const CELL: u32 = 6;
const PANEL_GAP: u32 = 12;

fn save(img: &RgbImage, path: &Path) -> Result<()> {
    img.save(path)
        .map_err(|e| Error::Msg(format!("cannot write {}: {e}", path.display())))
}

/// Perceptually ordered dark-to-light gradient over v ∈ [0, 1].
fn colormap(v: f64) -> Rgb<u8> {
    let v = v.clamp(0.0, 1.0);
    let r = (255.0 * v.powf(0.7)) as u8;
    let g = (255.0 * (0.2 + 0.75 * v)) as u8;
    let b = (255.0 * (0.55 + 0.15 * v - 0.45 * v * v)) as u8;
    Rgb([r, g, b])
}

/// Vertical bars on a fixed [0, scale] axis, one per value, left to right.
pub fn save_bar_chart(path: &Path, values: &[f64], scale: f64) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Empty(1));
    }
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let w = 2 * MARGIN + values.len() as u32 * (BAR_W + BAR_GAP);
    let h = CHART_H + 2 * MARGIN;
    let mut img = RgbImage::from_pixel(w, h, Rgb([255, 255, 255]));
    // Baseline.
    for x in MARGIN..w - MARGIN {
        img.put_pixel(x, h - MARGIN, Rgb([0, 0, 0]));
    }
    for (i, &v) in values.iter().enumerate() {
        let frac = (v / scale).clamp(0.0, 1.0);
        let bar_h = (frac * CHART_H as f64) as u32;
        let x0 = MARGIN + BAR_GAP / 2 + i as u32 * (BAR_W + BAR_GAP);
        let color = colormap(0.25 + 0.5 * i as f64 / values.len().max(1) as f64);
        for x in x0..x0 + BAR_W {
            for y in (h - MARGIN - bar_h)..(h - MARGIN) {
                img.put_pixel(x, y, color);
            }
        }
    }
    save(&img, path)
}

/// Three `nx`×`ny` panels side by side: prediction, analytical truth, and
/// absolute error (own scale). Values are row-major with x varying
/// fastest. Returns the maximum absolute error for consistency checks.
pub fn save_heatmap_triptych(
    path: &Path,
    pred: &[f64],
    truth: &[f64],
    nx: usize,
    ny: usize,
) -> Result<f64> {
    if pred.len() != nx * ny || truth.len() != nx * ny || nx == 0 || ny == 0 {
        return Err(Error::Empty(nx * ny));
    }
    let err: Vec<f64> = pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).collect();
    let lo = pred
        .iter()
        .chain(truth)
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let hi = pred
        .iter()
        .chain(truth)
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-300);
    let emax = err.iter().cloned().fold(0.0, f64::max);
    let escale = emax.max(1e-300);

    let pw = nx as u32 * CELL;
    let ph = ny as u32 * CELL;
    let w = 2 * MARGIN + 3 * pw + 2 * PANEL_GAP;
    let h = 2 * MARGIN + ph;
    let mut img = RgbImage::from_pixel(w, h, Rgb([255, 255, 255]));
    let panels: [(&[f64], f64, f64); 3] = [(pred, lo, span), (truth, lo, span), (&err, 0.0, escale)];
    for (p, (vals, base, scale)) in panels.iter().enumerate() {
        let x_off = MARGIN + p as u32 * (pw + PANEL_GAP);
        for j in 0..ny {
            for i in 0..nx {
                let v = (vals[j * nx + i] - base) / scale;
                let color = colormap(v);
                for dy in 0..CELL {
                    for dx in 0..CELL {
                        // y axis points up: row 0 is drawn at the bottom.
                        let y = MARGIN + (ny as u32 - 1 - j as u32) * CELL + dy;
                        img.put_pixel(x_off + i as u32 * CELL + dx, y, color);
                    }
                }
            }
        }
    }
    save(&img, path)?;
    Ok(emax)
}
