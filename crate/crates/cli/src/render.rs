//! Heatmap rendering of slab CSVs and field snapshots.
//!
//! Purely presentational: a log-scaled color map over the horizontal plane,
//! north (+y) up, one cell per pixel unless scaled, with an optional source
//! overlay drawn in red.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use image::{Rgb, RgbImage};

use mesasim_core::grid::read_snapshot;
use mesasim_core::scenarios::Deployment;

#[derive(Args)]
pub struct RenderArgs {
    /// Slab CSV (`x,y,mean_concentration`) or binary snapshot (`.bin`).
    #[arg(long)]
    input: PathBuf,
    /// Output PNG path.
    #[arg(long)]
    out: PathBuf,
    /// Pixels per cell.
    #[arg(long, default_value_t = 1)]
    scale: u32,
    /// Slab center height used when the input is a snapshot, m.
    #[arg(long, default_value_t = 2.0)]
    z_center: f64,
    /// Slab half-width used when the input is a snapshot, m.
    #[arg(long, default_value_t = 0.5)]
    half_width: f64,
    /// Deployment CSV whose source cells are marked in red.
    #[arg(long)]
    deployment: Option<PathBuf>,
    /// Lower end of the color range (defaults to the smallest positive value).
    #[arg(long)]
    min: Option<f64>,
    /// Upper end of the color range (defaults to the largest value).
    #[arg(long)]
    max: Option<f64>,
}

struct SlabData {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// `values[i * ys.len() + j]`
    values: Vec<f64>,
}

pub fn cmd_render(args: RenderArgs) -> Result<()> {
    if args.scale == 0 {
        bail!("--scale must be at least 1");
    }
    let slab = match args.input.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_slab_csv(&args.input)?,
        Some("bin") => slab_from_snapshot(&args.input, args.z_center, args.half_width)?,
        other => bail!("unsupported input extension {other:?}; expected .csv or .bin"),
    };

    let (nx, ny) = (slab.xs.len(), slab.ys.len());
    let positive_min = slab
        .values
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let vmax = args
        .max
        .unwrap_or_else(|| slab.values.iter().copied().fold(0.0, f64::max));
    let vmin = args.min.unwrap_or(positive_min);
    let usable_range = vmin.is_finite() && vmax > vmin && vmax > 0.0;

    let mut img = RgbImage::new(nx as u32 * args.scale, ny as u32 * args.scale);
    for (px, py, pixel) in img.enumerate_pixels_mut() {
        let i = (px / args.scale) as usize;
        // +y at the top of the image
        let j = ny - 1 - (py / args.scale) as usize;
        let v = slab.values[i * ny + j];
        let normalized = if !usable_range || v <= 0.0 {
            0.0
        } else {
            ((v.log10() - vmin.log10()) / (vmax.log10() - vmin.log10())).clamp(0.0, 1.0)
        };
        *pixel = colormap(normalized);
    }

    if let Some(path) = &args.deployment {
        let deployment = Deployment::<f64>::from_csv_path(path)
            .with_context(|| format!("reading deployment {}", path.display()))?;
        for source in deployment.sources() {
            let i = nearest(&slab.xs, source.position[0]);
            let j = nearest(&slab.ys, source.position[1]);
            mark_cell(&mut img, i, j, ny, args.scale);
        }
    }

    img.save(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "rendered {} ({}x{} cells) to {}",
        args.input.display(),
        nx,
        ny,
        args.out.display()
    );
    Ok(())
}

fn read_slab_csv(path: &std::path::Path) -> Result<SlabData> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() < 3 || &headers[0] != "x" || &headers[1] != "y" {
        bail!("slab CSV must have header `x,y,mean_concentration`, got {headers:?}");
    }
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        let x: f64 = record[0].parse().context("bad x")?;
        let y: f64 = record[1].parse().context("bad y")?;
        let v: f64 = record[2].parse().context("bad value")?;
        if xs.last() != Some(&x) && !xs.contains(&x) {
            xs.push(x);
        }
        if xs.len() == 1 {
            ys.push(y);
        }
        values.push(v);
    }
    if xs.is_empty() || ys.is_empty() || values.len() != xs.len() * ys.len() {
        bail!(
            "slab CSV is not a full (i, j) scan: {} x values, {} y values, {} rows",
            xs.len(),
            ys.len(),
            values.len()
        );
    }
    Ok(SlabData { xs, ys, values })
}

fn slab_from_snapshot(path: &std::path::Path, z_center: f64, half_width: f64) -> Result<SlabData> {
    let field = read_snapshot(path)?;
    let slab = field.slab_mean(z_center, half_width)?;
    let grid = field.grid();
    Ok(SlabData {
        xs: (0..grid.nx()).map(|i| grid.x(i)).collect(),
        ys: (0..grid.ny()).map(|j| grid.y(j)).collect(),
        values: slab.values().to_vec(),
    })
}

fn nearest(coords: &[f64], target: f64) -> usize {
    let mut best = 0;
    let mut best_distance = f64::INFINITY;
    for (idx, &c) in coords.iter().enumerate() {
        let distance = (c - target).abs();
        if distance < best_distance {
            best_distance = distance;
            best = idx;
        }
    }
    best
}

fn mark_cell(img: &mut RgbImage, i: usize, j: usize, ny: usize, scale: u32) {
    let red = Rgb([220u8, 30, 30]);
    let py0 = (ny - 1 - j) as u32 * scale;
    let px0 = i as u32 * scale;
    for dy in 0..scale {
        for dx in 0..scale {
            // outline only, so large sources stay readable when scaled up
            let on_outline = dy == 0 || dx == 0 || dy == scale - 1 || dx == scale - 1;
            if on_outline && px0 + dx < img.width() && py0 + dy < img.height() {
                img.put_pixel(px0 + dx, py0 + dy, red);
            }
        }
    }
}

/// Dark-blue to yellow gradient over [0, 1].
fn colormap(t: f64) -> Rgb<u8> {
    const STOPS: [[f64; 3]; 6] = [
        [0.267, 0.005, 0.329],
        [0.283, 0.141, 0.458],
        [0.254, 0.265, 0.530],
        [0.127, 0.566, 0.551],
        [0.369, 0.789, 0.383],
        [0.993, 0.906, 0.144],
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let low = t.floor() as usize;
    let high = (low + 1).min(STOPS.len() - 1);
    let frac = t - low as f64;
    let channel = |c: usize| -> u8 {
        ((STOPS[low][c] + (STOPS[high][c] - STOPS[low][c]) * frac) * 255.0).round() as u8
    };
    Rgb([channel(0), channel(1), channel(2)])
}
