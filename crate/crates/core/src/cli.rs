//! The `wlia` commands as library functions. Each command reads its inputs,
//! writes its outputs into an output directory, and reports the files it
//! wrote. Outputs are byte-identical for identical inputs and seeds.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{histogram_entropy, logrank_test, median_groups, roi_sample, EntropyGroup, SurvivalRecord};
use crate::bench::{bench_noise, derive_seed, BenchSettings, Method};
use crate::error::{Error, Result};
use crate::histogram::DirectionHistogram;
use crate::hog::{block_normalize, hog_image};
use crate::image::{GrayImage, SampleDepth};
use crate::io::{encode_pgm, load_image};
use crate::plot::{rose_grid_svg, rose_svg, AngleReference, RosePanel};
use crate::synth::step_patch;
use crate::two_color::{edge_map, otsu_threshold, smooth_image, threshold_map};
use crate::whog::{whog_image, Whog, PatchHistogram};

/// Version stamped into every JSON report and run manifest.
pub const SCHEMA_VERSION: u32 = 1;

/// Default noise levels for the benchmark.
pub const DEFAULT_SIGMAS: [f64; 5] = [0.0, 0.01, 0.05, 0.1, 0.15];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Otsu,
    Value(f64),
    Disabled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub patch_side: usize,
    pub stride: usize,
    pub bins: usize,
    pub sigmas: Vec<f64>,
    pub seed: u64,
    /// Patches sampled per region of interest; required by `entropy`.
    pub count: Option<usize>,
    pub two_color_side: usize,
    pub two_color_stride: usize,
    pub trials: usize,
    pub threshold: Threshold,
    /// Rescale loaded benchmark images to `[0, 1]` before adding noise.
    pub rescale: bool,
    /// Also emit a grid of per-patch rose plots.
    pub per_patch_plots: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            patch_side: 8,
            stride: 8,
            bins: 9,
            sigmas: DEFAULT_SIGMAS.to_vec(),
            seed: 0,
            count: None,
            two_color_side: 3,
            two_color_stride: 2,
            trials: 100,
            threshold: Threshold::Otsu,
            rescale: true,
            per_patch_plots: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("patch", self.patch_side),
            ("stride", self.stride),
            ("bins", self.bins),
            ("two-color patch", self.two_color_side),
            ("two-color stride", self.two_color_stride),
            ("trials", self.trials),
        ];
        for (name, v) in sizes {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        if self.count == Some(0) {
            return Err(Error::invalid("count must be positive"));
        }
        if self.sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::invalid("sigmas must be non-negative"));
        }
        if self.sigmas.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("sigmas must be ascending"));
        }
        if let Threshold::Value(t) = self.threshold {
            if !t.is_finite() {
                return Err(Error::invalid("threshold must be finite"));
            }
        }
        Ok(())
    }
}

/// Files written by a command, plus any per-row failures (entropy only).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    pub row_errors: Vec<RowError>,
}

impl CommandOutput {
    pub fn is_partial(&self) -> bool {
        !self.row_errors.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowError {
    pub row: usize,
    pub sample_id: String,
    pub message: String,
}

/// Formats a float with 9 significant digits, shortest form.
pub fn fmt_float(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    rounded.to_string()
}

struct OutDir {
    dir: PathBuf,
    files: Vec<PathBuf>,
    manifest: Vec<serde_json::Value>,
}

impl OutDir {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            manifest: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, kind: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        self.manifest.push(json!({ "file": name, "kind": kind }));
        self.files.push(path);
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, "json", text)
    }

    fn finish(mut self, command: &str) -> Result<Vec<PathBuf>> {
        let manifest = json!({
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "outputs": self.manifest,
        });
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text)?;
        self.files.push(path);
        Ok(self.files)
    }
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn bin_header(prefix: &[&str], name: &str, n: usize) -> Vec<String> {
    prefix
        .iter()
        .map(|s| s.to_string())
        .chain((0..n).map(|k| format!("{name}_{k}")))
        .collect()
}

fn histogram_rows(cells: &[PatchHistogram]) -> impl Iterator<Item = Vec<String>> + '_ {
    cells.iter().map(|p| {
        [p.origin.0.to_string(), p.origin.1.to_string()]
            .into_iter()
            .chain(p.histogram.bins().iter().map(|&b| fmt_float(b)))
            .collect()
    })
}

fn pooled_of(cells: &[PatchHistogram], n_bins: usize) -> Result<DirectionHistogram> {
    if cells.is_empty() {
        return DirectionHistogram::zeros(n_bins);
    }
    DirectionHistogram::pooled(cells.iter().map(|p| &p.histogram))
}

fn per_patch_panels(cells: &[PatchHistogram], reference: AngleReference) -> Vec<RosePanel> {
    cells
        .iter()
        .map(|p| RosePanel {
            title: format!("({}, {})", p.origin.0, p.origin.1),
            histogram: p.histogram.clone(),
            reference,
        })
        .collect()
}

fn tiling_columns(cells: &[PatchHistogram]) -> usize {
    let first_row = cells.first().map_or(0, |p| p.origin.0);
    cells.iter().filter(|p| p.origin.0 == first_row).count().max(1)
}

/// Per-patch WHOG histograms (CSV), the pooled histogram (JSON) and a rose
/// plot of the pooled histogram (SVG).
pub fn cmd_whog(config: &RunConfig, input: &Path, out: &Path) -> Result<CommandOutput> {
    config.validate()?;
    let image = load_image(input)?;
    let cells = whog_image(&image, config.patch_side, config.stride, config.bins)?;
    let pooled = pooled_of(&cells, config.bins)?;

    let mut dir = OutDir::create(out)?;
    dir.write(
        "whog_patches.csv",
        "csv",
        csv_bytes(&bin_header(&["row", "col"], "bin", config.bins), histogram_rows(&cells))?,
    )?;
    dir.write_json(
        "whog_pooled.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "method": "whog",
            "patch_side": config.patch_side,
            "stride": config.stride,
            "bins": config.bins,
            "patch_count": cells.len(),
            "pooled": pooled.bins(),
            "entropy_bits": histogram_entropy(&pooled).ok(),
        }),
    )?;
    dir.write(
        "whog_rose.svg",
        "svg",
        rose_svg(&pooled, AngleReference::RowAxis, "WHOG (pooled)"),
    )?;
    if config.per_patch_plots {
        dir.write(
            "whog_rose_patches.svg",
            "svg",
            rose_grid_svg(&per_patch_panels(&cells, AngleReference::RowAxis), tiling_columns(&cells)),
        )?;
    }
    Ok(CommandOutput {
        files: dir.finish("whog")?,
        row_errors: Vec::new(),
    })
}

/// Raw per-patch HOG histograms, 2x2 block-normalized features when the
/// tiling has at least one full block, pooled histograms and a rose plot.
pub fn cmd_hog(config: &RunConfig, input: &Path, out: &Path) -> Result<CommandOutput> {
    config.validate()?;
    let image = load_image(input)?;
    let grid = hog_image(&image, config.patch_side, config.stride, config.bins)?;
    let pooled = pooled_of(&grid.cells, config.bins)?;

    let mut dir = OutDir::create(out)?;
    dir.write(
        "hog_patches.csv",
        "csv",
        csv_bytes(&bin_header(&["row", "col"], "bin", config.bins), histogram_rows(&grid.cells))?,
    )?;

    let mut pooled_normalized = None;
    if grid.rows >= 2 && grid.cols >= 2 {
        let hists: Vec<DirectionHistogram> = grid.cells.iter().map(|c| c.histogram.clone()).collect();
        let blocks = block_normalize(&hists, grid.rows, grid.cols)?;
        let mut folded = vec![0.0; config.bins];
        for b in &blocks {
            for (k, v) in b.values.iter().enumerate() {
                folded[k % config.bins] += v;
            }
        }
        pooled_normalized = Some(folded);
        let rows = blocks.iter().map(|b| {
            [b.block.0.to_string(), b.block.1.to_string()]
                .into_iter()
                .chain(b.values.iter().map(|&v| fmt_float(v)))
                .collect()
        });
        dir.write(
            "hog_blocks.csv",
            "csv",
            csv_bytes(&bin_header(&["block_row", "block_col"], "v", 4 * config.bins), rows)?,
        )?;
    }

    dir.write_json(
        "hog_pooled.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "method": "hog",
            "patch_side": config.patch_side,
            "stride": config.stride,
            "bins": config.bins,
            "patch_count": grid.cells.len(),
            "pooled": pooled.bins(),
            "pooled_block_normalized": pooled_normalized,
            "entropy_bits": histogram_entropy(&pooled).ok(),
        }),
    )?;
    dir.write(
        "hog_rose.svg",
        "svg",
        rose_svg(&pooled, AngleReference::ColumnAxis, "HOG (pooled)"),
    )?;
    if config.per_patch_plots {
        dir.write(
            "hog_rose_patches.svg",
            "svg",
            rose_grid_svg(
                &per_patch_panels(&grid.cells, AngleReference::ColumnAxis),
                tiling_columns(&grid.cells),
            ),
        )?;
    }
    Ok(CommandOutput {
        files: dir.finish("hog")?,
        row_errors: Vec::new(),
    })
}

/// Noise benchmark. Without an input image the built-in step-edge patch
/// (levels 0 and 1) is used.
pub fn cmd_bench_noise(config: &RunConfig, input: Option<&Path>, out: &Path) -> Result<CommandOutput> {
    config.validate()?;
    let image = match input {
        Some(path) => {
            let img = load_image(path)?;
            if config.rescale {
                img.rescaled_unit()
            } else {
                img
            }
        }
        None => step_patch(config.patch_side),
    };
    let settings = BenchSettings {
        side: config.patch_side,
        stride: config.stride,
        n_bins: config.bins,
        trials: config.trials,
        seed: config.seed,
    };
    let rows = bench_noise(&image, &config.sigmas, &settings)?;

    let mut dir = OutDir::create(out)?;
    let header: Vec<String> = ["sigma", "method", "trials", "stability", "mean_entropy"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let csv_rows = rows.iter().map(|r| {
        vec![
            fmt_float(r.sigma),
            r.method.name().to_string(),
            r.trials.to_string(),
            fmt_float(r.stability),
            r.mean_entropy.map(fmt_float).unwrap_or_default(),
        ]
    });
    dir.write("bench_noise.csv", "csv", csv_bytes(&header, csv_rows)?)?;
    dir.write_json(
        "bench_noise.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "source": input.map_or("synthetic-step".to_string(), |p| p.display().to_string()),
            "patch_side": config.patch_side,
            "stride": config.stride,
            "bins": config.bins,
            "trials": config.trials,
            "seed": config.seed,
            "rescaled": input.is_some() && config.rescale,
            "rows": rows,
        }),
    )?;

    // One row of panels per method, one column per sigma.
    let mut panels = Vec::new();
    for method in Method::ALL {
        for r in rows.iter().filter(|r| r.method == method) {
            panels.push(RosePanel {
                title: format!("{} sigma={}", method.name().to_uppercase(), fmt_float(r.sigma)),
                histogram: DirectionHistogram::from_bins(r.mean_histogram.clone())?,
                reference: match method {
                    Method::Whog => AngleReference::RowAxis,
                    Method::Hog => AngleReference::ColumnAxis,
                },
            });
        }
    }
    dir.write("bench_noise.svg", "svg", rose_grid_svg(&panels, config.sigmas.len()))?;
    Ok(CommandOutput {
        files: dir.finish("bench-noise")?,
        row_errors: Vec::new(),
    })
}

/// Writes `image` as PGM at `maxval`, rounding to the nearest level.
fn pgm_with_depth(image: &GrayImage, depth: SampleDepth, maxval: u16) -> Vec<u8> {
    encode_pgm(&image.clone().with_depth(depth, maxval))
}

pub fn cmd_smooth(config: &RunConfig, input: &Path, out: &Path) -> Result<CommandOutput> {
    config.validate()?;
    let image = load_image(input)?;
    let smoothed = smooth_image(&image, config.two_color_side, config.two_color_stride)?;
    let mut dir = OutDir::create(out)?;
    dir.write(
        "smoothed.pgm",
        "pgm",
        pgm_with_depth(&smoothed, image.depth(), image.maxval()),
    )?;
    Ok(CommandOutput {
        files: dir.finish("smooth")?,
        row_errors: Vec::new(),
    })
}

/// Edge-strength map as 16-bit PGM and, unless disabled, the thresholded
/// binary map (0/255).
pub fn cmd_edges(config: &RunConfig, input: &Path, out: &Path) -> Result<CommandOutput> {
    config.validate()?;
    let image = load_image(input)?;
    let map = edge_map(&image, config.two_color_side, config.two_color_stride)?;
    let mut dir = OutDir::create(out)?;
    dir.write(
        "edges.pgm",
        "pgm",
        pgm_with_depth(&map, SampleDepth::Sixteen, u16::MAX),
    )?;

    let threshold = match config.threshold {
        Threshold::Otsu => Some(("otsu", otsu_threshold(map.pixels()))),
        Threshold::Value(t) => Some(("fixed", t)),
        Threshold::Disabled => None,
    };
    let mut edge_pixels = None;
    if let Some((_, t)) = threshold {
        let binary = threshold_map(&map, t);
        edge_pixels = Some(binary.pixels().iter().filter(|&&v| v > 0.0).count());
        let scaled = GrayImage::new(
            binary.width(),
            binary.height(),
            binary.pixels().iter().map(|v| v * 255.0).collect(),
        )?;
        dir.write(
            "edges_binary.pgm",
            "pgm",
            pgm_with_depth(&scaled, SampleDepth::Eight, 255),
        )?;
    }
    dir.write_json(
        "edges.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "patch_side": config.two_color_side,
            "stride": config.two_color_stride,
            "threshold_method": threshold.map(|t| t.0),
            "threshold": threshold.map(|t| t.1),
            "edge_pixels": edge_pixels,
            "max_contrast": map.pixels().iter().cloned().fold(0.0, f64::max),
        }),
    )?;
    Ok(CommandOutput {
        files: dir.finish("edges")?,
        row_errors: Vec::new(),
    })
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    sample_id: String,
    image: String,
    mask: String,
}

#[derive(Debug, Deserialize)]
struct SurvivalRow {
    sample_id: String,
    time: f64,
    event: String,
}

fn parse_event(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Some(true),
        "0" | "false" | "no" => Some(false),
        _ => None,
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Directionality entropy per manifest row and, with survival data, the
/// median split and log-rank test. Rows that fail are reported and skipped;
/// the command fails only if every row fails.
pub fn cmd_entropy(
    config: &RunConfig,
    manifest: &Path,
    survival: Option<&Path>,
    out: &Path,
) -> Result<CommandOutput> {
    config.validate()?;
    let count = config
        .count
        .ok_or_else(|| Error::invalid("entropy needs --count (patches per sample)"))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut reader = csv::Reader::from_path(manifest)?;
    let rows: Vec<ManifestRow> = reader.deserialize().collect::<std::result::Result<_, _>>()?;
    let whog = Whog::new(config.patch_side, config.bins)?;

    let results: Vec<std::result::Result<(String, f64), RowError>> = rows
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let fail = |e: Error| RowError {
                row: i + 1,
                sample_id: row.sample_id.clone(),
                message: e.to_string(),
            };
            let image = load_image(resolve(base, &row.image)).map_err(fail)?;
            let mask = load_image(resolve(base, &row.mask)).map_err(fail)?;
            let sample = roi_sample(
                row.sample_id.clone(),
                &image,
                &mask,
                count,
                &whog,
                derive_seed(config.seed, i as u64, 0),
            )
            .map_err(fail)?;
            Ok((sample.sample_id, sample.entropy))
        })
        .collect();

    let mut errors = Vec::new();
    let mut samples: Vec<(String, f64)> = Vec::new();
    for r in results {
        match r {
            Ok(s) => {
                if samples.iter().any(|(id, _)| *id == s.0) {
                    errors.push(RowError {
                        row: 0,
                        sample_id: s.0.clone(),
                        message: "duplicate sample_id in manifest".into(),
                    });
                } else {
                    samples.push(s);
                }
            }
            Err(e) => errors.push(e),
        }
    }
    if samples.is_empty() {
        return Err(Error::Batch(format!(
            "all {} manifest rows failed; first error: {}",
            rows.len(),
            errors.first().map_or("empty manifest".to_string(), |e| e.message.clone())
        )));
    }

    let mut groups: BTreeMap<String, EntropyGroup> = BTreeMap::new();
    let mut logrank_json = None;
    if let Some(path) = survival {
        let mut reader = csv::Reader::from_path(path)?;
        let mut records = Vec::new();
        for (i, row) in reader.deserialize::<SurvivalRow>().enumerate() {
            let row = match row {
                Ok(r) => r,
                Err(e) => {
                    errors.push(RowError {
                        row: i + 1,
                        sample_id: String::new(),
                        message: format!("survival: {e}"),
                    });
                    continue;
                }
            };
            let err = |message: String| RowError {
                row: i + 1,
                sample_id: row.sample_id.clone(),
                message,
            };
            let Some(event) = parse_event(&row.event) else {
                errors.push(err(format!("survival: unrecognized event flag {:?}", row.event)));
                continue;
            };
            if row.time.is_nan() || row.time <= 0.0 {
                errors.push(err("survival: time must be positive".into()));
                continue;
            }
            match samples.iter().find(|(id, _)| *id == row.sample_id) {
                Some((_, entropy)) => records.push((row.sample_id.clone(), row.time, event, *entropy)),
                None => errors.push(err("survival: sample_id has no entropy result".into())),
            }
        }
        for (id, _) in &samples {
            if !records.iter().any(|r| &r.0 == id) {
                errors.push(RowError {
                    row: 0,
                    sample_id: id.clone(),
                    message: "no survival record for sample".into(),
                });
            }
        }

        let entropies: Vec<f64> = records.iter().map(|r| r.3).collect();
        let outcome = median_groups(&entropies).and_then(|labels| {
            let surv: Vec<SurvivalRecord<EntropyGroup>> = records
                .iter()
                .zip(&labels)
                .map(|(r, &g)| SurvivalRecord {
                    sample_id: r.0.clone(),
                    time: r.1,
                    event: r.2,
                    group: g,
                })
                .collect();
            for s in &surv {
                groups.insert(s.sample_id.clone(), s.group);
            }
            let high = labels.iter().filter(|&&g| g == EntropyGroup::High).count();
            let res = logrank_test(&surv)?;
            Ok((res, high, labels.len() - high))
        });
        logrank_json = Some(match outcome {
            Ok((res, high, low)) => json!({
                "schema_version": SCHEMA_VERSION,
                "chi_square": res.chi_square,
                "p_value": res.p_value,
                "group_sizes": { "high": high, "low": low },
            }),
            Err(e) => json!({
                "schema_version": SCHEMA_VERSION,
                "chi_square": null,
                "p_value": null,
                "error": e.to_string(),
            }),
        });
    }

    let mut dir = OutDir::create(out)?;
    let mut header = vec!["sample_id".to_string(), "entropy".to_string()];
    if survival.is_some() {
        header.push("group".to_string());
    }
    let csv_rows = samples.iter().map(|(id, e)| {
        let mut row = vec![id.clone(), fmt_float(*e)];
        if survival.is_some() {
            row.push(groups.get(id).map_or(String::new(), |g| g.as_str().to_string()));
        }
        row
    });
    dir.write("entropy.csv", "csv", csv_bytes(&header, csv_rows)?)?;
    if let Some(lr) = &logrank_json {
        dir.write_json("logrank.json", lr)?;
    }
    dir.write_json(
        "entropy_report.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "patch_side": config.patch_side,
            "bins": config.bins,
            "count": count,
            "seed": config.seed,
            "samples_ok": samples.len(),
            "errors": errors,
        }),
    )?;
    Ok(CommandOutput {
        files: dir.finish("entropy")?,
        row_errors: errors,
    })
}
