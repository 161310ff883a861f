//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::{exhaustive_two_color, lp_oracle, noisy_step_patch, random_density, random_patch, rel_close, rng};
use rand::Rng;
use tempfile::TempDir;
use wlia::analysis::{logrank_test, SurvivalRecord};
use wlia::bench::{bench_noise, BenchSettings, Method};
use wlia::cli::{cmd_entropy, cmd_whog, RunConfig};
use wlia::image::SampleDepth;
use wlia::io::save_image;
use wlia::synth::{isotropic_texture, noisy, step_edge, step_patch, stripes, survival_time};
use wlia::two_color::{edge_map, otsu_threshold, score_edges, smooth_image, threshold_map, TwoColorFitter};
use wlia::whog::Whog;
use wlia::{build_grid_cost, solve_transport, DensityVector, GrayImage, PatchGrid};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration, outcome: Outcome) -> Outcome {
    let timing = format!("{:.2}s of {}s", elapsed.as_secs_f64(), limit.as_secs());
    match outcome {
        Ok(d) if elapsed <= limit => Ok(format!("{d}; {timing}")),
        Ok(d) => Err(format!("{d}; too slow, {timing}")),
        Err(d) => Err(format!("{d}; {timing}")),
    }
}

fn solver_matches_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 0..200u64 {
        let side = if k % 2 == 0 { 2 } else { 3 };
        let mut r = rng(k);
        let total = r.gen_range(0.1..10.0);
        let src = random_density(&mut r, side * side, total);
        let tgt = random_density(&mut r, side * side, total);
        let cost = build_grid_cost(side).unwrap();
        let plan = solve_transport(
            &DensityVector::new(src.clone()).unwrap(),
            &DensityVector::new(tgt.clone()).unwrap(),
            &cost,
        )
        .unwrap();
        let oracle = lp_oracle(&src, &tgt, cost.entries());
        let rel = (plan.objective() - oracle).abs() / oracle.abs().max(1e-300);
        if (plan.objective() - oracle).abs() > 1e-12 {
            worst = worst.max(rel);
        }
    }
    check(worst <= 1e-8, format!("200 pairs, worst relative gap {worst:.1e}"))
}

fn bins_sum_to_distance() -> Outcome {
    let whog = Whog::new(8, 9).unwrap();
    let mut r = rng(1);
    let mut ok = 0;
    for _ in 0..1000 {
        let out = whog.analyze(&random_patch(&mut r, 8)).unwrap();
        if rel_close(out.histogram.total(), out.distance, 1e-9) || (out.distance == 0.0 && out.histogram.is_zero()) {
            ok += 1;
        }
    }
    check(ok == 1000, format!("{ok}/1000 patches"))
}

fn noise_robustness() -> Outcome {
    let settings = BenchSettings {
        side: 8,
        stride: 8,
        n_bins: 9,
        trials: 100,
        seed: 0,
    };
    let rows = bench_noise(&step_patch(8), &[0.0, 0.15], &settings).unwrap();
    let get = |sigma: f64, m: Method| rows.iter().find(|r| r.sigma == sigma && r.method == m).unwrap();
    let (whog, hog) = (get(0.15, Method::Whog), get(0.15, Method::Hog));
    let (h0, h15) = (
        get(0.0, Method::Hog).mean_entropy.unwrap(),
        hog.mean_entropy.unwrap(),
    );
    check(
        whog.stability >= 0.95 && whog.stability > hog.stability && h15 > h0,
        format!(
            "stability whog {:.2} hog {:.2}; hog entropy {h0:.3} -> {h15:.3} bits",
            whog.stability, hog.stability
        ),
    )
}

fn two_color_bound() -> Outcome {
    let fitter = TwoColorFitter::new(3).unwrap();
    let mut r = rng(4);
    let mut within_bound = 0;
    let mut below_optimum = 0;
    for _ in 0..100 {
        let patch = noisy_step_patch(&mut r, 3, 0.1);
        let fit = fitter.fit(&patch).unwrap().distance();
        let best = exhaustive_two_color(&patch);
        if fit < best - 1e-9 {
            below_optimum += 1;
        }
        if fit <= 1.02 * best + 1e-12 {
            within_bound += 1;
        }
    }
    let mut exact = 0;
    for _ in 0..100 {
        let (lo, hi) = (r.gen_range(0.0..1.0), r.gen_range(1.0..2.0));
        let px: Vec<f64> = (0..9).map(|i| if i == 0 || r.gen_bool(0.5) { hi } else { lo }).collect();
        let px = if px.iter().all(|&p| p == hi) { [vec![lo], px[1..].to_vec()].concat() } else { px };
        if fitter.fit(&PatchGrid::new(3, px).unwrap()).unwrap().distance() == 0.0 {
            exact += 1;
        }
    }
    check(
        within_bound >= 95 && exact == 100 && below_optimum == 0,
        format!("{within_bound}/100 within 2% of exhaustive optimum; {exact}/100 two-valued patches exact"),
    )
}

fn region_sd(img: &GrayImage, cols: std::ops::Range<usize>) -> f64 {
    let v: Vec<f64> = (0..img.height())
        .flat_map(|r| cols.clone().map(move |c| (r, c)))
        .map(|(r, c)| img.get(r, c))
        .collect();
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

fn smoothing_and_edges() -> Outcome {
    let (size, edge) = (64, 32);
    let img = noisy(&step_edge(size, size, edge, 0.0, 1.0).unwrap(), 0.1, 5).unwrap();
    let smooth = smooth_image(&img, 3, 2).unwrap();
    let (left, right) = (0..edge - 2, edge + 2..size);
    let sd_before = [region_sd(&img, left.clone()), region_sd(&img, right.clone())];
    let sd_after = [region_sd(&smooth, left), region_sd(&smooth, right)];
    let profile: Vec<f64> = (0..size)
        .map(|c| (0..size).map(|r| smooth.get(r, c)).sum::<f64>() / size as f64)
        .collect();
    let jump_at = (1..size)
        .max_by(|&a, &b| (profile[a] - profile[a - 1]).total_cmp(&(profile[b] - profile[b - 1])))
        .unwrap();

    let map = edge_map(&img, 3, 2).unwrap();
    let binary = threshold_map(&map, otsu_threshold(map.pixels()));
    let truth = GrayImage::from_fn(size, size, |_, c| if c + 1 == edge || c == edge { 1.0 } else { 0.0 }).unwrap();
    let score = score_edges(&binary, &truth, 1).unwrap();
    check(
        sd_after[0] < sd_before[0] && sd_after[1] < sd_before[1] && jump_at == edge && score.precision >= 0.8 && score.recall >= 0.8,
        format!(
            "sd {:.3}/{:.3} -> {:.3}/{:.3}; edge at column {jump_at}; precision {:.3} recall {:.3}",
            sd_before[0], sd_before[1], sd_after[0], sd_after[1], score.precision, score.recall
        ),
    )
}

fn logrank_correctness() -> Outcome {
    let recs = |data: &[(f64, bool, u8)]| -> Vec<SurvivalRecord<u8>> {
        data.iter()
            .enumerate()
            .map(|(i, &(time, event, group))| SurvivalRecord {
                sample_id: i.to_string(),
                time,
                event,
                group,
            })
            .collect()
    };
    let fixture = logrank_test(&recs(&[
        (1.0, true, 0),
        (2.0, true, 0),
        (3.0, true, 0),
        (4.0, true, 1),
        (5.0, true, 1),
        (6.0, true, 1),
    ]))
    .unwrap();
    let chi2 = 3.4225 / 0.6775;
    let fixture_ok = (fixture.chi_square - chi2).abs() <= 1e-9 * chi2 && (fixture.p_value - 0.024602349953641786).abs() <= 1e-9;

    let mut rejections = 0;
    for rep in 0..500u64 {
        let mut r = rng(90_000 + rep);
        let data: Vec<(f64, bool, u8)> = (0..200)
            .map(|i| {
                let (t, e) = survival_time(1.0, 0.3, &mut r);
                (t, e, (i % 2) as u8)
            })
            .collect();
        if logrank_test(&recs(&data)).unwrap().p_value < 0.05 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / 500.0;
    check(
        fixture_ok && (0.02..=0.08).contains(&rate),
        format!("fixture chi2 {:.9} p {:.9}; null rejection rate {rate:.3}", fixture.chi_square, fixture.p_value),
    )
}

fn to_8bit(img: &GrayImage) -> GrayImage {
    GrayImage::from_clamped(img.width(), img.height(), img.pixels().iter().map(|p| (p * 255.0).round()).collect())
        .unwrap()
        .with_depth(SampleDepth::Eight, 255)
}

/// One synthetic cohort written to disk and run through the entropy command.
/// Odd subjects get an isotropic texture and hazard 3, even ones vertical
/// stripes and hazard 1.
fn cohort_p_value(dir: &Path, replicate: u64, subjects: usize) -> f64 {
    let mut r = rng(500_000 + replicate);
    let mask = GrayImage::filled(32, 32, 1.0).unwrap().with_depth(SampleDepth::Eight, 255);
    save_image(dir.join("mask.pgm"), &mask).unwrap();
    let mut manifest = String::from("sample_id,image,mask\n");
    let mut survival = String::from("sample_id,time,event\n");
    for i in 0..subjects {
        let textured = i % 2 == 1;
        let img = if textured {
            isotropic_texture(32, 0.5, 0.45, r.gen()).unwrap()
        } else {
            let period = r.gen_range(5.0..9.0);
            noisy(&stripes(32, period, 0.5, 0.4).unwrap(), 0.02, r.gen()).unwrap()
        };
        save_image(dir.join(format!("img{i}.pgm")), &to_8bit(&img)).unwrap();
        manifest.push_str(&format!("p{i},img{i}.pgm,mask.pgm\n"));
        let (t, e) = survival_time(if textured { 3.0 } else { 1.0 }, 0.1, &mut r);
        survival.push_str(&format!("p{i},{t},{}\n", u8::from(e)));
    }
    fs::write(dir.join("manifest.csv"), manifest).unwrap();
    fs::write(dir.join("survival.csv"), survival).unwrap();
    let config = RunConfig {
        count: Some(8),
        seed: replicate,
        ..RunConfig::default()
    };
    let out = dir.join("out");
    let result = cmd_entropy(&config, &dir.join("manifest.csv"), Some(&dir.join("survival.csv")), &out).unwrap();
    assert!(!result.is_partial(), "{:?}", result.row_errors);
    let lr: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("logrank.json")).unwrap()).unwrap();
    lr["p_value"].as_f64().unwrap()
}

fn synthetic_cohort() -> Outcome {
    let mut significant = 0;
    let mut max_p: f64 = 0.0;
    for rep in 0..100 {
        let tmp = TempDir::new().unwrap();
        let p = cohort_p_value(tmp.path(), rep, 60);
        max_p = max_p.max(p);
        if p < 0.05 {
            significant += 1;
        }
    }
    check(significant >= 90, format!("{significant}/100 replicates with p < 0.05 (largest p {max_p:.3})"))
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let img = dir.join("in.pgm");
    save_image(&img, &to_8bit(&noisy(&step_edge(24, 24, 10, 0.1, 0.9).unwrap(), 0.08, 2).unwrap())).unwrap();
    cohort_p_value(&dir.join("cohort").tap_mkdir(), 0, 6);
    let manifest = dir.join("cohort/manifest.csv");
    let survival = dir.join("cohort/survival.csv");
    let p = |x: &Path| x.to_str().unwrap().to_string();
    let commands: Vec<Vec<String>> = vec![
        vec!["whog".into(), p(&img), "--per-patch".into()],
        vec!["hog".into(), p(&img)],
        vec!["bench-noise".into(), p(&img), "--trials".into(), "10".into()],
        vec!["bench-noise".into(), "--trials".into(), "10".into()],
        vec!["smooth".into(), p(&img)],
        vec!["edges".into(), p(&img)],
        vec!["entropy".into(), p(&manifest), "--survival".into(), p(&survival), "--count".into(), "6".into()],
    ];
    let mut identical = 0;
    for (k, args) in commands.iter().enumerate() {
        let runs: Vec<_> = (0..2)
            .map(|run| {
                let out = dir.join(format!("run{k}-{run}"));
                let status = Command::new(env!("CARGO_BIN_EXE_wlia"))
                    .args(args)
                    .args(["--seed", "3", "--out", out.to_str().unwrap()])
                    .output()
                    .unwrap()
                    .status;
                assert!(status.success(), "{args:?} failed: {status}");
                snapshot(&out)
            })
            .collect();
        if runs[0] == runs[1] && !runs[0].is_empty() {
            identical += 1;
        }
    }
    check(
        identical == commands.len(),
        format!("{identical}/{} command runs byte-identical", commands.len()),
    )
}

trait TapMkdir {
    fn tap_mkdir(self) -> Self;
}

impl TapMkdir for std::path::PathBuf {
    fn tap_mkdir(self) -> Self {
        fs::create_dir_all(&self).unwrap();
        self
    }
}

fn performance() -> Outcome {
    let tmp = TempDir::new().unwrap();
    let img = tmp.path().join("big.pgm");
    save_image(&img, &to_8bit(&isotropic_texture(256, 0.5, 0.45, 9).unwrap())).unwrap();
    let start = Instant::now();
    cmd_whog(&RunConfig::default(), &img, &tmp.path().join("out")).unwrap();
    let elapsed = start.elapsed();
    let patches = fs::read_to_string(tmp.path().join("out/whog_patches.csv")).unwrap().lines().count() - 1;
    let per_patch = elapsed.as_secs_f64() / patches as f64;
    check(
        elapsed < Duration::from_secs(10) && per_patch < 0.01,
        format!("{patches} patches in {:.2}s ({:.2} ms per patch)", elapsed.as_secs_f64(), per_patch * 1e3),
    )
}

type Criterion = (&'static str, u64, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("solver matches dense LP oracle on 2x2/3x3 grids", 10, solver_matches_oracle),
        ("WHOG bins sum to the transport distance", 30, bins_sum_to_distance),
        ("WHOG stabler than HOG under noise", 120, noise_robustness),
        ("two-color search within 2% of exhaustive optimum", 120, two_color_bound),
        ("smoothing reduces noise, edges found", 60, smoothing_and_edges),
        ("log-rank fixture and null calibration", 120, logrank_correctness),
        ("entropy pipeline separates synthetic cohorts", 300, synthetic_cohort),
        ("every command is byte-deterministic", 300, determinism),
        ("whog on 256x256 under 10 s", 10, performance),
    ];
    let mut failures = 0;
    for (k, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let outcome = within(start.elapsed(), Duration::from_secs(limit), outcome);
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail}", k + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {}. {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
