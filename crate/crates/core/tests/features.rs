mod common;

use common::{random_patch, rel_close, rng};
use proptest::prelude::*;
use wlia::analysis::histogram_entropy;
use wlia::hog::{gradients, hog_patch};
use wlia::ot::{work_matrix, WorkMatrix};
use wlia::synth::{noisy, step_patch};
use wlia::whog::{bin_work, uniform_mean_target, whog_patch, Whog};
use wlia::{solve_transport, DensityVector, GrayImage, PatchGrid};

fn seeded_patch(seed: u64, side: usize) -> PatchGrid {
    random_patch(&mut rng(seed), side)
}

fn assert_bins_close(a: &[f64], b: &[f64], tol: f64) {
    let scale = a.iter().chain(b).cloned().fold(1e-300, f64::max);
    for (k, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= tol * scale, "bin {k}: {x} vs {y}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bins_sum_to_distance(seed in any::<u64>(), side in 2usize..=8, n_bins in 1usize..=18) {
        let whog = Whog::new(side, n_bins).unwrap();
        let out = whog.analyze(&seeded_patch(seed, side)).unwrap();
        prop_assert!(rel_close(out.histogram.total(), out.distance, 1e-9) || out.distance == 0.0);
    }

    #[test]
    fn scaling_scales_every_bin(seed in any::<u64>(), lambda in 0.01f64..100.0) {
        let patch = seeded_patch(seed, 6);
        let scaled = PatchGrid::new(6, patch.pixels().iter().map(|p| p * lambda).collect()).unwrap();
        let h = whog_patch(&patch, 9).unwrap();
        let hs = whog_patch(&scaled, 9).unwrap();
        assert_bins_close(h.scaled(lambda).bins(), hs.bins(), 1e-9);
    }

    #[test]
    fn half_turn_relabels_the_plan(seed in any::<u64>(), side in 2usize..=8) {
        let whog = Whog::new(side, 9).unwrap();
        let patch = seeded_patch(seed, side);
        let rotated = patch.rotated_half_turn();
        let plan = whog.transport(&patch).unwrap().unwrap();
        let len = side * side;

        // Pixel i of the rotated patch is pixel len-1-i of the original, so
        // the relabeled plan is feasible for the rotated instance.
        let mut relabeled = vec![0.0; len * len];
        for i in 0..len {
            for j in 0..len {
                relabeled[(len - 1 - i) * len + (len - 1 - j)] = plan.get(i, j);
            }
        }
        let work: Vec<f64> = relabeled.iter().zip(whog.cost().entries()).map(|(p, c)| p * c).collect();
        let rotated_work = WorkMatrix::from_entries(len, work).unwrap();

        let direct = solve_transport(
            &DensityVector::new(rotated.pixels().to_vec()).unwrap(),
            &uniform_mean_target(&rotated).unwrap(),
            whog.cost(),
        ).unwrap();
        prop_assert!(rel_close(rotated_work.total(), direct.objective(), 1e-9));

        let original = bin_work(&work_matrix(&plan, whog.cost()).unwrap(), side, 9).unwrap();
        let turned = bin_work(&rotated_work, side, 9).unwrap();
        assert_bins_close(original.bins(), turned.bins(), 1e-9);
    }

    #[test]
    fn shift_leaves_histogram_unchanged(seed in any::<u64>(), c in 0.0f64..5.0) {
        let patch = seeded_patch(seed, 8);
        let shifted = PatchGrid::new(8, patch.pixels().iter().map(|p| p + c).collect()).unwrap();
        let h = whog_patch(&patch, 9).unwrap();
        let hs = whog_patch(&shifted, 9).unwrap();
        assert_bins_close(h.bins(), hs.bins(), 1e-9);
    }

    #[test]
    fn gradient_orientation_is_affine_invariant(seed in any::<u64>(), lambda in 0.1f64..10.0, c in 0.0f64..3.0) {
        let mut r = rng(seed);
        let img = GrayImage::from_fn(9, 7, |_, _| rand::Rng::gen_range(&mut r, 0..4) as f64).unwrap();
        let moved = GrayImage::from_fn(9, 7, |row, col| lambda * img.get(row, col) + c).unwrap();
        let (g, gm) = (gradients(&img).unwrap(), gradients(&moved).unwrap());
        for k in 0..g.orientation().len() {
            match (g.orientation()[k], gm.orientation()[k]) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-9 || (a - b).abs() > std::f64::consts::PI - 1e-9),
                (None, None) => {}
                other => prop_assert!(false, "defined-ness differs at {}: {:?}", k, other),
            }
            prop_assert!((gm.magnitude()[k] - lambda * g.magnitude()[k]).abs() <= 1e-9 * lambda.max(1.0) * 4.0);
        }
    }
}

#[test]
fn step_patch_points_across_the_edge() {
    let h = whog_patch(&step_patch(8).patch((0, 0), 8).unwrap(), 9).unwrap();
    // pi/2 falls in bin 4 of 9.
    assert_eq!(h.argmax(), Some(4));
}

#[test]
fn whog_argmax_survives_noise() {
    let clean = step_patch(8);
    let whog = Whog::new(8, 9).unwrap();
    let reference = whog.histogram(&clean.patch((0, 0), 8).unwrap()).unwrap().argmax();
    let stable = (0..100)
        .filter(|&t| {
            let img = noisy(&clean, 0.15, t).unwrap();
            whog.histogram(&img.patch((0, 0), 8).unwrap()).unwrap().argmax() == reference
        })
        .count();
    assert!(stable >= 95, "{stable} of 100 trials kept the argmax");
}

#[test]
fn hog_degrades_more_than_whog_under_noise() {
    let clean = step_patch(8);
    let whog = Whog::new(8, 9).unwrap();
    let hog_entropy = |img: &GrayImage| histogram_entropy(&hog_patch(&gradients(img).unwrap(), 9).unwrap()).unwrap();
    let whog_entropy = |img: &GrayImage| histogram_entropy(&whog.histogram(&img.patch((0, 0), 8).unwrap()).unwrap()).unwrap();
    let (hog0, whog0) = (hog_entropy(&clean), whog_entropy(&clean));
    let wins = (0..100)
        .filter(|&t| {
            let img = noisy(&clean, 0.15, 1000 + t).unwrap();
            let dh = hog_entropy(&img) - hog0;
            let dw = whog_entropy(&img) - whog0;
            dh > 0.0 && dh > dw
        })
        .count();
    assert!(wins >= 90, "{wins} of 100 trials");
}
