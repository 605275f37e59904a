mod common;

use common::{max_abs_diff, rng, softmax_stream};
use proptest::prelude::*;
use streamwell_core::{PoolMode, PoolWindow, WellState};

/// Mean or max over the last `min(m, t + 1)` frames, recomputed from scratch.
fn naive_pool(frames: &[Vec<f64>], t: usize, m: Option<usize>, mode: PoolMode) -> Vec<f64> {
    let start = m.map_or(0, |m| (t + 1).saturating_sub(m));
    let window = &frames[start..=t];
    let c = frames[0].len();
    (0..c)
        .map(|i| match mode {
            PoolMode::Mean => window.iter().map(|f| f[i]).sum::<f64>() / window.len() as f64,
            PoolMode::Max => window.iter().map(|f| f[i]).fold(f64::NEG_INFINITY, f64::max),
        })
        .collect()
}

/// Closed form of the well: the largest decayed suffix sum of the net
/// inflow `x / m - beta`, or zero.
fn unrolled_well(frames: &[Vec<f64>], t: usize, m: usize, beta: f64) -> Vec<f64> {
    let a = (m - 1) as f64 / m as f64;
    let c = frames[0].len();
    (0..c)
        .map(|i| {
            let mut best = 0.0f64;
            let mut suffix = 0.0f64;
            let mut decay = 1.0f64;
            for j in (0..=t).rev() {
                suffix += decay * (frames[j][i] / m as f64 - beta);
                decay *= a;
                best = best.max(suffix);
            }
            best
        })
        .collect()
}

fn check_pooling(frames: &[Vec<f64>], m: Option<usize>, mode: PoolMode) {
    let c = frames[0].len();
    let mut window = match m {
        Some(m) => PoolWindow::bounded(m, mode, c).unwrap(),
        None => PoolWindow::unbounded(mode, c),
    };
    for t in 0..frames.len() {
        let got = window.update(&frames[t]).unwrap().to_vec();
        let want = naive_pool(frames, t, m, mode);
        let d = max_abs_diff(&got, &want);
        assert!(d <= 1e-9, "m={m:?} {mode:?} t={t}: diff {d}");
    }
}

#[test]
fn pooling_matches_naive_window_over_1000_frames() {
    let mut r = rng(11);
    let frames = softmax_stream(&mut r, 1000, 16);
    for m in [Some(1), Some(2), Some(7), Some(25), Some(200), Some(1500), None] {
        check_pooling(&frames, m, PoolMode::Mean);
        check_pooling(&frames, m, PoolMode::Max);
    }
}

#[test]
fn well_matches_unrolled_recurrence_over_10000_steps() {
    let c = 12;
    let mut r = rng(5);
    let frames = softmax_stream(&mut r, 10_000, c);
    let beta = 1.0 / c as f64;
    for m in [1, 3, 25, 200] {
        let mut well = WellState::new(m, beta, c).unwrap();
        for (t, f) in frames.iter().enumerate() {
            well.update(f).unwrap();
            if t % 1009 == 0 || t == frames.len() - 1 {
                let d = max_abs_diff(well.w(), &unrolled_well(&frames, t, m, beta));
                assert!(d <= 1e-9, "m={m} t={t}: diff {d}");
            }
        }
    }
}

#[test]
fn unit_memory_is_the_raw_frame() {
    let mut r = rng(2);
    let c = 9;
    let frames = softmax_stream(&mut r, 200, c);
    let mut mean = PoolWindow::bounded(1, PoolMode::Mean, c).unwrap();
    let mut max = PoolWindow::bounded(1, PoolMode::Max, c).unwrap();
    let beta = 1.0 / c as f64;
    let mut well = WellState::new(1, beta, c).unwrap();
    for f in &frames {
        assert_eq!(mean.update(f).unwrap(), &f[..]);
        assert_eq!(max.update(f).unwrap(), &f[..]);
        well.update(f).unwrap();
        let want: Vec<f64> = f.iter().map(|x| (x - beta).max(0.0)).collect();
        assert_eq!(well.w(), &want[..]);
    }
}

#[test]
fn uniform_input_leaves_the_well_empty() {
    for c in [1, 2, 10, 1000] {
        for m in [1, 2, 25, 500] {
            let mut well = WellState::with_default_beta(m, c).unwrap();
            let frame = vec![1.0 / c as f64; c];
            for _ in 0..2000 {
                well.update(&frame).unwrap();
                assert!(well.w().iter().all(|&w| w == 0.0), "c={c} m={m}");
            }
        }
    }
}

fn softmax_strategy(c: usize, t: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..1.0, c), t).prop_map(|frames| {
        frames
            .into_iter()
            .map(|f| {
                let peaked: Vec<f64> = f.iter().map(|v| v.powi(6) + 1e-12).collect();
                let s: f64 = peaked.iter().sum();
                peaked.into_iter().map(|v| v / s).collect()
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn well_is_nonnegative_and_bounded(
        frames in softmax_strategy(6, 150),
        m in 1usize..60,
        beta in 1e-4f64..0.5,
    ) {
        let mut well = WellState::new(m, beta, 6).unwrap();
        for f in &frames {
            well.update(f).unwrap();
            prop_assert!(well.w().iter().all(|&w| w >= 0.0));
            prop_assert!(well.w().iter().all(|&w| w <= 1.0 + 1e-9));
        }
    }

    #[test]
    fn well_matches_unrolled_recurrence_at_every_step(
        frames in softmax_strategy(4, 80),
        m in 1usize..40,
        beta in 1e-3f64..0.3,
    ) {
        let mut well = WellState::new(m, beta, 4).unwrap();
        for t in 0..frames.len() {
            well.update(&frames[t]).unwrap();
            prop_assert!(max_abs_diff(well.w(), &unrolled_well(&frames, t, m, beta)) <= 1e-9);
        }
    }

    #[test]
    fn well_leaks_to_exactly_zero(
        frames in softmax_strategy(5, 60),
        m in 1usize..80,
        beta in 1e-3f64..0.3,
    ) {
        let mut well = WellState::new(m, beta, 5).unwrap();
        for f in &frames {
            well.update(f).unwrap();
        }
        let w_max = well.w().iter().cloned().fold(0.0, f64::max);
        let steps = (w_max * m as f64 / beta).ceil() as usize;
        let zero = vec![0.0; 5];
        for _ in 0..steps {
            well.update(&zero).unwrap();
        }
        prop_assert!(well.w().iter().all(|&w| w == 0.0), "w = {:?} after {} steps", well.w(), steps);
    }

    #[test]
    fn pooling_matches_naive_window(
        frames in softmax_strategy(5, 60),
        m in 1usize..70,
        max_mode in any::<bool>(),
    ) {
        let mode = if max_mode { PoolMode::Max } else { PoolMode::Mean };
        let mut window = PoolWindow::bounded(m, mode, 5).unwrap();
        for t in 0..frames.len() {
            let got = window.update(&frames[t]).unwrap().to_vec();
            prop_assert!(max_abs_diff(&got, &naive_pool(&frames, t, Some(m), mode)) <= 1e-9);
        }
    }
}
