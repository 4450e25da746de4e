//! Acceptance gate: one test per criterion, each printing a single
//! `criterion NN: PASS/FAIL — ...` line with the measured numbers before
//! asserting. Run with `--nocapture --test-threads=1` to see every line in
//! order and to keep the timed criteria free of scheduling noise.
//!
//! Derived expectations are checked against independent oracles that avoid
//! the implementation path: plain-summation DFTs, rule enumeration, and an
//! exhaustive assignment solver.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use hot_core::harmonic::{descriptor, HarmonicConfig, TokenSequence};
use hot_core::metrics::{combined_loss, hr_from_signal, metrics, neg_pearson};
use hot_core::parallel::with_max_threads;
use hot_core::rng::unit_f64;
use hot_core::spectral::{dft2, fda_clip, fda_frame, Clip, Frame, LowFreqMask};
use hot_core::synth::{
    dominant_pulse_mode, extract_mode_signal, gen_clip, gen_reference, SynthSpec,
};
use hot_core::transport::{
    cost_matrix, exact_ot_uniform, hot_loss, sinkhorn_log, uniform_marginals, CostMatrix,
    SinkhornConfig,
};
use hot_testkit::{harmonic_ratios_direct, mask_flags_direct};

fn report(number: usize, passed: bool, detail: &str) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    println!("criterion {number:02}: {verdict} — {detail}");
    assert!(passed, "criterion {number:02} failed — {detail}");
}

fn random_frame(channels: usize, height: usize, width: usize, seed: u64) -> Frame {
    Frame::from_fn(channels, height, width, |c, y, x| {
        unit_f64(seed, ((c * height + y) * width + x) as u64)
    })
    .unwrap()
}

// ---------------------------------------------------------------------------
// 1. Amplitude transfer exactness on random frames
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_amplitude_transfer_exactness() {
    let mask = LowFreqMask::build(72, 72, 0.05).unwrap();
    let reference = random_frame(3, 72, 72, 9000);
    let reference_spectrum = dft2(&reference);

    let mut stylize_time = Duration::ZERO;
    let mut worst_out_of_band = 0.0f64;
    let mut worst_in_band_amp = 0.0f64;
    let mut worst_phase = 0.0f64;
    for i in 0..50 {
        let source = random_frame(3, 72, 72, 1000 + i);
        let started = Instant::now();
        let stylized = fda_frame(&source, &reference, &mask).unwrap();
        stylize_time += started.elapsed();

        let before = dft2(&source);
        let after = dft2(&stylized);
        for c in 0..3 {
            for u in 0..72 {
                for v in 0..72 {
                    let zi = before.get(c, u, v);
                    let zo = after.get(c, u, v);
                    if mask.contains(u, v) {
                        let want = reference_spectrum.get(c, u, v).norm();
                        let dev = (zo.norm() - want).abs() / want.max(1e-12);
                        worst_in_band_amp = worst_in_band_amp.max(dev);
                    } else {
                        let dev = (zo - zi).norm() / zi.norm().max(1e-12);
                        worst_out_of_band = worst_out_of_band.max(dev);
                    }
                    if zi.norm() > 1e-6 && zo.norm() > 1e-6 {
                        let gap = (zo.arg() - zi.arg()).abs();
                        worst_phase = worst_phase.max(gap.min(2.0 * PI - gap));
                    }
                }
            }
        }
    }

    let passed = worst_out_of_band <= 1e-4
        && worst_in_band_amp <= 1e-4
        && worst_phase <= 1e-3
        && stylize_time < Duration::from_secs(2);
    report(
        1,
        passed,
        &format!(
            "50 random 3x72x72 frames at beta=0.05: out-of-band coefficients within {:.1e} \
             of the source (<=1e-4 rel), in-band amplitudes within {:.1e} of the reference \
             (<=1e-4 rel), phase preserved within {:.1e} rad (<=1e-3 where amplitudes > 1e-6), \
             stylization took {} ms (<2 s)",
            worst_out_of_band,
            worst_in_band_amp,
            worst_phase,
            stylize_time.as_millis()
        ),
    );
}

// ---------------------------------------------------------------------------
// 2. Transfer limit identities
// ---------------------------------------------------------------------------

fn max_abs_diff(a: &Frame, b: &Frame) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_02_transfer_limit_identities() {
    let zero_mask = LowFreqMask::build(72, 72, 0.0).unwrap();
    let mask = LowFreqMask::build(72, 72, 0.05).unwrap();

    let mut worst_zero_beta = 0.0f64;
    let mut worst_self_reference = 0.0f64;
    let mut worst_idempotence = 0.0f64;
    for seed in 0..5 {
        let source = random_frame(3, 72, 72, 2000 + seed);
        let reference = random_frame(3, 72, 72, 3000 + seed);

        let identity = fda_frame(&source, &reference, &zero_mask).unwrap();
        worst_zero_beta = worst_zero_beta.max(max_abs_diff(&identity, &source));

        let selfed = fda_frame(&source, &source, &mask).unwrap();
        worst_self_reference = worst_self_reference.max(max_abs_diff(&selfed, &source));

        let once = fda_frame(&source, &reference, &mask).unwrap();
        let twice = fda_frame(&once, &reference, &mask).unwrap();
        worst_idempotence = worst_idempotence.max(max_abs_diff(&twice, &once));
    }

    let passed =
        worst_zero_beta <= 1e-5 && worst_self_reference <= 1e-5 && worst_idempotence <= 1e-4;
    report(
        2,
        passed,
        &format!(
            "beta=0 reproduces the input within {worst_zero_beta:.1e} (<=1e-5 max-abs), \
             self-reference within {worst_self_reference:.1e} (<=1e-5), double application \
             idempotent within {worst_idempotence:.1e} (<=1e-4), over 5 seeded frames"
        ),
    );
}

// ---------------------------------------------------------------------------
// 3. Mask census and monotonicity
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_mask_census_and_monotonicity() {
    let mask = LowFreqMask::build(72, 72, 0.05).unwrap();
    let oracle = mask_flags_direct(72, 72, 0.05);
    let oracle_census = oracle.iter().filter(|f| **f).count();
    let flags_agree = mask.flags() == oracle.as_slice();

    let betas = [0.0, 0.01, 0.05, 0.1, 0.5];
    let masks: Vec<LowFreqMask> = betas
        .iter()
        .map(|b| LowFreqMask::build(72, 72, *b).unwrap())
        .collect();
    let censuses: Vec<usize> = masks.iter().map(LowFreqMask::census).collect();
    let nondecreasing = censuses.windows(2).all(|w| w[0] <= w[1]);
    let nested = masks.windows(2).all(|pair| {
        pair[0]
            .flags()
            .iter()
            .zip(pair[1].flags())
            .all(|(small, large)| !small | large)
    });

    let passed = mask.census() == 9 && oracle_census == 9 && flags_agree && nondecreasing && nested;
    report(
        3,
        passed,
        &format!(
            "census(72x72, beta=0.05) = {} and independent enumeration agrees bin-for-bin \
             (the strict cyclic rule cannot flag 16 bins at this size — any census here is \
             an odd perfect square by conjugate symmetry); censuses over beta {:?} are {:?}, \
             nondecreasing and nested",
            mask.census(),
            betas,
            censuses
        ),
    );
}

// ---------------------------------------------------------------------------
// 4. Entropic solver against the exhaustive assignment oracle
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_entropic_solver_vs_assignment_oracle() {
    let config = SinkhornConfig {
        epsilon: 0.01,
        iters: 5000,
        tol: 0.0,
    };
    let marginals = uniform_marginals(8);

    let started = Instant::now();
    let mut residuals = Vec::with_capacity(100);
    let mut marginal_failures = 0usize;
    let mut lower_violations = 0usize;
    let mut upper_violations = 0usize;
    let mut violation_on_feasible_seed = false;
    for seed in 0..100u64 {
        let values: Vec<f64> = (0..64).map(|i| 2.0 * unit_f64(seed, i as u64)).collect();
        let cost = CostMatrix::from_values(8, 8, values).unwrap();
        let output = sinkhorn_log(&cost, &marginals, &marginals, &config).unwrap();
        let loss = hot_loss(&output.plan, &cost).unwrap();
        let (optimum, _) = exact_ot_uniform(&cost).unwrap();
        let spread = cost.max_value() - cost.min_value();

        residuals.push(output.col_marginal_l1);
        let missed_marginal = output.col_marginal_l1 > 1e-6;
        if missed_marginal {
            marginal_failures += 1;
        }
        if loss < optimum - 1e-8 {
            lower_violations += 1;
            violation_on_feasible_seed |= !missed_marginal;
        }
        if loss > optimum + 0.05 * spread {
            upper_violations += 1;
            violation_on_feasible_seed |= !missed_marginal;
        }
    }
    let elapsed = started.elapsed();
    residuals.sort_by(|a, b| a.total_cmp(b));
    let median = residuals[residuals.len() / 2];
    let worst = residuals[residuals.len() - 1];

    let passed = marginal_failures == 0
        && lower_violations == 0
        && upper_violations == 0
        && elapsed < Duration::from_secs(10);
    report(
        4,
        passed,
        &format!(
            "100 seeded 8x8 costs in [0,2], eps=0.01, 5000 iterations: {marginal_failures}/100 \
             seeds exceed the 1e-6 marginal l1 bound (worst {worst:.2e}, median {median:.2e}); \
             the cost falls below LP*-1e-8 on {lower_violations}/100 and above \
             LP*+0.05*spread on {upper_violations}/100, every violation on a seed whose plan \
             is still column-infeasible (violation on a feasible seed: \
             {violation_on_feasible_seed}); {:.2} s (<10 s). At eps=0.01 the scaling operator \
             contracts so slowly that most seeds need over 1e5 iterations to push the residual \
             below 1e-6, so the 5000-iteration budget and the 1e-6 bound cannot both hold, and \
             a plan that is infeasible may legitimately undercut the LP optimum. Driven to \
             convergence the same solver lands inside the sandwich on every seed tried (see \
             converged_solver_is_sandwiched_by_the_lp_oracle in the transport module).",
            elapsed.as_secs_f64()
        ),
    );
}

// ---------------------------------------------------------------------------
// 5. Default-configuration stability
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_default_configuration_stability() {
    let harmonic = HarmonicConfig {
        window_len: 64,
        band_hz: (0.7, 4.0),
        eps_h: 1e-6,
    };
    let solver = SinkhornConfig {
        epsilon: 0.05,
        iters: 40,
        tol: 0.0,
    };
    let marginals = uniform_marginals(32);

    let tokens_from = |seed: u64| {
        let data: Vec<f64> = (0..32 * 16).map(|i| unit_f64(seed, i as u64)).collect();
        TokenSequence::new(32, 16, 30.0, data).unwrap()
    };

    let mut worst_l1 = 0.0f64;
    let mut all_finite = true;
    for seed in 0..8u64 {
        let left = tokens_from(seed);
        let right = tokens_from(seed + 5000);
        let left_ratios = descriptor(&left, &harmonic).unwrap().ratios;
        let right_ratios = descriptor(&right, &harmonic).unwrap().ratios;
        let cost = cost_matrix(&left, &right, &left_ratios, &right_ratios, 0.3).unwrap();
        let output = sinkhorn_log(&cost, &marginals, &marginals, &solver).unwrap();
        let loss = hot_loss(&output.plan, &cost).unwrap();

        worst_l1 = worst_l1.max(output.col_marginal_l1);
        all_finite &= loss.is_finite()
            && output.col_marginal_l1.is_finite()
            && cost.as_slice().iter().all(|v| v.is_finite())
            && output
                .plan
                .as_slice()
                .iter()
                .all(|v| v.is_finite() && *v >= 0.0)
            && left_ratios
                .iter()
                .chain(&right_ratios)
                .all(|v| v.is_finite());
    }

    let passed = worst_l1 <= 1e-3 && all_finite;
    report(
        5,
        passed,
        &format!(
            "8 seeded pairs of 32 random 16-dim tokens, lambda_h=0.3, eps=0.05, 40 iterations: \
             worst marginal l1 {worst_l1:.2e} (<=1e-3), every cost/plan/ratio/loss value finite \
             and plans nonnegative: {all_finite}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. Harmonic ratio against the direct windowed-DFT oracle
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_harmonic_ratio_against_direct_oracle() {
    let config = HarmonicConfig {
        window_len: 64,
        band_hz: (0.7, 4.0),
        eps_h: 1e-6,
    };
    let mut worst_oracle_gap = 0.0f64;
    let mut worst_square_gap = 0.0f64;
    for &a in &[0.25, 0.5] {
        let data: Vec<f64> = (0..64)
            .map(|t| {
                let theta = 2.0 * PI * 4.0 * t as f64 / 64.0;
                theta.cos() + a * (2.0 * theta).cos()
            })
            .collect();
        let tokens = TokenSequence::new(64, 1, 30.0, data.clone()).unwrap();
        let ratios = descriptor(&tokens, &config).unwrap().ratios;
        let oracle = harmonic_ratios_direct(&data, 64, 1, 64, 30.0, 0.7, 4.0, 1e-6);
        for (got, want) in ratios.iter().zip(&oracle) {
            worst_oracle_gap = worst_oracle_gap.max((got - want).abs());
        }
        for got in &ratios {
            worst_square_gap = worst_square_gap.max((got - a * a).abs());
        }
    }

    let passed = worst_oracle_gap <= 1e-9 && worst_square_gap <= 0.05;
    report(
        6,
        passed,
        &format!(
            "in-band cosine plus relative second harmonic a in {{0.25, 0.5}} at W=64, 30 Hz: \
             every ratio within {worst_square_gap:.2e} of a^2 (<=0.05) and within \
             {worst_oracle_gap:.2e} of the plain-summation windowed-DFT oracle (<=1e-9)"
        ),
    );
}

// ---------------------------------------------------------------------------
// 7. Descriptor invariances
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_descriptor_invariances() {
    let config = HarmonicConfig {
        window_len: 64,
        band_hz: (0.7, 4.0),
        eps_h: 1e-6,
    };
    let gains = [1.0, 2.0, 0.5];
    let data: Vec<f64> = (0..64)
        .flat_map(|t| {
            let theta = 2.0 * PI * 4.0 * t as f64 / 64.0;
            let pulse = 3.0 * theta.cos() + 1.2 * (2.0 * theta).cos();
            gains.iter().map(move |g| g * pulse)
        })
        .collect();
    let tokens = TokenSequence::new(64, 3, 30.0, data).unwrap();
    let base = descriptor(&tokens, &config).unwrap().ratios;

    let mut worst_rescale = 0.0f64;
    for &c in &[0.5, 2.0, 5.0, 10.0] {
        let scaled = descriptor(&tokens.scaled(c).unwrap(), &config)
            .unwrap()
            .ratios;
        for (got, want) in scaled.iter().zip(&base) {
            worst_rescale = worst_rescale.max((got - want).abs());
        }
    }

    let mut rotations_exact = true;
    for &shift in &[1usize, 7, 30] {
        let rotated = descriptor(&tokens.rotated(shift), &config).unwrap().ratios;
        for (t0, got) in rotated.iter().enumerate() {
            rotations_exact &= got.to_bits() == base[(t0 + shift) % 64].to_bits();
        }
    }

    let passed = worst_rescale <= 1e-9 && rotations_exact;
    report(
        7,
        passed,
        &format!(
            "positive rescaling by {{0.5, 2, 5, 10}} moves no ratio by more than \
             {worst_rescale:.2e} (<=1e-9); cyclic rotation by {{1, 7, 30}} tokens rotates \
             the ratios bit-exactly: {rotations_exact}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. Loss endpoints and linearity
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_loss_endpoints_and_linearity() {
    let y: Vec<f64> = (0..100).map(|i| unit_f64(8, i as u64)).collect();
    let negated: Vec<f64> = y.iter().map(|v| -v).collect();
    let at_self = neg_pearson(&y, &y).unwrap();
    let at_negation = neg_pearson(&y, &negated).unwrap();

    let mut worst_combined = 0.0f64;
    for (l_sup, l_hot) in [(0.0, 0.0), (0.3, 0.5), (1.2, 0.0), (0.7, 1.3)] {
        let got = combined_loss(l_sup, l_hot, 0.1);
        worst_combined = worst_combined.max((got - (l_sup + 0.1 * l_hot)).abs());
    }
    let hot_slope = combined_loss(0.3, 1.5, 0.1) - combined_loss(0.3, 0.5, 0.1) - 0.1;
    let sup_slope = combined_loss(0.55, 0.5, 0.1) - combined_loss(0.3, 0.5, 0.1) - 0.25;

    let passed = at_self.abs() <= 1e-12
        && (at_negation - 2.0).abs() <= 1e-12
        && worst_combined <= 1e-12
        && hot_slope.abs() <= 1e-12
        && sup_slope.abs() <= 1e-12;
    report(
        8,
        passed,
        &format!(
            "neg_pearson(y, y) = {at_self:.2e} and neg_pearson(y, -y) - 2 = {:.2e} \
             (both <=1e-12); combined loss at gamma=0.1 matches l_sup + 0.1*l_hot within \
             {worst_combined:.2e} and is linear in each argument within 1e-12",
            at_negation - 2.0
        ),
    );
}

// ---------------------------------------------------------------------------
// 9. Metrics contracts
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_metrics_contracts() {
    let hand = metrics(&[60.0, 62.0, 64.0], &[61.0, 61.0, 65.0]).unwrap();
    let mape_by_hand = (100.0 / 3.0) * (1.0 / 60.0 + 1.0 / 62.0 + 1.0 / 64.0);
    let hand_ok = (hand.mae - 1.0).abs() <= 1e-6
        && (hand.rmse - 1.0).abs() <= 1e-6
        && (hand.mape_percent - mape_by_hand).abs() <= 1e-6;

    let gt: Vec<f64> = (0..1000)
        .map(|i| 40.0 + 160.0 * unit_f64(90, i as u64))
        .collect();
    let pred: Vec<f64> = gt
        .iter()
        .enumerate()
        .map(|(i, v)| v + 10.0 * (unit_f64(91, i as u64) - 0.5))
        .collect();
    let noisy = metrics(&gt, &pred).unwrap();
    let ordering_ok = noisy.rmse >= noisy.mae - 1e-12;

    let short: Vec<f64> = (0..50)
        .map(|i| 50.0 + 100.0 * unit_f64(92, i as u64))
        .collect();
    let up: Vec<f64> = short.iter().map(|v| 1.7 * v + 3.0).collect();
    let down: Vec<f64> = short.iter().map(|v| -2.0 * v + 1.0).collect();
    let r_up = metrics(&short, &up).unwrap().pearson_r.unwrap();
    let r_down = metrics(&short, &down).unwrap().pearson_r.unwrap();
    let affine_ok = (r_up - 1.0).abs() <= 1e-9 && (r_down + 1.0).abs() <= 1e-9;

    let passed = hand_ok && ordering_ok && affine_ok;
    report(
        9,
        passed,
        &format!(
            "gt=[60,62,64], pred=[61,61,65]: MAE={}, RMSE={}, MAPE={:.7}% — each within 1e-6 \
             of the hand arithmetic, whose MAPE is (100/3)(1/60+1/62+1/64) = {:.7}%, not the \
             oft-misquoted 1.638%; RMSE {:.4} >= MAE {:.4} on 1000 random pairs; correlation \
             is +1/-1 under positive/negative affine maps within 1e-9",
            hand.mae, hand.rmse, hand.mape_percent, mape_by_hand, noisy.rmse, noisy.mae
        ),
    );
}

// ---------------------------------------------------------------------------
// 10. End-to-end pulse preservation
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_end_to_end_pulse_preservation() {
    let spec = SynthSpec {
        hr_bpm: 72.0,
        fps: 30.0,
        num_frames: 512,
        height: 72,
        width: 72,
        ellipse_center: (36.0, 36.0),
        ellipse_axes: (20.0, 14.0),
        pulse_amp: 0.02,
        tint: [0.05, 0.0, -0.03],
        illum_gradient: (0.2, -0.1),
        noise_sigma: 0.0,
        harmonic2_rel: 0.3,
    };

    let started = Instant::now();
    let (clip, gt) = gen_clip(&spec, 11).unwrap();
    let reference = gen_reference([0.0, 0.08, 0.05], (-0.15, 0.1), 72, 72, 4242).unwrap();
    let mask = LowFreqMask::build(72, 72, 0.05).unwrap();
    let stylized = fda_clip(&clip, &reference, &mask).unwrap();

    let mode = dominant_pulse_mode(&spec, &mask).unwrap();
    let probe = extract_mode_signal(&stylized, mode, 1, &mask).unwrap();
    let hr = hr_from_signal(&probe, spec.fps, (0.7, 4.0)).unwrap();
    let bin_bpm = 60.0 * spec.fps / spec.num_frames as f64; // 3.515625 at this length
    let hr_error = (hr - gt.hr_bpm).abs();

    let reference_spectrum = dft2(&reference);
    let mut worst_amp = 0.0f64;
    for frame in stylized.frames() {
        let spectrum = dft2(frame);
        for c in 0..3 {
            for u in 0..72 {
                for v in 0..72 {
                    if !mask.contains(u, v) {
                        continue;
                    }
                    let want = reference_spectrum.get(c, u, v).norm();
                    let dev = (spectrum.get(c, u, v).norm() - want).abs() / want.max(1e-12);
                    worst_amp = worst_amp.max(dev);
                }
            }
        }
    }
    let elapsed = started.elapsed();

    let passed = hr_error <= bin_bpm && worst_amp <= 1e-3 && elapsed < Duration::from_secs(30);
    report(
        10,
        passed,
        &format!(
            "512-frame 72 bpm clip stylized against a differently-tinted reference at \
             beta=0.05: heart rate recovered at {hr:.4} bpm, off by {hr_error:.4} \
             (<= one bin = {bin_bpm} bpm); stylized low-band amplitudes match the reference \
             within {worst_amp:.1e} relative (<=1e-3) on all 512 frames; {:.2} s (<30 s)",
            elapsed.as_secs_f64()
        ),
    );
}

// ---------------------------------------------------------------------------
// 11. Performance budget
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_performance_budget() {
    let frames: Vec<Frame> = (0..300)
        .map(|i| random_frame(3, 72, 72, 5000 + i))
        .collect();
    let clip = Clip::new(frames).unwrap();
    let reference = random_frame(3, 72, 72, 777);
    let mask = LowFreqMask::build(72, 72, 0.05).unwrap();

    let started = Instant::now();
    let stylized = with_max_threads(Some(1), || fda_clip(&clip, &reference, &mask)).unwrap();
    let transfer_time = started.elapsed();
    assert_eq!(stylized.len(), 300);

    let values: Vec<f64> = (0..128 * 128)
        .map(|i| 2.0 * unit_f64(33, i as u64))
        .collect();
    let cost = CostMatrix::from_values(128, 128, values).unwrap();
    let marginals = uniform_marginals(128);
    let config = SinkhornConfig {
        epsilon: 0.05,
        iters: 40,
        tol: 0.0,
    };
    let started = Instant::now();
    let output = sinkhorn_log(&cost, &marginals, &marginals, &config).unwrap();
    let solve_time = started.elapsed();
    assert_eq!(output.iters_run, 40);

    let passed = transfer_time < Duration::from_secs(2) && solve_time < Duration::from_millis(50);
    report(
        11,
        passed,
        &format!(
            "single-threaded amplitude transfer of 300x3x72x72 took {} ms (<2 s); one \
             128x128 40-iteration entropic solve took {:.2} ms (<50 ms)",
            transfer_time.as_millis(),
            solve_time.as_secs_f64() * 1e3
        ),
    );
}

// ---------------------------------------------------------------------------
// 12. Deterministic sweep harness
// ---------------------------------------------------------------------------

fn run_sweep_grid(out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hot"))
        .arg("--out")
        .arg(out)
        .args([
            "sweep",
            "--betas",
            "0.0,0.01,0.05,0.1,0.5",
            "--lambdas",
            "0.0,0.3,0.6",
            "--iters",
            "5,20,40",
        ])
        .output()
        .expect("binary should spawn")
}

#[test]
fn criterion_12_deterministic_sweep_harness() {
    let first_dir = tempfile::tempdir().unwrap();
    let second_dir = tempfile::tempdir().unwrap();

    let started = Instant::now();
    let first = run_sweep_grid(first_dir.path());
    let second = run_sweep_grid(second_dir.path());
    let elapsed = started.elapsed();
    let both_succeeded = first.status.success() && second.status.success();

    let first_bytes = fs::read(first_dir.path().join("sweep.csv")).unwrap();
    let second_bytes = fs::read(second_dir.path().join("sweep.csv")).unwrap();
    let byte_identical = first_bytes == second_bytes;

    let text = String::from_utf8(first_bytes.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let row_count_ok = lines.len() == 46; // header + 5*3*3 cells

    let mut in_grid_order = true;
    let mut all_finite = true;
    let mut expected = Vec::new();
    for beta in [0.0, 0.01, 0.05, 0.1, 0.5] {
        for lambda in [0.0, 0.3, 0.6] {
            for iters in [5.0, 20.0, 40.0] {
                expected.push((beta, lambda, iters));
            }
        }
    }
    for (row, want) in lines[1..].iter().zip(&expected) {
        let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        in_grid_order &= (cells[0], cells[1], cells[2]) == *want;
        all_finite &= cells.iter().all(|v| v.is_finite());
    }

    let passed = both_succeeded && byte_identical && row_count_ok && in_grid_order && all_finite;
    report(
        12,
        passed,
        &format!(
            "5x3x3 grid over (beta, lambda_h, iterations): {} rows in fixed \
             beta-outer/lambda-middle/iterations-inner order, every cell finite, and an \
             immediate rerun is byte-identical: {byte_identical}; both sweeps together took \
             {:.2} s",
            lines.len() - 1,
            elapsed.as_secs_f64()
        ),
    );
}
