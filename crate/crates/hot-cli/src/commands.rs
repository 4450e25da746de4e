//! The six pipeline commands. Every command validates and computes fully
//! before creating any output file, prints results as `key=value` lines, and
//! produces byte-identical outputs when rerun with the same inputs and seed.

use std::path::Path;

use hot_core::harmonic::{descriptor, pool_tokens, FeatureMap, HarmonicConfig};
use hot_core::metrics::{combined_loss, hr_from_signal, metrics, neg_pearson};
use hot_core::spectral::{dft2, fda_clip, Clip, Frame, LowFreqMask};
use hot_core::synth::{
    dominant_pulse_mode, extract_mode_signal, gen_clip, gen_reference, skin_pattern,
    surrogate_features, ChannelLift, SynthSpec, CHANNELS,
};
use hot_core::tensor_io::{read_tensor, write_signal_csv, write_tensor, SignalTable};
use hot_core::transport::{cost_matrix, hot_loss, sinkhorn_log, uniform_marginals, SinkhornConfig};
use hot_core::{parallel, rng, RunConfig};

use crate::error::CliError;

/// Stream tag separating the reference frame's texture from the clip's.
const TAG_REFERENCE: u64 = 0x10;
/// Stream tag for the sweep's synthesized target-domain clip.
const TAG_TARGET: u64 = 0x11;

/// Appearance used for generated reference frames and the sweep's target
/// domain when the user does not override it.
const REF_TINT: [f64; CHANNELS] = [0.0, 0.06, 0.08];
const REF_ILLUM: (f64, f64) = (-0.15, 0.1);

/// Feature dimensionality and temporal stride of the sweep's surrogate
/// backbone.
const SWEEP_DIM: usize = 4;
const SWEEP_STRIDE: usize = 4;

fn widen(data: &[f32]) -> Vec<f64> {
    data.iter().map(|&v| v as f64).collect()
}

fn narrow(data: &[f64]) -> Vec<f32> {
    data.iter().map(|&v| v as f32).collect()
}

fn clip_from_tensor(path: &Path) -> Result<Clip, CliError> {
    let (dims, data) = read_tensor(path)?;
    let [t, c, h, w] = dims[..] else {
        return Err(CliError::invalid(format!(
            "{}: expected a rank-4 [frames, channels, height, width] tensor, got rank {}",
            path.display(),
            dims.len()
        )));
    };
    let data = widen(&data);
    let frame_len = c * h * w;
    let frames = (0..t)
        .map(|i| Frame::new(c, h, w, data[i * frame_len..(i + 1) * frame_len].to_vec()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Clip::new(frames)?)
}

fn frame_from_tensor(path: &Path) -> Result<Frame, CliError> {
    let (dims, data) = read_tensor(path)?;
    let [c, h, w] = dims[..] else {
        return Err(CliError::invalid(format!(
            "{}: expected a rank-3 [channels, height, width] tensor, got rank {}",
            path.display(),
            dims.len()
        )));
    };
    Ok(Frame::new(c, h, w, widen(&data))?)
}

fn features_from_tensor(path: &Path, rate_hz: f64) -> Result<FeatureMap, CliError> {
    let (dims, data) = read_tensor(path)?;
    let [d, t, h, w] = dims[..] else {
        return Err(CliError::invalid(format!(
            "{}: expected a rank-4 [dim, steps, height, width] tensor, got rank {}",
            path.display(),
            dims.len()
        )));
    };
    Ok(FeatureMap::new(d, t, h, w, rate_hz, widen(&data))?)
}

fn write_clip_tensor(path: &Path, clip: &Clip) -> Result<(), CliError> {
    let shape = clip.shape();
    let mut data = Vec::with_capacity(clip.len() * shape.len());
    for frame in clip.frames() {
        data.extend(frame.as_slice().iter().map(|&v| v as f32));
    }
    write_tensor(
        path,
        &[clip.len(), shape.channels, shape.height, shape.width],
        &data,
    )?;
    Ok(())
}

fn harmonic_config(config: &RunConfig) -> HarmonicConfig {
    HarmonicConfig {
        window_len: config.window_len,
        band_hz: config.band_hz,
        eps_h: config.eps_h,
    }
}

fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

fn parse_triplet(name: &str, values: &[f64]) -> Result<[f64; 3], CliError> {
    match values {
        [a, b, c] => Ok([*a, *b, *c]),
        other => Err(CliError::invalid(format!(
            "--{name} needs exactly three comma-separated values, got {}",
            other.len()
        ))),
    }
}

fn parse_pair(name: &str, values: &[f64]) -> Result<(f64, f64), CliError> {
    match values {
        [a, b] => Ok((*a, *b)),
        other => Err(CliError::invalid(format!(
            "--{name} needs exactly two comma-separated values, got {}",
            other.len()
        ))),
    }
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

pub fn cmd_synth(
    config: &RunConfig,
    out: &Path,
    spec_path: Option<&Path>,
    ref_tint: Option<&[f64]>,
    ref_illum: Option<&[f64]>,
) -> Result<(), CliError> {
    let spec = match spec_path {
        Some(path) => SynthSpec::parse(&std::fs::read_to_string(path)?)?,
        None => SynthSpec::default(),
    };
    if spec.num_frames < 2 {
        return Err(CliError::invalid(
            "num_frames must be at least 2 so the ground-truth table has two rows",
        ));
    }
    let tint = match ref_tint {
        Some(values) => parse_triplet("ref-tint", values)?,
        None => REF_TINT,
    };
    let illum = match ref_illum {
        Some(values) => parse_pair("ref-illum", values)?,
        None => REF_ILLUM,
    };

    let (clip, gt) = gen_clip(&spec, config.seed)?;
    let reference = gen_reference(
        tint,
        illum,
        spec.height,
        spec.width,
        rng::derive(config.seed, TAG_REFERENCE),
    )?;
    let table = SignalTable::new(spec.fps, vec!["gt_bvp".to_string()], vec![gt.bvp.clone()])
        .map_err(|e| CliError::invalid(e.to_string()))?;

    ensure_out_dir(out)?;
    let clip_path = out.join("clip.tensor");
    let ref_path = out.join("ref.tensor");
    let gt_path = out.join("gt.csv");
    write_clip_tensor(&clip_path, &clip)?;
    write_tensor(
        &ref_path,
        &[CHANNELS, spec.height, spec.width],
        &narrow(reference.as_slice()),
    )?;
    write_signal_csv(&gt_path, &table)?;

    println!("frames={}", spec.num_frames);
    println!("shape={}x{}x{}", CHANNELS, spec.height, spec.width);
    println!("hr_bpm={}", gt.hr_bpm);
    println!("clip={}", clip_path.display());
    println!("reference={}", ref_path.display());
    println!("gt={}", gt_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// fda
// ---------------------------------------------------------------------------

pub fn cmd_fda(
    config: &RunConfig,
    out: &Path,
    clip_path: &Path,
    ref_path: &Path,
) -> Result<(), CliError> {
    let clip = clip_from_tensor(clip_path)?;
    let reference = frame_from_tensor(ref_path)?;
    let shape = clip.shape();
    let mask = LowFreqMask::build(shape.height, shape.width, config.beta)?;
    let stylized = fda_clip(&clip, &reference, &mask)?;

    // Self-check: the transfer must not have touched anything outside the
    // mask. Deviation is relative to the coefficient, floored at 1e-9 of the
    // frame's largest amplitude so near-zero bins do not blow the ratio up.
    let mut max_rel_dev: f64 = 0.0;
    for (before, after) in clip.frames().iter().zip(stylized.frames()) {
        let spec_before = dft2(before);
        let spec_after = dft2(after);
        let mut peak: f64 = 0.0;
        for c in 0..shape.channels {
            for u in 0..shape.height {
                for v in 0..shape.width {
                    peak = peak.max(spec_before.get(c, u, v).norm());
                }
            }
        }
        let floor = (peak * 1e-9).max(f64::MIN_POSITIVE);
        for c in 0..shape.channels {
            for u in 0..shape.height {
                for v in 0..shape.width {
                    if mask.contains(u, v) {
                        continue;
                    }
                    let b = spec_before.get(c, u, v);
                    let a = spec_after.get(c, u, v);
                    max_rel_dev = max_rel_dev.max((a - b).norm() / b.norm().max(floor));
                }
            }
        }
    }

    ensure_out_dir(out)?;
    let out_path = out.join("stylized.tensor");
    write_clip_tensor(&out_path, &stylized)?;

    println!("beta={}", config.beta);
    println!("mask_census={}", mask.census());
    println!("out_of_band_max_rel_dev={max_rel_dev:e}");
    println!("stylized={}", out_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// descriptor
// ---------------------------------------------------------------------------

pub struct DescriptorArgs<'a> {
    pub features: Option<&'a Path>,
    pub rate: Option<f64>,
    pub clip: Option<&'a Path>,
    pub fps: Option<f64>,
    pub dim: Option<usize>,
    pub stride: Option<usize>,
    pub identity_lift: bool,
}

pub fn cmd_descriptor(
    config: &RunConfig,
    out: &Path,
    args: &DescriptorArgs<'_>,
) -> Result<(), CliError> {
    let mut from_clip = false;
    let features = match (args.features, args.clip) {
        (Some(_), Some(_)) => {
            return Err(CliError::invalid(
                "give either --features or --clip, not both",
            ))
        }
        (None, None) => return Err(CliError::invalid("one of --features or --clip is required")),
        (Some(path), None) => {
            if args.fps.is_some() || args.dim.is_some() || args.stride.is_some() {
                return Err(CliError::invalid(
                    "--fps/--dim/--stride apply only to --clip input",
                ));
            }
            let rate = args
                .rate
                .ok_or_else(|| CliError::invalid("--rate is required with --features"))?;
            features_from_tensor(path, rate)?
        }
        (None, Some(path)) => {
            if args.rate.is_some() {
                return Err(CliError::invalid("--rate applies only to --features input"));
            }
            let fps = args
                .fps
                .ok_or_else(|| CliError::invalid("--fps is required with --clip"))?;
            let dim = args
                .dim
                .ok_or_else(|| CliError::invalid("--dim is required with --clip"))?;
            let stride = args
                .stride
                .ok_or_else(|| CliError::invalid("--stride is required with --clip"))?;
            let clip = clip_from_tensor(path)?;
            let lift = if args.identity_lift {
                ChannelLift::Identity
            } else {
                ChannelLift::Seeded(config.seed)
            };
            from_clip = true;
            surrogate_features(&clip, fps, dim, stride, lift)?
        }
    };

    let tokens = pool_tokens(&features);
    let sequence = descriptor(&tokens, &harmonic_config(config))?;
    let ratio_mean = sequence.ratios.iter().sum::<f64>() / sequence.ratios.len() as f64;

    ensure_out_dir(out)?;
    if from_clip {
        let features_path = out.join("features.tensor");
        write_tensor(
            &features_path,
            &[
                features.dim(),
                features.t_prime(),
                features.height(),
                features.width(),
            ],
            &narrow(features.as_slice()),
        )?;
        println!("features={}", features_path.display());
    }
    let tokens_path = out.join("tokens.tensor");
    let ratios_path = out.join("ratios.tensor");
    write_tensor(
        &tokens_path,
        &[tokens.t_prime(), tokens.dim()],
        &narrow(tokens.as_slice()),
    )?;
    write_tensor(
        &ratios_path,
        &[sequence.ratios.len()],
        &narrow(&sequence.ratios),
    )?;

    println!("t_prime={}", tokens.t_prime());
    println!("dim={}", tokens.dim());
    println!("token_rate_hz={}", tokens.token_rate_hz());
    println!("ratio_mean={ratio_mean}");
    println!("tokens={}", tokens_path.display());
    println!("ratios={}", ratios_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// align
// ---------------------------------------------------------------------------

pub fn cmd_align(
    config: &RunConfig,
    out: &Path,
    a_path: &Path,
    b_path: &Path,
    rate: f64,
) -> Result<(), CliError> {
    let features_a = features_from_tensor(a_path, rate)?;
    let features_b = features_from_tensor(b_path, rate)?;
    let tokens_a = pool_tokens(&features_a);
    let tokens_b = pool_tokens(&features_b);
    let hcfg = harmonic_config(config);
    let desc_a = descriptor(&tokens_a, &hcfg)?;
    let desc_b = descriptor(&tokens_b, &hcfg)?;

    let cost = cost_matrix(
        &tokens_a,
        &tokens_b,
        &desc_a.ratios,
        &desc_b.ratios,
        config.lambda_h,
    )?;
    let a = uniform_marginals(tokens_a.t_prime());
    let b = uniform_marginals(tokens_b.t_prime());
    let solver = SinkhornConfig {
        epsilon: config.sinkhorn_epsilon,
        iters: config.sinkhorn_iters,
        tol: 0.0,
    };
    let output = sinkhorn_log(&cost, &a, &b, &solver)?;
    let loss = hot_loss(&output.plan, &cost)?;

    ensure_out_dir(out)?;
    let plan_path = out.join("plan.tensor");
    let desc_a_path = out.join("desc_a.tensor");
    let desc_b_path = out.join("desc_b.tensor");
    write_tensor(
        &plan_path,
        &[output.plan.rows(), output.plan.cols()],
        &narrow(output.plan.as_slice()),
    )?;
    write_tensor(
        &desc_a_path,
        &[desc_a.ratios.len()],
        &narrow(&desc_a.ratios),
    )?;
    write_tensor(
        &desc_b_path,
        &[desc_b.ratios.len()],
        &narrow(&desc_b.ratios),
    )?;

    println!("hot_loss={loss}");
    println!("marginal_l1={:e}", output.col_marginal_l1);
    println!("iters_run={}", output.iters_run);
    println!("plan={}", plan_path.display());
    println!("desc_a={}", desc_a_path.display());
    println!("desc_b={}", desc_b_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

pub fn cmd_eval(
    config: &RunConfig,
    out: &Path,
    gt_path: &Path,
    pred_path: &Path,
) -> Result<(), CliError> {
    let gt_table = hot_core::tensor_io::read_signal_csv(gt_path)?;
    let pred_table = hot_core::tensor_io::read_signal_csv(pred_path)?;
    if gt_table.columns.len() != pred_table.columns.len() {
        return Err(CliError::invalid(format!(
            "column count mismatch: {} ground-truth vs {} predicted",
            gt_table.columns.len(),
            pred_table.columns.len()
        )));
    }

    let band = config.band_hz;
    let gt_hrs = gt_table
        .columns
        .iter()
        .map(|column| hr_from_signal(column, gt_table.sample_rate_hz, band))
        .collect::<Result<Vec<_>, _>>()?;
    let pred_hrs = pred_table
        .columns
        .iter()
        .map(|column| hr_from_signal(column, pred_table.sample_rate_hz, band))
        .collect::<Result<Vec<_>, _>>()?;
    let report = metrics(&gt_hrs, &pred_hrs)?;

    ensure_out_dir(out)?;
    let ba_path = out.join("bland_altman.csv");
    let mut ba = String::from("mean_bpm,diff_bpm\n");
    for (gt_hr, pred_hr) in gt_hrs.iter().zip(&pred_hrs) {
        ba.push_str(&format!(
            "{},{}\n",
            (gt_hr + pred_hr) / 2.0,
            pred_hr - gt_hr
        ));
    }
    std::fs::write(&ba_path, ba)?;

    println!("n={}", report.n);
    println!("mae={}", report.mae);
    println!("rmse={}", report.rmse);
    println!("mape_percent={}", report.mape_percent);
    match report.pearson_r {
        Some(r) => println!("r={r}"),
        None => eprintln!(
            "warning: r omitted — it needs at least two pairs with non-constant heart rates"
        ),
    }
    println!("bland_altman={}", ba_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

pub struct SweepGrid {
    pub betas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub iters: Vec<usize>,
}

impl SweepGrid {
    fn validate(&self) -> Result<(), CliError> {
        if self.betas.is_empty() || self.lambdas.is_empty() || self.iters.is_empty() {
            return Err(CliError::invalid("sweep grid lists must be non-empty"));
        }
        for &beta in &self.betas {
            if !(beta.is_finite() && (0.0..1.0).contains(&beta)) {
                return Err(CliError::invalid(format!("beta {beta} outside [0, 1)")));
            }
        }
        for &lambda in &self.lambdas {
            if !(lambda.is_finite() && lambda >= 0.0) {
                return Err(CliError::invalid(format!("lambda_h {lambda} must be >= 0")));
            }
        }
        for &iters in &self.iters {
            if iters == 0 {
                return Err(CliError::invalid("iteration counts must be >= 1"));
            }
        }
        Ok(())
    }

    fn len(&self) -> usize {
        self.betas.len() * self.lambdas.len() * self.iters.len()
    }

    /// Cell for a flat index, iterating beta outermost and iters innermost.
    fn cell(&self, flat: usize) -> (f64, f64, usize) {
        let per_beta = self.lambdas.len() * self.iters.len();
        let beta = self.betas[flat / per_beta];
        let rem = flat % per_beta;
        let lambda = self.lambdas[rem / self.iters.len()];
        let iters = self.iters[rem % self.iters.len()];
        (beta, lambda, iters)
    }
}

fn hot_threads_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("HOT_THREADS") {
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::invalid(format!(
                "HOT_THREADS must be a positive integer, got `{raw}`"
            ))),
        },
        Err(_) => Ok(None),
    }
}

/// One sweep cell: stylize the source clip toward the target appearance,
/// align surrogate tokens of the stylized clip against a clip recorded in the
/// target domain, and score pulse recovery from a probe mode of the stylized
/// clip.
fn sweep_cell(
    config: &RunConfig,
    spec: &SynthSpec,
    beta: f64,
    lambda_h: f64,
    iters: usize,
) -> Result<String, CliError> {
    let seed = config.seed;
    let mask = LowFreqMask::build(spec.height, spec.width, beta)?;
    let (clip, gt) = gen_clip(spec, seed)?;
    let reference = gen_reference(
        REF_TINT,
        REF_ILLUM,
        spec.height,
        spec.width,
        rng::derive(seed, TAG_REFERENCE),
    )?;
    let stylized = fda_clip(&clip, &reference, &mask)?;

    let mut target_spec = spec.clone();
    target_spec.tint = REF_TINT;
    target_spec.illum_gradient = REF_ILLUM;
    let (target_clip, _) = gen_clip(&target_spec, rng::derive(seed, TAG_TARGET))?;

    let lift = ChannelLift::Seeded(seed);
    let features_a = surrogate_features(&stylized, spec.fps, SWEEP_DIM, SWEEP_STRIDE, lift)?;
    let features_b = surrogate_features(&target_clip, spec.fps, SWEEP_DIM, SWEEP_STRIDE, lift)?;
    let tokens_a = pool_tokens(&features_a);
    let tokens_b = pool_tokens(&features_b);
    let hcfg = harmonic_config(config);
    let desc_a = descriptor(&tokens_a, &hcfg)?;
    let desc_b = descriptor(&tokens_b, &hcfg)?;
    let cost = cost_matrix(
        &tokens_a,
        &tokens_b,
        &desc_a.ratios,
        &desc_b.ratios,
        lambda_h,
    )?;
    let marginal_a = uniform_marginals(tokens_a.t_prime());
    let marginal_b = uniform_marginals(tokens_b.t_prime());
    let solver = SinkhornConfig {
        epsilon: config.sinkhorn_epsilon,
        iters,
        tol: 0.0,
    };
    let output = sinkhorn_log(&cost, &marginal_a, &marginal_b, &solver)?;
    let loss = hot_loss(&output.plan, &cost)?;

    let mode = dominant_pulse_mode(spec, &mask)?;
    let mut probe = extract_mode_signal(&stylized, mode, 1, &mask)?;
    // The probe reads the pulse through the pattern's DFT coefficient, whose
    // sign is the modulation sign; orient it so correlation is meaningful.
    let pattern = Frame::new(1, spec.height, spec.width, skin_pattern(spec)?)?;
    if dft2(&pattern).get(0, mode.0, mode.1).re < 0.0 {
        for value in &mut probe {
            *value = -*value;
        }
    }
    let l_sup = neg_pearson(&probe, &gt.bvp)?;
    let combined = combined_loss(l_sup, loss, config.gamma);
    let hr = hr_from_signal(&probe, spec.fps, config.band_hz)?;
    let hr_err = (hr - gt.hr_bpm).abs();

    Ok(format!(
        "{beta},{lambda_h},{iters},{loss},{marginal},{l_sup},{combined},{hr},{hr_err}",
        marginal = output.col_marginal_l1,
    ))
}

pub fn cmd_sweep(
    config: &RunConfig,
    out: &Path,
    spec_path: Option<&Path>,
    grid: &SweepGrid,
) -> Result<(), CliError> {
    grid.validate()?;
    let spec = match spec_path {
        Some(path) => SynthSpec::parse(&std::fs::read_to_string(path)?)?,
        None => SynthSpec::default(),
    };
    if spec.num_frames < 2 {
        return Err(CliError::invalid("num_frames must be at least 2"));
    }
    let threads = hot_threads_cap()?;

    // Cells are independent; rows are buffered and written in grid order no
    // matter which cell finishes first.
    let rows: Vec<String> = parallel::with_max_threads(threads, || {
        parallel::try_map_indexed(grid.len(), |flat| {
            let (beta, lambda_h, iters) = grid.cell(flat);
            sweep_cell(config, &spec, beta, lambda_h, iters)
        })
    })?;

    ensure_out_dir(out)?;
    let csv_path = out.join("sweep.csv");
    let mut text = String::from(
        "beta,lambda_h,sinkhorn_iters,hot_loss,marginal_l1,neg_pearson,combined_loss,hr_est_bpm,hr_abs_err_bpm\n",
    );
    for row in &rows {
        text.push_str(row);
        text.push('\n');
    }
    std::fs::write(&csv_path, text)?;

    println!("cells={}", grid.len());
    println!("sweep={}", csv_path.display());
    Ok(())
}
