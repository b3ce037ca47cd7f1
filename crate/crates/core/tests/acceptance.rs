//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and fails
//! if any criterion fails. Full-scale criteria run only when the environment
//! points at the required manifests and upstream registry.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prosody_probe::analysis::{
    contribution_from_set, integrate_layers, layer_contribution, IntegrationSpec,
};
use prosody_probe::data::{load_manifest, FeatureCache, Task, Waveform};
use prosody_probe::probe::{
    aggregate, batch_masked_mse, masked_mse, raw_weight_gradient, ClassificationSet, FeatureSource,
    FrameExample, LayerWeights, LinearHead, MaskedLoss, Normalization, PooledExample, ProbeConfig,
    RegressionSet, TrainedProbe, TrainingSet,
};
use prosody_probe::prosody::{align_track, extract_pitch, frame_rms, ProsodyKind, ProsodyTrack};
use prosody_probe::synth::{harmonic_tone, sine};
use prosody_probe::tasks::{
    run_classification_task, run_fvp, run_fvp_baseline, run_pror, run_crosslingual, ClassificationTask,
    HorizonSpec, RnnConfig, RunOptions, TaskSpec,
};
use prosody_probe::upstream::{
    assert_causality, extract_layer_features, future_perturbation_test, Fbank, LayerFeatureStack, Mode,
    MockTransformer, MockUpstream, PlantedLayer, Upstream, UpstreamRegistry, CAUSALITY_TOLERANCE,
};

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    id: &'static str,
    status: Status,
    detail: String,
    seconds: f64,
}

type Check = Result<(bool, String), String>;

fn run(id: &'static str, f: impl FnOnce() -> Check) -> Outcome {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let (status, detail) = match result {
        Ok(Ok((true, d))) => (Status::Pass, d),
        Ok(Ok((false, d))) => (Status::Fail, d),
        Ok(Err(skip)) => (Status::Skip, skip),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (Status::Fail, format!("panicked: {msg}"))
        }
    };
    let outcome = Outcome {
        id,
        status,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    };
    let tag = match outcome.status {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Skip => "SKIP",
    };
    println!("[{tag}] {:<3} {} ({:.1}s)", outcome.id, outcome.detail, outcome.seconds);
    outcome
}

fn stack(layers: Array3<f32>, stride_ms: u32, id: &str, mode: Mode) -> LayerFeatureStack {
    LayerFeatureStack::new(layers, stride_ms, id, mode).unwrap()
}

fn random_stack(rng: &mut ChaCha8Rng, id: &str) -> LayerFeatureStack {
    let l = rng.random_range(2..9);
    let t = rng.random_range(1..21);
    let d = rng.random_range(1..9);
    let arr = Array3::from_shape_fn((l, t, d), |_| rng.random_range(-5.0f32..5.0));
    stack(arr, 20, id, Mode::Full)
}

fn quick_config(lr: f64, steps: usize, seed: u64) -> ProbeConfig {
    ProbeConfig {
        learning_rate: lr,
        train_steps: steps,
        seed,
        ..ProbeConfig::default()
    }
}

fn frame_examples(
    upstream: &dyn Upstream,
    mode: Mode,
    waves: &[Waveform],
    offset: usize,
) -> RegressionSet {
    let stride = upstream.spec().stride_ms;
    let examples = waves
        .iter()
        .map(|w| {
            let st = extract_layer_features(upstream, w, mode).unwrap();
            let n = st.num_frames();
            let track = align_track(&extract_pitch(w, 10).unwrap(), stride, n).unwrap();
            FrameExample::new(w.utterance_id.clone(), FeatureSource::Memory(Arc::new(st)), n, &track, offset)
                .unwrap()
        })
        .collect();
    RegressionSet::from_stacks(examples).unwrap()
}

// 1a
fn masked_mse_correctness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa1);
    let cases = 1000;
    for _ in 0..cases {
        let n = rng.random_range(1..200);
        let p_voiced = rng.random_range(0.0..1.0);
        let values: Vec<f32> = (0..n).map(|_| rng.random_range(3.0f32..7.0)).collect();
        let voiced: Vec<bool> = (0..n).map(|_| rng.random_bool(p_voiced)).collect();
        let track = ProsodyTrack::new(ProsodyKind::Pitch, values, voiced.clone(), 10, "u").unwrap();
        let pred: Vec<f64> = (0..n).map(|_| rng.random_range(3.0..7.0)).collect();
        let perturbed: Vec<f64> = pred
            .iter()
            .zip(&voiced)
            .map(|(&p, &v)| if v { p } else { p + rng.random_range(-1e6..1e6) })
            .collect();
        let a = masked_mse(&pred, &track).unwrap();
        let b = masked_mse(&perturbed, &track).unwrap();
        let same = match (a, b) {
            (MaskedLoss::Loss(x), MaskedLoss::Loss(y)) => x.to_bits() == y.to_bits(),
            (MaskedLoss::NoVoicedFrames, MaskedLoss::NoVoicedFrames) => true,
            _ => false,
        };
        if !same {
            return Ok((false, format!("loss changed: {a:?} vs {b:?}")));
        }
    }
    let excluded = batch_masked_mse(&[MaskedLoss::Loss(0.25), MaskedLoss::NoVoicedFrames]) == Some(0.25);
    Ok((
        excluded,
        format!("{cases} random tracks: unvoiced perturbation changes loss by exactly 0; all-unvoiced utterances leave the batch mean unchanged: {excluded}"),
    ))
}

// 1b
fn causality() -> Check {
    let fbank = Fbank::new();
    let waves: Vec<Waveform> = (0..8).map(|s| common::glide_waveform(100 + s, 1.0)).collect();
    let horizon = HorizonSpec::new(120, 10).unwrap();
    let train = frame_examples(&fbank, Mode::Causal, &waves, horizon.frame_offset);
    let rnn = prosody_probe::tasks::rnn_baseline_train(
        &train,
        &RnnConfig {
            train_steps: 40,
            learning_rate: 1e-3,
            batch_size: 4,
            ..RnnConfig::default()
        },
    )
    .map_err(|e| e.to_string())
    .unwrap();
    let probe_audio = common::glide_waveform(7, 1.2);
    let baseline = future_perturbation_test(
        "fbank+rnn",
        |w| rnn.predict_array(&extract_layer_features(&fbank, w, Mode::Causal)?),
        &probe_audio,
        10,
    )
    .unwrap();

    let masked = MockTransformer::new("masked", 4, 32, 20, 7);
    let transformer = assert_causality(&masked, &probe_audio);

    let fvp_train = frame_examples(&masked, Mode::Causal, &waves, 6);
    let probe = prosody_probe::probe::train_probe(
        "FVP",
        &TrainingSet::Regression(fvp_train),
        &quick_config(1e-2, 100, 0),
    )
    .unwrap();
    let trained = future_perturbation_test(
        "masked+probe",
        |w| {
            let st = extract_layer_features(&masked, w, Mode::Causal)?;
            let p = probe.predict_frames(&st)?;
            let n = p.len();
            Ok(Array3::from_shape_vec((1, n, 1), p.into_iter().map(|v| v as f32).collect()).unwrap())
        },
        &probe_audio,
        20,
    )
    .unwrap();

    let leaky = assert_causality(&MockTransformer::unmasked("unmasked", 4, 32, 20, 7), &probe_audio);
    let pass = baseline.passed
        && baseline.cut_frames.len() == 3
        && transformer.passed
        && transformer.cut_frames.len() == 3
        && trained.passed
        && !leaky.passed;
    Ok((
        pass,
        format!(
            "max deviation at 3 cuts (tol {CAUSALITY_TOLERANCE:e}): fbank+rnn {:e}, masked transformer {:e}, masked transformer + FVP probe {:e}; unmasked control {:e} (must fail)",
            baseline.max_deviation, transformer.max_deviation, trained.max_deviation, leaky.max_deviation
        ),
    ))
}

// 1c
fn aggregation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc1);
    let mut worst_onehot = 0.0f64;
    let mut convex_ok = true;
    for s in 0..100 {
        let st = random_stack(&mut rng, &format!("s{s}"));
        let l = st.num_layers();
        let k = rng.random_range(0..l);
        let mut raw = vec![0.0; l];
        raw[k] = 60.0;
        let y = aggregate(&st, &LayerWeights::from_raw(raw, Normalization::Softmax)).unwrap();
        for ((t, d), v) in y.indexed_iter() {
            worst_onehot = worst_onehot.max((v - st.layers[[k, t, d]] as f64).abs());
        }
        let raw: Vec<f64> = (0..l).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y = aggregate(&st, &LayerWeights::from_raw(raw, Normalization::Softmax)).unwrap();
        for ((t, d), v) in y.indexed_iter() {
            let col = (0..l).map(|i| st.layers[[i, t, d]] as f64);
            let lo = col.clone().fold(f64::INFINITY, f64::min);
            let hi = col.fold(f64::NEG_INFINITY, f64::max);
            if *v < lo - 1e-12 || *v > hi + 1e-12 {
                convex_ok = false;
            }
        }
    }
    Ok((
        worst_onehot < 1e-5 && convex_ok,
        format!("one-hot limit max |y - x_k| = {worst_onehot:e} (tol 1e-5); convexity on 100 random stacks: {convex_ok}"),
    ))
}

// 1d
fn gradient_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1);
    let mut worst = 0.0f64;
    for instance in 0..10 {
        let l = rng.random_range(2..7);
        let d = rng.random_range(1..6);
        let data = if instance % 2 == 0 {
            let examples = (0..3)
                .map(|u| {
                    let t = rng.random_range(2..12);
                    let arr = Array3::from_shape_fn((l, t, d), |_| rng.random_range(-2.0f32..2.0));
                    let st = stack(arr, 20, &format!("u{u}"), Mode::Full);
                    let values: Vec<f32> = (0..t).map(|_| rng.random_range(-1.0f32..1.0)).collect();
                    let voiced: Vec<bool> = (0..t).map(|i| i == 0 || rng.random_bool(0.7)).collect();
                    let track = ProsodyTrack::new(ProsodyKind::Pitch, values, voiced, 20, "u").unwrap();
                    FrameExample::new(format!("u{u}"), FeatureSource::Memory(Arc::new(st)), t, &track, 0).unwrap()
                })
                .collect();
            TrainingSet::Regression(RegressionSet::from_stacks(examples).unwrap())
        } else {
            let classes = rng.random_range(2..5);
            let examples = (0..4)
                .map(|u| PooledExample {
                    id: format!("u{u}"),
                    layer_means: Array2::from_shape_fn((l, d), |_| rng.random_range(-2.0..2.0)),
                    layer_norms: vec![1.0; l],
                    label: u % classes,
                })
                .collect();
            TrainingSet::Classification(ClassificationSet::new(examples, classes).unwrap())
        };
        let out = data.output_dim();
        let head = LinearHead {
            weight: Array2::from_shape_fn((d, out), |_| rng.random_range(-1.0..1.0)),
            bias: ndarray::Array1::from_shape_fn(out, |_| rng.random_range(-1.0..1.0)),
        };
        let raw: Vec<f64> = (0..l).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (_, analytic) = raw_weight_gradient(&data, &raw, &head, Normalization::Softmax).unwrap();
        for k in 0..l {
            let h = 1e-6;
            let mut plus = raw.clone();
            plus[k] += h;
            let mut minus = raw.clone();
            minus[k] -= h;
            let lp = raw_weight_gradient(&data, &plus, &head, Normalization::Softmax).unwrap().0;
            let lm = raw_weight_gradient(&data, &minus, &head, Normalization::Softmax).unwrap().0;
            let numeric = (lp - lm) / (2.0 * h);
            let rel = (numeric - analytic[k]).abs() / numeric.abs().max(analytic[k].abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    Ok((
        worst < 1e-4,
        format!("10 random instances (regression and classification): max relative error {worst:e} (tol 1e-4)"),
    ))
}

// 1e
fn contribution_invariants() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xe1);
    let mut identity = true;
    let mut exact_scale = true;
    let mut worst_k3 = 0.0f64;
    for p in 0..20 {
        let l = rng.random_range(3..11);
        let d = rng.random_range(2..9);
        let stacks: Vec<LayerFeatureStack> = (0..rng.random_range(1..5))
            .map(|u| {
                let t = rng.random_range(1..30);
                let arr = Array3::from_shape_fn((l, t, d), |_| rng.random_range(-3.0f32..3.0));
                stack(arr, 20, &format!("p{p}u{u}"), Mode::Full)
            })
            .collect();
        let probe = TrainedProbe {
            task: "ProR".into(),
            layer_weights: LayerWeights::from_raw(
                (0..l).map(|_| rng.random_range(-3.0..3.0)).collect(),
                Normalization::Softmax,
            ),
            head: LinearHead::zeros(d, 1),
            config: ProbeConfig::default(),
            train_log: Vec::new(),
            fingerprint: String::new(),
        };
        let base = layer_contribution(&stacks, &probe, "m").unwrap();
        identity &= base.identity_holds() && base.c.iter().all(|&c| c >= 0.0);
        let j = rng.random_range(0..l);
        for k in [2.0f32, 0.5, 4.0, 3.0] {
            let scaled: Vec<LayerFeatureStack> = stacks
                .iter()
                .map(|s| {
                    let mut s = s.clone();
                    s.layers.index_axis_mut(ndarray::Axis(0), j).mapv_inplace(|v| v * k);
                    s
                })
                .collect();
            let prof = layer_contribution(&scaled, &probe, "m").unwrap();
            identity &= prof.identity_holds();
            let others_same = (0..l).filter(|&i| i != j).all(|i| prof.norms[i] == base.norms[i]);
            let expected = base.norms[j] * k as f64;
            if k == 3.0 {
                worst_k3 = worst_k3.max((prof.norms[j] - expected).abs() / expected);
                exact_scale &= others_same;
            } else {
                exact_scale &= others_same && prof.norms[j] == expected && prof.c[j] == base.c[j] * k as f64;
            }
        }
    }
    Ok((
        identity && exact_scale && worst_k3 < 1e-6,
        format!(
            "20 random profiles: c = norms * weights exactly: {identity}; scaling a layer by 2, 0.5, 4 scales its norm and c exactly: {exact_scale}; by 3 (f32 storage rounding) max rel dev {worst_k3:e}"
        ),
    ))
}

// 1f
fn frozen_upstream() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let manifest = common::glide_corpus(dir.path(), 10, 0.8, 5);
    let upstreams: Vec<Box<dyn Upstream>> = vec![
        Box::new(Fbank::new()),
        Box::new(MockUpstream::new("mock", 4, 8, 20, 1)),
        Box::new(MockTransformer::new("transformer", 3, 16, 20, 2)),
    ];
    let mut opts = RunOptions::new(quick_config(1e-2, 50, 0));
    opts.lr_sweep = false;
    let mut details = Vec::new();
    let mut pass = true;
    for up in &upstreams {
        let before = up.parameter_checksum();
        run_pror(up.as_ref(), &manifest, ProsodyKind::Pitch, None, &opts).unwrap();
        let horizon = HorizonSpec::new(120, up.spec().stride_ms).unwrap();
        run_fvp(up.as_ref(), &manifest, ProsodyKind::Energy, horizon, None, &opts).unwrap();
        let same = up.parameter_checksum() == before;
        pass &= same;
        details.push(format!("{} {}", up.spec().name, if same { "unchanged" } else { "CHANGED" }));
    }
    let fbank = Fbank::new();
    let before = fbank.parameter_checksum();
    run_fvp_baseline(
        &manifest,
        ProsodyKind::Pitch,
        HorizonSpec::new(120, 10).unwrap(),
        None,
        &RnnConfig {
            hidden: 8,
            train_steps: 20,
            ..RnnConfig::default()
        },
        false,
    )
    .unwrap();
    pass &= fbank.parameter_checksum() == before;
    Ok((pass, format!("checksums after ProR + FVP training: {}", details.join(", "))))
}

// 2a
fn pitch_tones() -> Check {
    let mut worst = 0.0f64;
    let mut min_voiced = 1.0f64;
    let mut means = Vec::new();
    for f in [110.0f64, 220.0, 440.0] {
        for samples in [sine(f, 1.0, 0.5), harmonic_tone(f, 1.0, 0.5, 4000.0)] {
            let track = extract_pitch(&Waveform::new("tone", samples), 10).unwrap();
            let voiced: Vec<f64> = track
                .values
                .iter()
                .zip(&track.voiced)
                .filter(|(_, &v)| v)
                .map(|(&x, _)| x as f64)
                .collect();
            min_voiced = min_voiced.min(voiced.len() as f64 / track.len() as f64);
            for v in &voiced {
                worst = worst.max((v - f.ln()).abs());
            }
            if !voiced.is_empty() {
                means.push((f, voiced.iter().sum::<f64>() / voiced.len() as f64));
            }
        }
    }
    let mean_of = |f: f64| {
        let v: Vec<f64> = means.iter().filter(|m| m.0 == f).map(|m| m.1).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    };
    let oct1 = mean_of(220.0) - mean_of(110.0);
    let oct2 = mean_of(440.0) - mean_of(220.0);
    let ln2 = std::f64::consts::LN_2;
    let pass = worst < 0.05 && min_voiced >= 0.9 && (oct1 - ln2).abs() < 0.05 && (oct2 - ln2).abs() < 0.05;
    Ok((
        pass,
        format!(
            "sine and harmonic tones at 110/220/440 Hz: max |log-f0 error| {worst:.5} (tol 0.05), min voiced fraction {min_voiced:.2}; octave steps {oct1:.5}, {oct2:.5} (ln 2 = {ln2:.5} ± 0.05)"
        ),
    ))
}

// 2b
fn energy_doubling() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb2);
    let x: Vec<f32> = (0..16000).map(|_| rng.random_range(-0.4f32..0.4)).collect();
    let doubled: Vec<f32> = x.iter().map(|v| v * 2.0).collect();
    let a = frame_rms(&x, 160);
    let b = frame_rms(&doubled, 160);
    let worst = a
        .iter()
        .zip(&b)
        .filter(|(r, _)| **r > 0.0)
        .map(|(r1, r2)| (r2.ln() - r1.ln() - std::f64::consts::LN_2).abs())
        .fold(0.0, f64::max);
    Ok((
        worst < 1e-12 && a.len() == 100,
        format!("{} frames: max |Δ log-energy − ln 2| = {worst:e}", a.len()),
    ))
}

// 2c
fn pror_end_to_end() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let manifest = common::glide_corpus(dir.path(), 200, 1.5, 2024);
    let fbank = Fbank::new();

    // Oracle: closed-form least squares on the same features and targets.
    let mut train_x = Vec::new();
    let mut train_y = Vec::new();
    let mut test = Vec::new();
    for r in &manifest.records {
        let w = prosody_probe::data::load_audio(r).unwrap();
        let st = extract_layer_features(&fbank, &w, Mode::Full).unwrap();
        let track = align_track(&extract_pitch(&w, 10).unwrap(), 10, st.num_frames()).unwrap();
        for t in (0..st.num_frames()).filter(|&t| track.voiced[t]) {
            let mut x: Vec<f64> = st.layers.slice(ndarray::s![0, t, ..]).iter().map(|&v| v as f64).collect();
            x.push(1.0);
            let y = track.values[t] as f64;
            match r.split {
                prosody_probe::data::Split::Named(prosody_probe::data::SplitName::Train) => {
                    train_x.push(x);
                    train_y.push(y);
                }
                prosody_probe::data::Split::Named(prosody_probe::data::SplitName::Test) => test.push((x, y)),
                _ => {}
            }
        }
    }
    let w = common::least_squares(&train_x, &train_y, 1e-6);
    let oracle = test
        .iter()
        .map(|(x, y)| (x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - y).powi(2))
        .sum::<f64>()
        / test.len() as f64;
    if oracle >= 0.01 {
        return Ok((false, format!("least-squares oracle MSE {oracle:.5} does not confirm the 0.01 threshold")));
    }

    let opts = RunOptions::new(ProbeConfig::for_task(Task::ProsodyReconstruction));
    let run = run_pror(&fbank, &manifest, ProsodyKind::Pitch, None, &opts).unwrap();
    let mse = run.result.value;
    Ok((
        mse < 0.01,
        format!(
            "200 utterances, FBANK, LR sweep × {} steps: probe test pitch MSE {mse:.5} (selected lr {:e}); least-squares oracle {oracle:.5}; threshold 0.01",
            opts.probe.train_steps, run.result.learning_rate
        ),
    ))
}

// 2d
fn planted_layer_recovery() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let manifest = common::glide_corpus(dir.path(), 40, 1.0, 11);
    let signals = common::pitch_signals(&manifest, 20);
    let planted = 3;
    let mut hits = 0;
    let mut found = Vec::new();
    for seed in 0..10u64 {
        let up = MockUpstream::new("planted", 8, 16, 20, seed)
            .with_planted(PlantedLayer {
                layer: planted,
                signals: signals.clone(),
            })
            .unwrap();
        let mut opts = RunOptions::new(quick_config(1e-2, 2000, seed));
        opts.lr_sweep = false;
        let run = run_pror(&up, &manifest, ProsodyKind::Pitch, None, &opts).unwrap();
        let profile = contribution_from_set(&run.test_sets[0], &run.probes[0], "planted").unwrap();
        if profile.best_layer() == planted {
            hits += 1;
        }
        found.push(profile.best_layer());
    }
    Ok((hits >= 9, format!("argmax c = planted layer {planted} on {hits}/10 seeds (need 9); argmax per seed {found:?}")))
}

fn env_path(name: &str) -> Result<PathBuf, String> {
    std::env::var_os(name)
        .map(PathBuf::from)
        .ok_or_else(|| format!("optional full-scale run: set {name}"))
}

fn full_scale_cache() -> Option<FeatureCache> {
    std::env::var_os("PROSODY_PROBE_CACHE").map(|p| FeatureCache::open(PathBuf::from(p)).unwrap())
}

fn registry_upstream(name: &str) -> Result<Box<dyn Upstream>, String> {
    let path = env_path("PROSODY_PROBE_REGISTRY")?;
    let registry = UpstreamRegistry::load(&path).map_err(|e| format!("registry unusable: {e}"))?;
    registry
        .instantiate(name)
        .map_err(|e| format!("upstream {name} unavailable: {e}"))
}

fn within(value: f64, reference: f64, tolerance: f64) -> bool {
    (value - reference).abs() <= tolerance * reference
}

// 3a
fn full_fbank_rnn() -> Check {
    let manifest = load_manifest(env_path("PROSODY_PROBE_LIBRITTS")?).unwrap();
    let run = run_fvp_baseline(
        &manifest,
        ProsodyKind::Pitch,
        HorizonSpec::new(120, 10).unwrap(),
        full_scale_cache(),
        &RnnConfig::default(),
        true,
    )
    .unwrap();
    let v = run.result.value;
    Ok((within(v, 0.049, 0.5), format!("FBANK+RNN FVP pitch h=0.12: MSE {v:.4} vs 0.049 ± 50%")))
}

// 3b
fn full_hubert_fvp() -> Check {
    let manifest = load_manifest(env_path("PROSODY_PROBE_LIBRITTS")?).unwrap();
    let up = registry_upstream("hubert_base")?;
    let horizon = HorizonSpec::new(120, up.spec().stride_ms).unwrap();
    let opts = RunOptions::new(ProbeConfig::for_task(Task::FutureValuePrediction));
    let run = run_fvp(up.as_ref(), &manifest, ProsodyKind::Pitch, horizon, full_scale_cache(), &opts).unwrap();
    let v = run.result.value;
    Ok((within(v, 0.029, 0.3), format!("HuBERT Base FVP pitch h=0.12: MSE {v:.4} vs 0.029 ± 30%")))
}

// 3c
fn full_integration_ordering() -> Check {
    let up = registry_upstream("hubert_base")?;
    let cases = [
        ("PROSODY_PROBE_SARD", ClassificationTask::Sarcasm, true),
        ("PROSODY_PROBE_PP", ClassificationTask::Persuasiveness, true),
        ("PROSODY_PROBE_SA", ClassificationTask::Sentiment2, false),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (var, task, early_wins) in cases {
        let manifest = load_manifest(env_path(var)?).unwrap();
        let opts = RunOptions::new(ProbeConfig::for_task(task.manifest_task()));
        let cache = full_scale_cache();
        let run = run_classification_task(task, up.as_ref(), &manifest, cache.clone(), &opts).unwrap();
        let profile = contribution_from_set(&run.test_sets[0], &run.probes[0], "hubert_base").unwrap();
        let spec = IntegrationSpec::around_best(profile.best_layer(), up.spec().num_layers).unwrap();
        let outcome =
            integrate_layers(TaskSpec::Classification(task), up.as_ref(), &manifest, cache, &spec, &opts).unwrap();
        let [early, around] = outcome.values();
        let ok = if early_wins { early >= around } else { early <= around };
        pass &= ok;
        details.push(format!("{task}: {:?}={early:.3} vs {:?}={around:.3}", spec.layer_sets[0], spec.layer_sets[1]));
    }
    Ok((pass, details.join("; ")))
}

// 3d
fn full_crosslingual() -> Check {
    let manifest = load_manifest(env_path("PROSODY_PROBE_ZH")?).unwrap();
    let opts = RunOptions::new(ProbeConfig::for_task(Task::CrossLingual));
    let run = run_crosslingual(&Fbank::new(), &manifest, ProsodyKind::Pitch, full_scale_cache(), &opts).unwrap();
    let v = run.result.value;
    Ok((within(v, 0.050, 0.5), format!("FBANK ZH pitch: MSE {v:.4} vs 0.050 ± 50%")))
}

// 4
fn determinism() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let frames = common::glide_corpus(&dir.path().join("glide"), 16, 0.8, 9);
    let tones = common::tone_classification_corpus(&dir.path().join("tones"), Task::Sarcasm, 30, Some(5));
    let mock = MockUpstream::new("mock", 4, 8, 20, 3);
    let fbank = Fbank::new();

    let mut details = Vec::new();
    let mut pass = true;

    let pror_opts = RunOptions::new(quick_config(1e-2, 200, 5));
    let a = run_pror(&mock, &frames, ProsodyKind::Pitch, None, &pror_opts).unwrap();
    let b = run_pror(&mock, &frames, ProsodyKind::Pitch, None, &pror_opts).unwrap();
    let same = a.result.value.to_bits() == b.result.value.to_bits()
        && a.probes == b.probes
        && a.result.config_fingerprint == b.result.config_fingerprint;
    pass &= same;
    details.push(format!("ProR sweep {} ({})", a.result.value, same));

    let sard_opts = RunOptions::new(quick_config(1e-2, 100, 5));
    let a = run_classification_task(ClassificationTask::Sarcasm, &mock, &tones, None, &sard_opts).unwrap();
    let b = run_classification_task(ClassificationTask::Sarcasm, &mock, &tones, None, &sard_opts).unwrap();
    let same = a.result.value.to_bits() == b.result.value.to_bits() && a.result.per_fold == b.result.per_fold;
    pass &= same;
    details.push(format!("SarD 5-fold F1 {} ({})", a.result.value, same));

    let rnn = RnnConfig {
        hidden: 16,
        train_steps: 60,
        batch_size: 8,
        seed: 5,
        ..RnnConfig::default()
    };
    let h = HorizonSpec::new(240, 10).unwrap();
    let a = run_fvp_baseline(&frames, ProsodyKind::Energy, h, None, &rnn, false).unwrap();
    let b = run_fvp_baseline(&frames, ProsodyKind::Energy, h, None, &rnn, false).unwrap();
    let same = a.result.value.to_bits() == b.result.value.to_bits() && a.model == b.model;
    pass &= same;
    details.push(format!("FBANK+RNN FVP {} ({})", a.result.value, same));
    let _ = &fbank;
    Ok((pass, format!("repeated runs bit-identical: {}", details.join(", "))))
}

fn main() {
    let outcomes = vec![
        run("1a", masked_mse_correctness),
        run("1b", causality),
        run("1c", aggregation),
        run("1d", gradient_check),
        run("1e", contribution_invariants),
        run("1f", frozen_upstream),
        run("2a", pitch_tones),
        run("2b", energy_doubling),
        run("2c", pror_end_to_end),
        run("2d", planted_layer_recovery),
        run("3a", full_fbank_rnn),
        run("3b", full_hubert_fvp),
        run("3c", full_integration_ordering),
        run("3d", full_crosslingual),
        run("4", determinism),
    ];
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| matches!(o.status, Status::Fail))
        .map(|o| o.id)
        .collect();
    let passed = outcomes.iter().filter(|o| matches!(o.status, Status::Pass)).count();
    let skipped = outcomes.iter().filter(|o| matches!(o.status, Status::Skip)).count();
    println!(
        "acceptance: {passed} passed, {} failed, {skipped} skipped",
        failed.len()
    );
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
