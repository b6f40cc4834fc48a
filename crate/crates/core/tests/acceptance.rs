//! Acceptance criteria 1-10. Runs every criterion in order, prints one
//! PASS/FAIL line each, and exits non-zero if any failed.

mod common;

use std::cell::RefCell;
use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{s, Array2};
use rand::{Rng as _, SeedableRng};

use stylemlc::audio::{crop_or_pad, frames_for_duration, Crop, FeatureKind, FrameConfig};
use stylemlc::augment::{
    balance_targets, build_pool, execute_plan, knn_convert, label_counts, plan_augmentation, PlanOptions,
    DEFAULT_BUDGET_HOURS, DEFAULT_K, DEFAULT_POOL_SECONDS,
};
use stylemlc::corpus::{
    agreement_ratio, parse_manifest, synth_corpus, write_manifest, ImbalanceProfile, Label, LabelVector,
    ManifestEntry, Split, SynthOptions,
};
use stylemlc::eval::{
    binarize, detection_probability, evaluate, f1, macro_f1, stratified_f1, EvalOptions, MetricsReport,
};
use stylemlc::model::{backward, forward, ModelConfig};
use stylemlc::rng::Rng;
use stylemlc::train::{train, TrainConfig};
use stylemlc::{Features, Params, NUM_LABELS};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// Model and corpus from criterion 4, reused by criterion 8.
struct Trained {
    checkpoint: PathBuf,
    corpus: PathBuf,
}

fn main() {
    let work = tempfile::tempdir().expect("temporary directory");
    let trained: RefCell<Option<Trained>> = RefCell::new(None);
    let mut failed = 0;
    let started = Instant::now();
    let criteria: Vec<(&str, Box<dyn FnMut() -> Outcome + '_>)> = vec![
        ("gradient correctness", Box::new(c1_gradients)),
        ("attention normalization", Box::new(c2_attention_rows)),
        ("metric oracle equivalence", Box::new(c3_metrics)),
        ("synthetic learnability", Box::new(|| c4_learnability(work.path(), &mut trained.borrow_mut()))),
        ("augmentation efficacy", Box::new(|| c5_augmentation(work.path()))),
        ("kNN converter exactness", Box::new(c6_knn)),
        ("crop/pad contract", Box::new(c7_crop_pad)),
        ("agreement machinery", Box::new(|| c8_agreement(trained.borrow().as_ref()))),
        ("determinism", Box::new(|| c9_determinism(work.path()))),
        ("default fidelity", Box::new(c10_defaults)),
    ];
    for (i, (name, mut run)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| run())).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({secs:.1} s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.1} s): {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of 10 criteria passed in {:.1} s",
        10 - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

// 1. Every parameter group of a tiny f64 model against central differences.
fn c1_gradients() -> Outcome {
    let t = Instant::now();
    let cfg = common::tiny_config();
    ensure!(
        (cfg.d_model, cfg.n_layers, cfg.n_heads, cfg.target_frames, cfg.n_labels) == (8, 1, 1, 4, 2),
        "tiny config drifted: {cfg:?}"
    );
    let params = common::perturbed_params::<f64>(&cfg, 101);
    let batch = common::random_batch::<f64>(&cfg, 2, 102);
    let mut rng = Rng::seed_from_u64(103);
    let c = Array2::from_shape_simple_fn((2, 2), || rng.random_range(-1.0..1.0));
    let (_, trace) = forward(&params, &batch).map_err(|e| e.to_string())?;
    let grads = backward(&params, &trace, &c).map_err(|e| e.to_string())?;
    let errs = common::gradient_check(&params, &grads, &batch, &c, 1e-5);
    let (worst_name, worst) = errs
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .cloned()
        .unwrap();
    ensure!(worst < 1e-4, "{worst_name} has relative error {worst:e}");
    let secs = t.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1} s");
    Ok(format!("{} groups, worst relative error {worst:.2e} ({worst_name})", errs.len()))
}

// 2. Softmax rows of every attention map sum to one in f32.
fn c2_attention_rows() -> Outcome {
    let mut rng = Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut rows = 0usize;
    for pass in 0..100u64 {
        let cfg = ModelConfig {
            target_frames: rng.random_range(1..=120),
            ..Default::default()
        };
        let params = Params::init(&cfg, pass).map_err(|e| e.to_string())?;
        let scale = rng.random_range(0.1..30.0);
        let batch: Vec<Features> = (0..2)
            .map(|_| {
                let a = Array2::from_shape_simple_fn((cfg.target_frames, 80), || rng.random_range(-scale..scale));
                Features::new(a, 10_000, FeatureKind::Mel80).unwrap()
            })
            .collect();
        let (_, trace) = forward(&params, &batch).map_err(|e| e.to_string())?;
        for sample in &trace.samples {
            for w in sample.attention_weights() {
                for row in w.outer_iter() {
                    let sum: f64 = row.iter().map(|&v| v as f64).sum();
                    worst = worst.max((sum - 1.0).abs());
                    rows += 1;
                }
            }
        }
    }
    ensure!(worst <= 1e-6, "a row is off by {worst:e}");
    Ok(format!("{rows} rows over 100 passes, worst deviation {worst:.1e}"))
}

/// Set-based F1 written from the definitions, independent of the library.
fn brute_f1(pred: &HashSet<usize>, actual: &HashSet<usize>) -> f64 {
    let tp = pred.intersection(actual).count() as f64;
    if pred.is_empty() || actual.is_empty() {
        return 0.0;
    }
    let p = tp / pred.len() as f64;
    let r = tp / actual.len() as f64;
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

// 3. Metrics against a brute-force reference, and the reference row average.
fn c3_metrics() -> Outcome {
    let mut rng = Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let b = rng.random_range(1..=16);
        let tau = [0.5, rng.random_range(0.05..0.95)][case % 2];
        let split = rng.random_range(1..=8u32);
        let probs = Array2::from_shape_simple_fn((b, NUM_LABELS), || {
            if rng.random_bool(0.1) {
                tau
            } else {
                rng.random_range(0.0..1.0)
            }
        });
        let entries: Vec<ManifestEntry> = (0..b)
            .map(|i| {
                let labels: [bool; NUM_LABELS] = std::array::from_fn(|_| rng.random_bool(0.4));
                let votes: [u32; NUM_LABELS] = std::array::from_fn(|_| rng.random_range(0..=8));
                ManifestEntry {
                    id: format!("c{case}_{i}"),
                    source: String::new(),
                    speaker_id: String::new(),
                    split: Split::Eval,
                    label: LabelVector::new(labels, votes, 8).unwrap(),
                    excluded: false,
                    augmented: false,
                }
            })
            .collect();
        let opts = EvalOptions {
            threshold: tau,
            vote_split: split,
            ..Default::default()
        };
        let report = MetricsReport::compute(&entries, &probs, &opts, "oracle").map_err(|e| e.to_string())?;
        let preds = binarize(&probs, tau);
        let strata = stratified_f1(&entries, preds.view(), split);
        let mut oracle_scores = Vec::new();
        for k in 0..NUM_LABELS {
            let pred: HashSet<usize> = (0..b).filter(|&i| probs[[i, k]] >= tau).collect();
            let actual: HashSet<usize> = (0..b).filter(|&i| entries[i].label.labels()[k]).collect();
            let want = brute_f1(&pred, &actual);
            oracle_scores.push(want);
            let got = report.labels.as_ref().unwrap()[k].f1;
            worst = worst.max((got - want).abs());

            let hits = (0..b).filter(|&i| probs[[i, k]] >= tau).count() as f64 / b as f64;
            let det = detection_probability(probs.column(k), tau).map_err(|e| e.to_string())?;
            worst = worst.max((det - hits).abs());
            ensure!((report.detection[k].probability - hits).abs() <= 1e-12, "detection mismatch");

            for (high, stratum) in [(false, &strata.low[k]), (true, &strata.high[k])] {
                // Agreement: votes behind the bit that was assigned.
                let members: Vec<usize> = (0..b)
                    .filter(|&i| {
                        let l = &entries[i].label;
                        let agree = if l.labels()[k] { l.votes()[k] } else { 8 - l.votes()[k] };
                        (agree >= split) == high
                    })
                    .collect();
                match stratum {
                    None => ensure!(members.is_empty(), "stratum reported absent but has members"),
                    Some(c) => {
                        ensure!(!members.is_empty(), "empty stratum reported");
                        let mp: HashSet<usize> = members.iter().copied().filter(|i| pred.contains(i)).collect();
                        let ma: HashSet<usize> = members.iter().copied().filter(|i| actual.contains(i)).collect();
                        worst = worst.max((f1(c) - brute_f1(&mp, &ma)).abs());
                        ensure!(c.total() as usize == members.len(), "stratum count mismatch");
                    }
                }
            }
        }
        let want_macro = oracle_scores.iter().sum::<f64>() / NUM_LABELS as f64;
        worst = worst.max((report.macro_f1.unwrap() - want_macro).abs());
    }
    ensure!(worst <= 1e-12, "worst disagreement {worst:e}");
    let row = [0.930, 0.995, 0.903, 0.906, 0.916, 0.856, 0.669, 0.537];
    let avg = macro_f1(&row);
    ensure!((avg - 0.839).abs() <= 5e-4, "reference row averages to {avg}");
    Ok(format!("1000 cases, worst disagreement {worst:.1e}; reference row average {avg:.5}"))
}

fn macro_from(report: &MetricsReport) -> f64 {
    report.macro_f1.unwrap_or(f64::NAN)
}

// 4. Default model learns the synthetic styles.
fn c4_learnability(work: &Path, trained: &mut Option<Trained>) -> Outcome {
    let corpus = work.join("c4");
    let manifest = synth_corpus(
        &SynthOptions {
            n_per_combination: 100,
            eval_per_combination: 20,
            duration_s: 5.0,
            seed: 4,
            ..Default::default()
        },
        &corpus,
    )
    .map_err(|e| e.to_string())?;
    let entries = parse_manifest(&manifest).map_err(|e| e.to_string())?;
    let n_train = entries.iter().filter(|e| e.split == Split::Train).count();
    let n_eval = entries.len() - n_train;
    ensure!((n_train, n_eval) == (1600, 320), "corpus has {n_train}/{n_eval} samples");
    let model = ModelConfig::default();
    let cfg = TrainConfig {
        epochs: 8,
        seed: 4,
        epoch_checkpoints: false,
        ..Default::default()
    };
    let out = train(&cfg, &model, &manifest, &work.join("c4_run")).map_err(|e| e.to_string())?;
    let report = evaluate(&out.final_checkpoint, &manifest, &EvalOptions::default(), None).map_err(|e| e.to_string())?;
    let m = macro_from(&report);
    let per: Vec<String> = report
        .labels
        .as_ref()
        .unwrap()
        .iter()
        .map(|b| format!("{}={:.3}", b.label, b.f1))
        .collect();
    *trained = Some(Trained {
        checkpoint: out.final_checkpoint,
        corpus: corpus.clone(),
    });
    ensure!(m >= 0.90, "held-out macro F1 {m:.4} ({})", per.join(" "));
    Ok(format!(
        "held-out macro F1 {m:.4} after {} epochs, final loss {:.4} [{}]",
        cfg.epochs,
        out.epochs.last().unwrap().mean_loss,
        per.join(" ")
    ))
}

// 5. Rough at 20% of Smooth: augmentation lifts Rough F1.
fn c5_augmentation(work: &Path) -> Outcome {
    let corpus = work.join("c5");
    let manifest = synth_corpus(
        &SynthOptions {
            n_per_combination: 25,
            eval_per_combination: 10,
            duration_s: 5.0,
            seed: 5,
            imbalance: ImbalanceProfile::scale(Label::Rough, 0.2),
            ..Default::default()
        },
        &corpus,
    )
    .map_err(|e| e.to_string())?;
    let entries = parse_manifest(&manifest).map_err(|e| e.to_string())?;
    let train_entries: Vec<ManifestEntry> = entries.iter().filter(|e| e.split == Split::Train).cloned().collect();
    let counts = label_counts(&train_entries);
    let (rough, smooth) = (counts[Label::Rough.index()], counts[Label::Smooth.index()]);
    ensure!(rough * 5 == smooth, "imbalance is {rough} Rough vs {smooth} Smooth");

    let model = ModelConfig::default();
    let cfg = TrainConfig {
        epochs: 2,
        seed: 5,
        epoch_checkpoints: false,
        ..Default::default()
    };
    let base = train(&cfg, &model, &manifest, &work.join("c5_base")).map_err(|e| e.to_string())?;
    let base_report = evaluate(&base.final_checkpoint, &manifest, &EvalOptions::default(), None).map_err(|e| e.to_string())?;

    let plan = plan_augmentation(
        &entries,
        &PlanOptions {
            seed: 5,
            ..PlanOptions::new(balance_targets(&entries))
        },
    )
    .map_err(|e| e.to_string())?;
    let store = stylemlc::train::FeatureStore::new(&corpus, model.input_norm)
        .map_err(|e| e.to_string())?
        .uncached();
    let exec = execute_plan(&plan, &entries, &store, DEFAULT_K, DEFAULT_POOL_SECONDS, &corpus.join("aug"))
        .map_err(|e| e.to_string())?;
    ensure!(exec.skipped.is_empty(), "{} conversions skipped", exec.skipped.len());
    let mut augmented = entries.clone();
    augmented.extend(exec.entries.iter().cloned().map(|mut e| {
        e.source = format!("aug/{}", e.source);
        e
    }));
    let after = label_counts(&augmented);
    ensure!(
        after[Label::Rough.index()] == after[Label::Smooth.index()],
        "plan left Rough at {} vs Smooth {}",
        after[Label::Rough.index()],
        after[Label::Smooth.index()]
    );
    let aug_manifest = corpus.join("manifest_aug.tsv");
    write_manifest(&aug_manifest, &augmented).map_err(|e| e.to_string())?;
    let aug = train(&cfg, &model, &aug_manifest, &work.join("c5_aug")).map_err(|e| e.to_string())?;
    let aug_report = evaluate(&aug.final_checkpoint, &manifest, &EvalOptions::default(), None).map_err(|e| e.to_string())?;

    let (b, a) = (
        base_report.f1_of(Label::Rough).unwrap(),
        aug_report.f1_of(Label::Rough).unwrap(),
    );
    let detail = format!(
        "Rough F1 {b:.3} -> {a:.3} (+{:.3}) with {} conversions; {} epochs each",
        a - b,
        exec.entries.len(),
        cfg.epochs
    );
    ensure!(a - b >= 0.05, "{detail}");
    Ok(detail)
}

// 6. kNN conversion against exhaustive search.
fn c6_knn() -> Outcome {
    let mut rng = Rng::seed_from_u64(6);
    let mut frames_checked = 0usize;
    for trial in 0..200 {
        let p = rng.random_range(1..=1000);
        let d = rng.random_range(1..=24);
        let t = rng.random_range(1..=12);
        let k = rng.random_range(1..=p.min(8));
        // Every other trial draws from a handful of values so exact ties
        // and duplicate rows are common.
        let coarse = trial % 2 == 1;
        let mut draw = || {
            if coarse {
                rng.random_range(-2..=2) as f32
            } else {
                rng.random_range(-1.0f32..1.0)
            }
        };
        let pool = Array2::from_shape_simple_fn((p, d), &mut draw);
        let src = Array2::from_shape_simple_fn((t, d), &mut draw);
        let source = Features::new(src.clone(), 10_000, FeatureKind::External).unwrap();
        let fp = build_pool("t", &[Features::new(pool.clone(), 10_000, FeatureKind::External).unwrap()], 1e9)
            .map_err(|e| e.to_string())?;
        let out = knn_convert(&source, &fp, k).map_err(|e| e.to_string())?;
        for ti in 0..t {
            let q = src.row(ti);
            let dot = |a: ndarray::ArrayView1<f32>, b: ndarray::ArrayView1<f32>| -> f64 {
                a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
            };
            let qn = dot(q, q).sqrt();
            let mut all: Vec<(f64, usize)> = (0..p)
                .map(|j| {
                    let r = pool.row(j);
                    let den = qn * dot(r, r).sqrt();
                    (if den == 0.0 { 1.0 } else { 1.0 - dot(q, r) / den }, j)
                })
                .collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut chosen: Vec<usize> = all[..k].iter().map(|x| x.1).collect();
            chosen.sort_unstable();
            for c in 0..d {
                let mean = (chosen.iter().map(|&j| pool[[j, c]] as f64).sum::<f64>() / k as f64) as f32;
                let got = out.frames()[[ti, c]];
                ensure!(
                    got.to_bits() == mean.to_bits(),
                    "trial {trial}, frame {ti}, dim {c}: {got} vs brute force {mean}"
                );
            }
            frames_checked += 1;
        }
    }
    Ok(format!("200 trials, {frames_checked} frames identical to exhaustive search"))
}

// 7. Crop or pad always yields exactly target_frames, zero-filled when short.
fn c7_crop_pad() -> Outcome {
    let mut rng = Rng::seed_from_u64(7);
    let target = frames_for_duration(5.0, FrameConfig::default().frame_hop_s);
    let (mut padded, mut cropped) = (0, 0);
    for i in 0..10_000 {
        let len = rng.random_range(1..=2 * target + 3);
        let a = Array2::from_shape_fn((len, 3), |(t, c)| (t * 3 + c) as f32 + 1.0);
        let f = Features::new(a.clone(), 10_000, FeatureKind::External).unwrap();
        let mut crop_rng = Rng::seed_from_u64(i);
        let out = if i % 2 == 0 {
            crop_or_pad(&f, target, Crop::Head)
        } else {
            crop_or_pad(&f, target, Crop::Random(&mut crop_rng))
        }
        .map_err(|e| e.to_string())?;
        ensure!(out.num_frames() == target, "length {len} gave {} frames", out.num_frames());
        let o = out.frames();
        if len <= target {
            ensure!(o.slice(s![..len, ..]) == a, "prefix altered for length {len}");
            ensure!(o.slice(s![len.., ..]).iter().all(|&v| v == 0.0), "non-zero padding for length {len}");
            padded += 1;
        } else {
            let start = (o[[0, 0]] as usize - 1) / 3;
            ensure!(o == a.slice(s![start..start + target, ..]), "crop is not a contiguous window");
            if i % 2 == 0 {
                ensure!(start == 0, "head crop started at {start}");
            }
            cropped += 1;
        }
    }
    Ok(format!("10000 lengths ({padded} padded, {cropped} cropped) to {target} frames"))
}

// 8. Agreement ratio and agreement-stratified F1.
fn c8_agreement(trained: Option<&Trained>) -> Outcome {
    let entries: Vec<ManifestEntry> = (0..100)
        .map(|i| {
            let mut labels = [false; NUM_LABELS];
            let mut votes = [0; NUM_LABELS];
            labels[Label::Rough.index()] = true;
            votes[Label::Rough.index()] = if i < 28 { 5 + (i % 4) as u32 } else { 1 + (i % 4) as u32 };
            ManifestEntry {
                id: format!("r{i}"),
                source: String::new(),
                speaker_id: String::new(),
                split: Split::Train,
                label: LabelVector::new(labels, votes, 8).unwrap(),
                excluded: false,
                augmented: false,
            }
        })
        .collect();
    let ratio = agreement_ratio(&entries, Label::Rough, 5).map_err(|e| e.to_string())?;
    ensure!(ratio == 0.280, "ratio {ratio}");

    let Some(t) = trained else {
        return Err("needs the model from criterion 4".into());
    };
    // Held-out entries from criterion 4. Half get unanimous votes; the
    // other half get split votes and labels flipped with probability 0.3,
    // as low-agreement annotation would.
    let eval: Vec<ManifestEntry> = parse_manifest(t.corpus.join("manifest.tsv"))
        .map_err(|e| e.to_string())?
        .into_iter()
        .filter(|e| e.split == Split::Eval)
        .collect();
    let mut rng = Rng::seed_from_u64(8);
    let noisy: Vec<ManifestEntry> = eval
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let mut e = e.clone();
            if i % 2 == 1 {
                let mut labels = *e.label.labels();
                let mut votes = [0u32; NUM_LABELS];
                for k in 0..NUM_LABELS {
                    if rng.random_bool(0.3) {
                        labels[k] = !labels[k];
                    }
                    // Agreement of 3 or 4 annotators with the assigned bit.
                    let agree = rng.random_range(3..=4);
                    votes[k] = if labels[k] { agree } else { 8 - agree };
                }
                e.label = LabelVector::new(labels, votes, 8).unwrap();
            }
            e
        })
        .collect();
    let manifest = t.corpus.join("manifest_agreement.tsv");
    write_manifest(&manifest, &noisy).map_err(|e| e.to_string())?;
    let report = evaluate(&t.checkpoint, &manifest, &EvalOptions::default(), None).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let (mut hi_sum, mut lo_sum) = (0.0, 0.0);
    for s in report.strata.as_ref().unwrap() {
        let (Some(hi), Some(lo)) = (&s.high, &s.low) else {
            return Err(format!("{} lacks a stratum", s.label));
        };
        ensure!(hi.f1 > lo.f1, "{}: high {:.3} not above low {:.3}", s.label, hi.f1, lo.f1);
        hi_sum += hi.f1;
        lo_sum += lo.f1;
        lines.push(format!("{}={:.2}/{:.2}", s.label, hi.f1, lo.f1));
    }
    Ok(format!(
        "ratio {ratio:.3}; mean F1 high {:.3} > low {:.3} [{}]",
        hi_sum / 8.0,
        lo_sum / 8.0,
        lines.join(" ")
    ))
}

fn with_workers<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(f)
}

// 9. Bit-identical checkpoints and byte-identical reports.
fn c9_determinism(work: &Path) -> Outcome {
    let corpus = work.join("c9");
    let manifest = synth_corpus(
        &SynthOptions {
            n_per_combination: 2,
            eval_per_combination: 1,
            duration_s: 2.0,
            seed: 9,
            ..Default::default()
        },
        &corpus,
    )
    .map_err(|e| e.to_string())?;
    let model = ModelConfig {
        target_frames: 200,
        dropout: 0.1,
        ..Default::default()
    };
    let cfg = TrainConfig {
        epochs: 2,
        batch_size: 8,
        seed: 9,
        ..Default::default()
    };
    let run = |name: &str, workers: usize| {
        let out = with_workers(workers, || train(&cfg, &model, &manifest, &work.join(name)))
            .map_err(|e| e.to_string())?;
        std::fs::read(&out.final_checkpoint).map_err(|e| e.to_string())
    };
    let a = run("c9_a", 1)?;
    let b = run("c9_b", 1)?;
    ensure!(a == b, "single-threaded runs differ");
    let c = run("c9_c", 3)?;
    ensure!(a == c, "three-worker run differs from single-threaded");
    for epoch in 1..=2 {
        let name = format!("epoch_{epoch}.ckpt");
        let x = std::fs::read(work.join("c9_a").join(&name)).map_err(|e| e.to_string())?;
        let y = std::fs::read(work.join("c9_b").join(&name)).map_err(|e| e.to_string())?;
        ensure!(x == y, "{name} differs");
    }

    let ckpt = work.join("c9_a").join("final.ckpt");
    let mut reports = Vec::new();
    for (i, workers) in [1, 1, 3].into_iter().enumerate() {
        let path = work.join(format!("c9_report_{i}.json"));
        with_workers(workers, || evaluate(&ckpt, &manifest, &EvalOptions::default(), Some(&path)))
            .map_err(|e| e.to_string())?;
        reports.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure!(reports[0] == reports[1], "repeated evaluation differs");
    ensure!(reports[0] == reports[2], "evaluation differs across worker counts");
    Ok(format!(
        "checkpoints identical ({} bytes, 1 and 3 workers); reports identical ({} bytes)",
        a.len(),
        reports[0].len()
    ))
}

// 10. Defaults match the reference configuration.
fn c10_defaults() -> Outcome {
    let m = ModelConfig::default();
    let t = TrainConfig::default();
    let crop_s = m.target_frames as f64 * FrameConfig::default().frame_hop_s;
    let checks = [
        ("layers", m.n_layers as f64, 4.0),
        ("heads", m.n_heads as f64, 8.0),
        ("dimension", m.d_model as f64, 128.0),
        ("labels", m.n_labels as f64, 8.0),
        ("learning rate", t.learning_rate, 1e-4),
        ("batch size", t.batch_size as f64, 64.0),
        ("crop seconds", crop_s, 5.0),
        ("mel channels", m.input_dim as f64, 80.0),
        ("augmentation budget hours", DEFAULT_BUDGET_HOURS, 14.0),
        ("pool seconds", DEFAULT_POOL_SECONDS, 60.0),
        ("threshold", EvalOptions::default().threshold, 0.5),
        ("vote split", EvalOptions::default().vote_split as f64, 5.0),
    ];
    for (name, got, want) in checks {
        ensure!((got - want).abs() <= 1e-12 * want.abs(), "{name} is {got}, expected {want}");
    }
    ensure!(Params::init(&m, 0).map_err(|e| e.to_string())?.style_queries.nrows() == 8, "one query per label");
    Ok("4 layers, 8 heads, d 128, K 8, lr 1e-4, batch 64, 5 s crops (500 frames)".into())
}
