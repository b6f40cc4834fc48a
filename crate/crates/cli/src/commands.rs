use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use stylemlc::audio::{frames_for_duration, load_wav, log_mel, save_feature_file, FrameConfig, MelConfig, MelFilterbank};
use stylemlc::augment::{
    balance_targets, execute_plan, format_skip_report, label_counts, plan_augmentation, PlanOptions,
    DEFAULT_BUDGET_HOURS, DEFAULT_K, DEFAULT_POOL_SECONDS,
};
use stylemlc::corpus::{parse_manifest, synth_corpus, write_manifest, ImbalanceProfile, Label, Split, SynthOptions};
use stylemlc::eval::{evaluate, EvalOptions};
use stylemlc::train::{train_with, FeatureStore, TrainConfig};
use stylemlc::{Features, ModelConfig, NUM_LABELS};

use crate::args::{AugmentArgs, EvalArgs, FeaturizeArgs, OutArg, SynthArgs, TrainArgs};
use crate::config::FileConfig;

pub const OUT_ENV: &str = "STYLEMLC_OUT";

fn out_dir(arg: &OutArg, subcommand: &str) -> anyhow::Result<PathBuf> {
    if let Some(p) = &arg.out {
        return Ok(p.clone());
    }
    match std::env::var_os(OUT_ENV) {
        Some(root) if !root.is_empty() => Ok(PathBuf::from(root).join(subcommand)),
        _ => {
            use clap::CommandFactory;
            crate::args::Cli::command()
                .error(
                    clap::error::ErrorKind::MissingRequiredArgument,
                    format!("`{subcommand}` needs --out (or {OUT_ENV} set)"),
                )
                .exit()
        }
    }
}

fn manifest_dir(manifest: &Path) -> &Path {
    manifest.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

pub fn synth(a: SynthArgs, file: &FileConfig, seed: Option<u64>) -> anyhow::Result<ExitCode> {
    let f = &file.synth;
    let d = SynthOptions::default();
    let rough = a.rough_fraction.or(f.rough_fraction).unwrap_or(1.0);
    if !(0.0..=1.0).contains(&rough) {
        bail!("--rough-fraction must lie in [0, 1], got {rough}");
    }
    let opts = SynthOptions {
        n_per_combination: a.per_combo.or(f.per_combo).unwrap_or(d.n_per_combination),
        eval_per_combination: a.eval_per_combo.or(f.eval_per_combo).unwrap_or(d.eval_per_combination),
        duration_s: a.duration.or(f.duration).unwrap_or(d.duration_s),
        seed: seed.unwrap_or(d.seed),
        imbalance: ImbalanceProfile::scale(Label::Rough, rough),
        utterances_per_speaker: a
            .utterances_per_speaker
            .or(f.utterances_per_speaker)
            .unwrap_or(d.utterances_per_speaker),
    };
    let out = out_dir(&a.out, "synth")?;
    let manifest = synth_corpus(&opts, &out)?;
    let entries = parse_manifest(&manifest)?;
    let train = entries.iter().filter(|e| e.split == Split::Train).count();
    println!(
        "wrote {} samples ({} train, {} eval) to {}",
        entries.len(),
        train,
        entries.len() - train,
        manifest.display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn featurize(a: FeaturizeArgs) -> anyhow::Result<ExitCode> {
    if a.manifest.is_none() && a.inputs.is_empty() {
        bail!("nothing to featurize: give wav files or --manifest");
    }
    let out = out_dir(&a.out, "featurize")?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let fb = MelFilterbank::<f32>::new(&MelConfig::default())?;
    let frames = FrameConfig::default();
    let extract = |src: &Path, dst: &Path| -> stylemlc::Result<Features> {
        let f = log_mel(&load_wav::<f32>(src)?, &fb, &frames)?;
        save_feature_file(dst, &f)?;
        Ok(f)
    };
    let mut failures = 0usize;
    let mut written = 0usize;

    for input in &a.inputs {
        let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        match extract(input, &out.join(format!("{stem}.feat"))) {
            Ok(_) => written += 1,
            Err(e) => {
                eprintln!("error: {}: {e}", input.display());
                failures += 1;
            }
        }
    }

    if let Some(manifest) = &a.manifest {
        let root = manifest_dir(manifest);
        let mut entries = parse_manifest(manifest)?;
        for e in &mut entries {
            let src = stylemlc::corpus::resolve_source(root, e);
            let is_wav = src.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav"));
            if !is_wav {
                e.source = absolute(&src).display().to_string();
                continue;
            }
            let name = format!("{}.feat", e.id);
            match extract(&src, &out.join(&name)) {
                Ok(_) => {
                    written += 1;
                    e.source = name;
                }
                Err(err) => {
                    eprintln!("error: {}: {}: {err}", e.id, src.display());
                    failures += 1;
                    e.source = absolute(&src).display().to_string();
                }
            }
        }
        write_manifest(out.join("manifest.tsv"), &entries)?;
    }

    println!("wrote {written} feature files to {}", out.display());
    if failures > 0 {
        eprintln!("{failures} input(s) failed");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn absolute(p: &Path) -> PathBuf {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

pub fn augment(a: AugmentArgs, file: &FileConfig, seed: Option<u64>) -> anyhow::Result<ExitCode> {
    let f = &file.augment;
    let budget_h = a.budget_hours.or(f.budget_hours).unwrap_or(DEFAULT_BUDGET_HOURS);
    let k = a.k.or(f.k).unwrap_or(DEFAULT_K);
    let pool_s = a.pool_seconds.or(f.pool_seconds).unwrap_or(DEFAULT_POOL_SECONDS);
    let item_s = a.item_seconds.or(f.item_seconds).unwrap_or(5.0);

    let entries = parse_manifest(&a.manifest)?;
    let targets = if a.targets.is_empty() {
        balance_targets(&entries)
    } else {
        let mut t = [None; NUM_LABELS];
        for (l, n) in &a.targets {
            t[l.index()] = Some(*n);
        }
        t
    };
    let opts = PlanOptions {
        target_counts: targets,
        budget_s: budget_h * 3600.0,
        item_seconds: item_s,
        seed: seed.unwrap_or(0),
    };
    let plan = plan_augmentation(&entries, &opts)?;
    if plan.is_empty() {
        println!("nothing to do: every label already meets its target count");
        return Ok(ExitCode::SUCCESS);
    }
    let counts = label_counts(&entries);
    println!(
        "plan: {} items, {:.3} h of {:.3} h budget",
        plan.items.len(),
        plan.planned_hours(),
        plan.budget_hours
    );
    for l in Label::ALL {
        let n = plan.items.iter().filter(|it| it.label == l).count();
        if n > 0 {
            println!("  {l}: {} -> target {} (+{n} planned)", counts[l.index()], targets[l.index()].unwrap_or(0));
        }
    }

    let out = out_dir(&a.out, "augment")?;
    let feature_dir = out.join("features");
    let store = FeatureStore::new(manifest_dir(&a.manifest), stylemlc::model::InputNorm::None)?.uncached();
    let report = execute_plan(&plan, &entries, &store, k, pool_s, &feature_dir)?;

    let mut all: Vec<_> = entries
        .iter()
        .map(|e| {
            let mut e = e.clone();
            e.source = absolute(&store.path_of(&e)).display().to_string();
            e
        })
        .collect();
    for mut e in report.entries.iter().cloned() {
        e.source = format!("features/{}", e.source);
        all.push(e);
    }
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let manifest = out.join("manifest.tsv");
    write_manifest(&manifest, &all)?;
    println!("wrote {} converted samples; manifest at {}", report.entries.len(), manifest.display());
    if !report.skipped.is_empty() {
        let path = out.join("skipped.tsv");
        fs::write(&path, format_skip_report(&report.skipped)).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("{} item(s) skipped; see {}", report.skipped.len(), path.display());
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

/// Training and model settings after applying flags over the config file
/// over defaults. Crop length is converted to frames with the hop of the
/// first training entry.
pub fn resolve_train(a: &TrainArgs, file: &FileConfig, seed: Option<u64>) -> anyhow::Result<(TrainConfig, ModelConfig)> {
    let (t, m) = (&file.train, &file.model);
    let td = TrainConfig::default();
    let md = ModelConfig::default();
    let cfg = TrainConfig {
        learning_rate: a.lr.or(t.learning_rate).unwrap_or(td.learning_rate),
        batch_size: a.batch_size.or(t.batch_size).unwrap_or(td.batch_size),
        beta1: a.beta1.or(t.beta1).unwrap_or(td.beta1),
        beta2: a.beta2.or(t.beta2).unwrap_or(td.beta2),
        adam_eps: a.adam_eps.or(t.adam_eps).unwrap_or(td.adam_eps),
        epochs: a.epochs.or(t.epochs).unwrap_or(td.epochs),
        seed: seed.unwrap_or(td.seed),
        weight_decay: t.weight_decay.unwrap_or(td.weight_decay),
        grad_clip: t.grad_clip.or(td.grad_clip),
        epoch_checkpoints: !a.final_only,
    };
    let crop_s = a.crop_seconds.or(t.crop_seconds).unwrap_or(5.0);
    if !(crop_s > 0.0) {
        bail!("--crop-seconds must be positive, got {crop_s}");
    }
    let model = ModelConfig {
        d_model: a.dim.or(m.d_model).unwrap_or(md.d_model),
        n_layers: a.layers.or(m.n_layers).unwrap_or(md.n_layers),
        n_heads: a.heads.or(m.n_heads).unwrap_or(md.n_heads),
        ffn_dim: a.ffn_dim.or(m.ffn_dim).unwrap_or(md.ffn_dim),
        input_dim: a.input_dim.or(m.input_dim).unwrap_or(md.input_dim),
        dropout: a.dropout.or(m.dropout).unwrap_or(md.dropout),
        input_norm: m.input_norm.unwrap_or(md.input_norm),
        target_frames: frames_for_duration(crop_s, first_hop(&a.manifest)?),
        n_labels: md.n_labels,
    };
    cfg.validate()?;
    model.validate()?;
    Ok((cfg, model))
}

fn first_hop(manifest: &Path) -> anyhow::Result<f64> {
    let entries = parse_manifest(manifest)?;
    let Some(first) = entries.iter().find(|e| e.split == Split::Train && !e.excluded) else {
        bail!("{} has no usable train entries", manifest.display());
    };
    let store = FeatureStore::new(manifest_dir(manifest), stylemlc::model::InputNorm::None)?.uncached();
    Ok(store.load_raw(first)?.frame_hop_s())
}

pub fn train(a: TrainArgs, file: &FileConfig, seed: Option<u64>) -> anyhow::Result<ExitCode> {
    let (cfg, model) = resolve_train(&a, file, seed)?;
    let out = out_dir(&a.out, "train")?;
    println!(
        "training {} layers x {} heads, dim {}, {} frames; lr {}, batch {}, {} epochs",
        model.n_layers, model.n_heads, model.d_model, model.target_frames, cfg.learning_rate, cfg.batch_size, cfg.epochs
    );
    let outcome = train_with(&cfg, &model, &a.manifest, &out, |log| {
        println!("epoch {:>3}  loss {:.6}  {:.1} s", log.epoch, log.mean_loss, log.seconds);
    })?;
    println!("final checkpoint: {}", outcome.final_checkpoint.display());
    Ok(ExitCode::SUCCESS)
}

pub fn eval(a: EvalArgs, file: &FileConfig) -> anyhow::Result<ExitCode> {
    let d = EvalOptions::default();
    let opts = EvalOptions {
        threshold: a.threshold.or(file.eval.threshold).unwrap_or(d.threshold),
        vote_split: a.agreement_split.or(file.eval.agreement_split).unwrap_or(d.vote_split),
        detect_only: a.detect_only.clone(),
        batch_size: d.batch_size,
    };
    let report = evaluate(&a.checkpoint, &a.manifest, &opts, a.report.as_deref())?;
    match &a.report {
        Some(path) => {
            if let Some(m) = report.macro_f1 {
                println!("macro F1 {m:.4} over {} samples", report.samples);
            }
            for d in &report.detection {
                println!("  detect {:<9} {:.4}", d.label.to_string(), d.probability);
            }
            println!("report: {}", path.display());
        }
        None => print!("{}", report.to_json()),
    }
    Ok(ExitCode::SUCCESS)
}
