//! Subcommand implementations. Each returns data; printing is left to the
//! caller.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::RunConfig;
use super::generated::{read_generated, GeneratedCaption};
use crate::corpus::vocab::{END, NUM_SPECIAL, START};
use crate::corpus::{read_captions, synth_toy_corpus, tokenize, write_captions, FeatureStore, RawCaption, Vocabulary};
use crate::decoding::{decode, generate_contrastive, DecodeRequest};
use crate::error::{Error, Result};
use crate::experiment::{ablate, PreparedCorpus, VariantRun};
use crate::metrics::{evaluate, AnpLexicon, Polarity, ReportRow, Tokens};
use crate::model::{checkpoint, ModelConfig, Parameters, SentimentCategory, SpatialFeatures};
use crate::tensor::Tensor;
use crate::training::{check_gradients, train_with, Example, GradientCheck};

/// Loads features and caption splits named in `[paths]` and encodes them
/// against a vocabulary built from the training split.
pub fn load_prepared(cfg: &RunConfig) -> Result<PreparedCorpus> {
    let p = &cfg.paths;
    let features = FeatureStore::load(p.require(&p.features, "features")?)?;
    let train = read_captions(p.require(&p.train, "train")?)?;
    let optional =
        |path: &Option<PathBuf>| -> Result<Vec<RawCaption>> { path.as_deref().map_or(Ok(Vec::new()), read_captions) };
    PreparedCorpus::new(
        features,
        &train,
        &optional(&p.validation)?,
        &optional(&p.test)?,
        cfg.corpus.min_count,
        cfg.corpus.vocab_cap,
        cfg.corpus.max_caption_len,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub output_dir: PathBuf,
    pub epochs: usize,
    /// 1-based.
    pub best_epoch: usize,
    pub best_score: Option<f64>,
    pub final_loss: f64,
}

/// Trains one model. Writes `config.toml`, `vocab.txt`, `train_log.jsonl`
/// (one JSON object per epoch), `last.ckpt` after every epoch and
/// `best.ckpt` at the end into `paths.output_dir`.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary> {
    let prepared = load_prepared(cfg)?;
    let out = cfg.paths.output_dir();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    cfg.save(&out.join("config.toml"))?;
    prepared.vocab.save(&out.join("vocab.txt"))?;

    let params = Parameters::init(&cfg.model.config(&prepared), cfg.train.seed)?;
    let log_path = out.join("train_log.jsonl");
    let mut log = BufWriter::new(File::create(&log_path).map_err(|e| Error::io(&log_path, e))?);
    let last_path = out.join("last.ckpt");
    let outcome = train_with(params, &prepared.data(), &cfg.train, |entry, params| {
        let line = serde_json::to_string(entry).expect("log entry serializes");
        writeln!(log, "{line}")
            .and_then(|_| log.flush())
            .map_err(|e| Error::io(&log_path, e))?;
        checkpoint::save(params, &last_path)
    })?;
    checkpoint::save(&outcome.best, &out.join("best.ckpt"))?;

    let best = &outcome.log[outcome.best_epoch - 1];
    Ok(TrainSummary {
        output_dir: out,
        epochs: outcome.log.len(),
        best_epoch: outcome.best_epoch,
        best_score: best.validation,
        final_loss: outcome.log.last().map_or(f64::NAN, |e| e.total),
    })
}

#[derive(Debug, Clone, Default)]
pub struct GenerateArgs {
    /// Only this sentiment; positive and negative when unset.
    pub sentiment: Option<SentimentCategory>,
    /// All three sentiments per image.
    pub contrastive: bool,
    /// Caption file whose image ids are captioned; defaults to `paths.test`,
    /// then to every image in the feature file.
    pub captions: Option<PathBuf>,
}

fn unique_ids(captions: &[RawCaption]) -> Vec<String> {
    let mut seen = HashSet::new();
    captions
        .iter()
        .filter(|c| seen.insert(c.image_id.as_str()))
        .map(|c| c.image_id.clone())
        .collect()
}

pub fn load_model(cfg: &RunConfig) -> Result<(Parameters, Vocabulary)> {
    let params = checkpoint::load(&cfg.paths.checkpoint())?;
    let variant = params.config().variant;
    if variant != cfg.model.variant {
        return Err(Error::config(format!(
            "checkpoint {} holds a {variant} model but the configuration asks for {}",
            cfg.paths.checkpoint().display(),
            cfg.model.variant
        )));
    }
    let vocab = Vocabulary::load(&cfg.paths.vocab())?;
    if vocab.len() != params.config().vocab_size {
        return Err(Error::config(format!(
            "vocabulary {} has {} words but the checkpoint expects {}",
            cfg.paths.vocab().display(),
            vocab.len(),
            params.config().vocab_size
        )));
    }
    Ok((params, vocab))
}

pub fn cmd_generate(cfg: &RunConfig, args: &GenerateArgs) -> Result<Vec<GeneratedCaption>> {
    let (params, vocab) = load_model(cfg)?;
    let p = &cfg.paths;
    let features = FeatureStore::load(p.require(&p.features, "features")?)?;
    let ids = match args.captions.as_ref().or(p.test.as_ref()) {
        Some(path) => unique_ids(&read_captions(path)?),
        None => features.ids().map(str::to_string).collect(),
    };
    let sentiments = match args.sentiment {
        Some(s) => vec![s],
        None => vec![SentimentCategory::Positive, SentimentCategory::Negative],
    };

    let mut out = Vec::new();
    for id in ids {
        let f = features.get(&id)?;
        let captions = if args.contrastive {
            generate_contrastive(f, &params, &cfg.decode.options())?
                .into_iter()
                .collect::<Vec<_>>()
        } else {
            sentiments
                .iter()
                .map(|&s| {
                    let request = DecodeRequest {
                        features: f,
                        sentiment: s,
                        options: cfg.decode.options(),
                    };
                    Ok((s, decode(&request, &params)?))
                })
                .collect::<Result<Vec<_>>>()?
        };
        for (sentiment, c) in captions {
            out.push(GeneratedCaption {
                image_id: id.clone(),
                sentiment,
                text: c.text(&vocab),
                log_prob: Some(c.log_prob),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct EvaluateArgs {
    pub generated: PathBuf,
    /// Defaults to `paths.test`.
    pub references: Option<PathBuf>,
    /// Defaults to `paths.lexicon`.
    pub lexicon: Option<PathBuf>,
    /// Only this sentiment; positive and negative plus their average when
    /// unset.
    pub sentiment: Option<SentimentCategory>,
}

pub fn cmd_evaluate(cfg: &RunConfig, args: &EvaluateArgs) -> Result<Vec<ReportRow>> {
    let p = &cfg.paths;
    let generated = read_generated(&args.generated)?;
    let references = match &args.references {
        Some(path) => read_captions(path)?,
        None => read_captions(p.require(&p.test, "test")?)?,
    };
    let lexicon = match &args.lexicon {
        Some(path) => AnpLexicon::load(path)?,
        None => AnpLexicon::load(p.require(&p.lexicon, "lexicon")?)?,
    };
    evaluate_generated(&generated, &references, &lexicon, args.sentiment)
}

fn row_label(s: SentimentCategory) -> &'static str {
    match s {
        SentimentCategory::Positive => "Pos",
        SentimentCategory::Negative => "Neg",
        SentimentCategory::Neutral => "Neu",
    }
}

/// Scores generated captions against references of the same image and
/// sentiment. Unlabelled references count as neutral.
pub fn evaluate_generated(
    generated: &[GeneratedCaption],
    references: &[RawCaption],
    lexicon: &AnpLexicon,
    only: Option<SentimentCategory>,
) -> Result<Vec<ReportRow>> {
    let mut refs: HashMap<(&str, SentimentCategory), Vec<Tokens>> = HashMap::new();
    for r in references {
        let s = r.sentiment.unwrap_or(SentimentCategory::Neutral);
        refs.entry((r.image_id.as_str(), s))
            .or_default()
            .push(tokenize(&r.text));
    }
    let sentiments = match only {
        Some(s) => vec![s],
        None => vec![SentimentCategory::Positive, SentimentCategory::Negative],
    };

    let mut rows = Vec::new();
    for s in sentiments {
        let mut seen = HashSet::new();
        let mut candidates = Vec::new();
        let mut reference_sets = Vec::new();
        let mut missing = Vec::new();
        for g in generated.iter().filter(|g| g.sentiment == s) {
            if !seen.insert(g.image_id.as_str()) {
                return Err(Error::data(format!(
                    "image {} has more than one {s} caption",
                    g.image_id
                )));
            }
            match refs.get(&(g.image_id.as_str(), s)) {
                Some(r) => {
                    candidates.push(tokenize(&g.text));
                    reference_sets.push(r.clone());
                }
                None => missing.push(g.image_id.as_str()),
            }
        }
        if !missing.is_empty() {
            return Err(Error::data(format!(
                "no {s} references for {} image(s): {}",
                missing.len(),
                missing.join(", ")
            )));
        }
        if candidates.is_empty() {
            if only.is_some() {
                return Err(Error::data(format!("no generated {s} captions")));
            }
            continue;
        }
        let report = evaluate(&candidates, &reference_sets, lexicon, Polarity::of(s), false)?;
        rows.push(ReportRow::new(row_label(s), &report));
    }
    match rows.len() {
        0 => return Err(Error::data("no positive or negative captions to evaluate")),
        2 => {
            let avg = ReportRow::mean("Avg", &rows);
            rows.push(avg);
        }
        _ => {}
    }
    Ok(rows)
}

/// Trains and scores every variant on the configured corpus with the shared
/// seed, in table order.
pub fn cmd_ablate(cfg: &RunConfig) -> Result<Vec<VariantRun>> {
    let prepared = load_prepared(cfg)?;
    let p = &cfg.paths;
    let lexicon = AnpLexicon::load(p.require(&p.lexicon, "lexicon")?)?;
    if prepared.test.is_empty() {
        return Err(Error::config("paths.test is needed to score the variants"));
    }
    ablate(&prepared, &lexicon, &cfg.model, &cfg.train, &cfg.decode.options())
}

/// Finite-difference check of the configured variant at the small gradient
/// check size, on random features and captions.
pub fn cmd_gradcheck(cfg: &RunConfig) -> Result<GradientCheck> {
    let g = &cfg.gradcheck;
    if g.dropout_rate > 0.0 {
        return Err(Error::config(format!(
            "gradcheck refuses to run with dropout: the loss must be deterministic (gradcheck.dropout_rate = {})",
            g.dropout_rate
        )));
    }
    let model = ModelConfig {
        dropout_rate: g.dropout_rate,
        ..ModelConfig::tiny(cfg.model.variant)
    };
    let params = Parameters::init(&model, g.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed ^ 0x9e37_79b9);
    let grids: Vec<SpatialFeatures> = (0..g.captions)
        .map(|i| {
            let data = (0..model.regions * model.feature_dim)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            SpatialFeatures::new(format!("g{i}"), Tensor::matrix(model.regions, model.feature_dim, data)?)
        })
        .collect::<Result<_>>()?;
    let captions: Vec<Vec<usize>> = (0..g.captions)
        .map(|_| {
            let len = rng.gen_range(2..=5);
            std::iter::once(START)
                .chain((0..len).map(|_| rng.gen_range(NUM_SPECIAL..model.vocab_size)))
                .chain(std::iter::once(END))
                .collect()
        })
        .collect();
    let batch: Vec<Example<'_>> = (0..g.captions)
        .map(|i| Example {
            features: &grids[i],
            tokens: &captions[i],
            sentiment: SentimentCategory::ALL[i % 3],
        })
        .collect();
    check_gradients(&params, &batch, cfg.train.weights(), g.eps, g.tolerance)
}

/// Writes a synthetic corpus into `out_dir`: `features.saft`,
/// `train.tsv`, `validation.tsv`, `test.tsv`, `lexicon.tsv` and a
/// `config.toml` that points at them. Returns that config with its paths
/// resolved.
pub fn cmd_synth(cfg: &RunConfig, out_dir: &Path) -> Result<RunConfig> {
    let corpus = synth_toy_corpus(&cfg.synth, cfg.train.seed)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    corpus.features.save(&out_dir.join("features.saft"))?;
    write_captions(&out_dir.join("train.tsv"), &corpus.train)?;
    write_captions(&out_dir.join("validation.tsv"), &corpus.validation)?;
    write_captions(&out_dir.join("test.tsv"), &corpus.test)?;
    corpus.lexicon.save(&out_dir.join("lexicon.tsv"))?;

    let mut written = cfg.clone();
    written.paths = super::config::PathsConfig {
        features: Some("features.saft".into()),
        train: Some("train.tsv".into()),
        validation: Some("validation.tsv".into()),
        test: Some("test.tsv".into()),
        lexicon: Some("lexicon.tsv".into()),
        output_dir: Some("run".into()),
        checkpoint: None,
        vocab: None,
    };
    let config_path = out_dir.join("config.toml");
    written.save(&config_path)?;
    RunConfig::load(&config_path)
}
