use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use stylometry_core::burrows::{word_report, BurrowsModel};
use stylometry_core::corpus::{self, group_by_author, AuthorCorpus, Partition, SplitSpec};
use stylometry_core::features::Featurizer;
use stylometry_core::matrix::FeatureMatrix;
use stylometry_core::metrics::render_report;
use stylometry_core::models::{AnyModel, BoostParams, ForestParams};
use stylometry_core::pipeline::{
    self, evaluate as score_part, part, predict_labels, transform_matrix, LabeledPart,
    DEFAULT_BURROWS_WORDS,
};
use stylometry_core::transform::FeatureTransform;
use stylometry_core::tuning::{ModelFamily, ParamSpace, TrialParams};
use stylometry_core::{Label, Lexicon};

use crate::config::Config;
use crate::exit::{CliError, Context, Outcome};
use crate::files::{read, write_atomic};

pub const FEATURES: &str = "features.csv";
pub const BURROWS: &str = "burrows.model";
pub const TRANSFORM: &str = "transform.txt";
pub const SPLIT: &str = "split.tsv";
pub const MODEL: &str = "model.txt";
pub const TRIALS: &str = "trials.tsv";
pub const EVALUATION: &str = "evaluation.txt";
pub const PREDICTIONS: &str = "predictions.tsv";
pub const WORD_REPORT: &str = "word_report.tsv";
pub const AUTHORS: &str = "authors.tsv";

const DEFAULT_TRIALS: usize = 1000;

pub struct Globals {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub assets: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub input: Option<PathBuf>,
    pub assets: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
    pub burrows_words: usize,
    pub split: (f64, f64, f64),
    pub model: String,
    pub trials: usize,
    pub partition: Partition,
    pub params: Vec<(String, String)>,
    pub space: Vec<(String, String)>,
}

pub fn parse_split(s: &str) -> Outcome<(f64, f64, f64)> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::usage(format!("bad split `{s}`")))?;
    match parts.as_slice() {
        [a, b, c] => Ok((*a, *b, *c)),
        _ => Err(CliError::usage(format!(
            "split needs three fractions, got `{s}`"
        ))),
    }
}

pub fn parse_partition(s: &str) -> Outcome<Partition> {
    Partition::parse(s).ok_or_else(|| CliError::usage(format!("unknown partition `{s}`")))
}

impl Settings {
    pub fn resolve(config: &Config, globals: Globals) -> Outcome<Self> {
        let seed = match globals.seed {
            Some(s) => s,
            None => config.parsed::<u64>("seed")?.ok_or_else(|| {
                CliError::usage("a seed is required: pass --seed N or set `seed` in the config")
            })?,
        };
        let threads = match globals.threads {
            Some(t) => Some(t),
            None => config.parsed("threads")?,
        };
        if threads == Some(0) {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        Ok(Settings {
            input: config.get("input").map(PathBuf::from),
            assets: globals
                .assets
                .or_else(|| config.get("assets").map(PathBuf::from)),
            out: globals
                .out
                .or_else(|| config.get("out").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("artifacts")),
            seed,
            threads,
            burrows_words: config
                .parsed("burrows_words")?
                .unwrap_or(DEFAULT_BURROWS_WORDS),
            split: match config.get("split") {
                Some(s) => parse_split(s)?,
                None => (0.7, 0.15, 0.15),
            },
            model: config.get("model").unwrap_or("boost").to_owned(),
            trials: config.parsed("trials")?.unwrap_or(DEFAULT_TRIALS),
            partition: match config.get("partition") {
                Some(p) => parse_partition(p)?,
                None => Partition::Test,
            },
            params: config.prefixed("param"),
            space: config.prefixed("space"),
        })
    }

    pub fn with_input(mut self, input: Option<PathBuf>) -> Self {
        if input.is_some() {
            self.input = input;
        }
        self
    }

    fn artifact(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn input(&self) -> Outcome<&Path> {
        let p = self
            .input
            .as_deref()
            .ok_or_else(|| CliError::usage("an input file is required (--input or `input`)"))?;
        if !p.exists() {
            return Err(CliError::missing(format!(
                "input {} does not exist",
                p.display()
            )));
        }
        Ok(p)
    }

    fn lexicon(&self) -> Outcome<Lexicon> {
        match &self.assets {
            Some(dir) => Lexicon::from_dir(dir).stage("assets"),
            None => Ok(Lexicon::bundled()),
        }
    }
}

fn load_corpora(s: &Settings, stage: &str) -> Outcome<Vec<AuthorCorpus>> {
    let ingested = corpus::ingest(s.input()?).stage(stage)?;
    for d in &ingested.diagnostics {
        log::warn!("line {}: {}", d.line, d.message);
    }
    if ingested.records.is_empty() {
        return Err(CliError::invalid(format!("{stage}: no usable records")));
    }
    Ok(group_by_author(&ingested.records))
}

fn label_name(l: Option<Label>) -> &'static str {
    match l {
        Some(Label::Troll) => "1",
        Some(Label::NotTroll) => "0",
        None => "",
    }
}

pub fn ingest(s: &Settings) -> Outcome<()> {
    let ingested = corpus::ingest(s.input()?).stage("ingest")?;
    for d in &ingested.diagnostics {
        eprintln!("warning: line {}: {}", d.line, d.message);
    }
    let corpora = group_by_author(&ingested.records);
    let mut tsv = String::from("author_id\tlabel\tposts\n");
    for c in &corpora {
        let _ = writeln!(
            tsv,
            "{}\t{}\t{}",
            c.author_id,
            label_name(c.label),
            c.posts.len()
        );
    }
    write_atomic(&s.artifact(AUTHORS), tsv.as_bytes())?;
    let trolls = corpora
        .iter()
        .filter(|c| c.label == Some(Label::Troll))
        .count();
    let unlabeled = corpora.iter().filter(|c| c.label.is_none()).count();
    println!("records\t{}", ingested.records.len());
    println!("authors\t{}", corpora.len());
    println!("troll_authors\t{trolls}");
    println!("unlabeled_authors\t{unlabeled}");
    println!("diagnostics\t{}", ingested.diagnostics.len());
    Ok(())
}

pub fn featurize(s: &Settings) -> Outcome<()> {
    let lexicon = s.lexicon()?;
    let corpora = load_corpora(s, "featurize")?;
    let (train, validation, test) = s.split;
    let spec = SplitSpec::new(train, validation, test, s.seed).stage("featurize")?;
    let prepared =
        pipeline::prepare::<f64>(&corpora, &spec, s.burrows_words, &lexicon).stage("featurize")?;

    let mut csv = Vec::new();
    prepared.raw.write_csv(&mut csv).stage("featurize")?;
    write_atomic(&s.artifact(FEATURES), &csv)?;
    write_atomic(&s.artifact(BURROWS), prepared.burrows.to_text().as_bytes())?;
    write_atomic(
        &s.artifact(TRANSFORM),
        prepared.transform.to_text().as_bytes(),
    )?;
    let mut split = String::from("author_id\tpartition\n");
    for (id, p) in prepared.raw.author_ids.iter().zip(&prepared.partitions) {
        let _ = writeln!(split, "{id}\t{}", p.name());
    }
    write_atomic(&s.artifact(SPLIT), split.as_bytes())?;
    println!("authors\t{}", prepared.raw.rows());
    println!("features\t{}", prepared.raw.width());
    println!("schema\t{}", prepared.raw.schema.fingerprint());
    for p in [Partition::Train, Partition::Validation, Partition::Test] {
        let n = prepared.partitions.iter().filter(|q| **q == p).count();
        println!("{}\t{n}", p.name());
    }
    Ok(())
}

struct Workspace {
    transformed: FeatureMatrix<f64>,
    partitions: Vec<Partition>,
}

fn load_workspace(s: &Settings, stage: &str) -> Outcome<Workspace> {
    let csv = read(&s.artifact(FEATURES), "feature matrix")?;
    let raw = FeatureMatrix::<f64>::read_csv(csv.as_bytes()).stage(stage)?;
    let transform = FeatureTransform::<f64>::from_text(&read(&s.artifact(TRANSFORM), "transform")?)
        .stage(stage)?;
    let transformed = transform_matrix(&transform, &raw).stage(stage)?;
    let split_text = read(&s.artifact(SPLIT), "split manifest")?;
    let mut by_author = BTreeMap::new();
    for (i, line) in split_text.lines().enumerate().skip(1) {
        let (id, p) = line
            .split_once('\t')
            .and_then(|(id, p)| Some((id, Partition::parse(p)?)))
            .ok_or_else(|| CliError::invalid(format!("{stage}: {SPLIT}:{}: malformed", i + 1)))?;
        by_author.insert(id.to_owned(), p);
    }
    let partitions = transformed
        .author_ids
        .iter()
        .map(|id| {
            by_author.get(id).copied().ok_or_else(|| {
                CliError::invalid(format!("{stage}: author `{id}` missing from {SPLIT}"))
            })
        })
        .collect::<Outcome<Vec<_>>>()?;
    Ok(Workspace {
        transformed,
        partitions,
    })
}

impl Workspace {
    fn part(&self, which: Partition, stage: &str) -> Outcome<LabeledPart<f64>> {
        part(&self.transformed, &self.partitions, which).stage(stage)
    }
}

fn family(name: &str) -> Outcome<ModelFamily> {
    ModelFamily::parse(name).ok_or_else(|| CliError::usage(format!("unknown model `{name}`")))
}

/// Parameters for one family: plain `name` keys plus `family.name` keys
/// addressed to it. Plain keys are rejected when `plain` is false.
fn fixed_params(s: &Settings, family: ModelFamily, plain: bool) -> Outcome<TrialParams> {
    let prefix = format!("{}.", family.name());
    let mut pairs = Vec::new();
    for (k, v) in &s.params {
        if let Some(key) = k.strip_prefix(&prefix) {
            pairs.push((key, v.as_str()));
        } else if !k.contains('.') {
            if !plain {
                return Err(CliError::usage(format!(
                    "train: ensemble parameters must name their member, e.g. `boost.{k}`"
                )));
            }
            pairs.push((k.as_str(), v.as_str()));
        }
    }
    let params = match family {
        ModelFamily::Forest => ForestParams {
            seed: s.seed,
            ..ForestParams::default()
        }
        .apply_pairs(pairs)
        .map(TrialParams::Forest),
        ModelFamily::Boost => BoostParams {
            seed: s.seed,
            ..BoostParams::default()
        }
        .apply_pairs(pairs)
        .map(TrialParams::Boost),
    };
    params.map_err(|e| CliError::usage(format!("train: {e}")))
}

pub fn train(s: &Settings) -> Outcome<()> {
    let members = if s.model == "ensemble" {
        vec![
            fixed_params(s, ModelFamily::Forest, false)?,
            fixed_params(s, ModelFamily::Boost, false)?,
        ]
    } else {
        vec![fixed_params(s, family(&s.model)?, true)?]
    };
    let ws = load_workspace(s, "train")?;
    let train = ws.part(Partition::Train, "train")?;
    let model = if let [single] = members.as_slice() {
        pipeline::train(single, &train).stage("train")?
    } else {
        let validation = ws.part(Partition::Validation, "train")?;
        let (ensemble, scores) =
            pipeline::train_ensemble(&members, &train, &validation).stage("train")?;
        for (name, f1) in ["forest", "boost"].iter().zip(&scores) {
            println!("member\t{name}\tvalidation_macro_f1\t{f1:.4}");
        }
        AnyModel::Ensemble(ensemble)
    };
    write_atomic(&s.artifact(MODEL), model.to_text().as_bytes())?;
    println!("model\t{}", model.name());
    println!("written\t{}", s.artifact(MODEL).display());
    Ok(())
}

pub fn tune(s: &Settings) -> Outcome<()> {
    let family = family(&s.model)?;
    let space = ParamSpace::default_for(family)
        .with_overrides(s.space.iter().map(|(k, v)| (k.as_str(), v.as_str())))
        .map_err(|e| CliError::usage(format!("tune: {e}")))?;
    let ws = load_workspace(s, "tune")?;
    let train = ws.part(Partition::Train, "tune")?;
    let validation = ws.part(Partition::Validation, "tune")?;
    let (outcome, _, model) =
        pipeline::tune(&space, s.trials, s.seed, &train, &validation).stage("tune")?;
    write_atomic(&s.artifact(TRIALS), outcome.to_tsv().as_bytes())?;
    write_atomic(&s.artifact(MODEL), model.to_text().as_bytes())?;
    let best = outcome.best_trial();
    let params: Vec<String> = best
        .params
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    println!("trials\t{}", outcome.trials.len());
    println!("best_trial\t{}", best.index);
    println!("best_validation_macro_f1\t{:.4}", best.f1);
    println!("best_params\t{}", params.join(","));
    Ok(())
}

fn load_model(s: &Settings, fingerprint: &str, stage: &str) -> Outcome<AnyModel<f64>> {
    AnyModel::load(&read(&s.artifact(MODEL), "model")?, fingerprint).stage(stage)
}

pub fn evaluate(s: &Settings) -> Outcome<()> {
    let ws = load_workspace(s, "evaluate")?;
    let model = load_model(s, ws.transformed.schema.fingerprint(), "evaluate")?;
    let which = ws.part(s.partition, "evaluate")?;
    let ev = score_part(&model, &which).stage("evaluate")?;
    let report = render_report(&model.name(), &ev.confusion, &ev.scores);
    write_atomic(&s.artifact(EVALUATION), report.as_bytes())?;
    print!("{report}");
    Ok(())
}

pub fn predict(s: &Settings) -> Outcome<()> {
    let lexicon = s.lexicon()?;
    let corpora = load_corpora(s, "predict")?;
    let burrows = BurrowsModel::<f64>::from_text(&read(&s.artifact(BURROWS), "Burrows model")?)
        .stage("predict")?;
    let transform = FeatureTransform::<f64>::from_text(&read(&s.artifact(TRANSFORM), "transform")?)
        .stage("predict")?;
    let raw = Featurizer::new(&lexicon, &burrows)
        .and_then(|f| f.matrix(&corpora))
        .stage("predict")?;
    let m = transform_matrix(&transform, &raw).stage("predict")?;
    let model = load_model(s, m.schema.fingerprint(), "predict")?;
    let (p, labels) = predict_labels(&model, &m).stage("predict")?;
    let mut tsv = String::from("author_id\tp_troll\tpredicted\n");
    for ((id, p), l) in m.author_ids.iter().zip(&p).zip(&labels) {
        let name = if l.is_positive() {
            "troll"
        } else {
            "not_troll"
        };
        let _ = writeln!(tsv, "{id}\t{p:.6}\t{name}");
    }
    write_atomic(&s.artifact(PREDICTIONS), tsv.as_bytes())?;
    print!("{tsv}");
    Ok(())
}

pub fn report_words(s: &Settings) -> Outcome<()> {
    let lexicon = s.lexicon()?;
    let corpora = load_corpora(s, "report-words")?;
    let report = word_report(&corpora, s.burrows_words, &lexicon).stage("report-words")?;
    let tsv = report.to_tsv();
    write_atomic(&s.artifact(WORD_REPORT), tsv.as_bytes())?;
    print!("{tsv}");
    Ok(())
}
