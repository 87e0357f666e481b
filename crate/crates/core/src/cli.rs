//! The `secreq` command-line front end.
//!
//! Every command reads its inputs, writes results only under `--out`
//! (default `out/`) and prints the main result to stdout. Exit status is 0
//! on success, 1 for usage errors, 2 for data errors and 3 for internal
//! invariant violations.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::balance::LabeledMatrix;
use crate::corpus::{
    audit_labels, default_styles, load_corpus, save_corpus, synthesize_corpus, Corpus, CorpusFormat, Label, SpecType,
    Style, SynthConfig, DEFAULT_AUDIT_STEMS,
};
use crate::error::{Error, Result};
use crate::evaluate::report::{aligned, csv_string};
use crate::evaluate::{
    compare_reports, report_from_json, run_plan, tokenize_corpus, train_model, PipelineConfig, ReportFormat,
    SplitPlan,
};
use crate::forest::{load_model, save_model, top_features, HyperParams};
use crate::tune::{random_search, Objective, SearchOptions, SearchResult, SearchSpace};
use crate::vectorize::{fit_features, transform, TfidfMode};

#[derive(Parser, Debug)]
#[command(name = "secreq", version, about = "Classify natural-language requirements as security-related or not")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalArgs {
    /// Seed for all randomness; required by synth, train, crossval and tune.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory [default: out]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Report format: table, json or csv [default: table]
    #[arg(long, global = true)]
    pub format: Option<ReportFormat>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate a corpus, write it in canonical CSV form and summarise it per specification.
    Ingest {
        /// Corpus file: CSV (spec_id, req_id, text, label) or JSONL.
        input: PathBuf,
    },
    /// Generate a synthetic labelled corpus.
    Synth(SynthArgs),
    /// Train a model on a labelled corpus and report the top features.
    Train {
        /// Labelled corpus (CSV or JSONL).
        corpus: PathBuf,
        #[command(flatten)]
        text: TextArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Number of top-ranked features to report.
        #[arg(long, default_value_t = 25)]
        top: usize,
    },
    /// Label a corpus with a trained model.
    Predict {
        /// Corpus (CSV or JSONL); labels are ignored if present.
        corpus: PathBuf,
        /// Model file written by train.
        #[arg(long)]
        model: PathBuf,
    },
    /// Hold-out, k-fold or leave-one-specification-out validation.
    Crossval {
        /// Labelled corpus (CSV or JSONL).
        corpus: PathBuf,
        #[command(flatten)]
        text: TextArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// loso, holdout or kfold:K [default: loso]
        #[arg(long)]
        split: Option<String>,
        /// Restrict the corpus to one specification type (SRS, RFP, BL).
        #[arg(long)]
        spec_type: Option<SpecType>,
        /// Stratify the hold-out split by label.
        #[arg(long)]
        stratify: bool,
    },
    /// Random hyper-parameter search with inner k-fold cross-validation.
    Tune {
        /// Labelled corpus (CSV or JSONL).
        corpus: PathBuf,
        #[command(flatten)]
        text: TextArgs,
        /// Parameter combinations to try.
        #[arg(long, default_value_t = 100)]
        iterations: usize,
        /// Inner cross-validation folds.
        #[arg(long, default_value_t = 3)]
        inner_k: usize,
        /// f1, f05, f2 or accuracy
        #[arg(long, default_value = "f1")]
        objective: Objective,
        /// JSON search-space override.
        #[arg(long)]
        space: Option<PathBuf>,
    },
    /// List labels that disagree with a security keyword heuristic.
    Audit {
        /// Labelled corpus (CSV or JSONL).
        corpus: PathBuf,
        /// Comma-separated keyword stems.
        #[arg(long, value_delimiter = ',')]
        stems: Vec<String>,
    },
    /// Per-fold differences between two JSON reports (variant minus base).
    Compare {
        /// Baseline report.json.
        base: PathBuf,
        /// Variant report.json.
        variant: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    /// Number of specifications.
    #[arg(long, default_value_t = 10)]
    pub specs: usize,
    /// Requirements per specification.
    #[arg(long, default_value_t = 300)]
    pub reqs_per_spec: usize,
    /// Share of security-related requirements.
    #[arg(long, default_value_t = 0.2)]
    pub positive_rate: f64,
    /// Comma-separated styles per spec: user-story, system-shall, vendor-instruction.
    #[arg(long, value_delimiter = ',')]
    pub styles: Vec<Style>,
    /// Share of positives written without security vocabulary [default: 0.08]
    #[arg(long)]
    pub quiet_positive_rate: Option<f64>,
    /// Share of negatives written with security vocabulary [default: 0.015]
    #[arg(long)]
    pub noisy_negative_rate: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct TextArgs {
    /// Also drop "user", "shall" and "vendor".
    #[arg(long)]
    pub extend_stopwords: bool,
    /// plain or smoothed
    #[arg(long)]
    pub tfidf: Option<TfidfMode>,
    /// L2-normalise TF-IDF vectors.
    #[arg(long)]
    pub l2: bool,
    /// SMOTE neighbours [default: 5]
    #[arg(long)]
    pub smote_k: Option<usize>,
    /// Train without oversampling.
    #[arg(long, conflicts_with = "smote_k")]
    pub no_smote: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    /// Hyper-parameters: a HyperParams JSON file or a tune result.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Use the tuned values (400 trees, sqrt features, unlimited depth, no bootstrap).
    #[arg(long, conflicts_with = "params")]
    pub tuned: bool,
    /// Override the number of trees.
    #[arg(long)]
    pub trees: Option<usize>,
}

/// Run configuration file. Every field is optional; flags win.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub jobs: Option<usize>,
    pub extend_stopwords: Option<bool>,
    pub tfidf: Option<TfidfMode>,
    pub l2_normalize: Option<bool>,
    pub smote: Option<bool>,
    pub smote_k: Option<usize>,
    pub params: Option<HyperParams>,
    pub split: Option<String>,
    pub spec_type: Option<SpecType>,
    pub stratify: Option<bool>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        Some(p) => serde_json::from_str(&read_text(p)?)
            .map_err(|e| Error::Usage(format!("config {}: {e}", p.display()))),
        None => Ok(FileConfig::default()),
    }
}

/// Resolved global settings.
struct Context {
    seed: Option<u64>,
    format: ReportFormat,
    out: PathBuf,
    inputs: Vec<PathBuf>,
    file: FileConfig,
}

impl Context {
    fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Usage("--seed is required for this command".into()))
    }

    fn note_input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    /// Writes `name` under the output directory, refusing to touch inputs.
    fn write(&self, name: &str, content: &str) -> Result<PathBuf> {
        let path = self.prepare(name)?;
        fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    fn prepare(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        let path = self.out.join(name);
        if path.exists() {
            let target = path.canonicalize().map_err(|e| Error::io(&path, e))?;
            for input in &self.inputs {
                if input.canonicalize().ok().as_ref() == Some(&target) {
                    return Err(Error::Usage(format!(
                        "refusing to overwrite input file {}",
                        input.display()
                    )));
                }
            }
        }
        Ok(path)
    }

    fn pipeline(&self, text: &TextArgs, model: Option<&ModelArgs>) -> Result<PipelineConfig> {
        let f = &self.file;
        let smote_k = if text.no_smote {
            None
        } else if let Some(k) = text.smote_k {
            Some(k)
        } else if f.smote == Some(false) {
            None
        } else {
            Some(f.smote_k.unwrap_or(5))
        };
        let mut params = HyperParams::default();
        if let Some(m) = model {
            params = if let Some(p) = &m.params {
                read_params(p)?
            } else if m.tuned {
                HyperParams::tuned()
            } else {
                f.params.clone().unwrap_or_default()
            };
            if let Some(n) = m.trees {
                params.n_estimators = n;
            }
        }
        params.validate()?;
        Ok(PipelineConfig {
            extend_stopwords: text.extend_stopwords || f.extend_stopwords.unwrap_or(false),
            tfidf: text.tfidf.or(f.tfidf).unwrap_or_default(),
            l2_normalize: text.l2 || f.l2_normalize.unwrap_or(false),
            smote_k,
            params,
            seed: self.seed()?,
            stratify: f.stratify.unwrap_or(false),
        })
    }
}

/// Accepts a bare HyperParams document or a tune result (uses its best).
fn read_params(path: &Path) -> Result<HyperParams> {
    let text = read_text(path)?;
    if let Ok(r) = serde_json::from_str::<SearchResult>(&text) {
        return Ok(r.best);
    }
    serde_json::from_str(&text).map_err(|e| Error::Usage(format!("params {}: {e}", path.display())))
}

fn parse_split(s: &str, spec_type: Option<SpecType>) -> Result<SplitPlan> {
    let lower = s.trim().to_ascii_lowercase();
    match lower.as_str() {
        "loso" | "leave-one-spec-out" | "cross-project" => Ok(SplitPlan::LeaveOneSpecOut { spec_type }),
        "holdout" | "80/20" => Ok(SplitPlan::Holdout),
        _ => lower
            .strip_prefix("kfold:")
            .or_else(|| lower.strip_prefix("kfold="))
            .and_then(|k| k.parse().ok())
            .map(SplitPlan::KFold)
            .ok_or_else(|| Error::Usage(format!("unknown split {s:?} (use loso, holdout or kfold:K)"))),
    }
}

fn load(ctx: &mut Context, path: &Path) -> Result<Corpus> {
    ctx.note_input(path);
    load_corpus(path, CorpusFormat::from_path(path))
}

fn render_summary(corpus: &Corpus, format: ReportFormat) -> Result<String> {
    let summary = corpus.summary();
    match format {
        ReportFormat::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                specs: &'a [crate::corpus::SpecSummary],
                total: usize,
                positives: usize,
                negatives: usize,
                unlabeled: usize,
            }
            let mut s = serde_json::to_string_pretty(&Out {
                specs: &summary,
                total: corpus.len(),
                positives: corpus.positive_count(),
                negatives: corpus.negative_count(),
                unlabeled: corpus.unlabeled_count(),
            })?;
            s.push('\n');
            Ok(s)
        }
        _ => {
            let mut rows: Vec<Vec<String>> = summary
                .iter()
                .map(|s| {
                    vec![
                        s.meta.spec_id.clone(),
                        s.meta.spec_type.to_string(),
                        s.meta.project_type.to_string(),
                        s.meta.prelabeled.to_string(),
                        s.total.to_string(),
                        s.positives.to_string(),
                        s.negatives.to_string(),
                        s.unlabeled.to_string(),
                    ]
                })
                .collect();
            rows.push(vec![
                "Total".into(),
                String::new(),
                String::new(),
                String::new(),
                corpus.len().to_string(),
                corpus.positive_count().to_string(),
                corpus.negative_count().to_string(),
                corpus.unlabeled_count().to_string(),
            ]);
            let header = ["Spec", "Type", "Project", "Pre-labelled", "Reqs", "Security", "Other", "Unlabelled"];
            if format == ReportFormat::Csv {
                csv_string(&header, &rows)
            } else {
                Ok(aligned(&header, &rows))
            }
        }
    }
}

fn cmd_ingest(ctx: &mut Context, input: &Path) -> Result<String> {
    let corpus = load(ctx, input)?;
    let path = ctx.prepare("corpus.csv")?;
    save_corpus(&corpus, &path, CorpusFormat::Csv)?;
    let summary = render_summary(&corpus, ctx.format)?;
    ctx.write(&format!("summary.{}", ctx.format.extension()), &summary)?;
    Ok(summary)
}

fn cmd_synth(ctx: &mut Context, args: &SynthArgs) -> Result<String> {
    let styles = if args.styles.is_empty() {
        default_styles(args.specs)
    } else {
        args.styles.clone()
    };
    let mut config = SynthConfig {
        styles,
        ..SynthConfig::new(ctx.seed()?, args.specs, args.reqs_per_spec, args.positive_rate)
    };
    if let Some(r) = args.quiet_positive_rate {
        config.quiet_positive_rate = r;
    }
    if let Some(r) = args.noisy_negative_rate {
        config.noisy_negative_rate = r;
    }
    let corpus = synthesize_corpus(&config)?;
    let path = ctx.prepare("corpus.csv")?;
    save_corpus(&corpus, &path, CorpusFormat::Csv)?;
    render_summary(&corpus, ctx.format)
}

fn cmd_train(ctx: &mut Context, corpus: &Path, text: &TextArgs, model: &ModelArgs, top: usize) -> Result<String> {
    if let Some(p) = &model.params {
        ctx.note_input(p);
    }
    let corpus = load(ctx, corpus)?;
    let config = ctx.pipeline(text, Some(model))?;
    let trained = train_model(&corpus, &config)?;
    log::info!(
        "trained on {} rows ({} synthetic), {} features",
        trained.n_real,
        trained.n_synthetic,
        trained.model.space.len()
    );
    let path = ctx.prepare("model.json")?;
    save_model(&trained.model, &path)?;

    let ranked = top_features(&trained.model, top);
    let rendered = match ctx.format {
        ReportFormat::Json => {
            #[derive(Serialize)]
            struct Feature<'a> {
                rank: usize,
                feature: &'a str,
                importance_percent: f64,
            }
            let items: Vec<Feature> = ranked
                .iter()
                .enumerate()
                .map(|(i, (f, v))| Feature {
                    rank: i + 1,
                    feature: f,
                    importance_percent: *v,
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&items)?;
            s.push('\n');
            s
        }
        format => {
            let rows: Vec<Vec<String>> = ranked
                .iter()
                .enumerate()
                .map(|(i, (f, v))| {
                    let v = if format == ReportFormat::Csv {
                        v.to_string()
                    } else {
                        format!("{v:.1}")
                    };
                    vec![(i + 1).to_string(), f.clone(), v]
                })
                .collect();
            let header = ["Rank", "Feature", "Importance %"];
            if format == ReportFormat::Csv {
                csv_string(&header, &rows)?
            } else {
                aligned(&header, &rows)
            }
        }
    };
    ctx.write(&format!("features.{}", ctx.format.extension()), &rendered)?;
    Ok(rendered)
}

fn cmd_predict(ctx: &mut Context, corpus_path: &Path, model_path: &Path) -> Result<String> {
    ctx.note_input(model_path);
    let format = CorpusFormat::from_path(corpus_path);
    let corpus = load(ctx, corpus_path)?;
    let model = load_model(model_path)?;
    let stops = model.preprocessing.stop_words();

    let mut positives = 0;
    let mut low_signal = 0;
    let predictions: Vec<(Label, f64, bool)> = corpus
        .requirements()
        .iter()
        .map(|r| {
            let x = model.preprocessing.vectorize(&r.text, &stops, &model.space);
            let p = model.predict(&x);
            positives += usize::from(p.label.is_positive());
            low_signal += usize::from(x.is_empty());
            (p.label, p.score, x.is_empty())
        })
        .collect();

    let label_text = |l: Option<Label>| l.map(|l| l.as_digit().to_string()).unwrap_or_default();
    let (name, content) = match format {
        CorpusFormat::Csv => {
            let rows: Vec<Vec<String>> = corpus
                .requirements()
                .iter()
                .zip(&predictions)
                .map(|(r, (l, s, low))| {
                    vec![
                        r.spec_id.clone(),
                        r.req_id.clone(),
                        r.text.clone(),
                        label_text(r.label),
                        l.as_digit().to_string(),
                        s.to_string(),
                        low.to_string(),
                    ]
                })
                .collect();
            let header = ["spec_id", "req_id", "text", "label", "predicted_label", "score", "low_signal"];
            ("predictions.csv", csv_string(&header, &rows)?)
        }
        CorpusFormat::Jsonl => {
            #[derive(Serialize)]
            struct Row<'a> {
                spec_id: &'a str,
                req_id: &'a str,
                text: &'a str,
                label: Option<u8>,
                predicted_label: u8,
                score: f64,
                low_signal: bool,
            }
            let mut out = String::new();
            for (r, (l, s, low)) in corpus.requirements().iter().zip(&predictions) {
                out.push_str(&serde_json::to_string(&Row {
                    spec_id: &r.spec_id,
                    req_id: &r.req_id,
                    text: &r.text,
                    label: r.label.map(Label::as_digit),
                    predicted_label: l.as_digit(),
                    score: *s,
                    low_signal: *low,
                })?);
                out.push('\n');
            }
            ("predictions.jsonl", out)
        }
    };
    let path = ctx.write(name, &content)?;
    Ok(format!(
        "{} rows, {positives} predicted security-related, {low_signal} low-signal; written to {}\n",
        predictions.len(),
        path.display()
    ))
}

fn cmd_crossval(
    ctx: &mut Context,
    corpus: &Path,
    text: &TextArgs,
    model: &ModelArgs,
    split: Option<&str>,
    spec_type: Option<SpecType>,
    stratify: bool,
) -> Result<String> {
    if let Some(p) = &model.params {
        ctx.note_input(p);
    }
    let corpus = load(ctx, corpus)?;
    let mut config = ctx.pipeline(text, Some(model))?;
    config.stratify |= stratify;
    let spec_type = spec_type.or(ctx.file.spec_type);
    let split = split.map(str::to_owned).or(ctx.file.split.clone());
    let plan = parse_split(split.as_deref().unwrap_or("loso"), spec_type)?;
    if spec_type.is_some() && !matches!(plan, SplitPlan::LeaveOneSpecOut { .. }) {
        return Err(Error::Usage("--spec-type applies only to the loso split".into()));
    }
    let report = run_plan(&corpus, &config, plan)?;
    ctx.write("report.json", &report.render(ReportFormat::Json)?)?;
    let rendered = report.render(ctx.format)?;
    if ctx.format != ReportFormat::Json {
        ctx.write(&format!("report.{}", ctx.format.extension()), &rendered)?;
    }
    Ok(rendered)
}

fn cmd_tune(
    ctx: &mut Context,
    corpus: &Path,
    text: &TextArgs,
    opts: SearchOptions,
    space: Option<&Path>,
) -> Result<String> {
    let space = match space {
        Some(p) => {
            ctx.note_input(p);
            serde_json::from_str(&read_text(p)?).map_err(|e| Error::Usage(format!("space {}: {e}", p.display())))?
        }
        None => SearchSpace::default(),
    };
    let corpus = load(ctx, corpus)?;
    let config = ctx.pipeline(text, None)?;
    log::warn!(
        "tuning on the whole labelled corpus: later validation on the same corpus is optimistic, \
         as tuned values have seen every fold"
    );
    let tokens = tokenize_corpus(&corpus, &config);
    let space_terms = fit_features(&tokens, config.tfidf)?;
    let mut matrix = LabeledMatrix::new(space_terms.len());
    for (i, (r, t)) in corpus.requirements().iter().zip(&tokens).enumerate() {
        let label = r
            .label
            .ok_or_else(|| Error::InvalidCorpus(format!("requirement ({}, {}) is unlabeled", r.spec_id, r.req_id)))?;
        matrix.push_real(transform(t, &space_terms, config.l2_normalize), label, i)?;
    }
    let opts = SearchOptions {
        smote_k: config.smote_k,
        seed: config.seed,
        ..opts
    };
    let result = random_search(&matrix, &space, &opts)?;
    let mut json = serde_json::to_string_pretty(&result)?;
    json.push('\n');
    let path = ctx.write("search.json", &json)?;
    let best = serde_json::to_string(&result.best)?;
    Ok(format!(
        "{} trials, {} fits{}\nbest {} = {:.2}: {best}\nwritten to {}\n",
        result.trials.len(),
        result.fits,
        if result.exhausted { " (search space exhausted)" } else { "" },
        result.objective,
        result.best_score,
        path.display()
    ))
}

fn cmd_audit(ctx: &mut Context, corpus: &Path, stems: &[String]) -> Result<String> {
    let corpus = load(ctx, corpus)?;
    let flags = if stems.is_empty() {
        audit_labels(&corpus, &DEFAULT_AUDIT_STEMS)
    } else {
        audit_labels(&corpus, stems)
    };
    let rendered = match ctx.format {
        ReportFormat::Json => {
            #[derive(Serialize)]
            struct Flag<'a> {
                spec_id: &'a str,
                req_id: &'a str,
                label: u8,
                #[serde(flatten)]
                reason: &'a crate::corpus::FlagReason,
                text: &'a str,
            }
            let items: Vec<Flag> = flags
                .iter()
                .map(|f| Flag {
                    spec_id: &f.requirement.spec_id,
                    req_id: &f.requirement.req_id,
                    label: f.requirement.label.map_or(0, Label::as_digit),
                    reason: &f.reason,
                    text: &f.requirement.text,
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&items)?;
            s.push('\n');
            s
        }
        format => {
            let rows: Vec<Vec<String>> = flags
                .iter()
                .map(|f| {
                    vec![
                        f.requirement.spec_id.clone(),
                        f.requirement.req_id.clone(),
                        f.requirement.label.map_or(0, Label::as_digit).to_string(),
                        f.reason.describe(),
                        f.requirement.text.clone(),
                    ]
                })
                .collect();
            let header = ["spec_id", "req_id", "label", "reason", "text"];
            if format == ReportFormat::Csv {
                csv_string(&header, &rows)?
            } else {
                aligned(&header, &rows)
            }
        }
    };
    ctx.write(&format!("audit.{}", ctx.format.extension()), &rendered)?;
    Ok(rendered)
}

fn cmd_compare(ctx: &mut Context, base: &Path, variant: &Path) -> Result<String> {
    ctx.note_input(base);
    ctx.note_input(variant);
    let b = report_from_json(&read_text(base)?)?;
    let v = report_from_json(&read_text(variant)?)?;
    let table = compare_reports(&b, &v)?;
    let rendered = table.render(ctx.format)?;
    ctx.write(&format!("compare.{}", ctx.format.extension()), &rendered)?;
    Ok(rendered)
}

/// Runs a parsed command and returns what it prints.
pub fn run(cli: &Cli) -> Result<String> {
    let file = load_file_config(cli.global.config.as_deref())?;
    let format = match (&cli.global.format, &file.format) {
        (Some(f), _) => *f,
        (None, Some(s)) => s.parse().map_err(|e: Error| Error::Usage(e.to_string()))?,
        (None, None) => ReportFormat::default(),
    };
    let jobs = cli.global.jobs.or(file.jobs);
    let mut ctx = Context {
        seed: cli.global.seed.or(file.seed),
        format,
        out: cli
            .global
            .out
            .clone()
            .or_else(|| file.out.clone())
            .unwrap_or_else(|| PathBuf::from("out")),
        inputs: Vec::new(),
        file,
    };
    if let Some(c) = &cli.global.config {
        ctx.note_input(c);
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::Usage("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&mut ctx, &cli.command))
}

fn dispatch(ctx: &mut Context, command: &Command) -> Result<String> {
    match command {
        Command::Ingest { input } => cmd_ingest(ctx, input),
        Command::Synth(args) => cmd_synth(ctx, args),
        Command::Train {
            corpus,
            text,
            model,
            top,
        } => cmd_train(ctx, corpus, text, model, *top),
        Command::Predict { corpus, model } => cmd_predict(ctx, corpus, model),
        Command::Crossval {
            corpus,
            text,
            model,
            split,
            spec_type,
            stratify,
        } => cmd_crossval(ctx, corpus, text, model, split.as_deref(), *spec_type, *stratify),
        Command::Tune {
            corpus,
            text,
            iterations,
            inner_k,
            objective,
            space,
        } => {
            let opts = SearchOptions {
                iterations: *iterations,
                inner_k: *inner_k,
                objective: *objective,
                ..SearchOptions::default()
            };
            cmd_tune(ctx, corpus, text, opts, space.as_deref())
        }
        Command::Audit { corpus, stems } => cmd_audit(ctx, corpus, stems),
        Command::Compare { base, variant } => cmd_compare(ctx, base, variant),
    }
}

/// Parses `args`, runs the command, prints its output and returns the
/// process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
