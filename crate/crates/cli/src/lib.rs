//! `icm` command line. Each subcommand is a thin wrapper over library calls:
//! machine-readable results go to files, a short summary goes to stdout.
//!
//! Exit codes: 0 on success, 1 on invalid input or arguments, 2 on I/O
//! failure.

pub mod corpus;

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use icm_core::analytics::{
    centroid_distance_correlation, interval_performance_trials, parse_embeddings,
    split_half_consistency, stratify,
};
use icm_core::cl_metrics::{AccuracyMatrix, ClReport};
use icm_core::eventlog::to_jsonl;
use icm_core::pipeline::EvaluationConfig;
use icm_core::scheduler::{IntervalSpec, StimulusPlan};
use icm_core::scoring::{read_scores_csv, write_outcomes_jsonl, write_scores_csv};
use icm_core::simulant::{simulate_session, to_records, DecayModel};
use icm_service::registry::ImageRegistry;
use icm_service::store::build_plan;
use icm_service::{ServiceError, SessionConfig, SessionStore};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Invalid(_) => 1,
            Self::Io { .. } => 2,
        }
    }

    fn invalid(context: impl Display, err: impl Display) -> Self {
        Self::Invalid(format!("{context}: {err}"))
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Io(source) => Self::Io {
                path: PathBuf::new(),
                source,
            },
            other => Self::Invalid(other.to_string()),
        }
    }
}

macro_rules! invalid_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::Invalid(e.to_string())
            }
        }
    )*};
}
invalid_from!(
    icm_core::scheduler::SchedulerError,
    icm_core::scoring::ScoringError,
    icm_core::analytics::AnalyticsError,
    icm_core::cl_metrics::ClMetricsError,
    icm_core::simulant::SimulantError
);

pub(crate) fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

#[derive(Debug, Parser)]
#[command(name = "icm", version, about = "Intra-class memorability experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct IntervalArgs {
    /// Allowed repeat intervals, in slots.
    #[arg(long, value_delimiter = ',', default_value = "8,16,24,32")]
    intervals: Vec<u32>,
    #[arg(long, default_value_t = 32)]
    max_interval: u32,
}

impl IntervalArgs {
    fn spec(&self) -> Result<IntervalSpec, CliError> {
        Ok(IntervalSpec::new(
            self.intervals.iter().copied(),
            self.max_interval,
        )?)
    }
}

/// Where recorded sessions come from: an event file plus the plan every
/// session in it ran, or a store directory.
#[derive(Debug, Args)]
struct CorpusArgs {
    #[arg(long, requires = "plan", conflicts_with = "store")]
    events: Option<PathBuf>,
    #[arg(long, requires = "events")]
    plan: Option<PathBuf>,
    #[arg(long)]
    store: Option<PathBuf>,
    #[command(flatten)]
    intervals: IntervalArgs,
}

impl CorpusArgs {
    fn load(&self) -> Result<corpus::Corpus, CliError> {
        match (&self.events, &self.plan, &self.store) {
            (Some(events), Some(plan), None) => {
                corpus::from_events(events, plan, self.intervals.spec()?)
            }
            (None, None, Some(store)) => corpus::from_store(store),
            _ => Err(CliError::Invalid(
                "give either --events with --plan, or --store".into(),
            )),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a stimulus plan.
    Plan {
        #[arg(long)]
        category: String,
        #[arg(long, default_value_t = 100)]
        targets: usize,
        #[arg(long)]
        seed: u64,
        /// Image manifest; synthetic ids are used without one.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Synthetic foil pool size (default 2 * targets + 32).
        #[arg(long, conflicts_with = "manifest")]
        foils: Option<usize>,
        #[command(flatten)]
        intervals: IntervalArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate participants running a plan; writes event JSONL.
    Simulate {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        participants: usize,
        #[arg(long)]
        seed: u64,
        /// Model JSON; by default memorability is uniform in [0.3, 1].
        #[arg(long)]
        model: Option<PathBuf>,
        /// Write the model used, including latent memorability.
        #[arg(long)]
        latent_out: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score recorded sessions; writes the score CSV.
    Score {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = 1)]
        min_responses: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write the attributed outcomes of qualified sessions.
        #[arg(long)]
        outcomes: Option<PathBuf>,
    },
    /// Split scored images into high, low and mixed memorability sets.
    Stratify {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        category: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlate distance to the embedding centroid with ICMscore.
    Correlate {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        /// One group over all categories instead of one per category.
        #[arg(long)]
        pooled: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split-half consistency of ICMscores.
    SplitHalf {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy and F1 per interval, as CSV.
    Intervals {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Continual-learning metrics of an accuracy matrix.
    Clmetrics {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Export scores and outcomes of a store's qualified sessions.
    Export {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 1)]
        min_responses: usize,
        #[arg(long)]
        scores_out: PathBuf,
        #[arg(long)]
        outcomes_out: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

pub fn run<I, T>(args: I) -> i32
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
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    let eval = EvaluationConfig::default();
    match command {
        Command::Plan {
            category,
            targets,
            seed,
            manifest,
            foils,
            intervals,
            out,
        } => {
            let registry = match manifest {
                Some(m) => load_registry(&m)?,
                None => ImageRegistry::synthetic(
                    &[category.as_str()],
                    targets,
                    foils.unwrap_or(2 * targets + 32),
                ),
            };
            let config = SessionConfig {
                k: targets,
                intervals: intervals.spec()?,
                seed,
            };
            let plan = build_plan(&registry, &category, &config)?;
            write_file(&out, &plan.to_json())?;
            println!(
                "{category}: {} targets in {} slots",
                plan.targets().count(),
                plan.len()
            );
        }
        Command::Simulate {
            plan,
            participants,
            seed,
            model,
            latent_out,
            out,
        } => {
            let plan_path = plan;
            let plan = StimulusPlan::from_json(&read_file(&plan_path)?)
                .map_err(|e| CliError::invalid(plan_path.display(), e))?;
            let model = match model {
                Some(path) => DecayModel::from_json(&read_file(&path)?)?,
                None => DecayModel::with_uniform_memorability(plan.targets(), 0.3, 1.0, seed)?,
            };
            if let Some(path) = latent_out {
                write_file(&path, &model.to_json())?;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut records = Vec::new();
            for i in 0..participants {
                let id = format!("sim-{i:04}");
                let events = simulate_session(&plan, &model, &id, eval.timing, rng.random())?;
                records.extend(to_records(&events));
            }
            write_file(&out, &to_jsonl(&records))?;
            println!("{participants} participants, {} presses", records.len());
        }
        Command::Score {
            corpus,
            min_responses,
            out,
            outcomes,
        } => {
            let corpus = corpus.load()?;
            let run = corpus.score(&eval, min_responses)?;
            write_file(&out, &write_scores_csv(&run.table.scores))?;
            if let Some(path) = outcomes {
                write_file(
                    &path,
                    &write_outcomes_jsonl(run.qualified.iter().flat_map(|s| &s.outcomes)),
                )?;
            }
            println!(
                "{} images scored, {} excluded, {} of {} sessions qualified",
                run.table.scores.len(),
                run.table.excluded.len(),
                run.qualified.len(),
                run.verdicts.len()
            );
        }
        Command::Stratify {
            scores,
            k,
            seed,
            category,
            out,
        } => {
            let mut scores = read_scores_csv(read_file(&scores)?.as_bytes())?;
            if let Some(c) = &category {
                scores.retain(|s| &s.category == c);
            }
            let split = stratify(&scores, k, seed)?;
            write_file(
                &out,
                &serde_json::to_string_pretty(&split).expect("split serialises"),
            )?;
            println!(
                "{}: hm={} lm={} mm={}",
                split.category,
                split.hm.len(),
                split.lm.len(),
                split.mm.len()
            );
        }
        Command::Correlate {
            embeddings,
            scores,
            pooled,
            out,
        } => {
            let set = parse_embeddings(&read_file(&embeddings)?)?;
            let scores = read_scores_csv(read_file(&scores)?.as_bytes())?;
            let results = centroid_distance_correlation(&set.records, &scores, !pooled)?;
            let mut json = serde_json::Map::new();
            for (group, result) in &results {
                match result {
                    Ok(c) => {
                        println!("{group}: r={} p={} n={}", c.r, c.p, c.n);
                        json.insert(group.clone(), serde_json::to_value(c).expect("serialises"));
                    }
                    Err(e) => {
                        println!("{group}: {e}");
                        json.insert(group.clone(), serde_json::json!({ "error": e.to_string() }));
                    }
                }
            }
            if let Some(path) = out {
                write_file(
                    &path,
                    &serde_json::to_string_pretty(&json).expect("serialises"),
                )?;
            }
        }
        Command::SplitHalf {
            corpus,
            runs,
            seed,
            out,
        } => {
            let corpus = corpus.load()?;
            let run = corpus.score(&eval, 1)?;
            let result = split_half_consistency(&run.qualified, &corpus.spec, runs, seed)?;
            println!("mean_rho={}\nstd_rho={}", result.mean_rho, result.std_rho);
            if let Some(path) = out {
                write_file(
                    &path,
                    &serde_json::to_string_pretty(&result).expect("serialises"),
                )?;
            }
        }
        Command::Intervals { corpus, out } => {
            let corpus = corpus.load()?;
            let run = corpus.score(&eval, 1)?;
            let curve = interval_performance_trials(
                run.qualified.iter().map(|s| s.outcomes.as_slice()),
                &corpus.spec,
            );
            match out {
                Some(path) => {
                    write_file(&path, &curve.to_csv())?;
                    println!(
                        "{} intervals from {} sessions",
                        curve.points.len(),
                        run.qualified.len()
                    );
                }
                None => print!("{}", curve.to_csv()),
            }
        }
        Command::Clmetrics { matrix } => {
            let a = AccuracyMatrix::from_csv(&read_file(&matrix)?)?;
            print!("{}", ClReport::compute(&a));
        }
        Command::Export {
            store,
            min_responses,
            scores_out,
            outcomes_out,
        } => {
            if !icm_service::persist::index_path(&store).is_file() {
                return Err(CliError::Io {
                    path: store,
                    source: io::Error::new(io::ErrorKind::NotFound, "no session store"),
                });
            }
            let store = SessionStore::open(&store, ImageRegistry::default(), eval)?;
            let dataset = store.export_dataset(min_responses)?;
            write_file(&scores_out, &dataset.scores_csv)?;
            if let Some(path) = outcomes_out {
                write_file(&path, &dataset.outcomes_jsonl)?;
            }
            println!(
                "{} qualified sessions, {} images excluded",
                dataset.sessions.len(),
                dataset.excluded.len()
            );
        }
        Command::Serve {
            store,
            manifest,
            addr,
        } => {
            let registry = load_registry(&manifest)?;
            let store = Arc::new(SessionStore::open(&store, registry, eval)?);
            let runtime = tokio::runtime::Runtime::new().map_err(|source| CliError::Io {
                path: PathBuf::new(),
                source,
            })?;
            runtime
                .block_on(icm_service::http::serve(addr, store))
                .map_err(|source| CliError::Io {
                    path: PathBuf::from(addr.to_string()),
                    source,
                })?;
        }
    }
    Ok(())
}

fn load_registry(path: &Path) -> Result<ImageRegistry, CliError> {
    ImageRegistry::load(path).map_err(|e| match e {
        ServiceError::Io(source) => CliError::Io {
            path: path.to_owned(),
            source,
        },
        other => CliError::Invalid(other.to_string()),
    })
}
