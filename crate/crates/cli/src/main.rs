use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use advkit::metrics::welch_t_test;
use advkit::AdvPoint;
use advkit_cli::commands::{self, FitMode, OutputFormat};
use advkit_cli::service::{self, SessionStore, SessionsFile, StaticDirs};
use advkit_cli::PipelineConfig;
use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "advkit", version, about = "ADV quantization, corpus preparation and evaluation tools")]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, env = "ADVKIT_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Drop malformed, overlong, transcript-less and sparse-speaker rows.
    Clean {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        rejects: PathBuf,
    },
    /// Fit the ADV binning and write the model JSON plus a `.report.txt`.
    Fit {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, env = "ADVKIT_OUT")]
        out: PathBuf,
        /// Overrides `quantizer.rng_seed`.
        #[arg(long, env = "ADVKIT_SEED")]
        seed: Option<u64>,
        /// Force this many bins per axis instead of selecting K.
        #[arg(long)]
        bins: Option<usize>,
        /// Equal-width bins (requires --bins).
        #[arg(long, requires = "bins")]
        linear: bool,
    },
    /// Map ADV points to token triples.
    Quantize {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: PointsInput,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Occupancy of the token cube.
    Coverage {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: PointsInput,
        #[arg(long, value_enum, default_value = "lines", env = "ADVKIT_FORMAT")]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build training sequence pairs.
    Assemble {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// JSON lines of `{"id", "tokens"}`.
        #[arg(long)]
        semantic: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Label, dataset-type, speaker and ADV histograms of the cleaned corpus.
    Stats {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = advkit::ingest::DEFAULT_HISTOGRAM_BINS)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluation statistics.
    #[command(subcommand)]
    Metrics(Metric),
    /// Run the ranking-session HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080, env = "ADVKIT_PORT")]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Session definitions (JSON).
        #[arg(long)]
        sessions: PathBuf,
        /// Append-only submission journal; replayed on start.
        #[arg(long)]
        journal: PathBuf,
        #[arg(long)]
        media_dir: Option<PathBuf>,
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
#[group(required = true, multiple = false)]
struct PointsInput {
    /// JSON lines of `{"id"?, "a", "d", "v"}` on the normalized scale.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Use the ADV values of the cleaned manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Metric {
    /// Spearman rank correlation between two ranking files.
    Src {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Kendall's W over a file with one ranking per rater.
    Kw {
        #[arg(long)]
        rankings: PathBuf,
    },
    /// Macro precision and recall from a confusion-matrix CSV (rows = truth).
    MacroPr {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Pearson correlations of ADV token columns against feature columns.
    Pearson {
        #[arg(long)]
        table: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "x_a,x_d,x_v")]
        adv_columns: Vec<String>,
    },
    /// Feature deltas of perturbed patterns against per-emotion baselines.
    Deltas {
        #[arg(long)]
        table: PathBuf,
        /// Print JSON instead of the aligned table.
        #[arg(long)]
        json: bool,
    },
    /// Welch's t-test between two files of numbers.
    Ttest {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
    },
}

fn json_line<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(value)? + "\n")
}

fn points_from(input: &PointsInput, cfg: &PipelineConfig) -> Result<Vec<commands::PointRow>> {
    if let Some(path) = &input.points {
        let (rows, bad) = commands::read_points(path)?;
        if bad > 0 {
            log::warn!("skipped {bad} unreadable point rows");
        }
        return Ok(rows);
    }
    let manifest = input.manifest.as_deref().expect("clap enforces one input");
    let corpus = commands::load_corpus(manifest, cfg)?;
    Ok(corpus
        .built
        .records
        .iter()
        .filter_map(|r| r.adv.map(|p| commands::PointRow { id: Some(r.id.clone()), a: p.a, d: p.d, v: p.v }))
        .collect())
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Clean { manifest, out, rejects } => {
            let s = commands::clean(&manifest, &cfg, &out, &rejects)?;
            eprintln!("kept {} rows, rejected {}", s.kept, s.rejected);
        }
        Command::Fit { manifest, out, seed, bins, linear } => {
            if let Some(seed) = seed {
                cfg.quantizer.rng_seed = seed;
            }
            let mode = match (bins, linear) {
                (Some(m), true) => FitMode::Linear(m),
                (Some(k), false) => FitMode::Fixed(k),
                (None, _) => FitMode::Select,
            };
            let model = commands::fit(&manifest, &cfg, mode, &out)?;
            eprint!("{}", commands::fit_report_text(&model));
            eprintln!("wrote {} and {}", out.display(), commands::report_path(&out).display());
        }
        Command::Quantize { model, input, out } => {
            let model = commands::load_model(&model)?;
            let points = points_from(&input, &cfg)?;
            commands::emit(out.as_deref(), &commands::quantize(&model, &points)?)?;
        }
        Command::Coverage { model, input, format, out } => {
            let model = commands::load_model(&model)?;
            let points: Vec<AdvPoint> =
                points_from(&input, &cfg)?.iter().map(|p| AdvPoint::new(p.a, p.d, p.v)).collect();
            let report = commands::coverage_report(&model, &points);
            commands::emit(out.as_deref(), &commands::format_coverage(&report, format)?)?;
        }
        Command::Assemble { manifest, model, semantic, out } => {
            let model = commands::load_model(&model)?;
            let s = commands::assemble_manifest(&manifest, &semantic, &model, &cfg, out.as_deref())?;
            eprintln!("assembled {} pairs, {} records skipped", s.written, s.failed);
        }
        Command::Stats { manifest, bins, out } => {
            let stats = commands::stats(&manifest, &cfg, bins)?;
            commands::emit(out.as_deref(), &(serde_json::to_string_pretty(&stats)? + "\n"))?;
        }
        Command::Metrics(metric) => {
            let text = match metric {
                Metric::Src { a, b } => commands::metric_src(&a, &b)?,
                Metric::Kw { rankings } => commands::metric_kw(&rankings)?,
                Metric::MacroPr { matrix } => commands::metric_macro_pr(&matrix)?,
                Metric::Pearson { table, adv_columns } => json_line(&commands::metric_pearson(&table, &adv_columns)?)?,
                Metric::Deltas { table, json } => {
                    let report = commands::metric_deltas(&table)?;
                    if json {
                        json_line(&report)?
                    } else {
                        report.to_table()
                    }
                }
                Metric::Ttest { x, y } => {
                    json_line(&welch_t_test(&commands::read_numbers(&x)?, &commands::read_numbers(&y)?)?)?
                }
            };
            commands::emit(None, &text)?;
        }
        Command::Serve { port, host, sessions, journal, media_dir, ui_dir } => {
            serve(&host, port, &sessions, &journal, StaticDirs { media: media_dir, ui: ui_dir })?;
        }
    }
    Ok(())
}

fn serve(host: &str, port: u16, sessions: &Path, journal: &Path, dirs: StaticDirs) -> Result<()> {
    let store = SessionStore::with_journal(SessionsFile::load(sessions)?, journal)?;
    let app = service::router(Arc::new(Mutex::new(store)), &dirs);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener =
            tokio::net::TcpListener::bind((host, port)).await.with_context(|| format!("binding {host}:{port}"))?;
        log::info!("listening on {}", listener.local_addr()?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
