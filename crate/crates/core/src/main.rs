//! Command line entry point for the audit toolkit.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use biaslens::framing::FrameRegistry;
use biaslens::gateway::mock::{MockScenario, MockServer};
use biaslens::gateway::EndpointKind;
use biaslens::model::{StatementBank, TopicRegistry};
use biaslens::pipeline::{
    render_report, run_agreement, run_framing_audit, run_pct_audit, run_prompt_sensitivity,
    PipelineError, ReportFormat, RunConfig,
};

#[derive(Debug, Parser)]
#[command(name = "biaslens", version, about = "Political bias audits for language models")]
struct Cli {
    /// Run configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Run directory name; derived from the config digest when omitted.
    #[arg(long, global = true, value_name = "ID")]
    run_id: Option<String>,

    /// Answer every request from the response cache and fail on misses.
    #[arg(long, global = true)]
    offline: bool,

    /// Override the statistics seed, and the retry jitter seed when unset.
    #[arg(long, global = true, value_name = "SEED")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score the statement bank per endpoint, language, and prompt variant.
    PctAudit,
    /// Build or load a headline corpus and report framing metrics.
    FramingAudit,
    /// Measure stance variance and agreement across prompt variants.
    PromptSensitivity,
    /// Compute Fleiss' kappa over an annotation matrix file.
    Agreement {
        /// JSON file holding per-item category rating counts.
        #[arg(long, value_name = "PATH")]
        matrix: PathBuf,
    },
    /// Render a run's persisted reports.
    Report {
        #[arg(long, value_enum, default_value_t = FormatArg::Tabular)]
        format: FormatArg,
        /// Write to this file instead of stdout.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Check a config file and the data files it references.
    Validate,
    /// Serve deterministic stand-in model endpoints on loopback.
    MockServe {
        #[arg(long, default_value_t = 8787)]
        port: u16,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Tabular,
    Plotdata,
}

impl From<FormatArg> for ReportFormat {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::Tabular => ReportFormat::Tabular,
            FormatArg::Plotdata => ReportFormat::Plotdata,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(error) => {
            let code = match error.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = error.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code())
        }
    }
}

/// Loads the config, applies the seed override before the digest is taken so
/// the derived run id tracks the effective settings, and settles the run id.
fn load_config(cli: &Cli) -> Result<(RunConfig, String), PipelineError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| PipelineError::Config("--config is required for this command".into()))?;
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.stats.bootstrap_seed = seed;
        if config.gateway.jitter_seed.is_none() {
            config.gateway.jitter_seed = Some(seed);
        }
    }
    let run_id = cli
        .run_id
        .clone()
        .unwrap_or_else(|| config.default_run_id());
    Ok((config, run_id))
}

fn completion_code(failures: usize) -> ExitCode {
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn run(cli: Cli) -> Result<ExitCode, PipelineError> {
    match &cli.command {
        Command::PctAudit => {
            let (config, run_id) = load_config(&cli)?;
            let outcome = run_pct_audit(&config, &run_id, cli.offline)?;
            println!(
                "pct-audit {}: {}/{} units scored, {} resumed, {} failures",
                outcome.run_id,
                outcome.units_scored,
                outcome.units_total,
                outcome.units_resumed,
                outcome.failures
            );
            println!("report: {}", outcome.report_path.display());
            Ok(completion_code(outcome.failures))
        }
        Command::FramingAudit => {
            let (config, run_id) = load_config(&cli)?;
            let outcome = run_framing_audit(&config, &run_id, cli.offline)?;
            println!(
                "framing-audit {}: {} headlines, {}/{} groups reported, {} resumed, {} failures",
                outcome.run_id,
                outcome.headlines,
                outcome.groups_reported,
                outcome.groups_total,
                outcome.units_resumed,
                outcome.failures
            );
            println!("report: {}", outcome.report_path.display());
            Ok(completion_code(outcome.failures))
        }
        Command::PromptSensitivity => {
            let (config, run_id) = load_config(&cli)?;
            let outcome = run_prompt_sensitivity(&config, &run_id, cli.offline)?;
            println!(
                "prompt-sensitivity {}: {}/{} groups reported, {} failures",
                outcome.run_id, outcome.groups_reported, outcome.groups_total, outcome.failures
            );
            println!("report: {}", outcome.report_path.display());
            Ok(completion_code(outcome.failures))
        }
        Command::Agreement { matrix } => {
            let run = if cli.config.is_some() {
                Some(load_config(&cli)?)
            } else {
                None
            };
            let report = run_agreement(
                matrix,
                run.as_ref().map(|(config, run_id)| (config, run_id.as_str())),
            )?;
            println!(
                "agreement: {} items, {} categories, {} raters",
                report.items, report.categories, report.raters
            );
            match (report.kappa, &report.band) {
                (Some(kappa), Some(band)) => println!("kappa: {kappa:.5} ({band})"),
                _ => println!("kappa: undefined, ratings are degenerate"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { format, out } => {
            let (config, run_id) = load_config(&cli)?;
            match out {
                Some(path) => {
                    let mut file = std::fs::File::create(path).map_err(|e| PipelineError::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    render_report(&config.output_dir, &run_id, (*format).into(), &mut file)?;
                    println!("report written to {}", path.display());
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    render_report(&config.output_dir, &run_id, (*format).into(), &mut lock)?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate => {
            let (config, run_id) = load_config(&cli)?;
            validate(&config, &run_id)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::MockServe { port } => {
            let server = MockServer::start_on(MockScenario::default(), *port);
            println!("mock endpoints listening on {}", server.base_url());
            for (name, kind) in [
                ("chat", EndpointKind::Chat),
                ("classify", EndpointKind::Classifier),
                ("ner", EndpointKind::Ner),
                ("sentiment", EndpointKind::Sentiment),
            ] {
                println!("  {name}: {}{}", server.base_url(), kind.route().trim_start_matches('/'));
            }
            println!("press ctrl-c to stop");
            let runtime = tokio::runtime::Builder::new_current_thread()
                .enable_all()
                .build()
                .map_err(|e| PipelineError::Io {
                    path: PathBuf::from("<runtime>"),
                    source: e,
                })?;
            runtime.block_on(async {
                let _ = tokio::signal::ctrl_c().await;
            });
            drop(server);
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Loads every file the config references so broken paths surface before a
/// run burns requests, then prints the planned workload.
fn validate(config: &RunConfig, run_id: &str) -> Result<(), PipelineError> {
    println!("config ok, run id {run_id}");
    println!("  endpoints: {}", config.gateway.endpoints.len());
    for profile in &config.gateway.endpoints {
        println!(
            "    {} ({:?}) -> {}",
            profile.name,
            profile.kind,
            profile.base_url
        );
    }
    if config.pct.is_some() {
        let pct = config.require_pct()?;
        let bank = StatementBank::load(&pct.statement_bank)?;
        let languages = config.pct_languages()?;
        let units = pct.endpoints.len() * languages.len() * pct.prompt_variants.len();
        println!(
            "  pct: {} statements, {} languages, {} endpoints, {} variants -> {} units",
            bank.statements().len(),
            languages.len(),
            pct.endpoints.len(),
            pct.prompt_variants.len(),
            units
        );
    }
    if config.framing.is_some() {
        let framing = config.require_framing()?;
        let topics = TopicRegistry::load(&framing.topics_file)?;
        let frames = match &framing.frames_file {
            Some(path) => FrameRegistry::load(path)?,
            None => FrameRegistry::boydstun(),
        };
        let languages = config.framing_languages()?;
        println!(
            "  framing: {} topics, {} frames, {} languages, {} endpoints, {} headlines per side",
            topics.entries().len(),
            frames.names().len(),
            languages.len(),
            framing.endpoints.len(),
            framing.headline_count
        );
        if let Some(path) = &framing.corpus_file {
            let corpus = biaslens::model::load_headline_corpus(path, &topics)?;
            println!("  corpus file: {} headlines", corpus.len());
        }
    }
    Ok(())
}
