use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use log::error;

use optout_core::db::{Db, RecordStatus};
use optout_core::decision::Provider;
use optout_core::detector::ClassifierHandle;
use optout_core::driver::{DriverError, SessionConfig, WebDriverSession};
use optout_core::fixtures;
use optout_core::measure::{
    analyze_domain, looks_english, measure_outcomes, PipelineConfig, PipelineOutcome, DEFAULT_WORKERS,
};
use optout_core::sim::{html, SimBrowser, SiteRegistry};

const EXIT_PARTIAL: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "optout", version, about = "Find cookie notices, plan opt-outs and export enforcement bundles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline on one domain.
    Analyze {
        domain: String,
        #[command(flatten)]
        run: RunArgs,
        /// Record store to upsert into.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the notice text, plan and audit log.
        #[arg(long)]
        verbose: bool,
    },
    /// Run the pipeline over a domain list and write the M1-M3 report.
    Measure {
        /// One domain per line; blank lines and `#` comments are ignored.
        #[arg(long)]
        domains: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_WORKERS)]
        workers: usize,
        /// Skip domains whose landing page is not in English.
        #[arg(long)]
        english_only: bool,
    },
    /// Export the enforcement bundle for a region.
    Export {
        #[arg(long)]
        region: String,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, default_value = "optout-db.jsonl")]
        db: PathBuf,
    },
    /// Fixture corpus utilities.
    Fixtures {
        #[command(subcommand)]
        command: FixturesCommand,
    },
}

#[derive(Subcommand)]
enum FixturesCommand {
    /// Serve the fixture corpus as static pages under /{host}/.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
    },
    /// List fixture hosts and categories.
    List,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, default_value = "default")]
    region: String,
    /// WebDriver endpoint.
    #[arg(long, default_value = "http://127.0.0.1:4444")]
    driver: String,
    /// Use the built-in fixture sites instead of a browser.
    #[arg(long)]
    sim: bool,
    /// URL scheme used to reach each domain.
    #[arg(long)]
    scheme: Option<String>,
    /// Remote notice classifier; the built-in model otherwise.
    #[arg(long)]
    classifier: Option<String>,
    /// Remote planner; the rule planner otherwise.
    #[arg(long)]
    planner: Option<String>,
}

impl RunArgs {
    fn config(&self) -> Result<PipelineConfig, String> {
        let classifier = match &self.classifier {
            Some(url) => ClassifierHandle::external(url),
            None => ClassifierHandle::baseline(),
        };
        classifier.validate().map_err(|e| e.to_string())?;
        let provider = match &self.planner {
            Some(url) => Provider::External { endpoint: url.clone() },
            None => Provider::Rules,
        };
        let scheme = self
            .scheme
            .clone()
            .unwrap_or_else(|| if self.sim { "http" } else { "https" }.to_string());
        Ok(PipelineConfig {
            region: self.region.clone(),
            classifier,
            provider,
            scheme,
            ..PipelineConfig::default()
        })
    }

    fn session(&self) -> SessionConfig {
        SessionConfig {
            endpoint: self.driver.clone(),
            ..SessionConfig::default()
        }
    }
}

enum Backend {
    Sim(Arc<SiteRegistry>),
    WebDriver,
}

fn backend(run: &RunArgs) -> Backend {
    if run.sim {
        Backend::Sim(fixtures::shared_registry())
    } else {
        Backend::WebDriver
    }
}

fn store(path: &Option<PathBuf>, outcomes: &[PipelineOutcome]) -> Result<(), String> {
    let Some(path) = path else { return Ok(()) };
    let mut db = Db::open(path).map_err(|e| e.to_string())?;
    for o in outcomes {
        if let Err(e) = db.put(o.record.clone()) {
            error!("{}: not stored: {e}", o.record.domain);
        }
    }
    Ok(())
}

fn exit_for(outcomes: &[PipelineOutcome]) -> ExitCode {
    if outcomes.iter().any(|o| o.record.status == RecordStatus::Error) {
        ExitCode::from(EXIT_PARTIAL)
    } else {
        ExitCode::SUCCESS
    }
}

/// Writes to stdout; a closed pipe is not an error for this tool.
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_CONFIG)
}

fn analyze(domain: &str, run: &RunArgs, out: &Option<PathBuf>, verbose: bool) -> ExitCode {
    let config = match run.config() {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let outcome = match backend(run) {
        Backend::Sim(reg) => {
            let mut b = SimBrowser::new(reg, run.session());
            analyze_domain(&mut b, domain, &config)
        }
        Backend::WebDriver => match WebDriverSession::open(run.session()) {
            Ok(mut b) => {
                let o = analyze_domain(&mut b, domain, &config);
                let _ = optout_core::driver::Browser::close(&mut b);
                o
            }
            Err(e) => return config_error(format!("cannot open a browser session: {e}")),
        },
    };
    if verbose {
        if let Some(sn) = &outcome.serialized {
            out!("{}", sn.text);
        }
        if let Some(p) = &outcome.plan {
            out!("plan: {}", p.rendered);
        }
        let audit = outcome.audit.to_jsonl();
        if !audit.is_empty() {
            out!("{}", audit.trim_end());
        }
    }
    out!(
        "{}",
        serde_json::to_string_pretty(&outcome.record).expect("record serializes")
    );
    let outcomes = [outcome];
    if let Err(e) = store(out, &outcomes) {
        return config_error(e);
    }
    exit_for(&outcomes)
}

fn read_domains(path: &PathBuf) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

fn run_measure(
    domains: &PathBuf,
    report: &PathBuf,
    run: &RunArgs,
    out: &Option<PathBuf>,
    workers: usize,
    english_only: bool,
) -> ExitCode {
    let mut config = match run.config() {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    if english_only {
        config.language_hook = Some(looks_english);
    }
    let list = match read_domains(domains) {
        Ok(l) => l,
        Err(e) => return config_error(e),
    };
    let (rep, outcomes) = match backend(run) {
        Backend::Sim(reg) => {
            let session = run.session();
            measure_outcomes(&list, &config, workers, || -> Result<SimBrowser, DriverError> {
                Ok(SimBrowser::new(reg.clone(), session.clone()))
            })
        }
        Backend::WebDriver => {
            let session = run.session();
            measure_outcomes(&list, &config, workers, || WebDriverSession::open(session.clone()))
        }
    };
    if let Err(e) = std::fs::write(report, rep.to_json()) {
        return config_error(format!("{}: {e}", report.display()));
    }
    if let Err(e) = store(out, &outcomes) {
        return config_error(e);
    }
    out!(
        "{} domains, {} analyzed, M1={} M2={} M3={}",
        rep.domains_total, rep.domains_analyzed, rep.m1_with_notice, rep.m2_no_choice, rep.m3_default_enabled
    );
    exit_for(&outcomes)
}

fn export(region: &str, bundle: &PathBuf, db: &PathBuf) -> ExitCode {
    if !db.exists() {
        return config_error(format!("{}: no such record store", db.display()));
    }
    let store = match Db::open(db) {
        Ok(s) => s,
        Err(e) => return config_error(e),
    };
    match store.export_bundle_to(region, bundle) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => config_error(e),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Analyze { domain, run, out, verbose } => analyze(&domain, &run, &out, verbose),
        Command::Measure {
            domains,
            report,
            run,
            out,
            workers,
            english_only,
        } => run_measure(&domains, &report, &run, &out, workers, english_only),
        Command::Export { region, bundle, db } => export(&region, &bundle, &db),
        Command::Fixtures { command } => match command {
            FixturesCommand::Serve { port, bind } => {
                let addr = format!("{bind}:{port}");
                out!("serving {} fixture sites on http://{addr}/", fixtures::corpus().len());
                match html::serve(fixtures::shared_registry(), &addr) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => config_error(format!("{addr}: {e}")),
                }
            }
            FixturesCommand::List => {
                for f in fixtures::corpus() {
                    out!("{}\t{:?}", f.host(), f.category);
                }
                ExitCode::SUCCESS
            }
        },
    }
}
