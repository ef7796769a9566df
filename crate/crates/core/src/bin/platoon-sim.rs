use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use platoon_sim::campaign::{self, replication_seed, run_replications, CampaignRow};
use platoon_sim::metrics::combine_reports;
use platoon_sim::{CampaignSpec, Error, Execution, ResultsTable, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "platoon-sim",
    version,
    about = "Platoon CAM exchange simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (flat TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; overrides sim.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replications; overrides sim.replications.
    #[arg(long)]
    reps: Option<u32>,
    /// Output file (or directory for `tables`); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// One row per leader-to-member link instead of leader to tail only.
    #[arg(long)]
    per_link: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario for the configured number of replications.
    Run(Common),
    /// Run a sweep file; `--config` names the campaign file.
    Campaign(Common),
    /// Check a scenario file and print it with defaults filled in.
    Validate(Common),
    /// Regenerate the IFT, scheduler, platoon size and CQI comparison tables.
    Tables(Common),
}

enum Failure {
    Config(Error),
    Runtime(Error),
    /// Sweep points that failed; their rows carry the error text.
    FailedPoints(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::CampaignTooLarge { .. } | Error::McsTable { .. } => {
                Failure::Config(e)
            }
            other => Failure::Runtime(other),
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig, Failure> {
    match path {
        Some(p) => ScenarioConfig::from_file(p).map_err(|e| match e {
            Error::Io { .. } => Failure::Config(e),
            other => other.into(),
        }),
        None => Ok(ScenarioConfig::default()),
    }
}

fn write_table(table: &ResultsTable, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => campaign::emit_csv(table, p)?,
        None => campaign::write_csv(table, std::io::stdout().lock())?,
    }
    Ok(())
}

fn run(c: &Common) -> Result<(), Failure> {
    let cfg = load_config(c.config.as_deref())?;
    let base_seed = c.seed.unwrap_or(cfg.run.seed);
    let reps = c.reps.unwrap_or(cfg.run.replications).max(1);
    let seeds: Vec<u64> = (0..reps)
        .map(|r| replication_seed(base_seed, 0, r))
        .collect();
    info!("running {reps} replications");
    let reports = run_replications(&cfg, &seeds, Execution::Parallel)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let summary = combine_reports(&reports)?;
    let table = ResultsTable {
        key_columns: campaign::IDENTITY_KEYS
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows: vec![CampaignRow {
            point: 0,
            keys: campaign::IDENTITY_KEYS
                .iter()
                .map(|k| {
                    cfg.value_text(k)
                        .unwrap_or_default()
                        .trim_matches('"')
                        .to_string()
                })
                .collect(),
            outcome: Ok(summary),
        }],
        per_link: c.per_link,
    };
    write_table(&table, c.out.as_deref())
}

fn run_sweep(c: &Common) -> Result<(), Failure> {
    let path = c.config.as_deref().ok_or_else(|| {
        Failure::Config(Error::Config(platoon_sim::ConfigErrors::single(
            "--config",
            "campaign needs a sweep file",
        )))
    })?;
    let mut spec = CampaignSpec::from_file(path).map_err(|e| match e {
        Error::Io { .. } => Failure::Config(e),
        other => other.into(),
    })?;
    if let Some(s) = c.seed {
        spec.seed = s;
    }
    if let Some(r) = c.reps {
        spec.replications = r.max(1);
    }
    spec.per_link |= c.per_link;
    let table = campaign::run_campaign(&spec, Execution::Parallel)?;
    write_table(&table, c.out.as_deref())?;
    match table.failures() {
        0 => Ok(()),
        n => Err(Failure::FailedPoints(n)),
    }
}

fn validate(c: &Common) -> Result<(), Failure> {
    let cfg = load_config(c.config.as_deref())?;
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    print!("{}", cfg.emit());
    Ok(())
}

fn tables(c: &Common) -> Result<(), Failure> {
    let cfg = load_config(c.config.as_deref())?;
    let reps = c.reps.unwrap_or(cfg.run.replications).max(1);
    let seed = c.seed.unwrap_or(cfg.run.seed);
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("tables"));
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Runtime(Error::io(&dir, e)))?;
    for (name, spec) in campaign::trend_tables(&cfg, reps, seed) {
        let spec = spec.per_link(c.per_link);
        info!("table {name}: {} runs", spec.run_count());
        let table = campaign::run_campaign(&spec, Execution::Parallel)?;
        let path = dir.join(format!("{name}.csv"));
        campaign::emit_csv(&table, &path)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => run(c),
        Command::Campaign(c) => run_sweep(c),
        Command::Validate(c) => validate(c),
        Command::Tables(c) => tables(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            error!("{e}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            error!("{e}");
            ExitCode::from(2)
        }
        Err(Failure::FailedPoints(n)) => {
            error!("{n} sweep points failed; see the error column");
            ExitCode::from(2)
        }
    }
}
