//! `haas` command line.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use haas_bench::calibrate::{search, SearchSpec};
use haas_bench::{export, run_battery, BatterySpec, Format, Program};
use haas_core::{Ablation, Domain, Level, Library, ModelParams, RunConfig, StrategyId};

#[derive(Debug, Parser)]
#[command(name = "haas", version, about = "Governance-constrained human-AI task allocation simulator")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Model parameters as JSON; unset keys keep their defaults.
    #[arg(long, global = true, env = "HAAS_CONFIG")]
    pub config: Option<PathBuf>,
    /// Subtask catalogue replacing the shipped one for its domain. Repeatable.
    #[arg(long, global = true)]
    pub catalog: Vec<PathBuf>,
    /// Scenario file replacing the shipped scenarios.
    #[arg(long, global = true)]
    pub scenarios: Option<PathBuf>,
    /// Policy rule file replacing the shipped rules.
    #[arg(long, global = true)]
    pub rules: Option<PathBuf>,
    /// Include fatigue in the LinUCB context.
    #[arg(long, global = true, value_enum)]
    pub context_fatigue: Option<Switch>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one configuration and print the run result as JSON.
    Run(RunArgs),
    /// Run a benchmark program over its seed grid.
    Bench(BenchArgs),
    /// Search model parameters for the lowest objective that passes every screen.
    Calibrate(CalibrateArgs),
    /// Serve the HTTP workbench API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, default_value = "Standard Sprint")]
    pub scenario: String,
    /// Strategy id, e.g. `linucb`, `ucb1+off`.
    #[arg(long, default_value = "linucb")]
    pub strategy: StrategyId,
    /// Overrides the policy flag of the strategy.
    #[arg(long, value_enum)]
    pub policies: Option<Switch>,
    #[arg(long, default_value = "L2")]
    pub gov_level: Level,
    #[arg(long, default_value_t = 11)]
    pub seed: u64,
    #[arg(long)]
    pub cycles: Option<u32>,
    #[arg(long, default_value = "four_outcome")]
    pub reward_profile: String,
    #[arg(long, default_value = "full")]
    pub ablation: String,
    /// Write the result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print only the aggregate and screens.
    #[arg(long)]
    pub summary: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub program: Program,
    /// Keep only scenarios of this domain.
    #[arg(long)]
    pub domain: Option<Domain>,
    #[arg(long, value_delimiter = ',')]
    pub scenario: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub strategy: Vec<StrategyId>,
    /// Overrides the policy flag of every strategy.
    #[arg(long, value_enum)]
    pub policies: Option<Switch>,
    #[arg(long, value_delimiter = ',')]
    pub gov_level: Vec<Level>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub cycles: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    pub reward_profile: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub ablation: Vec<String>,
    /// Calibration candidates, for the `calibrate` program.
    #[arg(long)]
    pub candidates: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Battery store directory; the battery lands in `<out>/<id>/`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the summary table here instead of printing CSV to stdout.
    #[arg(long)]
    pub export: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 16)]
    pub candidates: usize,
    #[arg(long, default_value_t = 0)]
    pub search_seed: u64,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    pub scenario: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Write the calibration report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Directory for persisted runs (`runs/`) and batteries (`batteries/`).
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub workers: usize,
    /// Built UI assets served at `/`.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
}

impl Common {
    pub fn library(&self) -> anyhow::Result<Library> {
        if self.catalog.is_empty() && self.scenarios.is_none() && self.rules.is_none() {
            return Ok(Library::builtin());
        }
        let catalogs: Vec<&Path> = self.catalog.iter().map(PathBuf::as_path).collect();
        Ok(Library::with_overrides(&catalogs, self.scenarios.as_deref(), self.rules.as_deref())?)
    }

    pub fn params(&self) -> anyhow::Result<ModelParams> {
        let mut p = match &self.config {
            Some(path) => {
                let doc = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ModelParams::from_json(&doc).with_context(|| format!("in {}", path.display()))?
            }
            None => ModelParams::default(),
        };
        if let Some(s) = self.context_fatigue {
            p.bandit.context_fatigue = s.on();
        }
        Ok(p)
    }
}

impl RunArgs {
    pub fn config(&self, params: ModelParams) -> anyhow::Result<RunConfig> {
        let mut strategy = self.strategy;
        if let Some(p) = self.policies {
            strategy.policies = p.on();
        }
        let mut c = RunConfig::new(&self.scenario, strategy, self.seed);
        c.governance_level = self.gov_level;
        c.cycles = self.cycles;
        c.reward_profile = self.reward_profile.clone();
        c.ablation = Ablation::named(&self.ablation)?;
        c.params = params;
        Ok(c)
    }
}

impl BenchArgs {
    pub fn spec(&self, lib: &Library, params: ModelParams) -> anyhow::Result<BatterySpec> {
        let mut spec = BatterySpec::new(self.program, lib);
        spec.params = params;
        if !self.scenario.is_empty() {
            spec.scenarios = self.scenario.clone();
        }
        if let Some(d) = self.domain {
            spec.restrict_domain(d, lib);
            if spec.scenarios.is_empty() && !self.scenario.is_empty() {
                bail!("no --scenario belongs to domain {d}");
            }
            if spec.scenarios.is_empty() {
                spec.scenarios = lib.scenarios.iter().filter(|s| s.domain == d).map(|s| s.name.clone()).collect();
            }
        }
        if !self.strategy.is_empty() {
            spec.strategies = self.strategy.clone();
        }
        if let Some(p) = self.policies {
            for s in &mut spec.strategies {
                s.policies = p.on();
            }
        }
        if !self.gov_level.is_empty() {
            spec.levels = self.gov_level.clone();
        }
        if !self.seeds.is_empty() {
            spec.seeds = self.seeds.clone();
        }
        if self.cycles.is_some() {
            spec.cycles = self.cycles;
        }
        if !self.reward_profile.is_empty() {
            spec.reward_profiles = self.reward_profile.clone();
        }
        if !self.ablation.is_empty() {
            spec.ablations = self.ablation.clone();
        }
        if let Some(n) = self.candidates {
            spec.candidates = n;
        }
        spec.out = self.out.clone();
        spec.validate(lib)?;
        Ok(spec)
    }
}

impl CalibrateArgs {
    pub fn spec(&self, params: ModelParams) -> SearchSpec {
        let mut s = SearchSpec::new(params);
        s.candidates = self.candidates;
        s.search_seed = self.search_seed;
        if !self.seeds.is_empty() {
            s.seeds = self.seeds.clone();
        }
        if !self.scenario.is_empty() {
            s.scenarios = self.scenario.clone();
        }
        s
    }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, doc: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, doc).with_context(|| format!("writing {}", p.display())),
        None => writeln!(out, "{doc}").context("writing to stdout"),
    }
}

pub fn dispatch(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let lib = cli.common.library()?;
    let params = cli.common.params()?;
    match cli.command {
        Command::Run(args) => {
            let config = args.config(params)?;
            let result = haas_core::run(&config, &lib)?;
            let doc = if args.summary {
                serde_json::to_string_pretty(&serde_json::json!({
                    "config": result.config,
                    "aggregate": result.aggregate,
                    "screens": result.screens,
                }))?
            } else {
                serde_json::to_string(&result)?
            };
            emit(out, args.out.as_deref(), &doc)
        }
        Command::Bench(args) => {
            let spec = args.spec(&lib, params)?;
            let result = run_battery(&spec, &lib, args.jobs)?;
            match &args.export {
                Some(path) => {
                    export(&result.table, args.format, path)?;
                    eprintln!("battery {} → {}", result.id, path.display());
                }
                None => {
                    let doc = match args.format {
                        Format::Csv => result.table.to_csv(),
                        Format::Json => result.table.to_json(),
                    };
                    write!(out, "{doc}")?;
                }
            }
            if let Some(dir) = &spec.out {
                eprintln!("stored {}", dir.join(&result.id).display());
            }
            Ok(())
        }
        Command::Calibrate(args) => {
            let spec = args.spec(params);
            if spec.candidates == 0 {
                bail!("--candidates must be at least 1");
            }
            let outcome = search(&spec, &lib, args.jobs)?;
            let doc = serde_json::to_string_pretty(&outcome.report)?;
            emit(out, args.out.as_deref(), &doc)
        }
        Command::Serve(args) => {
            let opts = haas_server::ServeOptions {
                host: args.host,
                port: args.port,
                data_dir: args.data_dir,
                workers: args.workers,
                ui_dir: args.ui_dir,
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(haas_server::serve(lib, opts))?;
            Ok(())
        }
    }
}
