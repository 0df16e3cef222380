//! moma command-line interface.
//!
//! Subcommands: `train`, `route`, `eval`, `agents register`, `cache stats`,
//! `elo`. All reports are emitted as JSON on stdout. The config file is taken
//! from `--config`, falling back to the `MOMA_CONFIG` environment variable,
//! then to built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use moma::agentroute::FsmSpec;
use moma::catalog::{
    load_agents, load_categories, load_comparisons, parse_agents, write_agents, Currency,
    ModelCatalog, PreferenceMode,
};
use moma::elo::{compute_elo, DEFAULT_INITIAL_RATING, DEFAULT_K_FACTOR};
use moma::encoder::HashingEncoder;
use moma::error::{Error, Result};
use moma::gateway::{run_harness, GatewayConfig, GatewayState, HarnessConfig};
use moma::grk::{load_params, prepare_training_set, save_params, train, RouterParams, TrainConfig};

#[derive(Parser)]
#[command(name = "moma", version, about = "Query router over a pool of LLMs and agents")]
struct Cli {
    /// Config file (TOML); falls back to $MOMA_CONFIG, then defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the scoring head on a comparison dataset.
    Train(TrainArgs),
    /// Route one query and print the decision.
    Route(RouteArgs),
    /// Run the synthetic evaluation harness and print its report.
    Eval(EvalArgs),
    /// Agent registry operations.
    Agents(AgentsArgs),
    /// Cache operations.
    Cache(CacheArgs),
    /// Compute an Elo leaderboard from a comparison log.
    Elo(EloArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Comparison records, one JSON object per line.
    #[arg(long)]
    data: PathBuf,
    /// Model catalog (JSON array).
    #[arg(long)]
    catalog: PathBuf,
    /// Output path for the trained params.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum PreferenceArg {
    Cost,
    Auto,
    Performance,
}

#[derive(Args)]
struct RouteArgs {
    /// Query text.
    #[arg(long)]
    query: String,
    /// Routing preference.
    #[arg(long, value_enum, default_value = "auto")]
    preference: PreferenceArg,
    /// Cost budget for --preference cost.
    #[arg(long)]
    budget: Option<String>,
    /// Model catalog; overrides the config [paths] entry.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Trained params; overrides the config [paths] entry.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Agent registry; overrides the config [paths] entry.
    #[arg(long)]
    agents: Option<PathBuf>,
    /// State-machine spec; overrides the config [paths] entry.
    #[arg(long)]
    fsm: Option<PathBuf>,
    /// Predefined categories; overrides the config [paths] entry.
    #[arg(long)]
    categories: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Harness config (TOML); defaults apply when omitted.
    #[arg(long)]
    harness: Option<PathBuf>,
}

#[derive(Args)]
struct AgentsArgs {
    #[command(subcommand)]
    command: AgentsCommand,
}

#[derive(Subcommand)]
enum AgentsCommand {
    /// Register a new agent descriptor into the registry file.
    Register(RegisterArgs),
}

#[derive(Args)]
struct RegisterArgs {
    /// Descriptor to register (single JSON object).
    #[arg(long)]
    file: PathBuf,
    /// Registry file to update; overrides the config [paths] entry.
    #[arg(long)]
    agents: Option<PathBuf>,
    /// Predefined categories; overrides the config [paths] entry.
    #[arg(long)]
    categories: Option<PathBuf>,
}

#[derive(Args)]
struct CacheArgs {
    #[command(subcommand)]
    command: CacheCommand,
}

#[derive(Subcommand)]
enum CacheCommand {
    /// Replay a query stream (optional) and print cache statistics.
    Stats(CacheStatsArgs),
}

#[derive(Args)]
struct CacheStatsArgs {
    /// Queries to replay through routing, one per line.
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    agents: Option<PathBuf>,
    #[arg(long)]
    fsm: Option<PathBuf>,
    #[arg(long)]
    categories: Option<PathBuf>,
}

#[derive(Args)]
struct EloArgs {
    /// Comparison records, one JSON object per line.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K_FACTOR)]
    k_factor: f64,
    #[arg(long, default_value_t = DEFAULT_INITIAL_RATING)]
    initial: f64,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

/// Write a line to stdout, tolerating a closed pipe (`moma elo | head`).
fn emit(text: impl AsRef<str>) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", text.as_ref());
}

fn run(cli: Cli) -> Result<()> {
    let config = GatewayConfig::resolve(cli.config.as_deref())?;
    match cli.command {
        Command::Train(args) => cmd_train(&config, args),
        Command::Route(args) => cmd_route(&config, args),
        Command::Eval(args) => cmd_eval(args),
        Command::Agents(args) => match args.command {
            AgentsCommand::Register(register) => cmd_register(&config, register),
        },
        Command::Cache(args) => match args.command {
            CacheCommand::Stats(stats) => cmd_cache_stats(&config, stats),
        },
        Command::Elo(args) => cmd_elo(args),
    }
}

fn cmd_train(config: &GatewayConfig, args: TrainArgs) -> Result<()> {
    let catalog = ModelCatalog::load(&args.catalog)?;
    if catalog.is_empty() {
        return Err(Error::Config("catalog has no models".into()));
    }
    let records = load_comparisons(&args.data, Some(&catalog))?;
    let encoder = HashingEncoder::new(config.encoder.dim, config.encoder.seed)?;
    let examples = prepare_training_set(&records, &catalog, &encoder)?;
    let seed = args.seed.unwrap_or(config.encoder.seed);
    let init = RouterParams::init(
        config.encoder.dim,
        catalog.len(),
        config.grk.experts,
        config.grk.top_k,
        config.grk.kappa,
        config.grk.margin,
        seed,
    )?;
    let train_config = TrainConfig {
        epochs: args.epochs.unwrap_or(config.grk.epochs),
        learning_rate: config.grk.learning_rate,
        batch_size: config.grk.batch_size,
        seed,
    };
    let initial_loss = moma::grk::loss_grk(&init, &examples)?;
    let params = train(&init, &examples, &train_config)?;
    let final_loss = moma::grk::loss_grk(&params, &examples)?;
    save_params(&params, &args.out)?;
    emit(
        serde_json::json!({
            "records": records.len(),
            "models": catalog.len(),
            "epochs": train_config.epochs,
            "seed": seed,
            "initial_loss": initial_loss,
            "final_loss": final_loss,
            "params": args.out,
        })
        .to_string(),
    );
    Ok(())
}

fn build_gateway(
    config: &GatewayConfig,
    catalog: Option<&Path>,
    params: Option<&Path>,
    agents: Option<&Path>,
    fsm: Option<&Path>,
    categories: Option<&Path>,
) -> Result<GatewayState> {
    let pick = |cli: Option<&Path>, cfg: &Option<PathBuf>| -> Option<PathBuf> {
        cli.map(Path::to_path_buf).or_else(|| cfg.clone())
    };
    let catalog_path = pick(catalog, &config.paths.catalog)
        .ok_or_else(|| Error::Config("no model catalog given (--catalog or [paths])".into()))?;
    let catalog = ModelCatalog::load(catalog_path)?;
    let params = match pick(params, &config.paths.params) {
        Some(p) => Some(load_params(p)?),
        None => None,
    };
    let agents = match pick(agents, &config.paths.agents) {
        Some(p) => load_agents(p)?,
        None => Vec::new(),
    };
    let categories = match pick(categories, &config.paths.categories) {
        Some(p) => load_categories(p)?,
        None => Vec::new(),
    };
    let fsm_spec = match pick(fsm, &config.paths.fsm) {
        Some(p) => {
            let raw = std::fs::read_to_string(&p)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            Some(
                serde_json::from_str::<FsmSpec>(&raw)
                    .map_err(|e| Error::DataFormat(format!("fsm config: {e}")))?,
            )
        }
        None => None,
    };
    GatewayState::new(config.clone(), catalog, params, agents, categories, fsm_spec)
}

fn parse_preference(pref: PreferenceArg, budget: Option<&str>) -> Result<PreferenceMode> {
    match pref {
        PreferenceArg::Performance => Ok(PreferenceMode::PerformancePriority),
        PreferenceArg::Auto => Ok(PreferenceMode::Auto),
        PreferenceArg::Cost => {
            let budget = budget.map(Currency::parse).transpose()?;
            PreferenceMode::cost_priority(budget)
        }
    }
}

fn cmd_route(config: &GatewayConfig, args: RouteArgs) -> Result<()> {
    let gateway = build_gateway(
        config,
        args.catalog.as_deref(),
        args.params.as_deref(),
        args.agents.as_deref(),
        args.fsm.as_deref(),
        args.categories.as_deref(),
    )?;
    let preference = parse_preference(args.preference, args.budget.as_deref())?;
    let decision = gateway.route(&args.query, &preference)?;
    emit(serde_json::to_string_pretty(&decision).map_err(|e| Error::DataFormat(e.to_string()))?);
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let harness_config = match &args.harness {
        Some(path) => HarnessConfig::load(path)?,
        None => HarnessConfig::default(),
    };
    let report = run_harness(&harness_config)?;
    emit(report.render().trim_end());
    Ok(())
}

fn cmd_register(config: &GatewayConfig, args: RegisterArgs) -> Result<()> {
    let registry_path = args
        .agents
        .or_else(|| config.paths.agents.clone())
        .ok_or_else(|| Error::Config("no registry file given (--agents or [paths])".into()))?;
    let raw = std::fs::read_to_string(&args.file)
        .map_err(|e| Error::Config(format!("{}: {e}", args.file.display())))?;
    let descriptor = parse_agents(&raw)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::DataFormat("descriptor file is empty".into()))?;

    let agents = if registry_path.exists() {
        load_agents(&registry_path)?
    } else {
        Vec::new()
    };
    let predefined = match args.categories.or_else(|| config.paths.categories.clone()) {
        Some(p) if p.exists() => load_categories(p)?,
        _ => Vec::new(),
    };
    let encoder = HashingEncoder::new(config.encoder.dim, config.encoder.seed)?;
    let registry = moma::agentroute::AgentRegistry::build(
        agents,
        predefined,
        config.categories.cluster_count,
        config.categories.redundancy_threshold,
        &encoder,
    )?;
    let (next, outcome) = registry.register(
        descriptor,
        config.categories.registration_threshold,
        &encoder,
    )?;
    write_agents(&registry_path, next.agents())?;
    emit(
        serde_json::to_string_pretty(&serde_json::json!({
            "registry": registry_path,
            "agents": next.agents().len(),
            "result": outcome,
        }))
        .map_err(|e| Error::DataFormat(e.to_string()))?,
    );
    Ok(())
}

fn cmd_cache_stats(config: &GatewayConfig, args: CacheStatsArgs) -> Result<()> {
    let gateway = build_gateway(
        config,
        args.catalog.as_deref(),
        args.params.as_deref(),
        args.agents.as_deref(),
        args.fsm.as_deref(),
        args.categories.as_deref(),
    )?;
    if let Some(path) = &args.queries {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        for line in raw.lines().filter(|l| !l.trim().is_empty()) {
            let _ = gateway.route(line, &PreferenceMode::Auto)?;
        }
    }
    let stats = gateway.cache_stats();
    emit(
        serde_json::to_string_pretty(&serde_json::json!({
            "entries": stats.entries,
            "hits": stats.hits,
            "misses": stats.misses,
            "evictions": stats.evictions,
            "hit_rate": stats.hit_rate(),
        }))
        .map_err(|e| Error::DataFormat(e.to_string()))?,
    );
    Ok(())
}

fn cmd_elo(args: EloArgs) -> Result<()> {
    let records = load_comparisons(&args.data, None)?;
    let table = compute_elo(&records, args.k_factor, args.initial)?;
    for (model, rating) in table.leaderboard() {
        emit(serde_json::json!({ "model": model, "rating": rating }).to_string());
    }
    Ok(())
}
