//! `pce`: fit and evaluate sparse PCE surrogates and run benchmark campaigns.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use sparse_pce::adaptivity::{fit_adaptive, AdaptivityConfig, SchemeId};
use sparse_pce::auto_select::SelectionCriterion;
use sparse_pce::harness::{
    aggregate, boxplot_quantiles, read_records, run_campaign, select_eval, settings_for, write_selection, write_tables, CampaignConfig,
    CandidatePool, SelectEvalOptions,
};
use sparse_pce::input_model::InputModel;
use sparse_pce::sampling::{lhs_maximin, read_points_csv, Design, DEFAULT_RESTARTS};
use sparse_pce::solvers::SolverId;
use sparse_pce::surrogate::SparseSurrogate;
use sparse_pce::test_models::by_id;

#[derive(Parser)]
#[command(name = "pce", version, about = "Sparse polynomial chaos expansions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a surrogate on a registered model or on a design CSV.
    Fit(FitArgs),
    /// Evaluate a stored surrogate on points from a CSV file.
    Predict(PredictArgs),
    /// Benchmark campaigns.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Args)]
struct FitArgs {
    /// Registered model id, or a CSV design with columns x1..xd and y.
    #[arg(long)]
    model: String,
    /// Input model JSON; required for a CSV design.
    #[arg(long)]
    input_model: Option<PathBuf>,
    #[arg(long)]
    solver: SolverId,
    #[arg(long)]
    scheme: SchemeId,
    /// Seed of the maximin LHS design (registered models).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of design points (registered models); the small ED size by default.
    #[arg(long)]
    n: Option<usize>,
    /// Use the large ED size and its settings.
    #[arg(long)]
    large: bool,
    /// Adaptivity configuration JSON, replacing the per-model settings.
    #[arg(long)]
    adaptivity: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    surrogate: PathBuf,
    /// CSV with a header; a `y` column is ignored.
    #[arg(long)]
    points: PathBuf,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Run (or resume) a campaign.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Within-factor tables and boxplot quantiles from a record file.
    Aggregate {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "2,5,10")]
        factors: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Selection-criterion performance from a record file.
    Select {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "hyb_modloo,fixed,random,oracle")]
        criteria: Vec<SelectionCriterion>,
        #[arg(long, value_delimiter = ',', default_value = "2,5,10")]
        factors: Vec<f64>,
        /// `candidates` (3 solvers x 3 schemes) or `all`.
        #[arg(long, default_value = "candidates")]
        candidate_pool: CandidatePool,
        /// Pool of the per-ED reference minimum: `candidates` or `all`.
        #[arg(long, default_value = "candidates")]
        oracle_pool: CandidatePool,
        /// Root seed of the random selections.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for `selection.csv` and `selection_outcomes.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Bench(b) => bench(b),
    }
}

fn load_design(args: &FitArgs) -> Result<(InputModel, Design, AdaptivityConfig)> {
    if let Ok(model) = by_id(&args.model) {
        let n = args.n.unwrap_or(model.ed_size(args.large));
        let design = lhs_maximin(&model.input_model, n, args.seed, DEFAULT_RESTARTS)?;
        let design = design.evaluate(|x| model.evaluate_unchecked(x));
        let cfg = settings_for(model.id)?.config(args.large, None);
        return Ok((model.input_model, design, cfg));
    }
    let path = Path::new(&args.model);
    if !path.exists() {
        bail!("{} is neither a registered model nor a CSV file", args.model);
    }
    let Some(im) = &args.input_model else {
        bail!("--input-model is required with a CSV design");
    };
    let input: InputModel = serde_json::from_str(&std::fs::read_to_string(im)?)
        .with_context(|| format!("reading input model {}", im.display()))?;
    let (x, y) = read_points_csv(path)?;
    let Some(y) = y else {
        bail!("design CSV {} has no y column", path.display());
    };
    let design = Design::from_physical(&input, x)?.with_responses(y)?;
    let cfg = AdaptivityConfig::for_dimension(input.dim());
    Ok((input, design, cfg))
}

fn fit(args: FitArgs) -> Result<()> {
    let (input, design, mut cfg) = load_design(&args)?;
    if let Some(p) = &args.adaptivity {
        cfg = serde_json::from_str(&std::fs::read_to_string(p)?)?;
    }
    cfg.validate()?;
    let fit = fit_adaptive(args.scheme, args.solver, &input, &design, &cfg)?;
    let s = &fit.surrogate;
    println!(
        "solver={} scheme={} n={} basis_size={} active={} {}={:e}",
        args.solver,
        args.scheme,
        design.len(),
        s.candidate_size(),
        s.active_count(),
        s.criterion().kind,
        s.criterion().value
    );
    if let Some(out) = &args.out {
        s.save(out)?;
        info!("surrogate written to {}", out.display());
    }
    Ok(())
}

fn predict(args: PredictArgs) -> Result<()> {
    let s = SparseSurrogate::load(&args.surrogate)?;
    let (x, _) = read_points_csv(&args.points)?;
    let y = s.predict(&x)?;
    let mut text = String::from("y\n");
    for v in y {
        text.push_str(&format!("{v}\n"));
    }
    match &args.out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn bench(cmd: BenchCommand) -> Result<()> {
    match cmd {
        BenchCommand::Run { config, out } => {
            let cfg = CampaignConfig::load(&config)?;
            let recs = run_campaign(&cfg, &out)?;
            println!("{} records in {}", recs.len(), out.display());
        }
        BenchCommand::Aggregate { records, factors, out } => {
            let recs = read_records(&records)?;
            let table = aggregate(&recs, &factors)?;
            write_tables(&out, &table, &boxplot_quantiles(&recs))?;
            print!("{}", table.to_csv());
        }
        BenchCommand::Select {
            records,
            criteria,
            factors,
            candidate_pool,
            oracle_pool,
            seed,
            out,
        } => {
            let recs = read_records(&records)?;
            let opts = SelectEvalOptions {
                criteria,
                factors,
                candidate_pool,
                oracle_pool,
                root_seed: seed,
            };
            let res = select_eval(&recs, &opts)?;
            if let Some(dir) = out {
                write_selection(&dir, &res)?;
            }
            print!("{}", res.table.to_csv());
        }
    }
    Ok(())
}
