use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dpf::export::{self, AggregateOptions};
use dpf::format::{self, Checkpoint};
use dpf::{config, load_events, tsv, Error, RayonExecutor, Result};
use dpf_core::inference::Side;
use dpf_core::ingest::RawEvent;
use dpf_core::model::simulate;
use dpf_core::predict::{rank_items, Horizon};
use dpf_core::protocol::{evaluate_rolling, EvalConfig, MetricReport, ModelKind};
use dpf_core::{fit, FitConfig, Hyperparams};

#[derive(Parser)]
#[command(name = "dpf", version, about = "Poisson factorization with time-varying factors for click data")]
struct Cli {
    /// Flat key=value file; its values override flags given on the command line.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic dataset from the generative model.
    Simulate(SimulateArgs),
    /// Fit the model to a TSV of clicks and write a checkpoint.
    Fit(FitArgs),
    /// Rolling one-step-ahead evaluation.
    Evaluate(EvaluateArgs),
    /// Top-k recommendations from a checkpoint.
    Predict(PredictArgs),
    /// Per-step factor expressions of selected entities.
    ExportTrajectories(ExportArgs),
    /// Global factor means of selected entities.
    ExportGlobal(ExportArgs),
    /// Mean factor expression per step over all users or items.
    ExportAggregate(AggregateArgs),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// TSV with user_id, item_id, timestamp and an optional count.
    #[arg(long)]
    data: PathBuf,
    /// Timestamp units per time step.
    #[arg(long, default_value_t = 1)]
    granularity: u64,
    /// Timestamp of step 0; defaults to the earliest event.
    #[arg(long, allow_hyphen_values = true)]
    origin: Option<i64>,
    /// Keep raw counts instead of treating every click as 1.
    #[arg(long)]
    keep_counts: bool,
}

#[derive(Args, Clone)]
struct HyperArgs {
    /// Number of latent factors.
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Set every prior variance at once.
    #[arg(long)]
    variance: Option<f64>,
    #[arg(long)]
    user_variance: Option<f64>,
    #[arg(long)]
    item_variance: Option<f64>,
    #[arg(long)]
    user_global_variance: Option<f64>,
    #[arg(long)]
    item_global_variance: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    user_mean: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    item_mean: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    user_global_mean: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    item_global_mean: f64,
}

impl HyperArgs {
    fn hyperparams(&self) -> Result<Hyperparams> {
        let sd = |v: Option<f64>| -> Result<f64> {
            let v = v.or(self.variance).unwrap_or(10.0);
            if v.is_nan() || v < 0.0 {
                return Err(Error::Config(format!("variance must be non-negative, got {v}")));
            }
            Ok(v.sqrt())
        };
        Ok(Hyperparams {
            k: self.k,
            mu_u: self.user_mean,
            sigma_u: sd(self.user_variance)?,
            mu_v: self.item_mean,
            sigma_v: sd(self.item_variance)?,
            mu_ubar: self.user_global_mean,
            sigma_ubar: sd(self.user_global_variance)?,
            mu_vbar: self.item_global_mean,
            sigma_vbar: sd(self.item_global_variance)?,
        })
    }
}

#[derive(Args, Clone)]
struct OptimArgs {
    #[arg(long, default_value_t = 500)]
    max_sweeps: usize,
    /// Relative ELBO change that counts as converged.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    /// Quasi-Newton iterations per block update.
    #[arg(long, default_value_t = 15)]
    inner_iters: usize,
}

impl OptimArgs {
    fn config(&self, seed: u64) -> FitConfig {
        FitConfig {
            max_sweeps: self.max_sweeps,
            tolerance: self.tolerance,
            inner_iters: self.inner_iters,
            seed,
            ..FitConfig::default()
        }
    }
}

#[derive(Args)]
#[command(args_override_self = true)]
struct SimulateArgs {
    #[arg(long)]
    users: usize,
    #[arg(long)]
    items: usize,
    #[arg(long)]
    steps: usize,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long, default_value_t = 1)]
    granularity: u64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    origin: i64,
    /// Output TSV of clicks.
    #[arg(long)]
    out: PathBuf,
    /// Also write the sampled latent state.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
#[command(args_override_self = true)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[command(flatten)]
    optim: OptimArgs,
    /// Where to write the fitted checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Dpf,
    PfAll,
    PfLast,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Dpf => ModelKind::Dpf,
            ModelArg::PfAll => ModelKind::PfAll,
            ModelArg::PfLast => ModelKind::PfLast,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum HorizonArg {
    Extrapolate,
    LastFitted,
}

impl From<HorizonArg> for Horizon {
    fn from(h: HorizonArg) -> Self {
        match h {
            HorizonArg::Extrapolate => Horizon::Extrapolate,
            HorizonArg::LastFitted => Horizon::LastFitted,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    User,
    Item,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::User => Side::User,
            SideArg::Item => Side::Item,
        }
    }
}

#[derive(Args)]
#[command(args_override_self = true)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "dpf")]
    model: ModelArg,
    #[command(flatten)]
    hyper: HyperArgs,
    #[command(flatten)]
    optim: OptimArgs,
    /// Steps to evaluate: `a..b`, `a..=b` or `a,b,c`. Defaults to every step after the first.
    #[arg(long)]
    eval_steps: Option<String>,
    #[arg(long, default_value_t = 50)]
    recall_cutoff: usize,
    #[arg(long, value_enum, default_value = "extrapolate")]
    horizon: HorizonArg,
    /// Output file; defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
#[command(args_override_self = true)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// User ids to score; repeatable. Defaults to every user.
    #[arg(long = "user")]
    users: Vec<String>,
    /// Step to score; defaults to the step after the fitted range.
    #[arg(long)]
    step: Option<usize>,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    /// TSV of clicks whose (user, item) pairs are never recommended.
    #[arg(long)]
    exclude_data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "extrapolate")]
    horizon: HorizonArg,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
#[command(args_override_self = true)]
struct ExportArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, value_enum, default_value = "user")]
    kind: SideArg,
    /// Entity ids to export; repeatable. Defaults to all.
    #[arg(long = "entity")]
    entities: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
#[command(args_override_self = true)]
struct AggregateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, value_enum, default_value = "user")]
    kind: SideArg,
    /// Average the raw expression instead of its exponential.
    #[arg(long)]
    raw: bool,
    /// Scale each step to sum to one over factors.
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn parse_steps(list: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("invalid step list {list:?}"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let steps: Vec<usize> = if let Some((a, b)) = list.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = list.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        list.split(',').map(num).collect::<Result<_>>()?
    };
    if steps.is_empty() {
        return Err(bad());
    }
    Ok(steps)
}

fn run_simulate(a: SimulateArgs) -> Result<()> {
    let hp = a.hyper.hyperparams()?;
    let (tensor, latent) = simulate(&hp, a.users, a.items, a.steps, a.common.seed)?;
    let events: Vec<RawEvent> = tensor
        .entries()
        .iter()
        .map(|e| RawEvent {
            user_id: format!("u{}", e.user),
            item_id: format!("i{}", e.item),
            timestamp: a.origin + e.step as i64 * a.granularity as i64,
            count: e.count,
        })
        .collect();
    tsv::write_events(BufWriter::new(File::create(&a.out)?), &events)?;
    if let Some(p) = &a.truth {
        let mut w = BufWriter::new(File::create(p)?);
        format::write_latent(&mut w, &latent)?;
        w.flush()?;
    }
    eprintln!("simulated {} nonzero cells, {} clicks", tensor.nnz(), tensor.total_count());
    Ok(())
}

fn run_fit(a: FitArgs) -> Result<()> {
    let hp = a.hyper.hyperparams()?;
    let data = load_events(&a.data.data, a.data.granularity, a.data.origin)?;
    let tensor = if a.data.keep_counts { data.tensor.clone() } else { data.tensor.binarize() };
    let exec = RayonExecutor::new(a.common.threads)?;
    let result = fit(&tensor, &hp, &a.optim.config(a.common.seed), &exec)?;
    let cp =
        Checkpoint { hp, users: data.users, items: data.items, state: result.state, elbo_trace: result.elbo_trace };
    cp.save(&a.checkpoint)?;
    eprintln!(
        "sweeps={} elbo={:.6} converged={}",
        cp.elbo_trace.len(),
        cp.elbo_trace.last().copied().unwrap_or(f64::NAN),
        result.converged
    );
    Ok(())
}

fn write_report<W: Write>(mut w: W, r: &MetricReport, binarized: bool) -> Result<()> {
    writeln!(w, "# model={} recall_cutoff={} binarized={binarized}", r.kind, r.recall_cutoff)?;
    writeln!(w, "# ndcg uses log base 2 and is not normalized; mar is the per-user sum of ranks")?;
    if !r.empty_folds.is_empty() {
        let s: Vec<String> = r.empty_folds.iter().map(|t| t.to_string()).collect();
        writeln!(w, "# steps without scorable users: {}", s.join(","))?;
    }
    writeln!(
        w,
        "model\tstep\trecall@{}\tndcg\tmrr\tmar\tusers\tskipped_users\tcold_entries\trepeat_entries\tsweeps\tfinal_elbo",
        r.recall_cutoff
    )?;
    for f in &r.folds {
        let m = &f.metrics;
        writeln!(
            w,
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}\t{}\t{}\t{:.6}",
            r.kind,
            f.step,
            m.recall,
            m.ndcg,
            m.mrr,
            m.mar,
            f.users_evaluated,
            f.users_skipped,
            f.cold_entries,
            f.repeat_entries,
            f.sweeps,
            f.final_elbo
        )?;
    }
    let m = &r.mean;
    writeln!(w, "{}\tmean\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t\t\t\t\t\t", r.kind, m.recall, m.ndcg, m.mrr, m.mar)?;
    Ok(())
}

fn run_evaluate(a: EvaluateArgs) -> Result<()> {
    let hp = a.hyper.hyperparams()?;
    let data = load_events(&a.data.data, a.data.granularity, a.data.origin)?;
    let tensor = if a.data.keep_counts { data.tensor } else { data.tensor.binarize() };
    let steps = match &a.eval_steps {
        Some(s) => parse_steps(s)?,
        None => (1..tensor.n_steps()).collect(),
    };
    let config = EvalConfig {
        hp,
        fit: a.optim.config(a.common.seed),
        recall_cutoff: a.recall_cutoff,
        horizon: a.horizon.into(),
    };
    let exec = RayonExecutor::new(a.common.threads)?;
    let report = evaluate_rolling(&tensor, a.model.into(), &steps, &config, &exec)?;
    let mut w = output(&a.out)?;
    write_report(&mut w, &report, !a.data.keep_counts)?;
    w.flush()?;
    Ok(())
}

fn excluded_items(path: &Path, cp: &Checkpoint) -> Result<Vec<Vec<u32>>> {
    let events = tsv::read_events(BufReader::new(File::open(path)?))?;
    let mut out = vec![Vec::new(); cp.users.len()];
    for e in &events {
        if let (Some(u), Some(m)) = (cp.users.get(&e.user_id), cp.items.get(&e.item_id)) {
            out[u as usize].push(m);
        }
    }
    Ok(out)
}

fn run_predict(a: PredictArgs) -> Result<()> {
    let cp = Checkpoint::load(&a.checkpoint)?;
    let users = export::resolve_entities(&cp, Side::User, &a.users)?;
    let step = a.step.unwrap_or(cp.state.n_steps);
    let exclude = match &a.exclude_data {
        Some(p) => excluded_items(p, &cp)?,
        None => vec![Vec::new(); cp.users.len()],
    };
    let candidates: Vec<u32> = (0..cp.items.len() as u32).collect();
    let horizon: Horizon = a.horizon.into();
    let exec = RayonExecutor::new(a.common.threads)?;
    let lists = dpf_core::Executor::map(&exec, users.len(), |i| {
        let n = users[i];
        rank_items(&cp.state, &cp.hp, n, step, &candidates, &exclude[n], horizon)
    });
    let mut w = output(&a.out)?;
    writeln!(w, "user_id\trank\titem_id\tscore")?;
    for (list, &n) in lists.into_iter().zip(&users) {
        let list = match list {
            Ok(l) => l,
            Err(dpf_core::Error::EmptyCandidates) => continue,
            Err(e) => return Err(e.into()),
        };
        let uid = cp.users.id(n).unwrap_or_default();
        for (r, (&m, &s)) in list.items.iter().zip(&list.scores).take(a.top_k).enumerate() {
            writeln!(w, "{uid}\t{}\t{}\t{s:?}", r + 1, cp.items.id(m as usize).unwrap_or_default())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn run_export(a: ExportArgs, global: bool) -> Result<()> {
    let cp = Checkpoint::load(&a.checkpoint)?;
    let side: Side = a.kind.into();
    let entities = export::resolve_entities(&cp, side, &a.entities)?;
    let mut w = output(&a.out)?;
    if global {
        export::write_global(&mut w, &export::global_factors(&cp, side, &entities))?;
    } else {
        export::write_trajectories(&mut w, &export::trajectories(&cp, side, &entities))?;
    }
    w.flush()?;
    Ok(())
}

fn run_aggregate(a: AggregateArgs) -> Result<()> {
    let cp = Checkpoint::load(&a.checkpoint)?;
    let opts = AggregateOptions { side: a.kind.into(), raw: a.raw, normalize: a.normalize };
    let mut w = output(&a.out)?;
    export::write_aggregate(&mut w, &export::aggregate_factors(&cp, opts))?;
    w.flush()?;
    Ok(())
}

fn run(args: Vec<OsString>) -> Result<()> {
    let args = config::expand_args(args)?;
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            let _ = e.print();
            std::process::exit(0)
        }
        _ => Error::Config(e.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_string()),
    })?;
    match cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Fit(a) => run_fit(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Predict(a) => run_predict(a),
        Command::ExportTrajectories(a) => run_export(a, false),
        Command::ExportGlobal(a) => run_export(a, true),
        Command::ExportAggregate(a) => run_aggregate(a),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
