//! `menuforge` command-line tool.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use menuforge::adapt::tradeoff_csv;
use menuforge::generate::{random_instance, GenConfig};
use menuforge::layout::{render_html, render_text};
use menuforge::milp::{build_model, export_lp, metadata_json};
use menuforge::{
    adapt_layout, augment_with_loner, compute_expectations, eval_ift, eval_twofold, parse_instance, serialize_instance,
    solve_anneal_problem, sweep, AnnealConfig, IftBreakdown, MenuLayout, ObjectiveKind, Problem, SolveReport,
    SolverChoice, TaskInstance, TradeoffPoint,
};

#[derive(Parser, Debug)]
#[command(name = "menuforge", version, about = "Optimize tabbed menu layouts")]
struct Cli {
    /// Worker threads for parallel solvers (0 = all cores).
    #[arg(long, global = true, env = "MENUFORGE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for the best layout of an instance.
    Optimize {
        instance: PathBuf,
        #[command(flatten)]
        common: InstanceArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score a layout and print the foraging cost breakdown.
    Evaluate {
        instance: PathBuf,
        layout: PathBuf,
        #[command(flatten)]
        common: InstanceArgs,
        /// Print a JSON document instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Re-optimize a layout while staying close to it.
    Adapt {
        instance: PathBuf,
        baseline: PathBuf,
        #[command(flatten)]
        common: InstanceArgs,
        #[arg(long)]
        w: f64,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Adapt a layout for an ascending list of weights.
    Sweep {
        instance: PathBuf,
        baseline: PathBuf,
        #[command(flatten)]
        common: InstanceArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        ws: Vec<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum, default_value_t = SweepFormat::Csv)]
        format: SweepFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the mixed-integer program in LP format.
    ExportLp {
        instance: PathBuf,
        #[command(flatten)]
        common: InstanceArgs,
        /// Baseline layout for an adaptation model.
        #[arg(long, requires = "w")]
        baseline: Option<PathBuf>,
        #[arg(long, requires = "baseline")]
        w: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the variable index as JSON.
        #[arg(long)]
        metadata: Option<PathBuf>,
    },
    /// Draw a layout as text columns or HTML.
    Render {
        layout: PathBuf,
        instance: PathBuf,
        #[arg(long)]
        loner: bool,
        #[arg(long, value_enum, default_value_t = RenderFormat::Text)]
        format: RenderFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Emit a random instance with clustered associations.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        /// Share of commands with a preferred tab.
        #[arg(long, default_value_t = 0.0)]
        preferences: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct InstanceArgs {
    #[arg(long, value_enum, default_value_t = Objective::Ift)]
    objective: Objective,
    /// Append the invisible loner command before solving.
    #[arg(long)]
    loner: bool,
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = SolverKind::Bnb)]
    solver: SolverKind,
    /// Seconds; branch and bound defaults to 60.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Objective {
    Twofold,
    Ift,
}

impl From<Objective> for ObjectiveKind {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Twofold => ObjectiveKind::TwoFold,
            Objective::Ift => ObjectiveKind::Ift,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SolverKind {
    Bnb,
    Anneal,
    Brute,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RenderFormat {
    Text,
    Html,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SweepFormat {
    Csv,
    Json,
}

/// A layout tagged with the digest of the instance it belongs to.
#[derive(Serialize, Deserialize)]
struct LayoutFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instance_digest: Option<String>,
    #[serde(flatten)]
    layout: MenuLayout,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    instance_digest: String,
    #[serde(flatten)]
    report: &'a SolveReport,
}

#[derive(Serialize)]
struct SweepFile<'a> {
    instance_digest: String,
    points: &'a [TradeoffPoint],
}

#[derive(Serialize)]
struct Evaluation<'a> {
    instance_digest: String,
    objective: ObjectiveKind,
    value: f64,
    ift: f64,
    twofold: f64,
    breakdown: &'a IftBreakdown,
}

const DEFAULT_BNB_SECONDS: f64 = 60.0;
/// Branch and bound on larger instances starts from an annealed layout.
const WARM_START_ABOVE: usize = 10;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    match cli.command {
        Command::Optimize { instance, common, solver, output, report } => {
            let inst = load_instance(&instance, common.loner)?;
            let problem = Problem::new(&inst, common.objective.into())?;
            let choice = solver_choice(&solver)?;
            let start = match choice {
                SolverChoice::Bnb { .. } if inst.n() > WARM_START_ABOVE => {
                    Some(solve_anneal_problem(&problem, &AnnealConfig::with_seed(solver.seed), None)?.layout)
                }
                _ => None,
            };
            let result = choice.solve(&problem, start.as_ref())?;
            finish(&inst, &result, &output, report.as_deref())
        }
        Command::Evaluate { instance, layout, common, json } => {
            let inst = load_instance(&instance, common.loner)?;
            let layout = load_layout(&layout, &inst)?;
            evaluate(&inst, &layout, common.objective.into(), json)
        }
        Command::Adapt { instance, baseline, common, w, solver, output, report } => {
            let inst = load_instance(&instance, common.loner)?;
            let baseline = load_layout(&baseline, &inst)?;
            let result = adapt_layout(&inst, &baseline, w, common.objective.into(), &solver_choice(&solver)?)?;
            finish(&inst, &result, &output, report.as_deref())
        }
        Command::Sweep { instance, baseline, common, ws, solver, format, output } => {
            let inst = load_instance(&instance, common.loner)?;
            let baseline = load_layout(&baseline, &inst)?;
            let points = sweep(&inst, &baseline, &ws, common.objective.into(), &solver_choice(&solver)?)?;
            let text = match format {
                SweepFormat::Csv => tradeoff_csv(&points),
                SweepFormat::Json => to_json(&SweepFile { instance_digest: inst.digest(), points: &points })? + "\n",
            };
            emit(output.as_deref(), &text)
        }
        Command::ExportLp { instance, common, baseline, w, output, metadata } => {
            let inst = load_instance(&instance, common.loner)?;
            let baseline = baseline.map(|p| load_layout(&p, &inst)).transpose()?;
            let adapt = baseline.as_ref().zip(w);
            let model = build_model(&inst, common.objective.into(), adapt)?;
            if let Some(path) = metadata {
                write(&path, &metadata_json(&model))?;
            }
            emit(output.as_deref(), &export_lp(&model))
        }
        Command::Render { layout, instance, loner, format, output } => {
            let inst = load_instance(&instance, loner)?;
            let layout = load_layout(&layout, &inst)?;
            let names = inst.names();
            let text = match format {
                RenderFormat::Text => render_text(&layout, &names, inst.loner_id)?,
                RenderFormat::Html => render_html(&layout, &names, inst.loner_id)?,
            };
            emit(output.as_deref(), &text)
        }
        Command::Gen { n, seed, density, preferences, output } => {
            let cfg = GenConfig { preference_rate: preferences, ..GenConfig::new(n, seed, density) };
            let inst = random_instance(&cfg)?;
            emit(output.as_deref(), &(serialize_instance(&inst) + "\n"))
        }
    }
}

fn solver_choice(args: &SolverArgs) -> Result<SolverChoice> {
    let limit = match args.time_limit {
        Some(s) if !(s.is_finite() && s >= 0.0) => bail!("time limit must be a non-negative number of seconds"),
        Some(s) => Some(Duration::from_secs_f64(s)),
        None => None,
    };
    Ok(match args.solver {
        SolverKind::Brute => SolverChoice::Brute,
        SolverKind::Bnb => {
            SolverChoice::Bnb { time_limit: Some(limit.unwrap_or(Duration::from_secs_f64(DEFAULT_BNB_SECONDS))) }
        }
        SolverKind::Anneal => {
            SolverChoice::Anneal(AnnealConfig { time_limit: limit, ..AnnealConfig::with_seed(args.seed) })
        }
    })
}

fn load_instance(path: &Path, loner: bool) -> Result<TaskInstance> {
    let text = read(path)?;
    let inst = parse_instance(&text).with_context(|| format!("invalid instance {}", path.display()))?;
    if loner && inst.loner_id.is_none() {
        Ok(augment_with_loner(&inst)?)
    } else {
        Ok(inst)
    }
}

fn load_layout(path: &Path, inst: &TaskInstance) -> Result<MenuLayout> {
    let text = read(path)?;
    let file: LayoutFile = serde_json::from_str(&text).with_context(|| format!("invalid layout {}", path.display()))?;
    if let Some(digest) = &file.instance_digest {
        let expected = inst.digest();
        if *digest != expected {
            bail!(
                "layout {} was made for instance {digest}, not {expected} (stale layout or missing --loner)",
                path.display()
            );
        }
    }
    file.layout
        .ensure_valid(inst.n(), inst.loner_id)
        .with_context(|| format!("layout {} does not fit the instance", path.display()))?;
    Ok(file.layout)
}

fn finish(inst: &TaskInstance, result: &SolveReport, output: &Path, report: Option<&Path>) -> Result<()> {
    let digest = inst.digest();
    let file = LayoutFile { instance_digest: Some(digest.clone()), layout: result.layout.clone() };
    write(output, &(to_json(&file)? + "\n"))?;
    if let Some(path) = report {
        write(path, &(to_json(&ReportFile { instance_digest: digest, report: result })? + "\n"))?;
    }
    println!("objective ({}): {}", result.objective_kind.name(), result.objective);
    if let Some(w) = result.adapt_w {
        println!("weight: {w}");
        println!("distance: {}", result.distance.unwrap_or(0));
        println!("performance: {}", result.performance.unwrap_or(f64::NAN));
    }
    if let (Some(bound), Some(gap)) = (result.best_bound, result.gap) {
        println!("bound: {bound}");
        println!("gap: {gap:.3e}");
    }
    println!(
        "solver: {:?}, nodes {}, evaluations {}, {:.3}s",
        result.method, result.nodes_explored, result.evaluations, result.wall_time
    );
    Ok(())
}

fn evaluate(inst: &TaskInstance, layout: &MenuLayout, kind: ObjectiveKind, json: bool) -> Result<()> {
    let twofold = eval_twofold(layout, inst)?;
    let (ift, breakdown) = eval_ift(layout, inst, &compute_expectations(inst))?;
    let value = match kind {
        ObjectiveKind::TwoFold => twofold,
        ObjectiveKind::Ift => ift,
    };
    if json {
        let doc =
            Evaluation { instance_digest: inst.digest(), objective: kind, value, ift, twofold, breakdown: &breakdown };
        println!("{}", to_json(&doc)?);
        return Ok(());
    }
    println!("{}: {value}", kind.name());
    if kind == ObjectiveKind::TwoFold {
        println!("ift: {ift}");
    }
    println!();
    let sum = |values: &[f64], i: usize| (0..breakdown.groups).map(|c| breakdown.at(values, i, c)).sum::<f64>();
    let width = inst.names().iter().map(|s| s.chars().count()).max().unwrap_or(0).max(7);
    println!(
        "{:<width$} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "command", "access", "alpha", "sigma", "delta", "omega", "phi"
    );
    for (i, c) in inst.commands.iter().enumerate() {
        if inst.is_loner(i) {
            continue;
        }
        println!(
            "{:<width$} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            c.name,
            breakdown.access_time[i],
            sum(&breakdown.alpha, i),
            sum(&breakdown.sigma, i),
            sum(&breakdown.delta, i),
            breakdown.omega[i],
            sum(&breakdown.phi, i),
        );
    }
    println!("{:<width$} {:>10.4}", "total", breakdown.total);
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write(p, text),
        None => match std::io::stdout().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| anyhow!(e))
}
