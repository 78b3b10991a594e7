use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use moqa::annealer::{anneal, brute_force_minimum, AnnealSchedule};
use moqa::expansion::{default_method, expand, ExpansionMethod};
use moqa::experiment::{
    dump_landscapes, dump_resources, run_gap_binning, run_study, write_landscape_dump,
    write_resources_csv, write_study_outputs, ExperimentConfig, Study,
};
use moqa::generators::{
    constrained_to_multiobjective, partition_problem, random_multiobjective, spp_problem,
    ConstrainedProblem,
};
use moqa::io::{
    constraints_from_json, graph_from_json, problem_from_json, problem_to_json, read_hamiltonian,
    write_hamiltonian,
};
use moqa::{MoqaError, MultiObjectiveProblem, ShiftMode};

#[derive(Debug, Parser)]
#[command(name = "moqa", version, about = "Min-max multi-QUBO to Pauli-Z Hamiltonian compiler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a problem, shift it and expand it into a JSON-lines Hamiltonian.
    Build(BuildArgs),
    /// Minimize a Hamiltonian file by annealing or exhaustive search.
    Solve(SolveArgs),
    /// Run a seeded batch study and write CSV tables plus a manifest.
    Study {
        #[arg(value_parser = parse_study)]
        kind: Study,
        #[command(flatten)]
        args: StudyArgs,
    },
    /// Dump every objective, h_max and h_(p)^(1/p) over all bitstrings.
    Landscape(LandscapeArgs),
    /// Tabulate brute-force and expansion cost formulas.
    Resources(ResourceArgs),
}

#[derive(Debug, Args)]
struct BuildArgs {
    /// Problem JSON file.
    #[arg(long, conflicts_with_all = ["graph", "spp"])]
    problem: Option<PathBuf>,
    /// Partition graph JSON file.
    #[arg(long, conflicts_with = "spp")]
    graph: Option<PathBuf>,
    /// Comma-separated positive numbers to split into two sets.
    #[arg(long, value_delimiter = ',')]
    spp: Option<Vec<f64>>,
    /// Constraint list JSON; the problem must have a single objective.
    #[arg(long, requires = "problem")]
    constraints: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    gamma: f64,
    /// Variables of a random problem when no input file is given.
    #[arg(long, default_value_t = 6)]
    n: usize,
    /// Objectives of a random problem.
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    p: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "spectral")]
    shift: ShiftMode,
    /// dense, sparse, symmetric or product; picked from n when omitted.
    #[arg(long)]
    method: Option<ExpansionMethod>,
    /// Drop terms with |coefficient| below this value.
    #[arg(long)]
    threshold: Option<f64>,
    /// Output Hamiltonian file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the shifted problem JSON here.
    #[arg(long)]
    save_problem: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum SolveMethod {
    Anneal,
    Brute,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    hamiltonian: PathBuf,
    #[arg(long, value_enum, default_value_t = SolveMethod::Anneal)]
    method: SolveMethod,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Result JSON file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StudyArgs {
    /// JSON config; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Objective counts (generic) or constraint counts (constrained).
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<u32>>,
    #[arg(long)]
    ns: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    shift: Option<ShiftMode>,
    #[arg(long)]
    expansion: Option<ExpansionMethod>,
    #[arg(long)]
    bins: Option<usize>,
    /// Output directory (default results/<study>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// 10000 samples, n up to 20, p up to n.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Debug, Args)]
struct LandscapeArgs {
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    p: Vec<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "spectral")]
    shift: ShiftMode,
    /// Directory for landscape.csv (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ResourceArgs {
    /// Problem sizes; defaults to 1..=40.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, default_value_t = 4)]
    p: u32,
    #[arg(long, default_value_t = 10)]
    m: usize,
    /// Directory for resources.csv (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_study(s: &str) -> Result<Study, MoqaError> {
    s.parse()
}

fn read_text(path: &Path) -> moqa::Result<String> {
    fs::read_to_string(path).map_err(|e| {
        MoqaError::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

/// Opens `dir/name`, or stdout when no directory is given.
fn sink(dir: Option<&Path>, name: &str) -> moqa::Result<Box<dyn Write>> {
    match dir {
        Some(d) => {
            fs::create_dir_all(d)?;
            Ok(Box::new(io::BufWriter::new(fs::File::create(d.join(name))?)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn file_or_stdout(path: Option<&Path>) -> moqa::Result<Box<dyn Write>> {
    match path {
        Some(p) => Ok(Box::new(io::BufWriter::new(fs::File::create(p)?))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn load_problem(args: &BuildArgs) -> moqa::Result<MultiObjectiveProblem> {
    if let Some(path) = &args.problem {
        let problem = problem_from_json(&read_text(path)?)?;
        return match &args.constraints {
            None => Ok(problem),
            Some(cpath) => {
                if problem.num_objectives() != 1 {
                    return Err(MoqaError::InvalidInput(
                        "--constraints needs a single-objective problem".into(),
                    ));
                }
                let constraints = constraints_from_json(&read_text(cpath)?)?;
                let base = problem.objectives()[0].clone();
                constrained_to_multiobjective(&ConstrainedProblem::new(base, constraints, args.gamma)?)
            }
        };
    }
    if let Some(path) = &args.graph {
        return partition_problem(&graph_from_json(&read_text(path)?)?);
    }
    if let Some(values) = &args.spp {
        return spp_problem(values);
    }
    random_multiobjective(args.n, args.m, args.seed)
}

fn build(args: BuildArgs) -> moqa::Result<()> {
    let problem = load_problem(&args)?.shifted(args.shift)?;
    if let Some(path) = &args.save_problem {
        fs::write(path, problem_to_json(&problem)?)?;
    }
    let method = args.method.unwrap_or_else(|| default_method(problem.n()));
    let mut h = expand(&problem, args.p, method)?;
    if let Some(theta) = args.threshold {
        let (kept, report) = h.threshold(theta)?;
        eprintln!(
            "threshold {theta}: removed {} terms, landscape error at most {}",
            report.removed, report.error_bound
        );
        h = kept;
    }
    eprintln!(
        "n={} M={} p={} method={method:?} terms={} max weight={} shift={}",
        h.n(),
        h.num_objectives(),
        h.level(),
        h.len(),
        h.max_weight(),
        h.shift_c()
    );
    let mut out = file_or_stdout(args.out.as_deref())?;
    write_hamiltonian(&mut out, &h)?;
    out.flush()?;
    Ok(())
}

fn solve(args: SolveArgs) -> moqa::Result<()> {
    let file = fs::File::open(&args.hamiltonian).map_err(|e| {
        MoqaError::Io(io::Error::new(e.kind(), format!("{}: {e}", args.hamiltonian.display())))
    })?;
    let h = read_hamiltonian(BufReader::new(file))?;
    let (result, schedule) = match args.method {
        SolveMethod::Brute => (brute_force_minimum(&h)?, None),
        SolveMethod::Anneal => {
            let mut sched = AnnealSchedule::default_for(&h, args.seed);
            if let Some(s) = args.sweeps {
                sched.sweeps = s;
            }
            if let Some(r) = args.restarts {
                sched.restarts = r;
            }
            (anneal(&h, &sched)?, Some(sched))
        }
    };
    let doc = serde_json::json!({
        "method": format!("{:?}", args.method).to_lowercase(),
        "index": result.index,
        "bits": (0..h.n()).map(|k| if (result.index >> k) & 1 == 1 { '1' } else { '0' }).collect::<String>(),
        "energy": result.energy,
        "checked_moves": result.checked_moves,
        "delta_mismatches": result.delta_mismatches,
        "schedule": schedule,
    });
    let mut out = file_or_stdout(args.out.as_deref())?;
    writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
    out.flush()?;
    Ok(())
}

fn study_config(kind: Study, args: StudyArgs) -> moqa::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_str(&read_text(path)?)?,
        None => ExperimentConfig::for_study(kind),
    };
    cfg.study = kind;
    if args.full_scale {
        cfg = cfg.at_full_scale();
    }
    if let Some(v) = args.n {
        cfg.n = v;
    }
    if let Some(v) = args.m {
        cfg.m = v;
    }
    if let Some(v) = args.p {
        cfg.p = v;
    }
    if let Some(v) = args.ns {
        cfg.ns = v;
    }
    if let Some(v) = args.gamma {
        cfg.gamma = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.shift {
        cfg.shift = v;
    }
    if let Some(v) = args.expansion {
        cfg.expansion = v;
    }
    if let Some(v) = args.bins {
        cfg.gap_bins = v;
    }
    if let Some(v) = args.out {
        cfg.out = Some(v);
    }
    Ok(cfg)
}

fn study(kind: Study, args: StudyArgs) -> moqa::Result<()> {
    let cfg = study_config(kind, args)?;
    let warnings = cfg.validate()?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let report = run_study(&cfg)?;
    let binning = run_gap_binning(&report, cfg.gap_bins)?;
    let dir = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("results").join(kind.name()));
    let files = write_study_outputs(&dir, &cfg, &report, &binning, &warnings)?;

    let mut out = io::stdout().lock();
    writeln!(out, "{:>3} {:>3} {:>6} {:>3} {:>10} {:>10} {:>10}", "n", "M", "gamma", "p", "epsilon", "delta", "nu")?;
    for row in &report.rows {
        writeln!(
            out,
            "{:>3} {:>3} {:>6} {:>3} {:>10.4} {:>10.4} {:>10}",
            row.n,
            row.m,
            row.gamma.map_or("-".to_string(), |g| g.to_string()),
            row.p,
            row.epsilon.mean,
            row.delta.mean,
            row.nu.map_or("-".to_string(), |s| format!("{:.4}", s.mean)),
        )?;
    }
    if report.resamples > 0 {
        writeln!(out, "constraint resamples: {}", report.resamples)?;
    }
    writeln!(out, "wrote {} files to {}", files.len(), dir.display())?;
    if report.guarantee_violations > 0 {
        return Err(MoqaError::InvalidInput(format!(
            "{} samples above the threshold level had misaligned minima",
            report.guarantee_violations
        )));
    }
    Ok(())
}

fn landscape(args: LandscapeArgs) -> moqa::Result<()> {
    let dump = dump_landscapes(args.n, args.m, &args.p, args.seed, args.shift)?;
    let mut out = sink(args.out.as_deref(), "landscape.csv")?;
    write_landscape_dump(&mut out, &dump)?;
    out.flush()?;
    Ok(())
}

fn resources(args: ResourceArgs) -> moqa::Result<()> {
    let n_list = args.n.unwrap_or_else(|| (1..=40).collect());
    let rows = dump_resources(&n_list, args.p, args.m);
    let mut out = sink(args.out.as_deref(), "resources.csv")?;
    write_resources_csv(&mut out, &rows)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(a) => build(a),
        Command::Solve(a) => solve(a),
        Command::Study { kind, args } => study(kind, args),
        Command::Landscape(a) => landscape(a),
        Command::Resources(a) => resources(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_resource_refusal() {
                ExitCode::from(3)
            } else if matches!(e, MoqaError::Io(_)) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
