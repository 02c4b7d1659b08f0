use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use sqrteps::districting::{
    grid_geography, planted_districting, run_flip_chain, CompactnessMode, Districting, FlipChain, Geography,
    LabelFunction, PopulationModel, ValidityConstraints, VoteModel, AUDIT_INTERVAL,
};
use sqrteps::experiments::{
    bound_verification, planted_experiment, stationarity_experiment, tightness_experiment, write_labels_csv,
    BoundConfig, ExperimentReport, PlantedConfig, StationarityConfig, TightnessConfig,
};
use sqrteps::rng::GENERATOR_ID;
use sqrteps::{run_sqrt_eps_test, Error, LabeledTrajectory, OutlierReport};

const EXIT_USAGE: u8 = 2;
const EXIT_DOMAIN: u8 = 3;
const EXIT_TOLERANCE: u8 = 4;

#[derive(Parser)]
#[command(name = "sqrteps", version, about = "The √ε outlier test for reversible Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the test on a label series, one real per line, presented state first.
    Test {
        labels: PathBuf,
        #[arg(long, value_name = "EPS1")]
        tv_slack: Option<f64>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run the flip chain from a districting and test its labels.
    Run(RunArgs),
    /// Write a synthetic grid geography, and optionally its planted districting.
    Generate(GenerateArgs),
    /// Run a named experiment.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
struct GridSpec {
    width: usize,
    height: usize,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected WxH, found {s:?}"))?;
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad grid dimension {t:?}"));
        Ok(Self {
            width: parse(w)?,
            height: parse(h)?,
        })
    }
}

#[derive(Args, Serialize)]
struct ConstraintArgs {
    #[arg(long = "pop-tol", value_name = "THETA", default_value_t = 0.1)]
    pop_tolerance: f64,
    #[arg(long, value_name = "MODE", default_value = "perimeter")]
    compactness: CompactnessMode,
    #[arg(long, value_name = "T", default_value_t = 200.0)]
    threshold: f64,
}

impl ConstraintArgs {
    fn build(&self) -> sqrteps::Result<ValidityConstraints> {
        ValidityConstraints::new(self.pop_tolerance, self.compactness, self.threshold)
    }
}

#[derive(Args, Serialize)]
struct MapArgs {
    /// Geography file.
    #[arg(long, value_name = "FILE", conflicts_with = "grid", required_unless_present = "grid")]
    geography: Option<PathBuf>,
    /// Synthetic grid geography, e.g. 12x12.
    #[arg(long, value_name = "WxH")]
    grid: Option<GridSpec>,
    /// Seed for the synthetic grid's vote field.
    #[arg(long, value_name = "S", default_value_t = 7)]
    grid_seed: u64,
}

impl MapArgs {
    fn load(&self) -> sqrteps::Result<Geography> {
        match (&self.geography, self.grid) {
            (Some(path), _) => Geography::load(path),
            (None, Some(g)) => grid_geography(g.width, g.height, Default::default(), Default::default(), self.grid_seed),
            (None, None) => unreachable!("clap requires one of --geography and --grid"),
        }
    }
}

#[derive(Args, Serialize)]
struct RunArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Starting districting file; defaults to the planted districting of a grid.
    #[arg(long, value_name = "FILE")]
    districting: Option<PathBuf>,
    #[arg(long, value_name = "D", default_value_t = 4)]
    districts: usize,
    #[command(flatten)]
    constraints: ConstraintArgs,
    #[arg(long, value_name = "K", default_value_t = 1 << 18)]
    steps: u64,
    #[arg(long, value_name = "S", default_value_t = 1)]
    seed: u64,
    #[arg(long, value_name = "LABEL", default_value = "var")]
    label: LabelFunction,
    #[arg(long, value_name = "EPS1")]
    tv_slack: Option<f64>,
    /// Full validity audit interval in steps; 0 disables.
    #[arg(long, value_name = "N", default_value_t = AUDIT_INTERVAL)]
    audit_every: u64,
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct GenerateArgs {
    #[arg(long, value_name = "WxH")]
    grid: GridSpec,
    #[arg(long, value_name = "S", default_value_t = 7)]
    seed: u64,
    #[arg(long, value_name = "N", default_value_t = 1000)]
    population: u64,
    #[arg(long, default_value_t = 0.5)]
    vote_base: f64,
    #[arg(long, default_value_t = 0.6)]
    vote_slope: f64,
    #[arg(long, default_value_t = 0.1)]
    vote_noise: f64,
    #[arg(long, default_value_t = 0.6)]
    turnout: f64,
    /// Also write the planted districting into this many districts.
    #[arg(long, value_name = "D")]
    districts: Option<usize>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentName {
    Tightness,
    BoundVerify,
    Stationarity,
    Planted,
}

#[derive(Args)]
struct ExperimentArgs {
    name: ExperimentName,
    #[arg(long, value_name = "S", default_value_t = 1)]
    seed: u64,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Step counts (tightness: even k values; planted: scaling sweep).
    #[arg(long = "k", value_name = "K", value_delimiter = ',')]
    k: Vec<u64>,
    #[arg(long, value_name = "N")]
    trials: Option<u64>,
    #[arg(long, value_name = "N")]
    positions: Option<u64>,
    #[arg(long, value_name = "N")]
    chains: Option<usize>,
    #[arg(long, value_name = "K")]
    k_max: Option<usize>,
    #[arg(long, value_name = "N")]
    steps: Option<u64>,
    #[arg(long, value_name = "N")]
    seeds: Option<u64>,
    #[arg(long, value_name = "N")]
    burn_in: Option<u64>,
    #[arg(long, value_name = "WxH")]
    grid: Option<GridSpec>,
    #[arg(long, value_name = "S")]
    grid_seed: Option<u64>,
    #[arg(long, value_name = "D")]
    districts: Option<usize>,
    #[arg(long = "pop-tol", value_name = "THETA")]
    pop_tolerance: Option<f64>,
    #[arg(long, value_name = "MODE")]
    compactness: Option<CompactnessMode>,
    #[arg(long, value_name = "T")]
    threshold: Option<f64>,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. } | Error::Io { .. } | Error::Json { .. } | Error::InvalidInput(_) => EXIT_USAGE,
            Error::Geography(_) | Error::Config(_) | Error::Chain(_) | Error::Resource(_) => EXIT_DOMAIN,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Treats argument-level errors from loaded data as domain failures.
fn domain<T>(r: sqrteps::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| match e {
        Error::InvalidInput(m) => Failure {
            code: EXIT_DOMAIN,
            message: m,
        },
        e => e.into(),
    })
}

fn write_file(path: &Path, body: &str) -> Result<(), Failure> {
    fs::write(path, body).map_err(|source| {
        Error::Io {
            path: path.to_owned(),
            source,
        }
        .into()
    })
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|source| {
        Error::Io {
            path: dir.to_owned(),
            source,
        }
        .into()
    })
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn print_report(r: &OutlierReport) {
    println!("k: {}", r.k);
    println!("count_le: {}", r.count_le);
    println!("epsilon: {}", r.epsilon);
    println!("ell: {}", r.ell);
    if let Some(e1) = r.tv_slack {
        println!("tv_slack: {e1}");
    }
    println!("p_value: {}", r.p_value);
}

fn cmd_test(labels: &Path, tv_slack: Option<f64>, out: Option<&Path>) -> Result<(), Failure> {
    let traj = LabeledTrajectory::load(labels)?;
    let report = run_sqrt_eps_test(&traj, tv_slack)?;
    print_report(&report);
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let doc = json!({
            "format": 1,
            "command": "test",
            "config": {"labels": labels, "tv_slack": tv_slack},
            "report": report,
        });
        write_file(&dir.join("test.json"), &pretty(&doc))?;
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let constraints = args.constraints.build()?;
    let geo = domain(args.map.load())?;
    let start = match &args.districting {
        Some(path) => domain(Districting::load(&geo, path))?,
        None => domain(planted_districting(&geo, args.districts))?,
    };
    if start.n_districts() < 2 {
        return Err(Failure {
            code: EXIT_DOMAIN,
            message: "labels need at least two districts".into(),
        });
    }
    let chain = domain(FlipChain::new(&geo, constraints))?;
    let audit = (args.audit_every > 0).then_some(args.audit_every);
    let run = domain(run_flip_chain(&chain, start, args.steps, args.seed, &[args.label], audit))?;
    let labels = &run.labels[0];
    let report = run_sqrt_eps_test(labels, args.tv_slack)?;
    println!("label: {}", args.label);
    println!("steps: {}  seed: {}  generator: {}", args.steps, args.seed, GENERATOR_ID);
    println!(
        "loops: {}  rejected: {}  moved: {}  audits: {}",
        run.counts.loops, run.counts.rejected, run.counts.moved, run.counts.audits
    );
    print_report(&report);
    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        write_labels_csv(&dir.join("labels.csv"), labels.labels())?;
        let doc = json!({
            "format": 1,
            "command": "run",
            "config": args,
            "n_max": chain.n_max(),
            "provenance": {"generator_id": GENERATOR_ID, "seed": args.seed},
            "counts": run.counts,
            "report": report,
        });
        write_file(&dir.join("run.json"), &pretty(&doc))?;
        write_file(
            &dir.join("final-districting.json"),
            &pretty(&run.final_plan.to_file(&geo)),
        )?;
    }
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), Failure> {
    let geo = grid_geography(
        args.grid.width,
        args.grid.height,
        PopulationModel::Uniform {
            per_cell: args.population,
        },
        VoteModel::Gradient {
            base: args.vote_base,
            slope: args.vote_slope,
            noise: args.vote_noise,
            turnout: args.turnout,
        },
        args.seed,
    )?;
    ensure_dir(&args.out)?;
    let path = args.out.join("geography.json");
    geo.save(&path)?;
    println!("wrote {}", path.display());
    if let Some(d) = args.districts {
        let plan = domain(planted_districting(&geo, d))?;
        let path = args.out.join("districting.json");
        write_file(&path, &pretty(&plan.to_file(&geo)))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<(), Failure> {
    let report: ExperimentReport = match args.name {
        ExperimentName::Tightness => {
            let mut c = TightnessConfig {
                seed: args.seed,
                ..Default::default()
            };
            if !args.k.is_empty() {
                c.k_list = args.k.clone();
            }
            c.trials = args.trials.unwrap_or(c.trials);
            c.n_positions = args.positions.unwrap_or(c.n_positions);
            tightness_experiment(&c)?
        }
        ExperimentName::BoundVerify => {
            let mut c = BoundConfig {
                seed: args.seed,
                ..Default::default()
            };
            c.n_chains = args.chains.unwrap_or(c.n_chains);
            c.k_max = args.k_max.unwrap_or(c.k_max);
            bound_verification(&c)?
        }
        ExperimentName::Stationarity => {
            let mut c = StationarityConfig {
                seed: args.seed,
                ..Default::default()
            };
            c.steps = args.steps.unwrap_or(c.steps);
            stationarity_experiment(&c)?
        }
        ExperimentName::Planted => {
            let mut c = PlantedConfig {
                seed: args.seed,
                scaling_steps: args.k.clone(),
                ..Default::default()
            };
            if let Some(g) = args.grid {
                c.width = g.width;
                c.height = g.height;
            }
            c.geography_seed = args.grid_seed.unwrap_or(c.geography_seed);
            c.districts = args.districts.unwrap_or(c.districts);
            c.pop_tolerance = args.pop_tolerance.unwrap_or(c.pop_tolerance);
            c.compactness = args.compactness.unwrap_or(c.compactness);
            c.threshold = args.threshold.unwrap_or(c.threshold);
            c.steps = args.steps.unwrap_or(c.steps);
            c.seeds = args.seeds.unwrap_or(c.seeds);
            c.burn_in = args.burn_in.unwrap_or(c.burn_in);
            planted_experiment(&c)?
        }
    };
    print!("{}", report.to_text());
    if let Some(dir) = &args.out {
        report.write(dir)?;
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_TOLERANCE,
            message: format!("experiment {} failed a declared tolerance", report.experiment),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Test { labels, tv_slack, out } => cmd_test(labels, *tv_slack, out.as_deref()),
        Command::Run(args) => cmd_run(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Experiment(args) => cmd_experiment(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
