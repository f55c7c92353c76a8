//! `spoa`: k-strong price-of-anarchy bounds, dynamics and worst-case games.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use spoa_core::bounds::{design_bound, spoa_bound, spoa_curve, BoundReport, WelfareCurve};
use spoa_core::error::ErrorClass;
use spoa_core::games::{BruteForceCaps, DynamicsMode, JointAction, ResourceGame};
use spoa_core::rational::{decimal_string, exact_string, ExactValue};
use spoa_core::report::curve_svg;
use spoa_core::worstcase::certify_tightness;

const CAP_ENV: &str = "SPOA_BRUTE_CAP";

#[derive(Parser)]
#[command(
    name = "spoa",
    version,
    about = "Exact k-strong price-of-anarchy bounds for resource allocation games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bound for every k in a range, optionally with the design bound.
    Curve(CurveArgs),
    /// Tight bound 1/P* for a single k.
    Bound(BoundArgs),
    /// Utility-design bound 1/Q* for a single k.
    Design(BoundArgs),
    /// Coalition best-response dynamics on a game file.
    Simulate(SimulateArgs),
    /// Check whether a joint action is a k-strong Nash equilibrium.
    Verify(VerifyArgs),
    /// Build the worst-case ring game and certify that it attains the bound.
    Construct(ConstructArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// Number of players.
    #[arg(long)]
    n: usize,
    /// `indicator`, `identity`, or comma-separated exact values w(0),...,w(n).
    #[arg(long, default_value = "indicator")]
    welfare: String,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// `a..b`, a comma-separated list, or a single value; defaults to 1..n.
    #[arg(long)]
    k: Option<String>,
    /// Also compute the utility-design bound.
    #[arg(long)]
    design: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Print CSV cells as 12-digit decimals instead of exact fractions.
    #[arg(long)]
    decimal: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    decimal: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Deterministic,
    Asynchronous,
}

#[derive(Args)]
struct CapArgs {
    /// Cap on joint actions visited by brute force; overrides SPOA_BRUTE_CAP.
    #[arg(long)]
    max_states: Option<u128>,
    /// Cap on ordered coalitions visited by brute force; overrides SPOA_BRUTE_CAP.
    #[arg(long)]
    max_permutations: Option<u128>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value = "deterministic")]
    mode: Mode,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated action indices; defaults to action 0 for everyone.
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    game: PathBuf,
    /// Comma-separated action indices, one per player.
    #[arg(long)]
    action: String,
    #[arg(long)]
    k: usize,
    /// Also report the brute-force k-strong price of anarchy of the game.
    #[arg(long)]
    spoa: bool,
    #[command(flatten)]
    caps: CapArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConstructArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    k: usize,
    /// Where to write the constructed game file.
    #[arg(long)]
    game_out: Option<PathBuf>,
    /// Where to write the certificate; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    class: ErrorClass,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Config,
            message: message.into(),
        }
    }
}

macro_rules! classified {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Self { class: e.class(), message: e.to_string() }
            }
        }
    )*};
}

classified!(
    spoa_core::error::BoundsError,
    spoa_core::error::GameError,
    spoa_core::error::WorstCaseError
);

impl From<spoa_core::error::ParseError> for Failure {
    fn from(e: spoa_core::error::ParseError) -> Self {
        Self::config(e.to_string())
    }
}

fn parse_k_values(spec: &str, n: usize) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::config(format!("invalid k specification {spec:?}"));
    let number = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let ks: Vec<usize> = if let Some((a, b)) = spec.split_once("..") {
        let (a, b) = (number(a)?, number(b.trim_start_matches('='))?);
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        spec.split(',').map(number).collect::<Result<_, _>>()?
    };
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > n) {
        return Err(Failure::config(format!(
            "coalition size k={k} outside [1, {n}]"
        )));
    }
    Ok(ks)
}

fn parse_action(spec: &str) -> Result<JointAction, Failure> {
    spec.split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map(JointAction)
        .map_err(|_| Failure::config(format!("invalid joint action {spec:?}")))
}

fn welfare(problem: &ProblemArgs) -> Result<WelfareCurve, Failure> {
    if problem.n == 0 {
        return Err(Failure::config("n must be at least 1"));
    }
    Ok(WelfareCurve::parse(&problem.welfare, problem.n)?)
}

fn caps(args: &CapArgs) -> Result<BruteForceCaps, Failure> {
    let mut caps = BruteForceCaps::default();
    if let Ok(value) = std::env::var(CAP_ENV) {
        let cap = value.trim().parse::<u128>().map_err(|_| {
            Failure::config(format!("{CAP_ENV}={value:?} is not a non-negative integer"))
        })?;
        caps.states = cap;
        caps.permutations = cap;
    }
    if let Some(c) = args.max_states {
        caps.states = c;
    }
    if let Some(c) = args.max_permutations {
        caps.permutations = c;
    }
    Ok(caps)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json renders");
    s.push('\n');
    s
}

fn cmd_curve(args: &CurveArgs) -> Result<(), Failure> {
    let w = welfare(&args.problem)?;
    let n = args.problem.n;
    let ks = match &args.k {
        Some(spec) => parse_k_values(spec, n)?,
        None => (1..=n).collect(),
    };
    let table = spoa_curve(n, &w, &ks, args.design)?;
    let text = match args.format {
        Format::Csv => table.to_csv(args.decimal),
        Format::Json => pretty(&table.to_json()),
        Format::Svg => curve_svg(&table),
    };
    emit(&args.out, &text)
}

fn cmd_bound(args: &BoundArgs, design: bool) -> Result<(), Failure> {
    let w = welfare(&args.problem)?;
    let n = args.problem.n;
    let report: BoundReport = if design {
        design_bound(n, &w, args.k)?
    } else {
        spoa_bound(n, &w, args.k)?
    };
    let text = match args.format {
        Format::Json => pretty(&report.to_json()),
        Format::Csv => {
            let render = |v| {
                if args.decimal {
                    decimal_string(v)
                } else {
                    exact_string(v)
                }
            };
            format!(
                "n,k,primal_value,spoa\n{},{},{},{}\n",
                n,
                args.k,
                render(&report.primal_value),
                render(&report.spoa)
            )
        }
        Format::Svg => return Err(Failure::config("svg output is only available for curve")),
    };
    emit(&args.out, &text)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let game = ResourceGame::load(&args.game)?;
    let start = match &args.start {
        Some(spec) => parse_action(spec)?,
        None => JointAction::uniform(game.players(), 0),
    };
    let mode = match args.mode {
        Mode::Deterministic => DynamicsMode::Deterministic,
        Mode::Asynchronous => DynamicsMode::Asynchronous,
    };
    let trace = game.run_dynamics(&start, args.k, mode, args.seed)?;
    emit(&args.out, &pretty(&trace.to_json()))
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let game = ResourceGame::load(&args.game)?;
    let action = parse_action(&args.action)?;
    let verdict = game.is_k_strong_ne(&action, args.k)?;
    let mut report = verdict.to_json();
    report["k"] = json!(args.k);
    report["action"] = json!(action);
    report["welfare"] = json!(exact_string(&game.welfare(&action)?));
    report["objective"] = json!(exact_string(&game.objective(&action)?));
    if args.spoa {
        let caps = caps(&args.caps)?;
        report["brute_force_spoa"] =
            json!(ExactValue::from(&game.brute_force_spoa(args.k, &caps)?));
    }
    emit(&args.out, &pretty(&report))
}

fn cmd_construct(args: &ConstructArgs) -> Result<(), Failure> {
    let w = welfare(&args.problem)?;
    let (certificate, spec) = certify_tightness(args.problem.n, &w, args.k)?;
    if let Some(path) = &args.game_out {
        write_file(path, &pretty(&spec.game.to_json()))?;
    }
    let mut report = certificate.to_json();
    report["a_ne"] = json!(spec.a_ne);
    report["a_opt"] = json!(spec.a_opt);
    emit(&args.out, &pretty(&report))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Curve(a) => cmd_curve(a),
        Command::Bound(a) => cmd_bound(a, false),
        Command::Design(a) => cmd_bound(a, true),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Construct(a) => cmd_construct(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(match failure.class {
                ErrorClass::Config => 2,
                ErrorClass::SizeGuard => 3,
                ErrorClass::Internal => 4,
            })
        }
    }
}
