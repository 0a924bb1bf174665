//! `kgfusion`: run frame computations and checks on scenario files.

mod commands;
mod report;
mod scenario;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kgfusion::stability::StabilityVariant;
use kgfusion::{generate, ControllerMode, Field, GenSpec, KMode, Tolerances};

use report::{envelope, exit_code, Outcome, EXIT_FALSE, EXIT_INPUT, EXIT_OK};
use scenario::{InputError, Scenario, TolOverrides};

#[derive(Parser)]
#[command(name = "kgfusion", version, about = "Controlled K-g-fusion frame computations on scenario files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    #[arg(long, global = true)]
    tol_psd: Option<f64>,
    #[arg(long, global = true)]
    tol_herm: Option<f64>,
    #[arg(long, global = true)]
    tol_eq: Option<f64>,
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    #[arg(long, global = true)]
    tol_pd: Option<f64>,
    /// Seed for commands that sample (restrict, sweep, gen).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the family is a controlled K-g-fusion frame.
    CheckFrame { scenario: PathBuf },
    /// Print the controlled frame operator.
    FrameOperator { scenario: PathBuf },
    /// Optimal bounds with witnesses and margins.
    Bounds { scenario: PathBuf },
    /// Strict-mode analysis operator and its factorization defect.
    Analysis { scenario: PathBuf },
    /// Canonical dual family and its bounds.
    Dual { scenario: PathBuf },
    /// The family with frame operator K S^-1 K*.
    KConstruct { scenario: PathBuf },
    /// Transport the family by the scenario's V.
    Transform {
        scenario: PathBuf,
        /// Treat the family as already transformed and undo V.
        #[arg(long)]
        inverse: bool,
    },
    /// View a controlled g-fusion frame as a K-frame.
    Weaken { scenario: PathBuf },
    /// Lower bound of a K-frame restricted to range(K).
    Restrict {
        scenario: PathBuf,
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Transfer the K-frame to the scenario's V when range(V) lies in range(K).
    Douglas { scenario: PathBuf },
    /// Finite quotient bound for K against S.
    Quotient { scenario: PathBuf },
    /// The three equivalent frame conditions and the controlled/uncontrolled comparison.
    Equivalences { scenario: PathBuf },
    /// Pair criterion for the scenario's family and its second family.
    PairCheck { scenario: PathBuf },
    /// Dual stability estimate between the family and its second family.
    Stability {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Variant::Operator)]
        variant: Variant,
    },
    /// Seeded property suites over generated instances.
    Sweep {
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    /// Emit a generated instance as a scenario.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Functional,
    Operator,
}

#[derive(Args)]
struct GenArgs {
    /// Read the generator spec from this JSON file instead of the flags.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 6)]
    atoms: usize,
    #[arg(long, value_enum, default_value_t = Mode::Identity)]
    mode: Mode,
    /// `identity`, `invertible` or `rank=<r>`.
    #[arg(long, default_value = "identity")]
    k_mode: String,
    #[arg(long)]
    real: bool,
    #[arg(long)]
    aligned: bool,
    /// Write the scenario here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Identity,
    CommutingDiagonal,
    Polynomial,
}

impl Global {
    fn overrides(&self) -> TolOverrides {
        TolOverrides { psd: self.tol_psd, herm: self.tol_herm, eq: self.tol_eq, rank: self.tol_rank }
    }

    fn apply(&self, mut tol: Tolerances) -> Tolerances {
        if let Some(pd) = self.tol_pd {
            tol.pd = pd;
        }
        tol
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::CheckFrame { .. } => "check-frame",
        Command::FrameOperator { .. } => "frame-operator",
        Command::Bounds { .. } => "bounds",
        Command::Analysis { .. } => "analysis",
        Command::Dual { .. } => "dual",
        Command::KConstruct { .. } => "k-construct",
        Command::Transform { .. } => "transform",
        Command::Weaken { .. } => "weaken",
        Command::Restrict { .. } => "restrict",
        Command::Douglas { .. } => "douglas",
        Command::Quotient { .. } => "quotient",
        Command::Equivalences { .. } => "equivalences",
        Command::PairCheck { .. } => "pair-check",
        Command::Stability { .. } => "stability",
        Command::Sweep { .. } => "sweep",
        Command::Gen(_) => "gen",
    }
}

fn scenario_path(c: &Command) -> Option<&PathBuf> {
    match c {
        Command::CheckFrame { scenario }
        | Command::FrameOperator { scenario }
        | Command::Bounds { scenario }
        | Command::Analysis { scenario }
        | Command::Dual { scenario }
        | Command::KConstruct { scenario }
        | Command::Transform { scenario, .. }
        | Command::Weaken { scenario }
        | Command::Restrict { scenario, .. }
        | Command::Douglas { scenario }
        | Command::Quotient { scenario }
        | Command::Equivalences { scenario }
        | Command::PairCheck { scenario }
        | Command::Stability { scenario, .. } => Some(scenario),
        Command::Sweep { .. } | Command::Gen(_) => None,
    }
}

fn gen_spec(args: &GenArgs, seed: u64) -> Result<GenSpec, InputError> {
    if let Some(path) = &args.spec {
        let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        return serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())));
    }
    let mut spec = GenSpec::new(seed, args.dim, args.atoms);
    spec.controller_mode = match args.mode {
        Mode::Identity => ControllerMode::Identity,
        Mode::CommutingDiagonal => ControllerMode::CommutingDiagonal,
        Mode::Polynomial => ControllerMode::PolynomialOfCommonHermitian,
    };
    spec.k_mode = match args.k_mode.as_str() {
        "identity" => KMode::Identity,
        "invertible" => KMode::Invertible,
        other => match other.strip_prefix("rank=").and_then(|r| r.parse().ok()) {
            Some(r) => KMode::RankDeficient(r),
            None => return Err(InputError(format!("unknown k-mode \"{other}\""))),
        },
    };
    spec.field = if args.real { Field::Real } else { Field::Complex };
    spec.aligned = args.aligned;
    Ok(spec)
}

enum Failure {
    Input(String),
    Library(kgfusion::Error),
}

fn run(cli: &Cli, tol: &mut Option<Tolerances>) -> Result<Outcome, Failure> {
    let base = cli.global.apply(Tolerances::default());
    let input = |e: InputError| Failure::Input(e.0);
    let lib = Failure::Library;

    let loaded = match scenario_path(&cli.command) {
        Some(path) => {
            let sc = Scenario::read(path).map_err(input)?;
            let t = cli.global.apply(sc.tolerances(&cli.global.overrides()));
            *tol = Some(t);
            Some(sc.load(t).map_err(input)?)
        }
        None => {
            let t = Scenario::tolerances_from(base, &cli.global.overrides());
            *tol = Some(t);
            None
        }
    };
    let t = tol.expect("tolerances resolved");
    let s = loaded.as_ref();

    let out = match &cli.command {
        Command::CheckFrame { .. } => commands::check_frame(s.unwrap()),
        Command::FrameOperator { .. } => commands::frame_operator_cmd(s.unwrap()),
        Command::Bounds { .. } => commands::bounds(s.unwrap()),
        Command::Analysis { .. } => commands::analysis(s.unwrap()),
        Command::Dual { .. } => commands::dual(s.unwrap()),
        Command::KConstruct { .. } => commands::k_construct(s.unwrap()),
        Command::Transform { inverse, .. } => commands::transform(s.unwrap(), *inverse),
        Command::Weaken { .. } => commands::weaken(s.unwrap()),
        Command::Restrict { samples, .. } => commands::restrict(s.unwrap(), *samples, cli.global.seed),
        Command::Douglas { .. } => commands::douglas(s.unwrap()),
        Command::Quotient { .. } => commands::quotient(s.unwrap()),
        Command::Equivalences { .. } => commands::equivalences(s.unwrap()),
        Command::PairCheck { .. } => commands::pair_check(s.unwrap()),
        Command::Stability { variant, .. } => commands::stability(
            s.unwrap(),
            match variant {
                Variant::Functional => StabilityVariant::Functional,
                Variant::Operator => StabilityVariant::Operator,
            },
        ),
        Command::Sweep { count } => commands::sweep(*count, cli.global.seed, t),
        Command::Gen(args) => {
            let spec = gen_spec(args, cli.global.seed).map_err(input)?;
            let inst = generate(&spec, t).map_err(lib)?;
            let sc = Scenario::from_instance(&spec, &inst);
            let text = serde_json::to_string_pretty(&sc).expect("scenarios serialize");
            match &args.out {
                Some(path) => std::fs::write(path, text + "\n")
                    .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?,
                None => println!("{text}"),
            }
            return Ok(Outcome::new(true, serde_json::Value::Null));
        }
    };
    out.map_err(lib)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = command_name(&cli.command);
    let mut tol = None;
    let result = run(&cli, &mut tol);
    if matches!(cli.command, Command::Gen(_)) && result.is_ok() {
        return ExitCode::from(EXIT_OK);
    }
    let (code, status, body, summary) = match result {
        Ok(o) => {
            let code = if o.holds { EXIT_OK } else { EXIT_FALSE };
            (code, if o.holds { "holds" } else { "fails" }, o.result, o.summary)
        }
        Err(Failure::Input(msg)) => (EXIT_INPUT, "input_error", serde_json::json!({ "error": msg }), vec![msg]),
        Err(Failure::Library(e)) => {
            let code = match e {
                kgfusion::Error::NotAFrame => EXIT_FALSE,
                ref e => exit_code(e.class()),
            };
            let msg = e.to_string();
            (code, "error", serde_json::json!({ "error": msg, "kind": format!("{:?}", e.class()) }), vec![msg])
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.global.format {
        Format::Structured => {
            let report = envelope(name, tol.as_ref(), status, code, body);
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
        }
        Format::Text => {
            let _ = writeln!(out, "{name}: {status}");
            for line in summary {
                let _ = writeln!(out, "  {line}");
            }
            if let Some(t) = tol {
                let _ = writeln!(
                    out,
                    "  tolerances: psd {:e}, herm {:e}, eq {:e}, rank {:e}, pd {:e}; rng {}",
                    t.psd,
                    t.herm,
                    t.eq,
                    t.rank,
                    t.pd,
                    kgfusion::RNG_VERSION
                );
            }
        }
    }
    ExitCode::from(code)
}
