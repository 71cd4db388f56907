use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use channel_forge::channel::{CP_TOLERANCE, DEFAULT_THRESHOLD};
use channel_forge_cli::{
    cmd_convert, cmd_decompose, cmd_example, cmd_simulate, cmd_synthesize, cmd_validate, parse_channel, parse_circuit,
    parse_state, Bundle, CliError, CliResult, ExampleConfig, SimConfig, SimMode,
};

/// Synthesize quantum channels as adaptive single-ancilla circuits.
#[derive(Parser)]
#[command(name = "channel-forge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Re-express a channel file in another representation.
    Convert {
        input: PathBuf,
        /// Target representation: kraus, superop or choi.
        #[arg(long)]
        to: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Choi eigenvalue cutoff for Kraus extraction.
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        no_validate: bool,
    },
    /// Check that a channel file is CPTP. Exits 1 if it is not.
    Validate {
        input: PathBuf,
        #[arg(long, default_value_t = CP_TOLERANCE)]
        threshold: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build the adaptive circuit for a channel and verify it.
    Synthesize {
        input: PathBuf,
        /// Circuit file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Verification report file; stderr summary only when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Reduce Kraus input to a minimal set before synthesis.
        #[arg(long)]
        minimal: bool,
        /// Also store the completed 2d×2d unitary of every node.
        #[arg(long)]
        complete: bool,
        #[arg(long)]
        no_validate: bool,
    },
    /// Factor every round of a circuit into pre-rotation, entangler and post-rotations.
    Decompose {
        circuit: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a circuit on a state.
    Simulate {
        circuit: PathBuf,
        state: PathBuf,
        /// exact, trajectory, instrument or povm.
        #[arg(long, default_value = "exact")]
        mode: String,
        #[arg(long, default_value_t = 100)]
        trajectories: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Outcome bits kept by instrument and povm modes; circuit depth by default.
        #[arg(long)]
        keep_bits: Option<usize>,
        /// State file whose pure state trajectory fidelities are reported against.
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write a reproduction bundle: cat2, cat4, binomial, corner or init.
    Example {
        name: String,
        #[arg(long, default_value = "bundle")]
        out_dir: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        nc: Option<usize>,
        /// Comma-separated time grid for rank tables.
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trajectories: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Target state file for init.
        #[arg(long)]
        state: Option<PathBuf>,
    },
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Writes the single artifact of `bundle` to `output` or stdout.
fn emit_single(bundle: &Bundle, output: Option<&Path>) -> CliResult<()> {
    let text = &bundle.artifacts[0].text;
    match output {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_threshold(t: f64) -> CliResult<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(CliError::Input(format!("threshold must be positive, got {t}")))
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("CHANNEL_FORGE_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("CHANNEL_FORGE_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<Bundle> {
    configure_threads()?;
    let bundle = match cli.command {
        Command::Convert { input, to, output, threshold, no_validate } => {
            check_threshold(threshold)?;
            let b = cmd_convert(&parse_channel(&read(&input)?)?, &to, threshold, !no_validate)?;
            emit_single(&b, output.as_deref())?;
            b
        }
        Command::Validate { input, threshold, output } => {
            check_threshold(threshold)?;
            let b = cmd_validate(&parse_channel(&read(&input)?)?, threshold);
            emit_single(&b, output.as_deref())?;
            b
        }
        Command::Synthesize { input, output, report, threshold, minimal, complete, no_validate } => {
            check_threshold(threshold)?;
            let b = cmd_synthesize(&parse_channel(&read(&input)?)?, threshold, minimal, complete, !no_validate)?;
            emit_single(&b, output.as_deref())?;
            if let Some(p) = report {
                write(&p, &b.artifact("report.json").expect("synthesize emits a report").text)?;
            }
            b
        }
        Command::Decompose { circuit, output } => {
            let b = cmd_decompose(&parse_circuit(&read(&circuit)?)?)?;
            emit_single(&b, output.as_deref())?;
            b
        }
        Command::Simulate { circuit, state, mode, trajectories, seed, keep_bits, target, output } => {
            let mut cfg = SimConfig::new(mode.parse::<SimMode>()?);
            cfg.trajectories = trajectories;
            cfg.seed = seed;
            cfg.keep_bits = keep_bits;
            if let Some(p) = target {
                let t = parse_state(&read(&p)?)?;
                let psi = channel_forge::linalg::hermitian_eigen(t.matrix());
                cfg.target = Some(psi.vectors.column(0).into_owned());
            }
            let b = cmd_simulate(&parse_circuit(&read(&circuit)?)?, &parse_state(&read(&state)?)?, &cfg)?;
            emit_single(&b, output.as_deref())?;
            b
        }
        Command::Example { name, out_dir, alpha, nc, times, seed, trajectories, threshold, state } => {
            check_threshold(threshold)?;
            let mut cfg = ExampleConfig { alpha, n_c: nc, times, seed, trajectories, threshold, state: None };
            if let Some(p) = state {
                cfg.state = Some(parse_state(&read(&p)?)?);
            }
            let b = cmd_example(&name, &cfg)?;
            fs::create_dir_all(&out_dir).map_err(|e| CliError::Input(format!("{}: {e}", out_dir.display())))?;
            for a in &b.artifacts {
                write(&out_dir.join(&a.name), &a.text)?;
            }
            b
        }
    };
    Ok(bundle)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(b) if b.verified => {
            eprintln!("{}", b.summary);
            ExitCode::SUCCESS
        }
        Ok(b) => {
            eprintln!("verification failed: {}", b.summary);
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
