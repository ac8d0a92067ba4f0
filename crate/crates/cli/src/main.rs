//! `qlnc`: run linear network codes classically, coherently and as
//! measurement-based procedures, and compare the results.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qlnc_core::branch::{enumerate_branches, BranchSummary};
use qlnc_core::format::{parse_amplitudes, FormatError, NetworkFile};
use qlnc_core::mbqc::{compile, mbqc_schedule};
use qlnc_core::oracle::apply_isometry;
use qlnc_core::{
    coherent_schedule, resource_counts, run_coherent, run_mbqc, CodingNetwork, ForcedOutcomes, Mode, NetworkError,
    OutcomeSource, OutcomeSpec, QuditState, RunError, RunReport, SampledOutcomes, XCorrection,
};

const EXIT_INVALID: u8 = 1;
const EXIT_NOT_INJECTIVE: u8 = 2;
const EXIT_IMPOSSIBLE: u8 = 3;
const EXIT_USAGE: u8 = 64;

/// Fidelity below which `compare` and `--exhaustive` report a mismatch.
const AGREEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "qlnc", version)]
#[command(about = "Quantum linear network coding as one-way computation over Z_d")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Free,
    Constrained,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Free => Mode::Free,
            ModeArg::Constrained => Mode::Constrained,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum XCorrectionArg {
    Propagate,
    Local,
}

impl From<XCorrectionArg> for XCorrection {
    fn from(x: XCorrectionArg) -> XCorrection {
        match x {
            XCorrectionArg::Propagate => XCorrection::Propagate,
            XCorrectionArg::Local => XCorrection::Local,
        }
    }
}

#[derive(Debug, clap::Args)]
struct NetworkArg {
    /// Network file (JSON).
    #[arg(long)]
    network: PathBuf,
}

#[derive(Debug, clap::Args)]
struct OutputArgs {
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, clap::Args)]
struct InputArgs {
    /// Basis input, e.g. "1,0".
    #[arg(long, conflicts_with = "input_state")]
    input: Option<String>,

    /// Amplitude file: a JSON list of [re, im] pairs in basis order.
    #[arg(long)]
    input_state: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    #[command(flatten)]
    network: NetworkArg,

    #[command(flatten)]
    input: InputArgs,

    #[arg(long, value_enum, default_value = "free")]
    mode: ModeArg,

    /// Seed for sampled measurement outcomes.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Comma-separated outcome vector, one entry per measurement.
    #[arg(long, conflicts_with = "exhaustive")]
    force_outcomes: Option<String>,

    /// Enumerate every outcome branch instead of a single run.
    #[arg(long)]
    exhaustive: bool,

    /// Include wall time in the report.
    #[arg(long)]
    timing: bool,

    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a network file for structural problems.
    Validate {
        #[command(flatten)]
        network: NetworkArg,
    },
    /// Evaluate the code on a vector of source symbols.
    RunClassical {
        #[command(flatten)]
        network: NetworkArg,
        /// Source symbols, e.g. "1,0".
        #[arg(long)]
        input: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Coherent simulation with controlled shifts and Fourier measurements.
    RunCoherent {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write the graph-state geometry of the measurement-based procedure.
    CompileMbqc {
        #[command(flatten)]
        network: NetworkArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Measurement-based execution on the compiled graph state.
    RunMbqc {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "propagate")]
        x_correction: XCorrectionArg,
    },
    /// Run the classical, coherent and measurement-based paths and compare.
    Compare {
        #[command(flatten)]
        network: NetworkArg,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value = "free")]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "propagate")]
        x_correction: XCorrectionArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Resource counts of the measurement-based procedure.
    Counts {
        #[command(flatten)]
        network: NetworkArg,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, message: message.into() }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        let code = match &e {
            RunError::NotInjective { .. } => EXIT_NOT_INJECTIVE,
            e if e.is_impossible_outcome() => EXIT_IMPOSSIBLE,
            RunError::InputShape { .. } | RunError::ForcedLength { .. } => EXIT_USAGE,
            RunError::State(qlnc_core::StateError::OutcomeOutOfRange { .. }) => EXIT_USAGE,
            _ => EXIT_INVALID,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<NetworkError> for Failure {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::InputLength { .. } => Failure::usage(e.to_string()),
            other => Failure::invalid(other.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

/// Parse and validate a network file.
fn load_network(arg: &NetworkArg) -> Result<CodingNetwork> {
    let text = read(&arg.network)?;
    let file: NetworkFile = serde_json::from_str(&text)
        .map_err(|e| Failure::invalid(format!("{}: {e}", arg.network.display())))?;
    let net = file.into_network().map_err(|e| match e {
        FormatError::Version(_) => Failure::usage(e.to_string()),
        other => Failure::invalid(other.to_string()),
    })?;
    let violations = net.validate();
    if !violations.is_empty() {
        let mut msg = format!("{} is not a valid network:", arg.network.display());
        for v in &violations {
            let _ = write!(msg, "\n  {v}");
        }
        return Err(Failure::invalid(msg));
    }
    Ok(net)
}

fn parse_vector(text: &str, what: &str) -> Result<Vec<u64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|_| Failure::usage(format!("bad {what} entry {s:?}"))))
        .collect()
}

fn basis_values(text: &str, net: &CodingNetwork) -> Result<Vec<u64>> {
    let values = parse_vector(text, "input")?;
    if values.len() != net.inputs.len() {
        return Err(Failure::usage(format!("network has {} inputs, --input has {}", net.inputs.len(), values.len())));
    }
    if let Some(v) = values.iter().find(|&&v| v >= net.modulus) {
        return Err(Failure::usage(format!("input symbol {v} is outside Z_{}", net.modulus)));
    }
    Ok(values)
}

/// The input state and, for basis inputs, the source symbols.
fn load_input(args: &InputArgs, net: &CodingNetwork) -> Result<(QuditState, Option<Vec<u64>>)> {
    let d = net.modulus as usize;
    match (&args.input, &args.input_state) {
        (Some(text), None) => {
            let values = basis_values(text, net)?;
            let state = QuditState::basis(&values, d).map_err(|e| Failure::usage(e.to_string()))?;
            Ok((state, Some(values)))
        }
        (None, Some(path)) => {
            let loaded = parse_amplitudes(&read(path)?, d).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            if let Some(norm) = loaded.renormalized_from {
                eprintln!("warning: {} has norm {norm:.9}; normalized", path.display());
            }
            if loaded.state.qudit_count() != net.inputs.len() {
                return Err(Failure::usage(format!(
                    "{} holds {} qudits, the network has {} inputs",
                    path.display(),
                    loaded.state.qudit_count(),
                    net.inputs.len()
                )));
            }
            Ok((loaded.state, None))
        }
        _ => Err(Failure::usage("give exactly one of --input or --input-state")),
    }
}

fn emit(output: &OutputArgs, json: String, text: String) -> Result<()> {
    let body = match output.format {
        Format::Json => json + "\n",
        Format::Text => text,
    };
    match &output.out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}

#[derive(Serialize)]
struct ExhaustiveReport {
    version: u32,
    protocol: &'static str,
    mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    x_correction: Option<XCorrection>,
    d: u64,
    measurements: usize,
    summary: BranchSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<f64>,
}

impl ExhaustiveReport {
    fn text(&self) -> String {
        let s = &self.summary;
        let mut out = format!(
            "{} exhaustive run, {} measurements over Z_{}: {} branches, min fidelity {:.12}\n",
            self.protocol, self.measurements, self.d, s.branches, s.min_fidelity
        );
        if let Some(f) = &s.first_failure {
            let _ = writeln!(out, "first failing outcome vector: {f:?}");
        }
        out
    }
}

fn run_protocol(args: RunArgs, x_correction: Option<XCorrection>) -> Result<()> {
    let net = load_network(&args.network)?;
    let (input, _) = load_input(&args.input, &net)?;
    let mode = Mode::from(args.mode);
    let start = Instant::now();

    if args.exhaustive {
        let schedule = match x_correction {
            None => coherent_schedule(&net, mode)?,
            Some(xc) => mbqc_schedule(&compile(&net)?, mode, xc)?,
        };
        let expected = apply_isometry(&net.composite_map()?, &input)?;
        let summary = enumerate_branches(&schedule, &input, &expected, AGREEMENT_TOL)?;
        let passed = summary.all_pass();
        let report = ExhaustiveReport {
            version: 1,
            protocol: if x_correction.is_some() { "mbqc" } else { "coherent" },
            mode,
            x_correction,
            d: net.modulus,
            measurements: schedule.measurement_count(),
            summary,
            wall_time_ms: args.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
        };
        emit(&args.output, pretty(&report), report.text())?;
        return if passed { Ok(()) } else { Err(Failure::invalid("some branch missed the expected state")) };
    }

    let (mut source, spec): (Box<dyn OutcomeSource>, OutcomeSpec) = match &args.force_outcomes {
        Some(text) => {
            let v = parse_vector(text, "outcome")?;
            if let Some(r) = v.iter().find(|&&r| r >= net.modulus) {
                return Err(Failure::usage(format!("forced outcome {r} is outside Z_{}", net.modulus)));
            }
            (Box::new(ForcedOutcomes::new(v.clone())), OutcomeSpec::Forced(v))
        }
        None => (Box::new(SampledOutcomes::new(args.seed)), OutcomeSpec::Seed(args.seed)),
    };
    let mut report: RunReport = match x_correction {
        None => run_coherent(&net, &input, mode, source.as_mut(), spec)?.1,
        Some(xc) => run_mbqc(&compile(&net)?, &input, mode, xc, source.as_mut(), spec)?.1,
    };
    if args.timing {
        report.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    emit(&args.output, report.to_json(), report.to_text())
}

#[derive(Serialize)]
struct Comparison {
    version: u32,
    d: u64,
    mode: Mode,
    x_correction: XCorrection,
    #[serde(skip_serializing_if = "Option::is_none")]
    classical_output: Option<Vec<u64>>,
    fidelities: Vec<Pair>,
    agree: bool,
}

#[derive(Serialize)]
struct Pair {
    a: &'static str,
    b: &'static str,
    fidelity: f64,
}

fn compare(
    network: NetworkArg,
    input: InputArgs,
    mode: ModeArg,
    seed: u64,
    x_correction: XCorrectionArg,
    output: OutputArgs,
) -> Result<()> {
    let net = load_network(&network)?;
    let (state, basis) = load_input(&input, &net)?;
    let mode = Mode::from(mode);
    let xc = XCorrection::from(x_correction);
    let oracle = apply_isometry(&net.composite_map()?, &state)?;
    let (coherent, _) = run_coherent(&net, &state, mode, &mut SampledOutcomes::new(seed), OutcomeSpec::Seed(seed))?;
    let (mbqc, _) = run_mbqc(&compile(&net)?, &state, mode, xc, &mut SampledOutcomes::new(seed), OutcomeSpec::Seed(seed))?;

    let mut paths: Vec<(&'static str, QuditState)> = vec![("oracle", oracle), ("coherent", coherent), ("mbqc", mbqc)];
    let classical_output = match basis {
        Some(values) => {
            let y = net.run_classical(&values)?;
            let state = QuditState::basis(&y, net.modulus as usize).map_err(|e| Failure::invalid(e.to_string()))?;
            paths.insert(0, ("classical", state));
            Some(y)
        }
        None => None,
    };
    let mut fidelities = Vec::new();
    for (i, (a, sa)) in paths.iter().enumerate() {
        for (b, sb) in &paths[i + 1..] {
            let f = sa.fidelity(sb).map_err(|e| Failure::invalid(e.to_string()))?;
            fidelities.push(Pair { a, b, fidelity: f });
        }
    }
    let agree = fidelities.iter().all(|p| p.fidelity >= 1.0 - AGREEMENT_TOL);
    let cmp = Comparison { version: 1, d: net.modulus, mode, x_correction: xc, classical_output, fidelities, agree };
    let mut text = String::new();
    if let Some(y) = &cmp.classical_output {
        let _ = writeln!(text, "classical output: {y:?}");
    }
    for p in &cmp.fidelities {
        let _ = writeln!(text, "{:>9} vs {:<9} fidelity {:.12}", p.a, p.b, p.fidelity);
    }
    let _ = writeln!(text, "{}", if agree { "all paths agree" } else { "paths disagree" });
    emit(&output, pretty(&cmp), text)?;
    if agree {
        Ok(())
    } else {
        Err(Failure::invalid("execution paths disagree"))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { network } => {
            let net = load_network(&network)?;
            println!(
                "{}: valid ({} nodes, {} links, {} inputs, {} outputs, d = {})",
                network.network.display(),
                net.nodes.len(),
                net.links.len(),
                net.inputs.len(),
                net.outputs.len(),
                net.modulus
            );
            Ok(())
        }
        Command::RunClassical { network, input, output } => {
            let net = load_network(&network)?;
            let values = basis_values(&input, &net)?;
            let y = net.run_classical(&values)?;
            #[derive(Serialize)]
            struct Classical<'a> {
                version: u32,
                d: u64,
                input: &'a [u64],
                output: &'a [u64],
            }
            let json = pretty(&Classical { version: 1, d: net.modulus, input: &values, output: &y });
            let text = y.iter().map(u64::to_string).collect::<Vec<_>>().join(",") + "\n";
            emit(&output, json, text)
        }
        Command::RunCoherent { run } => run_protocol(run, None),
        Command::RunMbqc { run, x_correction } => run_protocol(run, Some(x_correction.into())),
        Command::CompileMbqc { network, output } => {
            let net = load_network(&network)?;
            let g = compile(&net)?;
            let mut text = format!("{} qudits, {} edges\n", g.qudit_count(), g.edges.len());
            for e in &g.edges {
                let _ = writeln!(text, "  {} -- {} (weight {})", g.qudits[e.a].label, g.qudits[e.b].label, e.weight);
            }
            emit(&output, g.to_json(), text)
        }
        Command::Compare { network, input, mode, seed, x_correction, output } => {
            compare(network, input, mode, seed, x_correction, output)
        }
        Command::Counts { network, output } => {
            let net = load_network(&network)?;
            let rc = resource_counts(&net, &compile(&net)?);
            let text = format!(
                "qudits {}\nentangling {}\nextra messages {}\ncX reference {}\ncZ edges {}\n",
                rc.qudits, rc.entangling_ops, rc.classical_messages_extra, rc.cx_count_reference, rc.cz_edges
            );
            emit(&output, pretty(&rc), text)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
