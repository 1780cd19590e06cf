use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sigmach::analysis::{ContractionCertificate, ContractionWatcher};
use sigmach::format::{parse_machine, print_machine};
use sigmach::machine::{normalize_speeds, support_configuration, support_machine};
use sigmach::mesh::{embed_in_mesh, mesh_configuration, mesh_machine, MeshSpec, StripSpec};
use sigmach::presets::{build_gcd, build_gcd_phi, build_modulo, build_sm4, build_subtraction, read_encoded_value};
use sigmach::render::{render_svg, RenderOptions};
use sigmach::scalar::parse_scalar;
use sigmach::verify::{run_suite, Suite, VerifyOptions};
use sigmach::{run_with, Configuration, Diagram, ExactScalar, HaltReason, Machine, Rational, RunLimits, Scalar};

const EXIT_WRONG: u8 = 1;
const EXIT_MISSING_RULE: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;
const SEARCH_BUDGET: usize = 64;

/// Exact signal machine simulator.
#[derive(Parser)]
#[command(name = "sigmach", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a machine and report how it halts.
    Run(RunArgs),
    /// Run a machine and write its space-time diagram as SVG.
    Render(RenderArgs),
    /// Run a seeded property suite.
    Verify(VerifyArgs),
    /// Print a rational mesh in machine-file format.
    Mesh(MeshArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Sm4,
    Sub,
    Mod,
    Gcd,
    GcdPhi,
}

#[derive(Args)]
struct Source {
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    preset: Option<Preset>,
    /// Machine definition file.
    #[arg(long)]
    file: Option<PathBuf>,
    /// First operand of sub, mod and gcd.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    /// Second operand of sub, mod and gcd.
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long, default_value_t = 1000)]
    max_events: usize,
    #[arg(long)]
    max_time: Option<String>,
    /// Stop at the first certified contraction.
    #[arg(long)]
    detect_accumulation: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Write the event log here.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Write an SVG diagram here.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    source: Source,
    /// Output path; stdout when absent.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, default_value_t = 800)]
    width: u32,
    #[arg(long, default_value_t = 600)]
    height: u32,
    /// Draw time downwards.
    #[arg(long)]
    time_down: bool,
    /// `NAME=COLOR`, repeatable.
    #[arg(long = "color", value_parser = parse_color)]
    colors: Vec<(String, String)>,
    #[arg(long, default_value_t = 3)]
    decimals: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// One of 2speed, mesh, gcd, affine, scheduler, support.
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    count: usize,
    /// Mesh suite horizon.
    #[arg(long)]
    horizon: Option<String>,
}

#[derive(Args)]
struct MeshArgs {
    /// Embed the configuration of this three-speed machine.
    #[arg(long, conflicts_with_all = ["nu", "k"])]
    file: Option<PathBuf>,
    /// Right speed `p/q` of the normalized machine.
    #[arg(long, required_unless_present = "file")]
    nu: Option<String>,
    /// Number of strips.
    #[arg(long, required_unless_present = "file")]
    k: Option<u64>,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    x0: String,
    #[arg(long, default_value = "1")]
    w: String,
}

fn parse_color(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(n, c)| (n.to_string(), c.to_string()))
        .ok_or_else(|| format!("expected NAME=COLOR, got `{s}`"))
}

fn scalar(text: &str, what: &str) -> Result<Scalar> {
    parse_scalar(text).map_err(|e| anyhow!("{what}: {e}"))
}

fn rational(text: &str, what: &str) -> Result<Rational> {
    parse_scalar(text).map_err(|e| anyhow!("{what}: {e}"))
}

fn operands(source: &Source) -> Result<(Scalar, Scalar)> {
    let a = source.a.as_deref().context("this preset needs --a")?;
    let b = source.b.as_deref().context("this preset needs --b")?;
    Ok((scalar(a, "--a")?, scalar(b, "--b")?))
}

fn load(source: &Source) -> Result<(Machine, Configuration)> {
    if let Some(path) = &source.file {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return parse_machine(&text).map_err(|e| anyhow!("{}: {e}", path.display()));
    }
    let built = match source.preset.expect("clap requires a source") {
        Preset::Sm4 => Ok(build_sm4()),
        Preset::GcdPhi => Ok(build_gcd_phi()),
        Preset::Sub => operands(source).map(|(a, b)| build_subtraction(&a, &b))?,
        Preset::Mod => operands(source).map(|(a, b)| build_modulo(&a, &b))?,
        Preset::Gcd => operands(source).map(|(a, b)| build_gcd(&a, &b))?,
    };
    Ok(built?)
}

struct Outcome {
    diagram: Diagram,
    certificate: Option<ContractionCertificate<Scalar>>,
}

fn simulate(source: &Source) -> Result<Outcome> {
    let (machine, config) = load(source)?;
    let max_time = source.max_time.as_deref().map(|t| scalar(t, "--max-time")).transpose()?;
    let limits = RunLimits { max_events: source.max_events, max_time };
    let mut watcher = ContractionWatcher::new(&config, SEARCH_BUDGET);
    let diagram = run_with(&machine, &config, &limits, |state| source.detect_accumulation && watcher.observe(state));
    Ok(Outcome { diagram, certificate: watcher.certificate })
}

fn decimal(s: &Scalar) -> String {
    format!("{:.6}", s.to_f64())
}

fn report(outcome: &Outcome) -> u8 {
    let d = &outcome.diagram;
    println!("events = {}", d.events.len());
    if let Some(last) = d.events.last() {
        println!("last event = {} at t = {}", last.position, last.time);
    }
    match &d.halt {
        HaltReason::Quiescent => {
            println!("halt = quiescent");
            if d.machine.signal_by_name("wall0").is_some() {
                match read_encoded_value(&d.final_state, &d.machine) {
                    Ok(v) => println!("result = {v}"),
                    Err(_) if d.final_state.sites.len() == 1 => println!("result = 0"),
                    Err(e) => println!("result unavailable: {e}"),
                }
            }
            0
        }
        HaltReason::CertifiedAccumulation => {
            let c = outcome.certificate.as_ref().expect("certificate recorded");
            println!("{c}");
            println!(
                "ACCUMULATION decimal center={} time={} ratio={}",
                decimal(&c.center_x),
                decimal(&c.limit_time),
                decimal(&c.ratio)
            );
            0
        }
        HaltReason::MissingRule { inputs, position, time } => {
            println!("halt = missing rule for {} at ({position}, {time})", d.machine.format_set(inputs));
            EXIT_MISSING_RULE
        }
        HaltReason::EventLimit | HaltReason::TimeLimit => {
            let which = if d.halt == HaltReason::EventLimit { "event" } else { "time" };
            println!("halt = {which} limit, inconclusive");
            EXIT_INCONCLUSIVE
        }
    }
}

fn marker(outcome: &Outcome) -> Option<(&Scalar, &Scalar)> {
    outcome.certificate.as_ref().map(|c| (&c.center_x, &c.limit_time))
}

fn cmd_run(args: &RunArgs) -> Result<u8> {
    let outcome = simulate(&args.source)?;
    let code = report(&outcome);
    if let Some(path) = &args.log {
        fs::write(path, outcome.diagram.event_log()).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.svg {
        let svg = render_svg(&outcome.diagram, &RenderOptions::default(), marker(&outcome));
        fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(code)
}

fn cmd_render(args: &RenderArgs) -> Result<u8> {
    let outcome = simulate(&args.source)?;
    if args.width == 0 || args.height == 0 {
        bail!("width and height must be positive");
    }
    let opts = RenderOptions {
        width: args.width,
        height: args.height,
        time_up: !args.time_down,
        colors: args.colors.iter().cloned().collect::<BTreeMap<_, _>>(),
        decimals: args.decimals,
    };
    let svg = render_svg(&outcome.diagram, &opts, marker(&outcome));
    match &args.svg {
        Some(path) => fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{svg}"),
    }
    Ok(0)
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8> {
    let horizon = args.horizon.as_deref().map(|h| rational(h, "--horizon")).transpose()?;
    let opts = VerifyOptions { seed: args.seed, count: args.count, horizon };
    let report = run_suite(args.suite, &opts);
    println!("{report}");
    Ok(if report.passed() { 0 } else { EXIT_WRONG })
}

fn cmd_mesh(args: &MeshArgs) -> Result<u8> {
    let spec: MeshSpec<Rational> = match &args.file {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let (m, c) = parse_machine::<Rational>(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
            let (normalized, c, _) = normalize_speeds(&m, &c)?;
            let speeds = normalized.distinct_speeds();
            if speeds.len() != 3 {
                bail!("expected a three-speed machine, found {} speeds", speeds.len());
            }
            let (_, projection) = support_machine(&normalized);
            let nu = &speeds[2];
            embed_in_mesh(&support_configuration(&c, &projection), nu.numer().clone(), nu.denom().clone())?
        }
        None => {
            let nu = rational(args.nu.as_deref().expect("clap requires --nu"), "--nu")?;
            if !nu.is_positive_value() {
                bail!("--nu must be positive");
            }
            let strip = StripSpec::new(
                nu.numer().clone(),
                nu.denom().clone(),
                rational(&args.x0, "--x0")?,
                rational(&args.w, "--w")?,
            )?;
            MeshSpec::new(strip, args.k.expect("clap requires --k"))?
        }
    };
    let (lo, hi) = spec.extent();
    println!("# mesh nu={} w={} k={} extent=[{lo}, {hi}]", spec.strip.nu(), spec.strip.w, spec.k);
    print!("{}", print_machine(&mesh_machine(spec.strip.nu()), &mesh_configuration(&spec)));
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_WRONG } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Render(a) => cmd_render(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Mesh(a) => cmd_mesh(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_WRONG)
        }
    }
}
