use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dejavu_cli::{
    append_csv, load_inputs, run_characterize, run_compare, run_generate, run_pack, write_file, CliError, CompareRun,
    CsvRow,
};
use dejavu_core::netlist::{ArraySpec, GeneratorSpec, RandomSpec};
use dejavu_core::packer::{MemoMode, PackOptions};
use dejavu_core::router::RouterParams;

/// Seed-based FPGA logic-block packer with memoized routing legality checks.
#[derive(Parser)]
#[command(name = "dejavu", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pack a netlist and write the clusters plus a telemetry report.
    Pack(PackArgs),
    /// Pack with and without memoization and check the outputs are identical.
    Compare(CompareArgs),
    /// Write a synthetic netlist.
    Generate(GenerateArgs),
    /// Report signature repetition and router calls per cluster.
    Characterize(CharacterizeArgs),
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    arch: PathBuf,
    #[arg(long)]
    netlist: PathBuf,
}

#[derive(Args)]
struct RouterArgs {
    #[arg(long, default_value_t = RouterParams::default().max_iterations)]
    max_iterations: u32,
    #[arg(long, default_value_t = RouterParams::default().history_increment)]
    history_increment: f64,
    #[arg(long, default_value_t = RouterParams::default().present_factor_initial)]
    present_factor: f64,
    #[arg(long, default_value_t = RouterParams::default().present_factor_growth)]
    present_growth: f64,
}

impl RouterArgs {
    fn params(&self) -> RouterParams {
        RouterParams {
            max_iterations: self.max_iterations,
            history_increment: self.history_increment,
            present_factor_initial: self.present_factor,
            present_factor_growth: self.present_growth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Memo {
    Off,
    On,
    CountOnly,
}

impl From<Memo> for MemoMode {
    fn from(m: Memo) -> Self {
        match m {
            Memo::Off => MemoMode::Off,
            Memo::On => MemoMode::On,
            Memo::CountOnly => MemoMode::CountOnly,
        }
    }
}

#[derive(Args)]
struct PackArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[arg(long, value_enum, default_value = "on")]
    memoize: Memo,
    /// Route memoized checks anyway and count disagreements.
    #[arg(long)]
    shadow: bool,
    /// Recorded in the report for provenance; packing itself is not random.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    router: RouterArgs,
    /// Packing JSON; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report JSON; printed to stderr when omitted.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Text rendering of the final signature tree.
    #[arg(long)]
    dump_pst: Option<PathBuf>,
    #[arg(long)]
    append_csv: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[arg(long)]
    shadow: bool,
    #[command(flatten)]
    router: RouterArgs,
    /// Comparison report JSON; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    append_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pattern {
    Array,
    Random,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    pattern: Pattern,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 4)]
    tiles: usize,
    #[arg(long, default_value_t = 6)]
    tile_luts: usize,
    #[arg(long, default_value_t = 3)]
    tile_ffs: usize,
    #[arg(long, default_value_t = 8)]
    tile_inputs: usize,
    #[arg(long, default_value_t = 0)]
    inter_tile_nets: usize,
    /// LUT size of array tiles.
    #[arg(long, default_value_t = 4)]
    lut_inputs: u8,
    #[arg(long, default_value_t = 32)]
    luts: usize,
    #[arg(long, default_value_t = 16)]
    ffs: usize,
    #[arg(long, default_value_t = 12)]
    primary_inputs: usize,
    #[arg(long, default_value_t = 2)]
    lut_inputs_min: u8,
    #[arg(long, default_value_t = 4)]
    lut_inputs_max: u8,
    #[arg(long, default_value_t = 4)]
    max_fanout: usize,
}

impl GenerateArgs {
    fn spec(&self) -> GeneratorSpec {
        match self.pattern {
            Pattern::Array => GeneratorSpec::Array(ArraySpec {
                tiles: self.tiles,
                tile_luts: self.tile_luts,
                tile_ffs: self.tile_ffs,
                lut_inputs: self.lut_inputs,
                tile_inputs: self.tile_inputs,
                inter_tile_nets: self.inter_tile_nets,
            }),
            Pattern::Random => GeneratorSpec::Random(RandomSpec {
                luts: self.luts,
                ffs: self.ffs,
                primary_inputs: self.primary_inputs,
                lut_inputs_min: self.lut_inputs_min,
                lut_inputs_max: self.lut_inputs_max,
                max_fanout: self.max_fanout,
            }),
        }
    }
}

#[derive(Args)]
struct CharacterizeArgs {
    #[arg(long)]
    arch: PathBuf,
    /// One or more netlists; each is reported separately.
    #[arg(long, required = true, num_args = 1..)]
    netlist: Vec<PathBuf>,
    /// Count signatures but route every check.
    #[arg(long)]
    count_only: bool,
    #[command(flatten)]
    router: RouterArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Writes `text` to `path`, or to stdout/stderr when no path is given. A
/// closed pipe (e.g. output piped into `head`) is not an error.
fn emit(path: Option<&PathBuf>, text: &str, to_stderr: bool) -> Result<(), CliError> {
    let result = match path {
        Some(p) => return write_file(p, text),
        None if to_stderr => writeln!(std::io::stderr(), "{text}"),
        None => writeln!(std::io::stdout(), "{text}"),
    };
    match result {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::Parse(format!("cannot write output: {e}")))
        }
        _ => Ok(()),
    }
}

fn audit_error(violations: &[String]) -> Result<(), CliError> {
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Other(format!("packing audit failed: {}", violations.join("; "))))
    }
}

fn pack(args: &PackArgs) -> Result<(), CliError> {
    let inputs = load_inputs(&args.inputs.arch, &args.inputs.netlist)?;
    let options = PackOptions {
        memo: args.memoize.into(),
        shadow: args.shadow,
        rng_seed: args.seed,
        router: args.router.params(),
    };
    let run = run_pack(&inputs, &options, args.dump_pst.is_some())?;
    log::info!(
        "{} clusters, {} router calls, {} skipped",
        run.report.summary.clusters,
        run.report.stats.router_calls,
        run.report.stats.router_calls_skipped
    );
    emit(args.out.as_ref(), &run.packing.to_json(), false)?;
    emit(args.stats.as_ref(), &run.report.to_json(), true)?;
    if let Some(path) = &args.dump_pst {
        write_file(path, run.packing.pst_dump.as_deref().unwrap_or_default())?;
    }
    if let Some(path) = &args.append_csv {
        append_csv(path, &[CsvRow::from_report("pack", &run.report)])?;
    }
    audit_error(&run.report.audit_violations)
}

fn compare(args: &CompareArgs) -> Result<(), CliError> {
    let inputs = load_inputs(&args.inputs.arch, &args.inputs.netlist)?;
    let options = PackOptions { shadow: args.shadow, router: args.router.params(), ..PackOptions::default() };
    let CompareRun { report, base, memo } = run_compare(&inputs, &options)?;
    emit(args.out.as_ref(), &report.to_json(), false)?;
    if let Some(path) = &args.append_csv {
        append_csv(path, &[CsvRow::from_report("compare", &base), CsvRow::from_report("compare", &memo)])?;
    }
    audit_error(&report.audit_violations)?;
    if !report.identical {
        return Err(CliError::Mismatch(format!("{} on {}", report.netlist, report.architecture)));
    }
    if report.shadow_mismatches > 0 {
        return Err(CliError::Mismatch(format!("{} shadow mismatches", report.shadow_mismatches)));
    }
    Ok(())
}

fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let netlist = run_generate(&args.spec(), args.seed)?;
    log::info!("generated {} atoms, {} nets", netlist.atoms.len(), netlist.nets.len());
    write_file(&args.out, &netlist.to_json())
}

fn characterize(args: &CharacterizeArgs) -> Result<(), CliError> {
    let options = PackOptions { router: args.router.params(), ..PackOptions::default() };
    let report = run_characterize(&args.arch, &args.netlist, args.count_only, &options)?;
    emit(args.out.as_ref(), &report.to_json(), false)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DEJAVU_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Pack(a) => pack(a),
        Command::Compare(a) => compare(a),
        Command::Generate(a) => generate(a),
        Command::Characterize(a) => characterize(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
