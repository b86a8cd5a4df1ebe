//! Subcommand logic for the `dejavu` binary: loading inputs, running the
//! packer in each memo mode, and building the JSON/CSV telemetry.
//!
//! Every report keeps wall-clock measurements in a separate `timings`
//! object, so two runs on the same inputs serialize identically once that
//! object is removed.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dejavu_core::arch::{parse_architecture, ArchitectureModel};
use dejavu_core::netlist::{generate_netlist, parse_netlist, GeneratorSpec, Netlist};
use dejavu_core::packer::{audit_packing, pack_with_dump, MemoMode, PackError, PackOptions, Packing, PackingStats};

pub const TOOL_VERSION: &str = concat!("dejavu ", env!("CARGO_PKG_VERSION"));

/// Failure of a subcommand, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed input, or an unwritable output.
    #[error("{0}")]
    Parse(String),
    /// Well-formed input that violates a model rule.
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Unpackable(String),
    #[error("memoized and baseline packings differ: {0}")]
    Mismatch(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Unpackable(_) => 4,
            CliError::Mismatch(_) => 5,
            CliError::Other(_) => 1,
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Parse(format!("{}: {e}", path.display()))
    }
}

impl From<PackError> for CliError {
    fn from(e: PackError) -> Self {
        CliError::Unpackable(e.to_string())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Content hashes of the two input files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digests {
    pub architecture: String,
    pub netlist: String,
}

pub struct Inputs {
    pub arch: ArchitectureModel,
    pub netlist: Netlist,
    pub arch_name: String,
    pub netlist_name: String,
    pub digests: Digests,
    pub load_time: f64,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_architecture_file(path: &Path) -> Result<(ArchitectureModel, String), CliError> {
    let text = read(path)?;
    let arch = parse_architecture(&text).map_err(|e| {
        let msg = format!("{}: {e}", path.display());
        if e.is_parse() {
            CliError::Parse(msg)
        } else {
            CliError::Validation(msg)
        }
    })?;
    Ok((arch, sha256_hex(text.as_bytes())))
}

pub fn load_netlist_file(path: &Path) -> Result<(Netlist, String), CliError> {
    let text = read(path)?;
    let netlist = parse_netlist(&text).map_err(|e| {
        let msg = format!("{}: {e}", path.display());
        if e.is_parse() {
            CliError::Parse(msg)
        } else {
            CliError::Validation(msg)
        }
    })?;
    Ok((netlist, sha256_hex(text.as_bytes())))
}

pub fn load_inputs(arch: &Path, netlist: &Path) -> Result<Inputs, CliError> {
    let t = Instant::now();
    let (arch_model, arch_digest) = load_architecture_file(arch)?;
    let (netlist_model, netlist_digest) = load_netlist_file(netlist)?;
    Ok(Inputs {
        arch: arch_model,
        netlist: netlist_model,
        arch_name: stem(arch),
        netlist_name: stem(netlist),
        digests: Digests { architecture: arch_digest, netlist: netlist_digest },
        load_time: t.elapsed().as_secs_f64(),
    })
}

/// Ratios derived from the raw counters; all lie in [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    /// Speculative successes over finalized clusters.
    pub speculative_success_rate: f64,
    /// Repeated finalized signatures over finalized signatures.
    pub repeated_signature_ratio: f64,
    /// Skipped router calls over all legality checks that needed a verdict.
    pub router_call_reduction: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Ratios {
    pub fn from_stats(stats: &PackingStats) -> Self {
        Ratios {
            speculative_success_rate: ratio(
                stats.speculative_successes,
                stats.speculative_successes + stats.speculative_failures,
            ),
            repeated_signature_ratio: stats.pst.repeated_ratio(),
            router_call_reduction: ratio(stats.router_calls_skipped, stats.router_calls + stats.router_calls_skipped),
        }
    }

    fn in_unit_range(&self) -> bool {
        [self.speculative_success_rate, self.repeated_signature_ratio, self.router_call_reduction]
            .iter()
            .all(|r| (0.0..=1.0).contains(r))
    }
}

/// Size of the signature tree at the end of packing. Nodes are never
/// deleted, so this is also its peak.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PstSize {
    pub lcn_count: u64,
    pub ecn_count: u64,
    pub estimated_bytes: u64,
}

/// Wall-clock seconds per phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub load: f64,
    pub packing: f64,
    /// Part of `packing` spent in signature-tree operations.
    pub pst: f64,
    /// Part of `packing` spent building signature keys.
    pub signature: f64,
    /// Part of `packing` spent routing.
    pub router: f64,
    /// Part of `router` spent on checks that came back illegal.
    pub router_failed: f64,
    pub audit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub atoms: usize,
    pub molecules: usize,
    pub clusters: usize,
}

/// Telemetry of one packing run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    pub architecture: String,
    pub netlist: String,
    pub digests: Digests,
    pub options: PackOptions,
    pub summary: Summary,
    pub stats: PackingStats,
    pub ratios: Ratios,
    pub pst_size: PstSize,
    /// Post-hoc structural check results; empty when the packing is sound.
    pub audit_violations: Vec<String>,
    pub timings: PhaseTimings,
}

impl RunReport {
    /// Ratios recompute exactly from the counters and lie in [0, 1].
    pub fn is_consistent(&self) -> bool {
        Ratios::from_stats(&self.stats) == self.ratios && self.ratios.in_unit_range()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// A packing together with its report.
pub struct PackRun {
    pub packing: Packing,
    pub report: RunReport,
}

/// Packs, audits and builds the report. Audit violations are reported, not
/// raised; callers decide whether they are fatal.
pub fn run_pack(inputs: &Inputs, options: &PackOptions, dump_pst: bool) -> Result<PackRun, CliError> {
    let packing = pack_with_dump(&inputs.netlist, &inputs.arch, options, dump_pst)?;
    let t = Instant::now();
    let audit_violations = audit_packing(&packing, &inputs.netlist, &inputs.arch, &options.router);
    let audit = t.elapsed().as_secs_f64();
    let stats = packing.stats.clone();
    let timings = PhaseTimings {
        load: inputs.load_time,
        packing: stats.timings.wall_time_packing,
        pst: stats.timings.pst_time,
        signature: stats.timings.signature_time,
        router: stats.timings.router_time,
        router_failed: stats.timings.router_time_failed,
        audit,
    };
    let report = RunReport {
        tool_version: TOOL_VERSION.to_string(),
        architecture: inputs.arch_name.clone(),
        netlist: inputs.netlist_name.clone(),
        digests: inputs.digests.clone(),
        options: *options,
        summary: Summary {
            atoms: inputs.netlist.atoms.len(),
            molecules: packing.molecules.len(),
            clusters: packing.clusters.len(),
        },
        ratios: Ratios::from_stats(&stats),
        pst_size: PstSize {
            lcn_count: stats.pst.lcn_count,
            ecn_count: stats.pst.ecn_count,
            estimated_bytes: stats.pst_bytes,
        },
        stats,
        audit_violations,
        timings,
    };
    if !report.is_consistent() {
        return Err(CliError::Other("report ratios do not match the counters".into()));
    }
    Ok(PackRun { packing, report })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CompareTimings {
    pub wall_base: f64,
    pub wall_memo: f64,
    /// Baseline packing time over memoized packing time.
    pub speedup_wall: f64,
}

/// Baseline versus memoized packing of the same inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub tool_version: String,
    pub architecture: String,
    pub netlist: String,
    pub digests: Digests,
    pub identical: bool,
    pub clusters: usize,
    pub router_calls_base: u64,
    pub router_calls_memo: u64,
    pub calls_skipped: u64,
    pub repeated_signature_ratio: f64,
    pub shadow_mismatches: u64,
    pub audit_violations: Vec<String>,
    pub timings: CompareTimings,
}

impl CompareReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// A comparison plus the reports of its two runs.
pub struct CompareRun {
    pub report: CompareReport,
    pub base: RunReport,
    pub memo: RunReport,
}

/// Runs the baseline and memoized packings one after the other and
/// compares their serialized outputs byte for byte.
pub fn run_compare(inputs: &Inputs, base_options: &PackOptions) -> Result<CompareRun, CliError> {
    let base = run_pack(inputs, &PackOptions { memo: MemoMode::Off, ..*base_options }, false)?;
    let memo = run_pack(inputs, &PackOptions { memo: MemoMode::On, ..*base_options }, false)?;
    let identical = base.packing.to_json() == memo.packing.to_json();
    let (b, m) = (&base.report, &memo.report);
    let mut audit_violations = b.audit_violations.clone();
    audit_violations.extend(m.audit_violations.iter().cloned());
    let report = CompareReport {
        tool_version: TOOL_VERSION.to_string(),
        architecture: inputs.arch_name.clone(),
        netlist: inputs.netlist_name.clone(),
        digests: inputs.digests.clone(),
        identical,
        clusters: m.summary.clusters,
        router_calls_base: b.stats.router_calls,
        router_calls_memo: m.stats.router_calls,
        calls_skipped: m.stats.router_calls_skipped,
        repeated_signature_ratio: m.ratios.repeated_signature_ratio,
        shadow_mismatches: m.stats.shadow_mismatches,
        audit_violations,
        timings: CompareTimings {
            wall_base: b.timings.packing,
            wall_memo: m.timings.packing,
            speedup_wall: if m.timings.packing > 0.0 { b.timings.packing / m.timings.packing } else { 0.0 },
        },
    };
    Ok(CompareRun { report, base: base.report, memo: memo.report })
}

/// Signature repetition and router-invocation profile of one netlist.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Characterization {
    pub netlist: String,
    pub netlist_digest: String,
    pub clusters: usize,
    pub finalized_signatures: u64,
    pub repeated_finalized: u64,
    pub repeated_signature_ratio: f64,
    pub router_calls: u64,
    pub router_calls_skipped: u64,
    pub speculative_successes: u64,
    pub speculative_failures: u64,
    /// Router calls per cluster -> number of clusters.
    pub router_calls_histogram: BTreeMap<u64, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacterizeReport {
    pub tool_version: String,
    pub architecture: String,
    pub architecture_digest: String,
    pub memo: MemoMode,
    pub benchmarks: Vec<Characterization>,
    /// Packing wall time per benchmark, in input order.
    pub timings: Vec<f64>,
}

impl CharacterizeReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Packs every netlist with signature counting on. With `count_only` the
/// tree never answers a check, so router counts match the baseline.
pub fn run_characterize(
    arch: &Path,
    netlists: &[PathBuf],
    count_only: bool,
    base_options: &PackOptions,
) -> Result<CharacterizeReport, CliError> {
    let (arch_model, arch_digest) = load_architecture_file(arch)?;
    let memo = if count_only { MemoMode::CountOnly } else { MemoMode::On };
    let options = PackOptions { memo, ..*base_options };
    let mut benchmarks = Vec::new();
    let mut timings = Vec::new();
    for path in netlists {
        let (netlist, digest) = load_netlist_file(path)?;
        let packing = pack_with_dump(&netlist, &arch_model, &options, false)?;
        let s = &packing.stats;
        let mut histogram = BTreeMap::new();
        for &calls in &s.router_calls_per_cluster {
            *histogram.entry(calls).or_insert(0) += 1;
        }
        benchmarks.push(Characterization {
            netlist: stem(path),
            netlist_digest: digest,
            clusters: packing.clusters.len(),
            finalized_signatures: s.pst.finalized_signatures,
            repeated_finalized: s.pst.repeated_finalized,
            repeated_signature_ratio: s.pst.repeated_ratio(),
            router_calls: s.router_calls,
            router_calls_skipped: s.router_calls_skipped,
            speculative_successes: s.speculative_successes,
            speculative_failures: s.speculative_failures,
            router_calls_histogram: histogram,
        });
        timings.push(s.timings.wall_time_packing);
    }
    Ok(CharacterizeReport {
        tool_version: TOOL_VERSION.to_string(),
        architecture: stem(arch),
        architecture_digest: arch_digest,
        memo,
        benchmarks,
        timings,
    })
}

pub fn run_generate(spec: &GeneratorSpec, seed: u64) -> Result<Netlist, CliError> {
    generate_netlist(spec, seed).map_err(|e| CliError::Validation(e.to_string()))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut text = contents.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// One CSV row per run, for sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub command: String,
    pub architecture: String,
    pub netlist: String,
    pub memo: String,
    pub clusters: usize,
    pub legality_checks: u64,
    pub router_calls: u64,
    pub router_calls_skipped: u64,
    pub speculative_successes: u64,
    pub speculative_failures: u64,
    pub finalized_signatures: u64,
    pub repeated_finalized: u64,
    pub repeated_signature_ratio: f64,
    pub pst_bytes: u64,
    pub wall_time_packing: f64,
    pub pst_time: f64,
    pub signature_time: f64,
    pub router_time: f64,
}

impl CsvRow {
    pub fn from_report(command: &str, r: &RunReport) -> Self {
        let memo = serde_json::to_value(r.options.memo).expect("mode serializes");
        CsvRow {
            command: command.to_string(),
            architecture: r.architecture.clone(),
            netlist: r.netlist.clone(),
            memo: memo.as_str().unwrap_or_default().to_string(),
            clusters: r.summary.clusters,
            legality_checks: r.stats.legality_checks,
            router_calls: r.stats.router_calls,
            router_calls_skipped: r.stats.router_calls_skipped,
            speculative_successes: r.stats.speculative_successes,
            speculative_failures: r.stats.speculative_failures,
            finalized_signatures: r.stats.pst.finalized_signatures,
            repeated_finalized: r.stats.pst.repeated_finalized,
            repeated_signature_ratio: r.ratios.repeated_signature_ratio,
            pst_bytes: r.stats.pst_bytes,
            wall_time_packing: r.timings.packing,
            pst_time: r.timings.pst,
            signature_time: r.timings.signature,
            router_time: r.timings.router,
        }
    }
}

/// Appends `rows` to `path`, writing the header first if the file is new
/// or empty.
pub fn append_csv(path: &Path, rows: &[CsvRow]) -> Result<(), CliError> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for row in rows {
        w.serialize(row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
