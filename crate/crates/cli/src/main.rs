//! `ddl`: build, verify and compare Delsarte dual certificates.
//!
//! Exit codes: 0 success/feasible, 1 infeasible, 2 usage or input error,
//! 3 resource cap exceeded.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ddl_core::constructions::{
    build_g1, build_g_ell_with, build_lambda, first_lp_value, lift_first_lp, Certificate, HierarchyOptions,
};
use ddl_core::format::{read_table, table_hash, write_table, CertificateRecord};
use ddl_core::lp::verify_dual;
use ddl_core::oracle::{max_code_size, max_linear_code_size, OracleResult, DEFAULT_LINEAR_CAP};
use ddl_core::rates::{gv_rate, mrrw_rate, parse_grid};
use ddl_core::scalar::log2_abs_rational;
use ddl_core::{DenseCap, Error, Side, VerificationReport};
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::Serialize;

use output::{Csv, Sink};

/// Largest length at which `bound` also runs the unrestricted oracle.
const ORACLE_COMPARE_MAX: u32 = 8;

#[derive(Parser, Debug)]
#[command(name = "ddl", version, about = "Dual certificates for Delsarte's LP and its hierarchies")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Largest dense table dimension, for both exact and float mode.
    #[arg(long, global = true, env = "DDL_DENSE_CAP")]
    dense_cap: Option<u32>,

    /// Print wall-clock time to stderr.
    #[arg(long, global = true)]
    timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a certificate (or a rate curve) and verify it.
    Bound {
        #[command(subcommand)]
        kind: BoundKind,
    },
    /// Re-verify a certificate from its JSON sidecar and binary table.
    Verify(VerifyArgs),
    /// Exhaustive maximum code size.
    Oracle(OracleArgs),
}

#[derive(Subcommand, Debug)]
enum BoundKind {
    /// Level-1 certificate `2(d - |x|)Λ(x)²`.
    FirstLp(CertArgs),
    /// Level-ℓ certificate bounding `A(n,d)^ℓ`.
    Hierarchy(CertArgs),
    /// Linear-valued lift of the first-LP certificate, bounding `A_Lin(n,d)`.
    LinearValued(CertArgs),
    /// Rate curves over a grid of relative distances.
    Curve(CurveArgs),
}

#[derive(Args, Debug)]
struct CertArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    d: u32,
    #[arg(long, default_value_t = 1)]
    ell: u32,
    /// ε as an integer or `p/q` (default: 1, or 1/2 when d = 1; chosen
    /// automatically for the hierarchy).
    #[arg(long, value_parser = parse_rational)]
    eps: Option<BigRational>,
    /// Even exponent of the sign polynomial (hierarchy only).
    #[arg(long)]
    m: Option<u32>,
    /// Cap on the denominator of 2ε when it is chosen automatically.
    #[arg(long)]
    denominator_cap: Option<u64>,
    #[command(flatten)]
    mode: ModeArgs,
    /// Skip the comparison against the exhaustive oracle.
    #[arg(long)]
    no_oracle: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
#[group(multiple = false)]
struct ModeArgs {
    /// Verify in exact rational arithmetic (default).
    #[arg(long)]
    exact: bool,
    /// Verify in floating point.
    #[arg(long)]
    float: bool,
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Write the report here instead of stdout. For certificates the binary
    /// table goes next to it with extension `.ddlt`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct CurveArgs {
    /// `start:stop:step` over δ, inside (0, 1/2).
    #[arg(long, default_value = "0.05:0.45:0.05")]
    grid: String,
    /// Also report the finite-length first-LP rate at this n.
    #[arg(long)]
    n: Option<u32>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// JSON sidecar written by `bound`.
    sidecar: PathBuf,
    /// Binary table (default: the sidecar path with extension `.ddlt`).
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    d: u32,
    /// Restrict to linear codes.
    #[arg(long)]
    linear: bool,
    #[command(flatten)]
    out: OutArgs,
}

/// Parameter problems found after parsing; exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(Usage(msg.into()).into())
}

fn parse_rational(s: &str) -> Result<BigRational, String> {
    let q = BigRational::from_str(s.trim()).map_err(|_| format!("expected an integer or p/q, got {s:?}"))?;
    if !q.is_positive() {
        return Err(format!("ε must be positive, got {s}"));
    }
    Ok(q)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::DenseCap { .. } | Error::OracleCap { .. }) => 3,
        Some(Error::Construction(_) | Error::NotVerified(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = run(&cli);
    if cli.timing {
        eprintln!("elapsed: {:.3} s", start.elapsed().as_secs_f64());
    }
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return usage("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    if let Some(cap) = cli.dense_cap {
        DenseCap::uniform(cap).install();
    }
    match &cli.command {
        Command::Bound { kind } => match kind {
            BoundKind::FirstLp(a) => cmd_certificate(Kind::FirstLp, a),
            BoundKind::Hierarchy(a) => cmd_certificate(Kind::Hierarchy, a),
            BoundKind::LinearValued(a) => cmd_certificate(Kind::LinearValued, a),
            BoundKind::Curve(a) => cmd_curve(a),
        },
        Command::Verify(a) => cmd_verify(a),
        Command::Oracle(a) => cmd_oracle(a),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    FirstLp,
    Hierarchy,
    LinearValued,
}

/// What `bound` writes for a certificate. Field order is the JSON order.
#[derive(Serialize)]
struct BoundReport {
    certificate: CertificateRecord,
    report: VerificationReport,
    /// `log₂` of the verified value.
    #[serde(skip_serializing_if = "Option::is_none")]
    log2_value: Option<f64>,
    /// `value^{1/ℓ}`, the implied bound on the code size.
    #[serde(skip_serializing_if = "Option::is_none")]
    size_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleResult>,
}

fn default_eps(d: u32) -> BigRational {
    if d == 1 {
        BigRational::new(1.into(), 2.into())
    } else {
        BigRational::one()
    }
}

fn check_instance(n: u32, d: u32, ell: u32) -> anyhow::Result<()> {
    if d == 0 || d > n {
        return usage(format!("need 1 ≤ d ≤ n, got n = {n}, d = {d}"));
    }
    if ell == 0 {
        return usage("ℓ must be at least 1");
    }
    Ok(())
}

fn build(kind: Kind, a: &CertArgs) -> anyhow::Result<Certificate> {
    let eps = a.eps.clone().unwrap_or_else(|| default_eps(a.d));
    Ok(match kind {
        Kind::FirstLp => {
            if a.ell != 1 {
                return usage("first-lp is a level-1 certificate; use hierarchy for ℓ > 1");
            }
            build_g1(a.n, a.d, &eps)?
        }
        Kind::LinearValued => lift_first_lp(a.n, a.d, a.ell, &eps)?,
        Kind::Hierarchy => {
            let opts = HierarchyOptions {
                m: a.m,
                epsilon: a.eps.clone(),
                denominator_cap: a.denominator_cap,
            };
            build_g_ell_with(a.n, a.d, a.ell, &opts)?.certificate
        }
    })
}

fn cmd_certificate(kind: Kind, a: &CertArgs) -> anyhow::Result<u8> {
    check_instance(a.n, a.d, a.ell)?;
    if a.m.is_some() && kind != Kind::Hierarchy {
        return usage("--m only applies to hierarchy certificates");
    }
    // fail on the cap before building anything
    let mode = if a.mode.float { ddl_core::Mode::Float } else { ddl_core::Mode::Exact };
    DenseCap::current().check(a.n * a.ell, mode)?;

    let mut cert = build(kind, a)?;
    if a.mode.float {
        cert.g = cert.g.to_float();
    }
    let report = verify_dual(&cert.g, &cert.instance)?;
    let value = report.value.as_ref().filter(|_| report.feasible);
    let log2_value = value.map(|v| match v.as_exact() {
        Some(q) => log2_abs_rational(q),
        None => v.to_f64().log2(),
    });
    let oracle = if a.no_oracle || a.d >= a.n {
        None
    } else if kind == Kind::LinearValued {
        (a.n <= DEFAULT_LINEAR_CAP).then(|| max_linear_code_size(a.n, a.d)).transpose()?
    } else {
        (a.n <= ORACLE_COMPARE_MAX).then(|| max_code_size(a.n, a.d)).transpose()?
    };
    // the linear-valued program bounds A_Lin itself, not a power of it
    let root = if kind == Kind::LinearValued { 1 } else { a.ell };
    let out = BoundReport {
        certificate: CertificateRecord::of(&cert),
        size_bound: log2_value.map(|l| (l / root as f64).exp2()),
        log2_value,
        report,
        oracle,
    };
    if let Some(bound) = out.size_bound {
        let mut line = format!("value^(1/{root}) = {bound:.6}");
        if let Some(o) = &out.oracle {
            let name = if o.linear { "A_Lin" } else { "A" };
            line += &format!(", oracle {name}({},{}) = {}", o.n, o.d, o.size);
        }
        eprintln!("{line}");
    }

    let format = a.out.format.unwrap_or(Format::Json);
    let sink = Sink::new(a.out.out.as_deref());
    match format {
        Format::Json => sink.json(&out)?,
        Format::Csv => {
            let mut csv = Csv::new(&["construction", "n", "d", "ell", "feasible", "value", "log2_value", "size_bound", "oracle"]);
            let inst = out.certificate.instance;
            csv.row(&[
                serde_json::to_value(out.certificate.construction)?.as_str().unwrap_or_default().to_string(),
                inst.n.to_string(),
                inst.d.to_string(),
                inst.ell.to_string(),
                out.report.feasible.to_string(),
                out.report.value.as_ref().map(output::number).unwrap_or_default(),
                out.log2_value.map(output::float).unwrap_or_default(),
                out.size_bound.map(output::float).unwrap_or_default(),
                out.oracle.as_ref().map(|o| o.size.to_string()).unwrap_or_default(),
            ]);
            sink.text(&csv.finish())?;
        }
    }
    if let Some(path) = &a.out.out {
        let table_path = path.with_extension("ddlt");
        let mut file = std::io::BufWriter::new(
            std::fs::File::create(&table_path).with_context(|| format!("creating {}", table_path.display()))?,
        );
        write_table(&cert.g, &mut file)?;
        std::io::Write::flush(&mut file)?;
    }
    Ok(if out.report.feasible { 0 } else { 1 })
}

fn cmd_curve(a: &CurveArgs) -> anyhow::Result<u8> {
    let grid = parse_grid(&a.grid).map_err(|e| Usage(e.to_string()))?;
    if let Some(bad) = grid.iter().find(|d| !(**d > 0.0 && **d < 0.5)) {
        return usage(format!("δ must lie in (0, 1/2), grid contains {bad}"));
    }
    if a.n == Some(0) {
        return usage("--n must be positive");
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &delta in &grid {
        let finite = match a.n {
            Some(n) => {
                let d = ((delta * n as f64).round() as u32).clamp(1, n);
                let lambda = build_lambda(n, d, &default_eps(d))?;
                Some(log2_abs_rational(&first_lp_value(&lambda)) / n as f64)
            }
            None => None,
        };
        rows.push(CurvePoint {
            delta,
            gv_rate: gv_rate(delta),
            mrrw_rate: mrrw_rate(delta),
            finite_n_rate: finite,
        });
    }
    let sink = Sink::new(a.out.out.as_deref());
    match a.out.format.unwrap_or(Format::Csv) {
        Format::Json => sink.json(&CurveReport { n: a.n, points: rows })?,
        Format::Csv => {
            let mut csv = Csv::new(&["delta", "gv_rate", "mrrw_rate", "finite_n_rate"]);
            for r in &rows {
                csv.row(&[
                    output::float(r.delta),
                    output::float(r.gv_rate),
                    output::float(r.mrrw_rate),
                    r.finite_n_rate.map(output::float).unwrap_or_default(),
                ]);
            }
            sink.text(&csv.finish())?;
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct CurvePoint {
    delta: f64,
    gv_rate: f64,
    mrrw_rate: f64,
    finite_n_rate: Option<f64>,
}

#[derive(Serialize)]
struct CurveReport {
    n: Option<u32>,
    points: Vec<CurvePoint>,
}

#[derive(Serialize)]
struct VerifyReport {
    certificate: CertificateRecord,
    table_hash: String,
    hash_matches: bool,
    report: VerificationReport,
}

/// Accept either a `bound` report or a bare certificate record.
fn read_sidecar(path: &Path) -> anyhow::Result<CertificateRecord> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let json: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
    let record = json.get("certificate").cloned().unwrap_or(json);
    serde_json::from_value(record).map_err(|e| Usage(format!("{}: not a certificate sidecar: {e}", path.display())).into())
}

fn cmd_verify(a: &VerifyArgs) -> anyhow::Result<u8> {
    let record = read_sidecar(&a.sidecar)?;
    let table_path = a.table.clone().unwrap_or_else(|| a.sidecar.with_extension("ddlt"));
    let mut file = std::io::BufReader::new(
        std::fs::File::open(&table_path).with_context(|| format!("opening {}", table_path.display()))?,
    );
    let table = read_table(&mut file)?;
    let inst = record.instance;
    if table.dim() != inst.dim() {
        return Err(Error::InstanceMismatch(format!(
            "sidecar declares ℓ·n = {} but the table has {} coordinates",
            inst.dim(),
            table.dim()
        ))
        .into());
    }
    if table.side() != Side::Primal {
        bail!(Error::InstanceMismatch("certificate tables are primal-side".into()));
    }
    let report = verify_dual(&table, &inst)?;
    let hash = table_hash(&table);
    let out = VerifyReport {
        hash_matches: hash == record.table_hash,
        table_hash: hash,
        certificate: record,
        report,
    };
    if !out.hash_matches {
        eprintln!("warning: table hash differs from the sidecar");
    }
    let sink = Sink::new(a.out.as_deref());
    match a.format.unwrap_or(Format::Json) {
        Format::Json => sink.json(&out)?,
        Format::Csv => {
            let mut csv = Csv::new(&["n", "d", "ell", "variant", "feasible", "value", "violations", "hash_matches"]);
            csv.row(&[
                inst.n.to_string(),
                inst.d.to_string(),
                inst.ell.to_string(),
                inst.variant.to_string(),
                out.report.feasible.to_string(),
                out.report.value.as_ref().map(output::number).unwrap_or_default(),
                out.report.violations.len().to_string(),
                out.hash_matches.to_string(),
            ]);
            sink.text(&csv.finish())?;
        }
    }
    Ok(if out.report.feasible { 0 } else { 1 })
}

fn cmd_oracle(a: &OracleArgs) -> anyhow::Result<u8> {
    check_instance(a.n, a.d, 1)?;
    let result = if a.linear {
        max_linear_code_size(a.n, a.d)?
    } else {
        max_code_size(a.n, a.d)?
    };
    let sink = Sink::new(a.out.out.as_deref());
    match a.out.format.unwrap_or(Format::Json) {
        Format::Json => sink.json(&result)?,
        Format::Csv => {
            let mut csv = Csv::new(&["n", "d", "linear", "size"]);
            csv.row(&[a.n.to_string(), a.d.to_string(), a.linear.to_string(), result.size.to_string()]);
            sink.text(&csv.finish())?;
        }
    }
    Ok(0)
}
