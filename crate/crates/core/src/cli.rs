//! Command-line front end.
//!
//! Exit codes: `0` success, `1` a verification failed or a computation could
//! not be certified, `2` the invocation itself was invalid.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::complexity::{build_table, profile};
use crate::ensembles::{
    enumerate_with, load_snapshot, save_snapshot, Builtin, EnsembleSnapshot, EnsembleSpec,
};
use crate::error::{Error, Result};
use crate::fixedpoint::{
    beta_prefix, certify, reconstruct_t, semidecide_above, solve_temperature, witness_search,
    MonotoneQuantity, Observable, Oracle, OracleKind, QuantityHandle, SemiDecision,
};
use crate::precision::{
    bits_prefix_rational, parse_any_rational, DyadicRational, Enclosure, Temperature,
};
use crate::relations::{suite, Verdict};
use crate::thermo::{
    default_grid, divergence_probe, evaluations_csv, evaluations_json, parse_grid, sweep,
    DEFAULT_PROBE_CAP,
};

/// Default working precision in bits.
pub const DEFAULT_PRECISION: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "thermoait",
    version,
    about = "Certified thermodynamic quantities of prefix-free program ensembles"
)]
pub struct RunConfig {
    /// Working precision in bits.
    #[arg(long, global = true, env = "THERMOAIT_PRECISION", default_value_t = DEFAULT_PRECISION)]
    pub precision: u32,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    pub format: OutFormat,
    /// Seed for randomized runs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

/// Where programs come from: a builtin machine or a snapshot file.
#[derive(Debug, Args)]
pub struct Source {
    /// sdm4, literal, gamma_literal or geometric.
    #[arg(long, conflicts_with = "snapshot")]
    pub machine: Option<String>,
    /// Snapshot file written by `enumerate --save`.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Step budget per program run.
    #[arg(long, default_value_t = 10_000)]
    pub budget: u64,
    /// Longest program length enumerated.
    #[arg(long, default_value_t = 16)]
    pub maxlen: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate a machine's domain; print the listing or save it as a snapshot.
    Enumerate {
        #[arg(long)]
        machine: String,
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        #[arg(long)]
        maxlen: usize,
        /// List programs individually only up to this length.
        #[arg(long)]
        list_length: Option<usize>,
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Z, W, Y, F, E, S, C at one temperature or over a grid.
    Thermo {
        #[command(flatten)]
        source: Source,
        #[arg(long = "T", conflicts_with = "grid")]
        t: Option<String>,
        /// `lo:hi:step`.
        #[arg(long)]
        grid: Option<String>,
        /// Partial sums over the first `k` programs.
        #[arg(long, conflicts_with = "limit")]
        k: Option<u64>,
        /// Certified limit (the default).
        #[arg(long)]
        limit: bool,
    },
    /// Run the relation checks; exits 1 if any check fails.
    Verify {
        #[command(flatten)]
        source: Source,
        /// `lo:hi:step`, default `1/16:15/16:1/16`.
        #[arg(long)]
        grid: Option<String>,
        /// Also exit 1 when a check stays unresolved.
        #[arg(long)]
        strict: bool,
    },
    /// Find the temperature at which a quantity takes a value.
    Solve {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        quantity: String,
        #[arg(long)]
        target: String,
        #[arg(long)]
        tol: String,
    },
    /// Search for the index after which partial sums stay within the length bound.
    Witness {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "Z")]
        quantity: String,
        #[arg(long = "T")]
        t: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "closed-form")]
        oracle: String,
    },
    /// Try to certify `T < r` from an upper approximation stream.
    Semidecide {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "Z")]
        quantity: String,
        #[arg(long = "T")]
        t: String,
        #[arg(long, required_unless_present = "random")]
        r: Option<String>,
        /// Draw this many `r` uniformly from dyadics in `(0, 1)` using `--seed`.
        #[arg(long, conflicts_with = "r")]
        random: Option<usize>,
        #[arg(long, default_value = "closed-form")]
        oracle: String,
        #[arg(long, default_value_t = crate::fixedpoint::DEFAULT_SEMIDECISION_BUDGET)]
        stages: usize,
    },
    /// Recover `T` to within `2^(a_lower + shift - n)` from the leading bits of beta.
    Reconstruct {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "Z")]
        quantity: String,
        #[arg(long = "T")]
        t: String,
        #[arg(long)]
        u: String,
        #[arg(long)]
        n: u32,
        /// Claimed increment exponent; rejected if smaller than the certified one.
        #[arg(long)]
        b: Option<u32>,
        #[arg(long = "oracle-A", default_value = "closed-form")]
        oracle_a: String,
        #[arg(long = "oracle-B", default_value = "closed-form")]
        oracle_b: String,
    },
    /// Shortest program for each output.
    Complexity {
        #[command(flatten)]
        source: Source,
    },
    /// `H(alpha_n)` and `H(alpha_n)/n` for the leading bits of a number.
    Profile {
        #[command(flatten)]
        source: Source,
        /// A dyadic, or `Q@T` for a quantity of the same ensemble at `T`.
        #[arg(long)]
        alpha: String,
        #[arg(long = "N")]
        n: usize,
    },
    /// First length at which partial sums of Z exceed a threshold.
    Diverge {
        #[arg(long, default_value = "gamma_literal")]
        machine: String,
        /// Any positive rational, e.g. `1.1`.
        #[arg(long = "T")]
        t: String,
        #[arg(long, default_value = "10")]
        threshold: String,
        #[arg(long, default_value_t = DEFAULT_PROBE_CAP)]
        cap: usize,
    },
}

/// Outcome of a subcommand that ran to completion.
enum Status {
    Ok,
    Failed,
}

/// Exit code for an error: `2` when the arguments are at fault.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_)
        | Error::Domain(_)
        | Error::InvalidSpec(_)
        | Error::Precondition(_)
        | Error::KOutOfRange { .. }
        | Error::Io { .. }
        | Error::OutOfRange(_) => 2,
        _ => 1,
    }
}

/// Parse `std::env::args_os()`-style arguments and run, printing to stdout/stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    if config.precision < 8 {
        let _ = writeln!(err, "error: --precision must be at least 8");
        return 2;
    }
    match execute(&config, out) {
        Ok(Status::Ok) => 0,
        Ok(Status::Failed) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io {
        path: "<stdout>".into(),
        source: e,
    }
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    writeln!(out, "{text}").map_err(io_err)
}

fn emit_csv<T: Serialize>(out: &mut dyn Write, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::Domain(format!("csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Domain(format!("csv: {e}")))?;
    out.write_all(&bytes).map_err(io_err)
}

fn dyadic_temperature(s: &str) -> Result<Temperature> {
    let d: DyadicRational = s.parse()?;
    Temperature::from_dyadic(&d)
}

fn load(source: &Source) -> Result<EnsembleSnapshot> {
    match (&source.machine, &source.snapshot) {
        (_, Some(path)) => load_snapshot(path),
        (Some(m), None) => {
            let spec: EnsembleSpec = m.parse()?;
            enumerate_with(&spec, source.budget, source.maxlen, None)
        }
        (None, None) => Err(Error::InvalidSpec(
            "one of --machine or --snapshot is required".into(),
        )),
    }
}

/// Like [`load`] but falling back to the geometric ensemble.
fn load_or_geometric(source: &Source) -> Result<EnsembleSnapshot> {
    if source.machine.is_none() && source.snapshot.is_none() {
        return enumerate_with(
            &EnsembleSpec::Builtin(Builtin::Geometric),
            source.budget,
            source.maxlen,
            None,
        );
    }
    load(source)
}

fn handle(source: &Source, quantity: &str, t: &str, bits: u32) -> Result<QuantityHandle> {
    let (observable, _) = Observable::from_quantity_name(quantity)?;
    let snapshot = Arc::new(load_or_geometric(source)?);
    let t = dyadic_temperature(t)?;
    certify(MonotoneQuantity::new(snapshot, observable), &t, bits)
}

fn execute(config: &RunConfig, out: &mut dyn Write) -> Result<Status> {
    let bits = config.precision;
    let format = config.format;
    match &config.command {
        Command::Enumerate {
            machine,
            budget,
            maxlen,
            list_length,
            save,
        } => {
            let spec: EnsembleSpec = machine.parse()?;
            let snap = enumerate_with(&spec, *budget, *maxlen, *list_length)?;
            if let Some(path) = save {
                save_snapshot(&snap, path)?;
            }
            match format {
                OutFormat::Csv => emit_csv(out, snap.programs())?,
                OutFormat::Json => emit_json(
                    out,
                    &json!({
                        "ensemble": snap.ensemble_id(),
                        "step_budget": snap.step_budget(),
                        "max_length": snap.max_length(),
                        "listed_through": snap.listed_horizon(),
                        "listed_programs": snap.programs().len(),
                        "domain_size": snap.domain_size().to_string(),
                        "kraft_sum": snap.census().kraft_sum(snap.max_length()),
                        "listed_kraft_sum": snap.program_kraft_sum(),
                        "saved_to": save.as_ref().map(|p| p.display().to_string()),
                    }),
                )?,
            }
            Ok(Status::Ok)
        }
        Command::Thermo {
            source,
            t,
            grid,
            k,
            limit: _,
        } => {
            let grid = match (t, grid) {
                (Some(t), None) => vec![dyadic_temperature(t)?],
                (None, Some(g)) => parse_grid(g)?,
                _ => {
                    return Err(Error::InvalidSpec(
                        "one of --T or --grid is required".into(),
                    ))
                }
            };
            let snap = load(source)?;
            let evals = sweep(&snap, &grid, *k, bits, k.is_some())?;
            match format {
                OutFormat::Csv => write!(out, "{}", evaluations_csv(&evals, bits)?),
                OutFormat::Json => writeln!(out, "{}", evaluations_json(&evals)),
            }
            .map_err(io_err)?;
            Ok(Status::Ok)
        }
        Command::Verify {
            source,
            grid,
            strict,
        } => {
            let grid = match grid {
                Some(g) => parse_grid(g)?,
                None => default_grid(),
            };
            let snap = load(source)?;
            let reports = suite(&snap, &grid, bits)?;
            let count = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
            let (pass, fail, unresolved) = (
                count(Verdict::Pass),
                count(Verdict::Fail),
                count(Verdict::Unresolved),
            );
            match format {
                OutFormat::Json => emit_json(
                    out,
                    &json!({
                        "ensemble": snap.ensemble_id(),
                        "pass": pass,
                        "fail": fail,
                        "unresolved": unresolved,
                        "reports": reports,
                    }),
                )?,
                OutFormat::Csv => {
                    #[derive(Serialize)]
                    struct Row<'a> {
                        relation: &'a str,
                        #[serde(rename = "T")]
                        t: String,
                        k: String,
                        verdict: String,
                        residual_lo: String,
                        residual_hi: String,
                        detail: &'a str,
                    }
                    let rows: Vec<Row> = reports
                        .iter()
                        .map(|r| Row {
                            relation: r.relation.name(),
                            t: r.temperature
                                .as_ref()
                                .map(|t| t.to_string())
                                .unwrap_or_default(),
                            k: r.horizon.label(),
                            verdict: r.verdict.to_string(),
                            residual_lo: r.residual.lo().to_exact_string(),
                            residual_hi: r.residual.hi().to_exact_string(),
                            detail: &r.detail,
                        })
                        .collect();
                    emit_csv(out, &rows)?
                }
            }
            let failed = fail > 0 || (*strict && unresolved > 0);
            Ok(if failed { Status::Failed } else { Status::Ok })
        }
        Command::Solve {
            source,
            quantity,
            target,
            tol,
        } => {
            let (observable, negated) = Observable::from_quantity_name(quantity)?;
            let mut value = parse_any_rational(target)?;
            if negated {
                value = -value;
            }
            let tol: DyadicRational = tol.parse()?;
            let snap = Arc::new(load_or_geometric(source)?);
            let q = MonotoneQuantity::new(snap, observable);
            let target_enc = Enclosure::from_rational(&value, bits + 16);
            let t = solve_temperature(&q, &target_enc, &tol, bits)?;
            let row = json!({
                "ensemble": q.snapshot().ensemble_id(),
                "quantity": quantity,
                "target": target,
                "T": t,
            });
            match format {
                OutFormat::Json => emit_json(out, &row)?,
                OutFormat::Csv => writeln!(
                    out,
                    "quantity,target,T_lo,T_hi\n{quantity},{target},{},{}",
                    t.lo(),
                    t.hi()
                )
                .map_err(io_err)?,
            }
            Ok(Status::Ok)
        }
        Command::Witness {
            source,
            quantity,
            t,
            n,
            oracle,
        } => {
            let h = handle(source, quantity, t, bits)?;
            let oracle: Oracle = oracle.parse()?;
            let upper = oracle.stream(&h, OracleKind::Upper, bits)?;
            let t_bits = bits_prefix_rational(h.temperature().value(), *n);
            let report = witness_search(&h, &t_bits, &upper, bits)?;
            match format {
                OutFormat::Json => emit_json(
                    out,
                    &json!({ "certificate": h.certificate(), "report": report }),
                )?,
                OutFormat::Csv => emit_csv(out, &[report])?,
            }
            Ok(Status::Ok)
        }
        Command::Semidecide {
            source,
            quantity,
            t,
            r,
            random,
            oracle,
            stages,
        } => {
            let h = handle(source, quantity, t, bits)?;
            let oracle: Oracle = oracle.parse()?;
            let upper = oracle.stream(&h, OracleKind::Upper, bits)?;
            let rs: Vec<DyadicRational> = match (r, random) {
                (Some(r), _) => vec![r.parse()?],
                (None, Some(count)) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                    (0..*count)
                        .map(|_| DyadicRational::new(rng.gen_range(1..1u64 << 20).into(), -20))
                        .collect()
                }
                (None, None) => unreachable!("clap requires --r or --random"),
            };
            #[derive(Serialize)]
            struct Row {
                r: DyadicRational,
                #[serde(flatten)]
                answer: SemiDecision,
            }
            let rows: Vec<Row> = rs
                .into_iter()
                .map(|r| {
                    let answer = semidecide_above(&h, &r, &upper, *stages, bits)?;
                    Ok(Row { r, answer })
                })
                .collect::<Result<_>>()?;
            // a yes for r <= T would contradict the certificate
            let unsound = rows.iter().any(|row| {
                matches!(row.answer, SemiDecision::Yes { .. })
                    && row.r.to_rational() <= *h.temperature().value()
            });
            match format {
                OutFormat::Json => emit_json(
                    out,
                    &json!({ "T": h.temperature(), "seed": config.seed, "answers": rows }),
                )?,
                OutFormat::Csv => {
                    writeln!(out, "r,answer,m,k").map_err(io_err)?;
                    for row in &rows {
                        match &row.answer {
                            SemiDecision::Yes { m, k } => writeln!(out, "{},yes,{m},{k}", row.r),
                            SemiDecision::Unknown { .. } => writeln!(out, "{},unknown,,", row.r),
                        }
                        .map_err(io_err)?;
                    }
                }
            }
            Ok(if unsound { Status::Failed } else { Status::Ok })
        }
        Command::Reconstruct {
            source,
            quantity,
            t,
            u,
            n,
            b,
            oracle_a,
            oracle_b,
        } => {
            let h = handle(source, quantity, t, bits)?;
            if let Some(b) = b {
                if *b < h.certificate().b {
                    return Err(Error::Precondition(format!(
                        "--b {b} is below the certified increment exponent {}",
                        h.certificate().b
                    )));
                }
            }
            let u = dyadic_temperature(u)?;
            let a_stream = oracle_a
                .parse::<Oracle>()?
                .stream(&h, OracleKind::Temperature, bits)?;
            let b_stream = oracle_b
                .parse::<Oracle>()?
                .stream(&h, OracleKind::Lower, bits)?;
            let prefix = beta_prefix(&h, &u, *n, bits)?;
            let report = reconstruct_t(&h, &u, *n, &prefix, &a_stream, &b_stream, bits)?;
            match format {
                OutFormat::Json => emit_json(
                    out,
                    &json!({
                        "certificate": h.certificate(),
                        "beta_prefix": prefix,
                        "report": report,
                    }),
                )?,
                OutFormat::Csv => emit_csv(out, &[report])?,
            }
            Ok(Status::Ok)
        }
        Command::Complexity { source } => {
            let table = build_table(&load(source)?);
            match format {
                OutFormat::Json => emit_json(out, &table)?,
                OutFormat::Csv => write!(out, "{}", table.to_csv()).map_err(io_err)?,
            }
            Ok(Status::Ok)
        }
        Command::Profile { source, alpha, n } => {
            let snap = load(source)?;
            let alpha_enc = match alpha.split_once('@') {
                Some((q, t)) => {
                    let t = dyadic_temperature(t)?;
                    let ev = crate::thermo::eval_limit(&snap, &t, bits)?;
                    ev.get(q)
                        .cloned()
                        .ok_or_else(|| Error::Domain(format!("unknown quantity `{q}`")))?
                }
                None => Enclosure::point(alpha.parse()?),
            };
            let table = build_table(&snap);
            let p = profile(&alpha_enc, *n, &table);
            match format {
                OutFormat::Json => emit_json(
                    out,
                    &json!({
                        "ensemble": table.ensemble_id,
                        "alpha": alpha_enc,
                        "table": table.exactness,
                        "profile": p,
                    }),
                )?,
                OutFormat::Csv => write!(out, "{}", p.to_csv()).map_err(io_err)?,
            }
            Ok(Status::Ok)
        }
        Command::Diverge {
            machine,
            t,
            threshold,
            cap,
        } => {
            let spec: EnsembleSpec = machine.parse()?;
            let EnsembleSpec::Builtin(b) = spec else {
                return Err(Error::InvalidSpec("diverge needs a builtin machine".into()));
            };
            let census = crate::ensembles::Census::from_builtin(b, 0);
            let t = Temperature::parse_rational(t)?;
            let threshold: BigRational = parse_any_rational(threshold)?;
            let outcome = divergence_probe(&census, &t, &threshold, *cap, bits)?;
            let row = json!({ "ensemble": b.id(), "T": t, "outcome": outcome });
            match format {
                OutFormat::Json => emit_json(out, &row)?,
                OutFormat::Csv => {
                    let value = serde_json::to_value(&outcome).expect("outcome serializes");
                    writeln!(
                        out,
                        "T,outcome,length\n{t},{},{}",
                        value["outcome"].as_str().unwrap_or_default(),
                        value
                            .get("length")
                            .or_else(|| value.get("cap"))
                            .map(|v| v.to_string())
                            .unwrap_or_default()
                    )
                    .map_err(io_err)?
                }
            }
            Ok(Status::Ok)
        }
    }
}
