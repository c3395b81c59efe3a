mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use abzeta::catalog::{self, FamilySpec, KINDS};
use abzeta::oracle::{self, CoeffTable, Mode, OracleConfig, Shift, SubgroupWitness};
use abzeta::series::{self, compare_counts, Comparison, GlobalCoeffs};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use config::{Format, RunConfig};

#[derive(Parser)]
#[command(name = "abzeta", version, about = "Subgroup zeta functions of 3-dimensional almost Bieberbach groups")]
struct Cli {
    /// Key-value configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Oracle work limit per (family, p, m).
    #[arg(long, global = true)]
    work_limit: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Table of families with holonomy, k-shape, abscissa and functional equation.
    List {
        #[arg(long)]
        family: Option<String>,
    },
    /// Compare oracle counts with the closed-form local factors.
    Verify {
        /// Family name or prefix (`p6`), or `name:param` for one group.
        #[arg(long)]
        family: Option<String>,
        /// Comma-separated primes.
        #[arg(long)]
        primes: Option<String>,
        /// Exponent budget used for every prime.
        #[arg(long)]
        m: Option<usize>,
        /// Per-prime budgets, `p:m,...`.
        #[arg(long, conflicts_with = "m")]
        budgets: Option<String>,
        #[arg(long)]
        mode: Option<String>,
        /// Check the local factors as printed instead of the confirmed ones.
        #[arg(long)]
        printed: bool,
    },
    /// Check the local functional equations at good primes.
    Funceq {
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        p_max: Option<u64>,
        /// Use the printed local factors and functional equations.
        #[arg(long)]
        printed: bool,
    },
    /// Local (`--p`, `--m`) or global (`--n`) coefficient tables.
    Coeffs {
        /// `name` or `name:param`, e.g. `N:0`, `p6H:2`, `G6`.
        family: String,
        #[arg(long, conflicts_with_all = ["p", "m"])]
        n: Option<usize>,
        #[arg(long, requires = "m")]
        p: Option<u64>,
        #[arg(long, requires = "p")]
        m: Option<usize>,
        /// `closed`, `fast`, `full` or `measure` (local tables only).
        #[arg(long, default_value = "closed")]
        source: String,
        /// Expand the printed global formula instead of the Euler product of confirmed factors.
        #[arg(long, requires = "n")]
        printed: bool,
        /// Full zeta function `ζ_G` (prime holonomy only).
        #[arg(long, requires = "n", conflicts_with = "printed")]
        full: bool,
        /// Two-column `N  Σ_{n≤N} a_n` dump.
        #[arg(long, requires = "n")]
        partial_sums: bool,
        /// Append a growth-exponent estimate.
        #[arg(long, requires = "n")]
        growth: bool,
    },
    /// Catalog records as JSON (or a readable listing with --format text).
    DumpCatalog {
        #[arg(long)]
        family: Option<String>,
        /// Only the printed-versus-confirmed discrepancies.
        #[arg(long)]
        errata: bool,
    },
    /// Coset-representative invariance audit, or a witness dump with --witnesses.
    Audit {
        #[arg(long)]
        family: Option<String>,
        #[arg(long, default_value = "3,7")]
        primes: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Perturb outside the lattice; violations are then expected.
        #[arg(long)]
        broken: bool,
        /// Dump the counted subgroups of index dividing p^M as CSV instead.
        #[arg(long)]
        witnesses: Option<usize>,
    },
}

/// Outcome of a subcommand, mapped to the process exit code.
enum Status {
    Ok,
    Mismatch,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Mismatch) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<abzeta::Error>() {
                Some(abzeta::Error::Budget { .. }) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: Cli) -> Result<Status> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = Some(j);
    }
    if let Some(f) = cli.format {
        cfg.format = Some(f);
    }
    if let Some(o) = cli.output {
        cfg.output = Some(o);
    }
    if let Some(w) = cli.work_limit {
        cfg.work_limit = w;
    }
    cfg.validate()?;
    if let Some(j) = cfg.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().ok();
    }
    let mut out: Box<dyn Write> = match &cfg.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let status = match cli.cmd {
        Cmd::List { family } => cmd_list(&cfg, family.as_deref(), &mut out),
        Cmd::Verify { family, primes, m, budgets, mode, printed } => {
            if let Some(p) = primes {
                cfg.set("primes", &p)?;
            }
            if let Some(b) = budgets {
                cfg.set("budgets", &b)?;
            }
            if let Some(m) = m {
                cfg.budgets = cfg.primes.iter().map(|&p| (p, m)).collect();
            }
            if let Some(mode) = mode {
                cfg.set("mode", &mode)?;
            }
            cfg.validate()?;
            cmd_verify(&cfg, family.as_deref(), printed, &mut out)
        }
        Cmd::Funceq { family, p_max, printed } => {
            if let Some(p) = p_max {
                cfg.p_max = p;
            }
            cmd_funceq(&cfg, family.as_deref(), printed, &mut out)
        }
        Cmd::Coeffs { family, n, p, m, source, printed, full, partial_sums, growth } => {
            let fam = catalog::parse_family(&family)?;
            match (n, p, m) {
                (Some(n), _, _) => cmd_global(&cfg, &fam, n, printed, full, partial_sums, growth, &mut out),
                (None, Some(p), Some(m)) => cmd_local(&cfg, &fam, p, m, &source, &mut out),
                _ => bail!("coeffs needs --n N or --p P --m M"),
            }
        }
        Cmd::DumpCatalog { family, errata } => cmd_dump(&cfg, family.as_deref(), errata, &mut out),
        Cmd::Audit { family, primes, trials, seed, broken, witnesses } => {
            let primes: Vec<u64> = primes.split(',').map(|s| s.trim().parse()).collect::<Result<_, _>>().context("--primes")?;
            match witnesses {
                Some(m) => cmd_witnesses(&cfg, family.as_deref(), primes[0], m, &mut out),
                None => cmd_audit(&cfg, family.as_deref(), &primes, trials, seed, broken, &mut out),
            }
        }
    }?;
    out.flush()?;
    Ok(status)
}

fn matches_filter(name: &str, display: &str, filter: Option<&str>) -> bool {
    match filter {
        None => true,
        Some(f) => {
            let (n, f) = (name.to_ascii_lowercase(), f.to_ascii_lowercase());
            n.starts_with(&f) || display.to_ascii_lowercase() == f
        }
    }
}

/// Families selected by a filter, expanded over the configured parameter grid.
/// A filter of the form `name:param` selects exactly one group.
fn select(cfg: &RunConfig, filter: Option<&str>) -> Result<Vec<FamilySpec>> {
    if let Some(f) = filter.filter(|f| f.contains([':', '='])) {
        return Ok(vec![catalog::parse_family(f)?]);
    }
    let mut out = vec![];
    for kind in KINDS.iter().filter(|k| matches_filter(k.name, k.display, filter)) {
        let params: Vec<Option<i64>> = match kind.param {
            None => vec![None],
            Some("k") => cfg.k_values.iter().map(|&v| Some(v)).collect(),
            Some("r") => cfg.r_values.iter().map(|&v| Some(v)).collect(),
            Some(_) => cfg.q_values.iter().map(|&v| Some(v)).collect(),
        };
        for p in params {
            out.push(catalog::family(kind.name, p)?);
        }
    }
    Ok(out)
}

fn write_json<T: Serialize>(out: &mut dyn Write, v: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)?;
    Ok(())
}

fn write_csv<T: Serialize>(out: &mut dyn Write, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ListRow {
    name: String,
    display: String,
    parameter: String,
    k_shape: String,
    holonomy: String,
    holonomy_order: usize,
    abscissa: String,
    functional_equation: String,
    characters: String,
}

fn cmd_list(cfg: &RunConfig, filter: Option<&str>, out: &mut dyn Write) -> Result<Status> {
    let mut rows = vec![];
    for kind in KINDS.iter().filter(|k| matches_filter(k.name, k.display, filter)) {
        let sample = catalog::family(kind.name, kind.param.map(|_| 1))?;
        let abscissa = if kind.name == "N" { "3 (k=0), 2 (k≠0)".to_string() } else { sample.abscissa.to_string() };
        let chars: Vec<String> = sample.characters().iter().map(|c| c.to_string()).collect();
        rows.push(ListRow {
            name: kind.name.into(),
            display: kind.display.into(),
            parameter: kind.param.unwrap_or("-").into(),
            k_shape: kind.k_shape.into(),
            holonomy: kind.holonomy.into(),
            holonomy_order: kind.holonomy_order,
            abscissa,
            functional_equation: sample.fe.to_string(),
            characters: chars.join(" "),
        });
    }
    match cfg.format.unwrap_or(Format::Text) {
        Format::Json => write_json(out, &rows)?,
        Format::Csv => write_csv(out, &rows)?,
        Format::Text => {
            for r in &rows {
                let head = format!("{}: {}", r.display, r.k_shape);
                writeln!(
                    out,
                    "{:<6} {:<30} holonomy {:<6} abscissa {:<16} FE {}",
                    r.name, head, r.holonomy, r.abscissa, r.functional_equation
                )?;
            }
        }
    }
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct VerifyCell {
    family: String,
    params: String,
    p: u64,
    m: usize,
    mode: String,
    /// `equal`, `mismatch` or `skipped`.
    status: String,
    first_difference: Option<usize>,
    detail: String,
    elapsed_ms: u128,
}

fn cmd_verify(cfg: &RunConfig, filter: Option<&str>, printed: bool, out: &mut dyn Write) -> Result<Status> {
    let fams = select(cfg, filter)?;
    let ocfg = OracleConfig { work_limit: cfg.work_limit };
    let jobs: Vec<(&FamilySpec, u64)> = fams.iter().flat_map(|f| cfg.primes.iter().map(move |&p| (f, p))).collect();
    let cells: Vec<VerifyCell> = jobs
        .par_iter()
        .map(|&(fam, p)| {
            let m = cfg.budget(p);
            let mut cell = VerifyCell {
                family: fam.name.clone(),
                params: fam.params_label(),
                p,
                m,
                mode: cfg.mode.to_string(),
                status: String::new(),
                first_difference: None,
                detail: String::new(),
                elapsed_ms: 0,
            };
            let closed = if printed { catalog::printed_local_factor(fam, p) } else { catalog::local_factor(fam, p) }
                .and_then(|f| f.series_integers(p, m));
            match (oracle::oracle_count(fam, p, m, cfg.mode, &ocfg), closed) {
                (Err(e @ abzeta::Error::Budget { .. }), _) => {
                    cell.status = "skipped".into();
                    cell.detail = e.to_string();
                }
                (Err(e), _) | (_, Err(e)) => {
                    cell.status = "mismatch".into();
                    cell.detail = e.to_string();
                }
                (Ok(t), Ok(c)) => {
                    cell.elapsed_ms = t.elapsed_ms;
                    match compare_counts(&t.counts, &c) {
                        Comparison::Equal { .. } => cell.status = "equal".into(),
                        Comparison::Differ { index, left, right } => {
                            cell.status = "mismatch".into();
                            cell.first_difference = Some(index);
                            cell.detail = format!("oracle {left}, closed form {right}");
                        }
                        other => {
                            cell.status = "mismatch".into();
                            cell.detail = format!("{other:?}");
                        }
                    }
                }
            }
            cell
        })
        .collect();
    let bad = cells.iter().filter(|c| c.status == "mismatch").count();
    match cfg.format.unwrap_or(Format::Text) {
        Format::Json => write_json(out, &cells)?,
        Format::Csv => write_csv(out, &cells)?,
        Format::Text => {
            for c in &cells {
                let label = if c.params.is_empty() { c.family.clone() } else { format!("{}[{}]", c.family, c.params) };
                write!(out, "{label:<12} p={:<3} m={} {:<5} {:<8} {:>7}ms", c.p, c.m, c.mode, c.status, c.elapsed_ms)?;
                if !c.detail.is_empty() {
                    write!(out, "  {}", c.detail)?;
                }
                writeln!(out)?;
            }
            let skipped = cells.iter().filter(|c| c.status == "skipped").count();
            writeln!(out, "{} cells: {} equal, {bad} mismatch, {skipped} skipped", cells.len(), cells.len() - bad - skipped)?;
        }
    }
    Ok(if bad == 0 { Status::Ok } else { Status::Mismatch })
}

#[derive(Serialize)]
struct FeRow {
    family: String,
    params: String,
    p: u64,
    rule: String,
    holds: bool,
}

fn cmd_funceq(cfg: &RunConfig, filter: Option<&str>, printed: bool, out: &mut dyn Write) -> Result<Status> {
    let mut rows = vec![];
    for fam in select(cfg, filter)? {
        let rule = if printed { fam.printed_fe_rule() } else { fam.fe };
        for p in series::primes_up_to(cfg.p_max as usize).into_iter().filter(|&p| fam.fe_guard(p)) {
            let f = if printed { catalog::printed_local_factor(&fam, p)? } else { catalog::local_factor(&fam, p)? };
            rows.push(FeRow { family: fam.name.clone(), params: fam.params_label(), p, rule: rule.to_string(), holds: catalog::fe_holds(&f, rule, p) });
        }
    }
    let failed = rows.iter().filter(|r| !r.holds).count();
    match cfg.format.unwrap_or(Format::Text) {
        Format::Json => write_json(out, &rows)?,
        Format::Csv => write_csv(out, &rows)?,
        Format::Text => {
            // One line per family: the primes checked and any failures.
            let mut i = 0;
            while i < rows.len() {
                let j = rows[i..].iter().position(|r| r.family != rows[i].family || r.params != rows[i].params).map_or(rows.len(), |d| i + d);
                let group = &rows[i..j];
                let fails: Vec<String> = group.iter().filter(|r| !r.holds).map(|r| r.p.to_string()).collect();
                let label = if group[0].params.is_empty() { group[0].family.clone() } else { format!("{}[{}]", group[0].family, group[0].params) };
                let verdict = if fails.is_empty() { "holds".to_string() } else { format!("FAILS at p={}", fails.join(",")) };
                writeln!(out, "{label:<12} {:<18} {} good primes  {verdict}", group[0].rule, group.len())?;
                i = j;
            }
        }
    }
    Ok(if failed == 0 { Status::Ok } else { Status::Mismatch })
}

#[derive(Serialize)]
struct GlobalReport<'a> {
    #[serde(flatten)]
    coeffs: &'a GlobalCoeffs,
    #[serde(skip_serializing_if = "Option::is_none")]
    growth_estimate: Option<series::GrowthEstimate>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_global(cfg: &RunConfig, fam: &FamilySpec, n: usize, printed: bool, full: bool, partial: bool, growth: bool, out: &mut dyn Write) -> Result<Status> {
    let g = if printed {
        GlobalCoeffs::new(fam.printed_global.expand(fam.k, fam.q, n)?, format!("{} printed global", fam.label()))
    } else if full {
        let mut g = catalog::full_zeta_prime_holonomy(fam)?.coeffs(n)?;
        g.source = format!("{} full zeta", fam.label());
        g
    } else {
        catalog::global_coeffs(fam, n)?
    };
    let est = growth.then(|| series::growth_exponent(&g));
    if partial {
        g.write_partial_sums(&mut *out)?;
        return Ok(Status::Ok);
    }
    match cfg.format.unwrap_or(Format::Text) {
        Format::Json => write_json(out, &GlobalReport { coeffs: &g, growth_estimate: est })?,
        Format::Csv => g.write_csv(&mut *out)?,
        Format::Text => {
            writeln!(out, "# {}", g.source)?;
            let a: Vec<String> = g.a.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{}", a.join(" "))?;
            if let Some(e) = est {
                writeln!(out, "# growth exponent estimate {:.3} ± {:.3} ({} points)", e.slope, e.stderr, e.points)?;
            }
        }
    }
    Ok(Status::Ok)
}

fn cmd_local(cfg: &RunConfig, fam: &FamilySpec, p: u64, m: usize, source: &str, out: &mut dyn Write) -> Result<Status> {
    let t: CoeffTable = match source {
        "closed" => catalog::closed_form_table(fam, p, m)?,
        mode => {
            let mode: Mode = mode.parse()?;
            oracle::oracle_count(fam, p, m, mode, &OracleConfig { work_limit: cfg.work_limit })?
        }
    };
    match cfg.format.unwrap_or(Format::Text) {
        Format::Json => write_json(out, &t)?,
        Format::Csv => {
            writeln!(out, "e,a_p^e")?;
            for (e, c) in t.counts.iter().enumerate() {
                writeln!(out, "{e},{c}")?;
            }
        }
        Format::Text => {
            let a: Vec<String> = t.counts.iter().map(|x| x.to_string()).collect();
            writeln!(out, "# {} p={p} m={m} {:?}", fam.label(), t.mode)?;
            writeln!(out, "{}", a.join(" "))?;
        }
    }
    Ok(Status::Ok)
}

fn cmd_dump(cfg: &RunConfig, filter: Option<&str>, errata_only: bool, out: &mut dyn Write) -> Result<Status> {
    let fams = select(cfg, filter)?;
    match cfg.format.unwrap_or(Format::Json) {
        Format::Csv => bail!("dump-catalog supports json and text"),
        Format::Json if errata_only => {
            let v: Vec<_> = fams
                .iter()
                .filter(|f| !f.errata.is_empty())
                .map(|f| serde_json::json!({"family": f.name, "params": f.params_label(), "errata": f.errata}))
                .collect();
            write_json(out, &v)?
        }
        Format::Json => write_json(out, &fams.iter().map(|f| f.to_json()).collect::<Vec<_>>())?,
        Format::Text => {
            for f in &fams {
                if errata_only && f.errata.is_empty() {
                    continue;
                }
                writeln!(out, "{} ({}) k={} holonomy {}", f.label(), f.display, f.k, f.holonomy)?;
                if !errata_only {
                    for b in &f.local.branches {
                        writeln!(out, "  local {:<10} {}", b.guard.to_string(), b.expr)?;
                    }
                    writeln!(out, "  FE {}   abscissa {}", f.fe, f.abscissa)?;
                    writeln!(out, "  global {}", f.global)?;
                }
                for e in &f.errata {
                    writeln!(out, "  erratum [{:?}] printed: {}", e.scope, e.printed)?;
                    writeln!(out, "      confirmed: {}", e.confirmed)?;
                    writeln!(out, "      {}", e.note)?;
                }
            }
        }
    }
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct AuditRow {
    family: String,
    params: String,
    p: u64,
    shift: String,
    trials: usize,
    witnesses_used: usize,
    violations: usize,
    first_violation: Option<String>,
}

fn cmd_audit(cfg: &RunConfig, filter: Option<&str>, primes: &[u64], trials: usize, seed: u64, broken: bool, out: &mut dyn Write) -> Result<Status> {
    let shift = if broken { Shift::Broken } else { Shift::Honest };
    let fams = select(cfg, filter)?;
    let jobs: Vec<(&FamilySpec, u64)> = fams.iter().flat_map(|f| primes.iter().map(move |&p| (f, p))).collect();
    let rows: Vec<AuditRow> = jobs
        .par_iter()
        .map(|&(f, p)| {
            let r = oracle::invariance_audit(&f.presentation, p, trials, seed, shift)?;
            Ok(AuditRow {
                family: f.name.clone(),
                params: f.params_label(),
                p,
                shift: if broken { "broken" } else { "honest" }.into(),
                trials: r.trials,
                witnesses_used: r.witnesses_used,
                violations: r.violations.len(),
                first_violation: r.violations.first().cloned(),
            })
        })
        .collect::<Result<_>>()?;
    // Honest shifts must never move an outcome; the broken control must move some.
    let failed = if broken { usize::from(rows.iter().all(|r| r.violations == 0)) } else { rows.iter().filter(|r| r.violations > 0).count() };
    match cfg.format.unwrap_or(Format::Text) {
        Format::Json => write_json(out, &rows)?,
        Format::Csv => write_csv(out, &rows)?,
        Format::Text => {
            for r in &rows {
                let label = if r.params.is_empty() { r.family.clone() } else { format!("{}[{}]", r.family, r.params) };
                writeln!(out, "{label:<12} p={:<3} {} trials={} witnesses={} violations={}", r.p, r.shift, r.trials, r.witnesses_used, r.violations)?;
            }
        }
    }
    Ok(if failed == 0 { Status::Ok } else { Status::Mismatch })
}

fn cmd_witnesses(cfg: &RunConfig, filter: Option<&str>, p: u64, m: usize, out: &mut dyn Write) -> Result<Status> {
    let fam = match filter {
        Some(f) => catalog::parse_family(f)?,
        None => bail!("--witnesses needs --family"),
    };
    let ws = oracle::witness_stream(&fam.presentation, p, m, &OracleConfig { work_limit: cfg.work_limit })?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SubgroupWitness::csv_header(fam.presentation.t()))?;
    for x in &ws {
        w.write_record(x.csv_record())?;
    }
    w.flush()?;
    Ok(Status::Ok)
}
