use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use momentgap::expsums::{
    bourgain_row, exact_even_moment, quadrature_norm, ratio_to_f64, squares_set, theorem_upper_bound_tol,
    ExpSumSet,
};
use momentgap::hypercube::{
    chain_bound, delta_integral, poincare_ratio, remark_integral, remark_integral_with, CubeFunction,
    RadicalGrouping, GAUSSIAN_DELTA,
};
use momentgap::rademacher::{
    dax1_rhs, exact_sum_distribution, fourth_moment, fourth_moment_lower_bound, ramon1_rhs,
    sixth_moment_bound, stone_report, BiasedSumSpec,
};
use momentgap::sharp_constant::{compute_c, sharpness_check, DEFAULT_TOL};
use momentgap::verify::{reproduce, run_verify, VerifyConfig};

mod render;

use render::{Format, Report, Row};

const THREADS_ENV: &str = "MOMENTGAP_THREADS";

#[derive(Parser, Debug)]
#[command(name = "momentgap", version, about = "Sharp constants for the refined L1/L2 gap and their applications")]
struct Cli {
    #[arg(long, value_enum, default_value_t = FormatArg::Text, global = true)]
    format: FormatArg,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Text,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
            FormatArg::Text => Format::Text,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SetKind {
    Squares,
    List,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute C(p,q) and its minimiser
    Constant {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Also rebuild the extremal two-point variables and report the limit ratio
        #[arg(long)]
        sharpness: bool,
    },
    /// Run the seeded randomized invariant suites
    Verify {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Use this constant for (p,q) = (4,6) instead of 1/3
        #[arg(long = "c")]
        constant: Option<f64>,
    },
    /// Bounds on E|Σ aⱼξⱼ| for biased Bernoulli sums
    Rademacher {
        /// Bias of ξ; taken from the spec file when omitted
        #[arg(long)]
        p: Option<f64>,
        /// JSON spec {bias, coeffs, normalize}
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// δ and the remark figure, optionally the Poincaré ratio of a cube function
    Poincare {
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Cube function as JSON {n, values} or the binary table format
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Norms of exponential sums and the gap bound
    Expsum {
        #[arg(long, value_enum, default_value_t = SetKind::Squares)]
        set: SetKind,
        /// Values of m for squares sets: `10`, `2,5,9` or `2..100`
        #[arg(long, default_value = "10")]
        m: String,
        /// Elements for `--set list`, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        elements: Vec<i64>,
        #[arg(long, default_value_t = 4.0)]
        p: f64,
        #[arg(long, default_value_t = 6.0)]
        q: f64,
        #[arg(long = "c", default_value_t = 1.0 / 3.0)]
        constant: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Power N in the diagnostic (1 − ‖X‖₁)·m / log^N m
        #[arg(long, default_value_t = 1.0)]
        log_power: f64,
        /// Same as --format, restricted to machine formats
        #[arg(long, value_enum)]
        report: Option<MachineFormat>,
    },
    /// Recompute the four headline numbers against their windows
    Reproduce,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MachineFormat {
    Csv,
    Json,
}

fn parse_m_values(spec: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: u64 = lo.parse().map_err(|_| format!("bad range start in {part:?}"))?;
            let hi: u64 = hi.trim_start_matches('=').parse().map_err(|_| format!("bad range end in {part:?}"))?;
            if lo > hi {
                return Err(format!("empty range {part:?}"));
            }
            out.extend(lo..=hi);
        } else {
            out.push(part.parse().map_err(|_| format!("bad value of m: {part:?}"))?);
        }
    }
    if out.is_empty() {
        return Err("no values of m given".into());
    }
    Ok(out)
}

type CmdResult = Result<Report, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn run_constant(p: f64, q: f64, tol: f64, sharpness: bool) -> CmdResult {
    let result = compute_c(p, q, tol).map_err(err)?;
    let record = result.record();
    let mut rows = vec![
        Row::num("p", p),
        Row::num("q", q),
        Row::num("C", record.c),
        Row::num("a_star", record.a_star),
        Row::num("c_star", record.c_star),
        Row::num("lower_bound", record.lower_bound),
        Row::num("tol", record.tol),
        Row::text("location", format!("{:?}", result.location)),
    ];
    let mut json = serde_json::to_value(&record).map_err(err)?;
    if sharpness {
        let s = sharpness_check(&result).map_err(err)?;
        rows.push(Row::num("sharpness_ratio_limit", s.ratio_limit));
        rows.push(Row::num("sharpness_rel_err", s.rel_err));
        json["sharpness"] = serde_json::to_value(&s).map_err(err)?;
    }
    Ok(Report::new(json, rows).with_table(vec![record]))
}

fn run_verify_cmd(seed: u64, samples: usize, constant: Option<f64>) -> CmdResult {
    let report = run_verify(&VerifyConfig {
        seed,
        samples,
        constant_override: constant,
    })
    .map_err(err)?;
    let mut table = Vec::new();
    for s in &report.suites {
        table.push(SuiteRow {
            suite: s.name.clone(),
            checks: s.checks,
            violations: s.violations,
            max_violation: s.max_violation,
        });
    }
    let mut rows: Vec<Row> = report
        .suites
        .iter()
        .map(|s| {
            Row::text(
                &s.name,
                format!("{} checks, {} violations, max violation {:e}", s.checks, s.violations, s.max_violation),
            )
        })
        .collect();
    for s in report.suites.iter().filter(|s| s.witness.is_some()) {
        rows.push(Row::text(&format!("{} witness", s.name), s.witness.as_ref().map(|w| w.to_string()).unwrap_or_default()));
    }
    rows.push(Row::text("passed", report.passed.to_string()));
    Ok(Report::new(serde_json::to_value(&report).map_err(err)?, rows)
        .with_table(table)
        .failed_if(!report.passed))
}

#[derive(Serialize)]
struct SuiteRow {
    suite: String,
    checks: usize,
    violations: usize,
    max_violation: f64,
}

fn run_rademacher(p: Option<f64>, input: Option<PathBuf>) -> CmdResult {
    let spec = match &input {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            Some(serde_json::from_str::<BiasedSumSpec>(&text).map_err(|e| format!("{}: {e}", path.display()))?)
        }
        None => None,
    };
    let bias = p
        .or(spec.as_ref().map(|s| s.bias()))
        .ok_or("give --p or an --input spec")?;
    let stone = stone_report(bias).map_err(err)?;
    let mut rows = vec![
        Row::num("bias", bias),
        Row::num("dax1_rhs", dax1_rhs(bias).map_err(err)?),
        Row::num("ramon1_rhs", ramon1_rhs(bias).map_err(err)?),
        Row::num("sixth_moment_bound", sixth_moment_bound(bias).map_err(err)?),
        Row::num("fourth_moment_lower_bound", fourth_moment_lower_bound(bias).map_err(err)?),
        Row::num("stone_rhs", stone.verbatim),
        Row::num("stone_binomial", stone.binomial),
        Row::text("stone_exceeds_unit", stone.exceeds_unit.to_string()),
    ];
    let mut json = serde_json::json!({
        "bias": bias,
        "dax1_rhs": dax1_rhs(bias).map_err(err)?,
        "ramon1_rhs": ramon1_rhs(bias).map_err(err)?,
        "sixth_moment_bound": sixth_moment_bound(bias).map_err(err)?,
        "fourth_moment_lower_bound": fourth_moment_lower_bound(bias).map_err(err)?,
        "stone": stone,
    });
    let mut failed = false;
    if let Some(spec) = spec {
        let spec = BiasedSumSpec::new(bias, spec.coeffs().to_vec()).map_err(err)?;
        let law = exact_sum_distribution(&spec).map_err(err)?;
        let l1 = law.mean();
        let dax1 = dax1_rhs(bias).map_err(err)?;
        let holds = l1 <= dax1 + 1e-12;
        failed = !holds;
        rows.extend([
            Row::num("l1", l1),
            Row::num("fourth_moment", fourth_moment(&spec)),
            Row::num("fourth_moment_exact", law.moment(4.0)),
            Row::num("sixth_moment_exact", law.moment(6.0)),
            Row::text("dax1_holds", holds.to_string()),
        ]);
        json["spec"] = serde_json::json!({
            "spec": spec,
            "l1": l1,
            "fourth_moment": fourth_moment(&spec),
            "fourth_moment_exact": law.moment(4.0),
            "sixth_moment_exact": law.moment(6.0),
            "dax1_holds": holds,
        });
    }
    let mut report = Report::new(json, rows).failed_if(failed);
    if stone.exceeds_unit {
        report = report.with_warning(format!(
            "stone_rhs({bias}) = {} exceeds 1 as displayed; the binomial grouping gives {}",
            stone.verbatim, stone.binomial
        ));
    }
    Ok(report)
}

fn read_cube(path: &PathBuf) -> Result<CubeFunction, String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let first = bytes.iter().find(|b| !b.is_ascii_whitespace());
    if first == Some(&b'{') {
        serde_json::from_slice(&bytes).map_err(|e| format!("{}: {e}", path.display()))
    } else {
        CubeFunction::from_bytes(&bytes).map_err(|e| format!("{}: {e}", path.display()))
    }
}

fn run_poincare(tol: f64, input: Option<PathBuf>) -> CmdResult {
    let delta = delta_integral(tol).map_err(err)?;
    let remark_tol = tol.max(1e-8);
    let remark = remark_integral(remark_tol).map_err(err)?;
    let literal = remark_integral_with(remark_tol, RadicalGrouping::Literal).map_err(err)?;
    let mut rows = vec![
        Row::num("delta", delta.value),
        Row::num("delta_error", delta.est_error),
        Row::num("remark", remark.value),
        Row::num("remark_error", remark.est_error),
        Row::num("remark_literal_grouping", literal.value),
        Row::num("gaussian_reference", GAUSSIAN_DELTA),
    ];
    let mut json = serde_json::json!({
        "delta": delta,
        "remark": { "value": remark.value, "est_error": remark.est_error, "breakpoints": remark.breakpoints.len() },
        "remark_literal_grouping": literal.value,
        "gaussian_reference": GAUSSIAN_DELTA,
    });
    let mut failed = false;
    if let Some(path) = input {
        let f = read_cube(&path)?;
        let chain = chain_bound(&f);
        let ratio = poincare_ratio(&f).ok();
        failed = !chain.holds;
        rows.push(Row::num("n", f.n() as f64));
        if let Some(r) = ratio {
            rows.push(Row::num("poincare_ratio", r));
        }
        rows.push(Row::num("chain_lhs", chain.lhs));
        rows.push(Row::num("chain_rhs", chain.rhs));
        rows.push(Row::text("chain_holds", chain.holds.to_string()));
        json["function"] = serde_json::json!({ "n": f.n(), "poincare_ratio": ratio, "chain": chain });
    }
    Ok(Report::new(json, rows).failed_if(failed))
}

#[derive(Serialize)]
struct ExpsumRow {
    m: u64,
    l1: f64,
    l4_4_exact: f64,
    l6_6_exact: f64,
    theorem_bound: f64,
    gap: f64,
}

#[allow(clippy::too_many_arguments)]
fn run_expsum(
    kind: SetKind,
    m: &str,
    elements: Vec<i64>,
    p: f64,
    q: f64,
    constant: f64,
    tol: f64,
    log_power: f64,
) -> CmdResult {
    let sets: Vec<(u64, ExpSumSet)> = match kind {
        SetKind::Squares => parse_m_values(m)?
            .into_iter()
            .map(|m| squares_set(m).map(|s| (m, s)).map_err(err))
            .collect::<Result<_, _>>()?,
        SetKind::List => {
            let s = ExpSumSet::new(elements).map_err(err)?;
            vec![(s.len() as u64, s)]
        }
    };
    let mut table = Vec::new();
    let mut details = Vec::new();
    let mut failed = false;
    for (m, set) in &sets {
        let l1 = quadrature_norm(set, 1.0, tol).map_err(err)?;
        let l4 = ratio_to_f64(&exact_even_moment(set, 2).map_err(err)?);
        let l6 = ratio_to_f64(&exact_even_moment(set, 3).map_err(err)?);
        let bound = theorem_upper_bound_tol(set, p, q, constant, tol.max(1e-10)).map_err(err)?;
        let gap = bound.bound - l1.value;
        failed |= gap < -l1.est_error;
        table.push(ExpsumRow {
            m: *m,
            l1: l1.value,
            l4_4_exact: l4,
            l6_6_exact: l6,
            theorem_bound: bound.bound,
            gap,
        });
        let diagnostics = match kind {
            SetKind::Squares if *m >= 2 => bourgain_row(*m, log_power, tol).ok(),
            _ => None,
        };
        details.push(serde_json::json!({
            "m": m,
            "set_size": set.len(),
            "span": set.span(),
            "l1": l1,
            "l4_4_exact": l4,
            "l6_6_exact": l6,
            "theorem": bound,
            "gap": gap,
            "diagnostics": diagnostics,
        }));
    }
    let rows = table
        .iter()
        .map(|r| {
            Row::text(
                &format!("m={}", r.m),
                format!(
                    "l1 {:.10}  l4^4 {:.6}  l6^6 {:.6}  bound {:.10}  gap {:.3e}",
                    r.l1, r.l4_4_exact, r.l6_6_exact, r.theorem_bound, r.gap
                ),
            )
        })
        .collect();
    let json = serde_json::json!({ "p": p, "q": q, "constant": constant, "rows": details });
    Ok(Report::new(json, rows).with_table(table).failed_if(failed))
}

fn run_reproduce() -> CmdResult {
    let report = reproduce();
    let mut rows: Vec<Row> = report
        .lines
        .iter()
        .map(|l| {
            let mut text = format!(
                "{:.12}  window [{}, {}]  {}",
                l.value,
                l.window.0,
                l.window.1,
                if l.passed { "PASS" } else { "FAIL" }
            );
            if let Some(c) = l.context {
                text.push_str(&format!("  (π/2 − √(π/2) = {c:.5})"));
            }
            Row::text(&l.name, text)
        })
        .collect();
    rows.push(Row::text("passed", report.passed.to_string()));
    #[derive(Serialize)]
    struct Line<'a> {
        name: &'a str,
        value: f64,
        low: f64,
        high: f64,
        passed: bool,
    }
    let table: Vec<Line> = report
        .lines
        .iter()
        .map(|l| Line {
            name: &l.name,
            value: l.value,
            low: l.window.0,
            high: l.window.1,
            passed: l.passed,
        })
        .collect();
    let csv = render::csv_table(&table).map_err(err)?;
    Ok(Report::new(serde_json::to_value(&report).map_err(err)?, rows)
        .with_csv(csv)
        .failed_if(!report.passed))
}

fn configure_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(err)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let mut format: Format = cli.format.into();
    let result = match cli.command {
        Command::Constant { p, q, tol, sharpness } => run_constant(p, q, tol, sharpness),
        Command::Verify { samples, constant } => run_verify_cmd(cli.seed, samples, constant),
        Command::Rademacher { p, input } => run_rademacher(p, input),
        Command::Poincare { tol, input } => run_poincare(tol, input),
        Command::Expsum {
            set,
            m,
            elements,
            p,
            q,
            constant,
            tol,
            log_power,
            report,
        } => {
            if let Some(r) = report {
                format = match r {
                    MachineFormat::Csv => Format::Csv,
                    MachineFormat::Json => Format::Json,
                };
            }
            run_expsum(set, &m, elements, p, q, constant, tol, log_power)
        }
        Command::Reproduce => run_reproduce(),
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let bytes = match report.render(format) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let written = match &cli.output {
        Some(path) => fs::write(path, &bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(&bytes).map_err(err),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if report.failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
