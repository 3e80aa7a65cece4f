//! The `theta` command line: evaluation, zeros, spectrum tables, domain
//! verification and certificates.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use partial_theta::{
    certify, domain_membership, find_zeros, scan_q_grid, spectrum_table_with, theta_eval, theta_star_product,
    theta_star_series, CertificateReport, CertifyParams, EvaluatedValue, LemmaSelector, Precision, QParam, ScanOptions,
    ScanReport, SpectrumEntry, ThetaError, ZeroRecord,
};
use serde::Serialize;

pub mod parse;

pub const SCHEMA: &str = "theta-domain/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Plain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Series,
    Product,
    Bilateral,
}

#[derive(Debug, Parser)]
#[command(name = "theta", version, about = "Partial theta function: zeros, spectrum and domain certificates")]
pub struct Cli {
    /// Working precision in bits.
    #[arg(long, global = true, env = "THETA_PRECISION_BITS", default_value_t = 128)]
    pub precision_bits: u32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Plain)]
    pub format: Format,
    /// Seed for the sampled certificate checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate theta, the bilateral sum or the triple product at one point.
    Eval {
        #[arg(long)]
        q: f64,
        /// Complex literal such as `-1.5+2e-3i`.
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, default_value_t = 1e-15)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = Method::Series)]
        method: Method,
    },
    /// Locate all zeros inside a region.
    Zeros {
        #[arg(long)]
        q: f64,
        /// `halfdisk:R`, `rect:x0,x1,y0,y1` or `circle:cx,cy,r`.
        #[arg(long, allow_hyphen_values = true)]
        region: String,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Table of the double-zero parameters q̃_N and the double zeros y_N.
    Spectrum {
        #[arg(long)]
        max_n: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Scan a grid of q and check every zero against the theorem domain.
    Verify {
        /// `start:stop:step`, single values, or a comma-separated mix.
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Left edge of the scanned box.
        #[arg(long, default_value_t = partial_theta::DEFAULT_R_LEFT)]
        r_left: f64,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Check the closed-form inequalities and sampled lemma bounds.
    Certify {
        /// all, lemma3, lemma4, lemma5, lemma6, lemma7, lemma9, part1, part2K, part2L or smallq.
        #[arg(long, default_value = "all")]
        lemma: String,
        #[arg(long, default_value_t = 132.0)]
        b: f64,
        /// Largest interval index n for the part2 chains.
        #[arg(long, default_value_t = 100)]
        n_max: u32,
        #[arg(long, default_value_t = partial_theta::certificates::DEFAULT_SAMPLES)]
        samples: usize,
    },
}

/// Rendered report and the exit code that goes with it.
struct Outcome {
    text: String,
    code: i32,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<ThetaError> for Failure {
    fn from(e: ThetaError) -> Self {
        Self { code: error_code(&e), message: e.to_string() }
    }
}

/// Bad input maps to 2, everything the numerics could not finish to 3.
pub fn error_code(e: &ThetaError) -> i32 {
    use ThetaError::*;
    match e {
        InvalidQ(_)
        | InvalidPrecision(_)
        | InvalidTolerance { .. }
        | InvalidArgument(_)
        | EmptyGrid
        | OutsideConvergence { .. } => EXIT_USAGE,
        _ => EXIT_NUMERIC,
    }
}

/// Parse `args` (program name first), run the command and return the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(rendered.as_bytes());
                EXIT_USAGE
            } else {
                let _ = stdout.write_all(rendered.as_bytes());
                EXIT_OK
            };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &outcome.text),
                None => stdout.write_all(outcome.text.as_bytes()),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: cannot write report: {e}");
                return EXIT_USAGE;
            }
            outcome.code
        }
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: &Cli) -> Result<Outcome, Failure> {
    let prec = Precision::new(cli.precision_bits)?;
    match &cli.command {
        Command::Eval { q, z, eps, method } => cmd_eval(cli.format, prec, *q, z, *eps, *method),
        Command::Zeros { q, region, tol } => cmd_zeros(cli.format, prec, *q, region, *tol),
        Command::Spectrum { max_n, tol } => cmd_spectrum(cli.format, prec, *max_n, *tol),
        Command::Verify { grid, tol, r_left, threads } => {
            let opts = ScanOptions { tol: *tol, r_left: *r_left, prec, threads: *threads };
            cmd_verify(cli.format, grid, &opts)
        }
        Command::Certify { lemma, b, n_max, samples } => {
            let params = CertifyParams { b: *b, n_range: 3..=*n_max, seed: cli.seed, samples: *samples };
            cmd_certify(cli.format, lemma, &params)
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'static str,
    command: &'a str,
    #[serde(flatten)]
    body: T,
}

fn json<T: Serialize>(command: &str, body: T) -> String {
    let env = Envelope { schema: SCHEMA, command, body };
    let mut s = serde_json::to_string_pretty(&env).expect("report types serialize");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of utf-8 fields")
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Serialize)]
struct C64 {
    re: f64,
    im: f64,
}

impl From<Complex64> for C64 {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Serialize)]
struct EvalBody {
    q: f64,
    z: C64,
    method: Method,
    eps: f64,
    value: C64,
    abs: f64,
    err: f64,
    /// Series cutoff, or explicit factor count for the product.
    terms: usize,
    bits: u32,
}

fn cmd_eval(format: Format, prec: Precision, q: f64, z: &str, eps: f64, method: Method) -> Result<Outcome, Failure> {
    let z = parse::complex(z).map_err(Failure::usage)?;
    let qp = QParam::new(q)?;
    let v: EvaluatedValue = match method {
        Method::Series => theta_eval(qp, z, eps, prec)?,
        Method::Product => theta_star_product(qp, z, eps, prec)?,
        Method::Bilateral => theta_star_series(qp, z, eps, prec)?,
    };
    let body = EvalBody {
        q,
        z: z.into(),
        method,
        eps,
        value: v.value_c64().into(),
        abs: v.abs_f64(),
        err: v.err_f64(),
        terms: v.terms,
        bits: v.bits,
    };
    let text = match format {
        Format::Json => json("eval", &body),
        Format::Csv => csv_text(
            &["q", "z_re", "z_im", "method", "value_re", "value_im", "err", "terms", "bits"],
            [vec![
                num(q),
                num(z.re),
                num(z.im),
                format!("{method:?}").to_lowercase(),
                num(body.value.re),
                num(body.value.im),
                num(body.err),
                body.terms.to_string(),
                body.bits.to_string(),
            ]],
        ),
        Format::Plain => {
            let mut s = String::new();
            let _ = writeln!(s, "q       {q}");
            let _ = writeln!(s, "z       {}{:+}i", z.re, z.im);
            let _ = writeln!(s, "method  {method:?}");
            let _ = writeln!(s, "value   {:.17e}{:+.17e}i", body.value.re, body.value.im);
            let _ = writeln!(s, "|value| {:.6e}", body.abs);
            let _ = writeln!(s, "err     {:.3e}", body.err);
            let _ = writeln!(s, "terms   {}", body.terms);
            let _ = writeln!(s, "bits    {}", body.bits);
            s
        }
    };
    Ok(Outcome { text, code: EXIT_OK })
}

#[derive(Serialize)]
struct ZerosBody<'a> {
    q: f64,
    region: &'a str,
    tol: f64,
    count: usize,
    zeros: &'a [ZeroRecord],
}

fn zero_row(z: &ZeroRecord) -> Vec<String> {
    vec![
        num(z.q.value()),
        num(z.z.re),
        num(z.z.im),
        num(z.residual),
        num(z.theta_abs),
        z.refined.to_string(),
        z.iterations.to_string(),
    ]
}

const ZERO_HEADER: [&str; 7] = ["q", "re", "im", "residual", "theta_abs", "refined", "iterations"];

fn cmd_zeros(format: Format, prec: Precision, q: f64, region: &str, tol: f64) -> Result<Outcome, Failure> {
    let r = parse::region(region).map_err(Failure::usage)?;
    let mut zeros = find_zeros(QParam::new(q)?, &r, tol, prec)?;
    zeros.sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
    let text = match format {
        Format::Json => json("zeros", ZerosBody { q, region, tol, count: zeros.len(), zeros: &zeros }),
        Format::Csv => csv_text(&ZERO_HEADER, zeros.iter().map(zero_row)),
        Format::Plain => {
            let mut s = format!("{} zero(s) of theta(q = {q}, .) in {region}\n", zeros.len());
            for z in &zeros {
                let _ = writeln!(s, "  {:+.15e} {:+.15e}i   residual {:.2e}", z.z.re, z.z.im, z.residual);
            }
            s
        }
    };
    Ok(Outcome { text, code: EXIT_OK })
}

#[derive(Serialize)]
struct SpectrumBody<'a> {
    max_n: usize,
    tol: f64,
    entries: &'a [SpectrumEntry],
    /// Set when the solver stopped before `max_n`.
    failure: Option<SpectrumFailure>,
}

#[derive(Serialize)]
struct SpectrumFailure {
    n: usize,
    message: String,
}

fn cmd_spectrum(format: Format, prec: Precision, max_n: usize, tol: f64) -> Result<Outcome, Failure> {
    if max_n == 0 {
        return Err(Failure::usage("--max-n must be at least 1"));
    }
    let mut entries = Vec::new();
    let failure = match spectrum_table_with(max_n, tol, prec, |e| entries.push(*e)) {
        Ok(_) => None,
        Err(e) if error_code(&e) == EXIT_USAGE => return Err(e.into()),
        Err(e) => Some(SpectrumFailure { n: entries.len() + 1, message: e.to_string() }),
    };
    let code = if failure.is_some() { EXIT_NUMERIC } else { EXIT_OK };
    let text = match format {
        Format::Json => json("spectrum", SpectrumBody { max_n, tol, entries: &entries, failure }),
        Format::Csv => {
            let header = ["n", "q_tilde", "y", "residual_theta", "residual_dz", "bits", "iterations", "status"];
            let mut rows: Vec<Vec<String>> = entries
                .iter()
                .map(|e| {
                    vec![
                        e.n.to_string(),
                        format!("{:.12}", e.q_tilde),
                        format!("{:.10}", e.y),
                        num(e.residual_theta),
                        num(e.residual_dz),
                        e.bits.to_string(),
                        e.iterations.to_string(),
                        "ok".into(),
                    ]
                })
                .collect();
            if let Some(f) = &failure {
                let mut row = vec![f.n.to_string()];
                row.extend(std::iter::repeat_n(String::new(), 6));
                row.push(format!("failed: {}", f.message));
                rows.push(row);
            }
            csv_text(&header, rows)
        }
        Format::Plain => {
            let mut s = format!(
                "{:>3}  {:>14}  {:>14}  {:>9}  {:>9}  {:>5}\n",
                "N", "q_tilde", "y", "|theta|", "|theta'|", "bits"
            );
            for e in &entries {
                let _ = writeln!(
                    s,
                    "{:>3}  {:>14.10}  {:>14.8}  {:>9.1e}  {:>9.1e}  {:>5}",
                    e.n, e.q_tilde, e.y, e.residual_theta, e.residual_dz, e.bits
                );
            }
            if let Some(f) = &failure {
                let _ = writeln!(s, "{:>3}  failed: {}", f.n, f.message);
            }
            s
        }
    };
    Ok(Outcome { text, code })
}

fn cmd_verify(format: Format, grid: &str, opts: &ScanOptions) -> Result<Outcome, Failure> {
    let grid = parse::grid(grid).map_err(Failure::usage)?;
    let report = scan_q_grid(&grid, opts)?;
    let code = if !report.errors.is_empty() {
        EXIT_NUMERIC
    } else if report.pass {
        EXIT_OK
    } else {
        EXIT_FAIL
    };
    let text = match format {
        Format::Json => json("verify", &report),
        Format::Csv => csv_text(
            &["q", "kind", "re", "im", "residual", "in_domain"],
            report
                .zeros
                .iter()
                .map(|z| (z.q.value(), "zero", z.z, z.residual))
                .chain(report.clusters.iter().map(|c| (c.q, "cluster", c.cluster.center, f64::NAN)))
                .map(|(q, kind, z, res)| {
                    vec![num(q), kind.into(), num(z.re), num(z.im), num(res), domain_membership(z).to_string()]
                }),
        ),
        Format::Plain => verify_plain(&report),
    };
    Ok(Outcome { text, code })
}

fn verify_plain(r: &ScanReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>8}  {:>5}  {:>5}  {:>5}  {:>10}", "q", "pairs", "real", "zeros", "violations");
    for pc in &r.pair_counts {
        let zeros = r.zeros.iter().filter(|z| z.q.value() == pc.q).count();
        let bad = r.violations.iter().filter(|z| z.q.value() == pc.q).count();
        let _ = writeln!(s, "{:>8.4}  {:>5}  {:>5}  {:>5}  {:>10}", pc.q, pc.pairs, pc.real_zeros, zeros, bad);
    }
    for z in &r.violations {
        let _ = writeln!(s, "VIOLATION q = {}: {:+.12e}{:+.12e}i", z.q.value(), z.z.re, z.z.im);
    }
    for c in &r.outside_clusters {
        let _ = writeln!(s, "UNRESOLVED q = {}: {} zeros near {}", c.q, c.cluster.count, c.cluster.center);
    }
    for e in &r.errors {
        let _ = writeln!(s, "ERROR q = {}: {}", e.q, e.message);
    }
    let uncovered: Vec<_> = r.coverage.iter().filter(|c| !c.covered).collect();
    for c in &uncovered {
        let _ = writeln!(s, "UNCOVERED q = {}: {} ({})", c.q, c.region, c.certificates.join(", "));
    }
    for c in &r.certificates {
        let failed: Vec<&str> = c.inequalities.iter().filter(|i| !i.pass).map(|i| i.label.as_str()).collect();
        if !failed.is_empty() {
            let _ = writeln!(s, "certificate {}: failed checkpoint(s) {}", c.lemma_id, failed.join("; "));
        }
    }
    let _ = writeln!(
        s,
        "{} q values, {} zeros, {} violations, {} exterior regions uncovered: {}",
        r.q_values.len(),
        r.zeros.len(),
        r.violations.len(),
        uncovered.len(),
        if r.pass { "PASS" } else { "FAIL" }
    );
    s
}

#[derive(Serialize)]
struct CertifyBody<'a> {
    lemma: &'a str,
    b: f64,
    seed: u64,
    samples: usize,
    pass: bool,
    reports: &'a [CertificateReport],
}

fn cmd_certify(format: Format, lemma: &str, params: &CertifyParams) -> Result<Outcome, Failure> {
    let selector: LemmaSelector = lemma.parse().map_err(|e: ThetaError| Failure::usage(e.to_string()))?;
    let reports = certify(selector, params)?;
    let pass = reports.iter().all(|r| r.pass);
    let text = match format {
        Format::Json => json(
            "certify",
            CertifyBody { lemma, b: params.b, seed: params.seed, samples: params.samples, pass, reports: &reports },
        ),
        Format::Csv => csv_text(
            &["lemma", "label", "lhs", "rhs", "margin", "strict", "checkpoint", "pass"],
            reports.iter().flat_map(|r| {
                r.inequalities.iter().map(|i| {
                    vec![
                        r.lemma_id.clone(),
                        i.label.clone(),
                        num(i.lhs),
                        num(i.rhs),
                        num(i.margin),
                        i.strict.to_string(),
                        i.checkpoint.to_string(),
                        i.pass.to_string(),
                    ]
                })
            }),
        ),
        Format::Plain => {
            let mut s = String::new();
            for r in &reports {
                let _ = writeln!(s, "[{}] {:?}", r.lemma_id, r.status);
                for (k, v) in &r.quantities {
                    let _ = writeln!(s, "    {k} = {v:.10}");
                }
                for i in &r.inequalities {
                    let op = if i.strict { ">" } else { ">=" };
                    let _ = writeln!(
                        s,
                        "  {} {}  ({:.10} {op} {:.10}, margin {:+.3e}){}",
                        if i.pass { "ok  " } else { "FAIL" },
                        i.label,
                        i.lhs,
                        i.rhs,
                        i.margin,
                        if i.checkpoint { " [printed checkpoint]" } else { "" }
                    );
                }
            }
            let _ = writeln!(s, "{}", if pass { "PASS" } else { "FAIL" });
            s
        }
    };
    Ok(Outcome { text, code: if pass { EXIT_OK } else { EXIT_FAIL } })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("theta").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn theta_json(args: &[&str]) -> (i32, serde_json::Value) {
        let mut v = args.to_vec();
        v.extend(["--format", "json"]);
        let (code, out, err) = theta(&v);
        let doc = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out} {err}"));
        (code, doc)
    }

    #[test]
    fn eval_at_origin() {
        let (code, doc) = theta_json(&["eval", "--q", "0.5", "--z", "0+0i"]);
        assert_eq!(code, 0);
        assert_eq!(doc["schema"], SCHEMA);
        assert_eq!(doc["value"]["re"], 1.0);
        assert_eq!(doc["value"]["im"], 0.0);
    }

    #[test]
    fn eval_at_the_printed_zero() {
        let (code, doc) = theta_json(&["eval", "--q", "0.73", "--z", "0.03356612894+2.885381139i", "--eps", "1e-12"]);
        assert_eq!(code, 0);
        assert!(doc["abs"].as_f64().unwrap() < 1e-6);
    }

    #[test]
    fn eval_error_paths() {
        assert_eq!(theta(&["eval", "--q", "0.5", "--z", "0+0i", "--method", "product"]).0, EXIT_NUMERIC);
        assert_eq!(theta(&["eval", "--q", "0.5", "--z", "1+xi"]).0, EXIT_USAGE);
        assert_eq!(theta(&["eval", "--q", "1.5", "--z", "1"]).0, EXIT_USAGE);
        assert_eq!(theta(&["eval", "--q", "0.5"]).0, EXIT_USAGE);
        assert_eq!(theta(&["eval", "--q", "0.5", "--z", "0.5", "--method", "bilateral"]).0, EXIT_USAGE);
        assert_eq!(theta(&["--precision-bits", "8", "eval", "--q", "0.5", "--z", "1"]).0, EXIT_USAGE);
    }

    #[test]
    fn eval_accepts_negative_literals() {
        let (code, doc) = theta_json(&["eval", "--q", "0.5", "--z", "-2", "--method", "product", "--eps", "1e-14"]);
        assert_eq!(code, 0);
        assert!(doc["abs"].as_f64().unwrap() <= doc["err"].as_f64().unwrap());
    }

    #[test]
    fn eval_plain_and_csv() {
        let (code, out, _) = theta(&["eval", "--q", "0.3", "--z", "-1"]);
        assert_eq!(code, 0);
        assert!(out.contains("7.2627689056155"), "{out}");
        let (_, out, _) = theta(&["eval", "--q", "0.3", "--z", "-1", "--format", "csv"]);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("q,z_re,z_im,method"));
    }

    #[test]
    fn zeros_in_the_half_disk() {
        let (code, doc) = theta_json(&["zeros", "--q", "0.73", "--region", "halfdisk:3"]);
        assert_eq!(code, 0);
        let zs = doc["zeros"].as_array().unwrap();
        assert_eq!(zs.len(), 2);
        assert_eq!(doc["count"], 2);
    }

    #[test]
    fn zeros_empty_and_malformed() {
        let (code, doc) = theta_json(&["zeros", "--q", "0.25", "--region", "rect:0.01,50,-50,50"]);
        assert_eq!(code, 0);
        assert_eq!(doc["count"], 0);
        assert_eq!(theta(&["zeros", "--q", "0.5", "--region", "rect:bad"]).0, EXIT_USAGE);
        let (code, out, _) = theta(&["zeros", "--q", "0.25", "--region", "rect:0.01,50,-50,50", "--format", "csv"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 1);
    }

    #[test]
    fn spectrum_rows() {
        let (code, out, _) = theta(&["spectrum", "--max-n", "2", "--format", "csv"]);
        assert_eq!(code, 0);
        let rows: Vec<&str> = out.lines().skip(1).collect();
        assert_eq!(rows.len(), 2);
        let q1: f64 = rows[0].split(',').nth(1).unwrap().parse().unwrap();
        assert!((q1 - 0.309249).abs() < 5e-7);
        assert_eq!(theta(&["spectrum", "--max-n", "0"]).0, EXIT_USAGE);
        let (code, doc) = theta_json(&["spectrum", "--max-n", "1"]);
        assert_eq!(code, 0);
        assert_eq!(doc["entries"].as_array().unwrap().len(), 1);
        assert!(doc["failure"].is_null());
    }

    #[test]
    fn verify_single_q() {
        let (code, doc) = theta_json(&["verify", "--grid", "0.73:0.73:1"]);
        assert_eq!(code, 0);
        assert_eq!(doc["pass"], true);
        assert_eq!(doc["violations"].as_array().unwrap().len(), 0);
        let pair = doc["zeros"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|z| (z["z"][0].as_f64().unwrap() - 0.0335661287).abs() < 1e-8)
            .count();
        assert_eq!(pair, 2);
        assert_eq!(theta(&["verify", "--grid", "0.5:1.5:0.1"]).0, EXIT_USAGE);
        assert_eq!(theta(&["verify", "--grid", "0.5", "--tol", "-1"]).0, EXIT_USAGE);
    }

    #[test]
    fn verify_plain_summary() {
        let (code, out, _) = theta(&["verify", "--grid", "0.2,0.4"]);
        assert_eq!(code, 0);
        assert!(out.trim_end().ends_with("PASS"), "{out}");
    }

    #[test]
    fn certify_selected_lemmas() {
        let (code, out, _) = theta(&["certify", "--lemma", "lemma4"]);
        assert_eq!(code, 0);
        assert!(out.contains("zeta root > 0.683"));
        let (code, out, _) = theta(&["certify", "--lemma", "smallq", "--b", "132"]);
        assert_eq!(code, 0);
        assert!(out.contains("chain a <= b > 12.8") && out.contains("chain a >= b > 8.8"));
        assert_eq!(theta(&["certify", "--lemma", "lemma8"]).0, EXIT_USAGE);
        assert_eq!(theta(&["certify", "--lemma", "part2K", "--b", "10"]).0, EXIT_USAGE);
    }

    #[test]
    fn certify_reports_failed_printed_checkpoints() {
        let (code, doc) = theta_json(&["certify", "--lemma", "part2L", "--b", "132"]);
        assert_eq!(code, EXIT_FAIL);
        let ineqs = doc["reports"][0]["inequalities"].as_array().unwrap();
        let l1 = ineqs.iter().find(|i| i["label"] == "L1 > 0.3044").unwrap();
        assert_eq!(l1["pass"], true);
        let l0 = ineqs.iter().find(|i| i["label"] == "|L0 + 6.0491| <= 1e-3").unwrap();
        assert_eq!(l0["pass"], false);
        assert_eq!(l0["checkpoint"], true);
    }

    #[test]
    fn json_is_deterministic() {
        let a = theta(&["certify", "--lemma", "lemma9", "--seed", "7", "--format", "json"]);
        let b = theta(&["certify", "--lemma", "lemma9", "--seed", "7", "--format", "json"]);
        assert_eq!(a, b);
        let c = theta(&["certify", "--lemma", "lemma9", "--seed", "8", "--format", "json"]);
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn out_flag_writes_a_file() {
        let path = std::env::temp_dir().join(format!("theta-cli-test-{}.json", std::process::id()));
        let p = path.to_str().unwrap();
        let (code, out, _) = theta(&["eval", "--q", "0.5", "--z", "0", "--format", "json", "--out", p]);
        assert_eq!(code, 0);
        assert!(out.is_empty());
        let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(doc["command"], "eval");
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn help_exits_cleanly() {
        let (code, out, _) = theta(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("spectrum"));
        assert_eq!(theta(&["frobnicate"]).0, EXIT_USAGE);
    }
}
