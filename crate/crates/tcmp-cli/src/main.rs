//! Command dispatch for the `tcmp` binary.
//!
//! Exit codes: 0 solved (or check passed), 2 malformed input or usage,
//! 3 infeasible (or check failed), 4 indeterminate, 5 relation
//! violated by the table itself.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tcmp::analysis::{classify_cubic, compute_xi, harmonic_cubic_zeros, CubicParams};
use tcmp::moment::{MomentMatrix, MomentTable, PsdReport};
use tcmp::poly::{BivarPoly, Monomial};
use tcmp::solver::{check_cubic_conditions, extract_column_relation, solve_truncated, SolveReport};
use tcmp::{Tolerances, C64};
use tcmp_cli::format::{
    monomial_label, CheckReportDoc, ConditionsDoc, MatrixDoc, MeasureFile, MomentsFile, PointDoc,
    RootsDoc, SolveDoc, XiDoc,
};
use tcmp_cli::{exit_code_for_status, CliError, EXIT_INFEASIBLE, EXIT_SOLVED};

#[derive(Parser)]
#[command(
    name = "tcmp",
    version,
    about = "Truncated complex moment problems with a column dependence relation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a measure file into a truncated moment table
    Generate {
        /// Measure file (JSON: {"atoms": [{"re", "im", "weight"}]})
        #[arg(long)]
        input: PathBuf,
        /// Destination moments file
        #[arg(long)]
        output: PathBuf,
        /// Largest total degree i+j to tabulate
        #[arg(long)]
        degree: u32,
    },
    /// Decide solvability and construct a representing measure
    Solve {
        /// Moments file; the relation is taken from the file when
        /// present and extracted from the moment matrix otherwise
        #[arg(long)]
        input: PathBuf,
        /// Write the representing measure here when one is found
        #[arg(long)]
        output: Option<PathBuf>,
        /// Override the decision tolerances with this base value
        #[arg(long)]
        tol: Option<f64>,
        /// Emit a machine-readable JSON report
        #[arg(long)]
        json: bool,
    },
    /// Zeros of a harmonic cubic characteristic polynomial
    Roots {
        #[command(flatten)]
        cubic: CubicArgs,
        /// Emit a machine-readable JSON report
        #[arg(long)]
        json: bool,
    },
    /// Check the region equalities and positivity of a moment table
    Check {
        /// Moments file to test
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        cubic: CubicArgs,
        /// Override the decision tolerances with this base value
        #[arg(long)]
        tol: Option<f64>,
        /// Emit a machine-readable JSON report
        #[arg(long)]
        json: bool,
    },
    /// Print the moment matrix M(level) of a table
    BuildMatrix {
        /// Moments file of degree at least 2*level
        #[arg(long)]
        input: PathBuf,
        /// Matrix level n of M(n)
        #[arg(long)]
        level: u32,
        /// Emit a machine-readable JSON report
        #[arg(long)]
        json: bool,
    },
    /// Degree bound data for a membership remainder
    Xi {
        /// Degree of the characteristic polynomial the remainder came from
        #[arg(long)]
        r: u32,
        /// Terms of the remainder, each "i,j,re[,im]" for re*conj(z)^i*z^j
        #[arg(required = true)]
        terms: Vec<String>,
        /// Emit a machine-readable JSON report
        #[arg(long)]
        json: bool,
    },
}

/// One coefficient pair of a harmonic cubic: either the direct form
/// z^3 + a*z + b*conj(z) or the rotated form z^3 - i*t*z - u*conj(z).
#[derive(Args, Debug, Clone, Copy)]
struct CubicArgs {
    /// Coefficient of z in the direct form
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    /// Coefficient of conj(z) in the direct form
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Coefficient t in the rotated form
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
    /// Coefficient u in the rotated form
    #[arg(long, allow_negative_numbers = true)]
    u: Option<f64>,
}

impl CubicArgs {
    fn params(&self) -> Result<CubicParams, CliError> {
        match (self.a, self.b, self.t, self.u) {
            (Some(a), Some(b), None, None) => Ok(CubicParams::direct(a, b)),
            (None, None, Some(t), Some(u)) => Ok(CubicParams::rotated(t, u)),
            _ => Err(CliError::Usage(
                "pass exactly one coefficient pair: --a with --b, or --t with --u".into(),
            )),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Generate { input, output, degree } => cmd_generate(&input, &output, degree),
        Command::Solve { input, output, tol, json } => {
            cmd_solve(&input, output.as_deref(), tol, json)
        }
        Command::Roots { cubic, json } => cmd_roots(&cubic, json),
        Command::Check { input, cubic, tol, json } => cmd_check(&input, &cubic, tol, json),
        Command::BuildMatrix { input, level, json } => cmd_build_matrix(&input, level, json),
        Command::Xi { r, terms, json } => cmd_xi(r, &terms, json),
    }
}

fn tolerances(tol: Option<f64>) -> Tolerances {
    tol.map(Tolerances::with_base).unwrap_or_default()
}

fn fmt_c(z: C64) -> String {
    format!("{:.6}{:+.6}i", z.re, z.im)
}

fn print_json<T: serde::Serialize>(doc: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(doc).expect("report document serializes")
    );
}

fn cmd_generate(input: &Path, output: &Path, degree: u32) -> Result<u8, CliError> {
    let mu = MeasureFile::load(input)?.to_measure()?;
    let table = MomentTable::from_source(&mu, degree)?;
    MomentsFile::from_table(&table, None).save(output)?;
    println!(
        "wrote {} moments of degree at most {} to {}",
        table.upper_entries().len(),
        degree,
        output.display()
    );
    Ok(EXIT_SOLVED)
}

fn cmd_solve(
    input: &Path,
    output: Option<&Path>,
    tol: Option<f64>,
    json: bool,
) -> Result<u8, CliError> {
    let tols = tolerances(tol);
    let file = MomentsFile::load(input)?;
    let table = file.to_table()?;
    let relation = match file.to_relation()? {
        Some(r) => r,
        None => {
            let degree = table.degree();
            if degree < 2 || degree % 2 != 0 {
                return Err(CliError::Usage(format!(
                    "the file has no relation and degree {degree} leaves no complete \
                     moment matrix level to extract one from; supply a relation or \
                     an even degree of at least 2"
                )));
            }
            let k = (degree - 2) / 2;
            let m = MomentMatrix::build(&table, k + 1)?;
            extract_column_relation(&m, &tols)?.ok_or_else(|| {
                CliError::Usage(format!(
                    "no column relation found in M({}) and none supplied in the file",
                    k + 1
                ))
            })?
        }
    };
    let report = solve_truncated(&table, &relation, &tols)?;
    if json {
        print_json(&SolveDoc::from_report(&report));
    } else {
        print_solve_text(&report);
    }
    if let (Some(path), Some(mu)) = (output, &report.measure) {
        MeasureFile::from_measure(mu).save(path)?;
    }
    Ok(exit_code_for_status(report.status))
}

fn print_solve_text(report: &SolveReport) {
    println!("status: {}", report.status);
    if let Some(mu) = &report.measure {
        println!("measure: {mu}");
        println!("atoms: {}", mu.num_atoms());
        println!("total mass: {:.12}", mu.total_mass());
    }
    if let Some(t) = &report.failed_test {
        println!("failed test: {t}");
    }
    let d = &report.diagnostics;
    if let Some(xi) = &d.xi {
        println!("xi: {xi}");
    }
    if let Some(level) = d.xi_level {
        println!("membership level: M({level})");
    }
    if let Some(zs) = &d.zero_set {
        let pts: Vec<String> = zs.points().iter().map(|&z| fmt_c(z)).collect();
        println!("zero set ({}): {}", zs.count(), pts.join(", "));
    }
    if let Some(r) = d.membership_residual {
        println!("membership residual: {r:.3e}");
    }
    for p in &d.psd_reports {
        print_psd_line(p);
    }
    if let Some(c) = &d.condition_report {
        println!("region: {}", c.region);
        for check in c.riesz.iter().chain(c.entrywise.iter()) {
            println!("  {}: residual {:.3e}", check.name, check.residual);
        }
    }
    if let Some(v) = d.verify_residual {
        println!("verification residual: {v:.3e}");
    }
}

fn print_psd_line(p: &PsdReport) {
    println!(
        "M({}): {} (min eigenvalue {:.6e}, max eigenvalue {:.6e}, rank {})",
        p.level,
        if p.is_psd { "PSD" } else { "not PSD" },
        p.min_eigenvalue,
        p.max_eigenvalue,
        p.rank
    );
}

fn cmd_roots(cubic: &CubicArgs, json: bool) -> Result<u8, CliError> {
    let params = cubic.params()?;
    let region = classify_cubic(&params);
    let zeros = harmonic_cubic_zeros(&params);
    if json {
        let rotated = params.is_rotated();
        let doc = RootsDoc {
            form: if rotated { "rotated" } else { "direct" }.into(),
            a: (!rotated).then(|| params.a()),
            b: (!rotated).then(|| params.b()),
            t: rotated.then(|| params.a()),
            u: rotated.then(|| params.b()),
            region: region.to_string(),
            count: zeros.count(),
            zeros: zeros.points().iter().map(|&z| z.into()).collect(),
        };
        print_json(&doc);
    } else {
        println!("characteristic polynomial: {}", params.charpoly());
        println!("region: {region}");
        println!("zeros ({}):", zeros.count());
        for &z in zeros.points() {
            println!("  {}", fmt_c(z));
        }
    }
    Ok(EXIT_SOLVED)
}

fn cmd_check(
    input: &Path,
    cubic: &CubicArgs,
    tol: Option<f64>,
    json: bool,
) -> Result<u8, CliError> {
    let params = cubic.params()?;
    let region = classify_cubic(&params);
    let level = if region.zero_count() >= 5 { 3 } else { 2 };
    let tols = tolerances(tol);
    let table = MomentsFile::load(input)?.to_table()?;
    if table.degree() < 2 * level {
        return Err(CliError::Usage(format!(
            "region {region} needs M({level}), so the table degree must be at least {}; got {}",
            2 * level,
            table.degree()
        )));
    }
    let m = MomentMatrix::build(&table, level)?;
    let psd = m.psd_check(&tols);
    let report = check_cubic_conditions(&table, &params)?;
    let pass = psd.is_psd && report.passes(tols.indeterminate);
    if json {
        let doc = CheckReportDoc {
            conditions: ConditionsDoc::from_report(&report),
            psd: psd.into(),
            verdict: if pass { "pass" } else { "fail" }.into(),
            exit_code: if pass { EXIT_SOLVED } else { EXIT_INFEASIBLE },
        };
        print_json(&doc);
    } else {
        println!("region: {region}");
        println!("multiplier equalities:");
        for c in &report.riesz {
            println!("  {}: residual {:.3e}", c.name, c.residual);
        }
        println!("entry equalities:");
        for c in &report.entrywise {
            println!("  {}: residual {:.3e}", c.name, c.residual);
        }
        print_psd_line(&psd);
        println!(
            "verdict: {} (equality threshold {:.1e})",
            if pass { "pass" } else { "fail" },
            tols.indeterminate
        );
    }
    Ok(if pass { EXIT_SOLVED } else { EXIT_INFEASIBLE })
}

fn cmd_build_matrix(input: &Path, level: u32, json: bool) -> Result<u8, CliError> {
    let table = MomentsFile::load(input)?.to_table()?;
    if table.degree() < 2 * level {
        return Err(CliError::Usage(format!(
            "M({level}) needs a table of degree at least {}; got {}",
            2 * level,
            table.degree()
        )));
    }
    let m = MomentMatrix::build(&table, level)?;
    let labels: Vec<String> = (0..m.dim())
        .map(|idx| monomial_label(Monomial::from_degree_lex_index(idx)))
        .collect();
    if json {
        let rows: Vec<Vec<PointDoc>> = (0..m.dim())
            .map(|r| (0..m.dim()).map(|c| m.matrix()[(r, c)].into()).collect())
            .collect();
        print_json(&MatrixDoc { level, dim: m.dim(), labels, rows });
    } else {
        println!("M({}), dimension {}", level, m.dim());
        let width = labels.iter().map(|l| l.chars().count()).max().unwrap_or(1);
        for r in 0..m.dim() {
            let cells: Vec<String> = (0..m.dim()).map(|c| fmt_c(m.matrix()[(r, c)])).collect();
            println!("{:>width$}: {}", labels[r], cells.join("  "));
        }
    }
    Ok(EXIT_SOLVED)
}

fn parse_term(spec: &str) -> Result<(Monomial, C64), CliError> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(CliError::Usage(format!(
            "term '{spec}' is not of the form i,j,re[,im]"
        )));
    }
    let exponent = |s: &str, what: &str| -> Result<u32, CliError> {
        s.parse().map_err(|_| {
            CliError::Usage(format!("term '{spec}': {what} '{s}' is not a nonnegative integer"))
        })
    };
    let number = |s: &str, what: &str| -> Result<f64, CliError> {
        s.parse()
            .map_err(|_| CliError::Usage(format!("term '{spec}': {what} '{s}' is not a number")))
    };
    let i = exponent(parts[0], "exponent i")?;
    let j = exponent(parts[1], "exponent j")?;
    let re = number(parts[2], "re")?;
    let im = if parts.len() == 4 { number(parts[3], "im")? } else { 0.0 };
    Ok((Monomial::new(i, j), C64::new(re, im)))
}

fn cmd_xi(r: u32, terms: &[String], json: bool) -> Result<u8, CliError> {
    let parsed: Vec<(Monomial, C64)> = terms
        .iter()
        .map(|s| parse_term(s))
        .collect::<Result<_, _>>()?;
    let h = BivarPoly::from_terms(parsed);
    let data = compute_xi(&h, r)?;
    if json {
        let doc = XiDoc {
            d_h: data.d_h,
            c1: data.c1,
            c1_conj: data.c1_conj,
            c2: data.c2,
            c2_conj: data.c2_conj,
            c: data.c,
            alpha: data.alpha,
            xi: data.xi,
            display: data.to_string(),
        };
        print_json(&doc);
    } else {
        println!("h = {h}");
        println!("{data}");
    }
    Ok(EXIT_SOLVED)
}
