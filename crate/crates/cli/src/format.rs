//! Output layouts: CSV with 15 significant digits, and aligned tables with six
//! decimals where tiny values are written in `D` exponent notation
//! (`9.5D-04`).

use std::io::{self, Write};

use toepfer::falkner_skan::{BetaMinResult, BranchPoint, Flow};
use toepfer::itm::IterationRecord;
use toepfer::ode::IntegrationStats;
use toepfer::profile::ProfilePoint;

pub const PROFILE_HEADER: &str = "eta,f,fp,fpp";
pub const BRANCH_HEADER: &str = "beta,flow,fpp0,iterations,converged";
pub const ITERATION_HEADER: &str = "j,h_star,gamma,rel_change,fpp0";
pub const ITERATION_STATS_HEADER: &str = "j,h_star,gamma,rel_change,fpp0,steps,failed,evaluations";
pub const BETA_MIN_HEADER: &str = "beta_min,fpp0_normal,fpp0_reverse,bracket_lo,bracket_hi";

/// 15 significant digits in e-notation.
pub fn csv_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.14e}")
    } else {
        format!("{x}")
    }
}

fn csv_opt(x: Option<f64>) -> String {
    x.map(csv_num).unwrap_or_default()
}

/// Six decimals, or a one-decimal mantissa with `D` exponent below `1e-3`.
pub fn table_num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 || x.abs() >= 1e-3 {
        return format!("{x:.6}");
    }
    let exp = x.abs().log10().floor() as i32;
    let mut mantissa = x / 10f64.powi(exp);
    let mut exp = exp;
    if format!("{:.1}", mantissa.abs()) == "10.0" {
        mantissa /= 10.0;
        exp += 1;
    }
    format!(
        "{mantissa:.1}D{}{:02}",
        if exp < 0 { '-' } else { '+' },
        exp.abs()
    )
}

fn table_opt(x: Option<f64>) -> String {
    x.map(table_num).unwrap_or_default()
}

pub fn write_profile_csv(out: &mut dyn Write, profile: &[ProfilePoint]) -> io::Result<()> {
    writeln!(out, "{PROFILE_HEADER}")?;
    for p in profile {
        writeln!(
            out,
            "{},{},{},{}",
            csv_num(p.eta),
            csv_num(p.f),
            csv_num(p.fp),
            csv_num(p.fpp)
        )?;
    }
    Ok(())
}

pub fn write_iterations_csv(
    out: &mut dyn Write,
    records: &[IterationRecord],
    with_stats: bool,
) -> io::Result<()> {
    writeln!(
        out,
        "{}",
        if with_stats {
            ITERATION_STATS_HEADER
        } else {
            ITERATION_HEADER
        }
    )?;
    for r in records {
        write!(
            out,
            "{},{},{},{},{}",
            r.j,
            csv_num(r.h_star),
            csv_num(r.gamma),
            csv_opt(r.rel_change),
            csv_opt(r.fpp0_physical)
        )?;
        if with_stats {
            write!(
                out,
                ",{},{},{}",
                r.stats.steps, r.stats.failed, r.stats.evaluations
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_iterations_table(
    out: &mut dyn Write,
    records: &[IterationRecord],
    with_stats: bool,
) -> io::Result<()> {
    write!(
        out,
        "{:>4}  {:>16}  {:>12}  {:>12}  {:>12}",
        "j", "h*", "Gamma(h*)", "rel change", "f''(0)"
    )?;
    if with_stats {
        write!(
            out,
            "  {:>8}  {:>8}  {:>11}",
            "steps", "failed", "evaluations"
        )?;
    }
    writeln!(out)?;
    for r in records {
        write!(
            out,
            "{:>4}  {:>16}  {:>12}  {:>12}  {:>12}",
            r.j,
            table_num(r.h_star),
            table_num(r.gamma),
            table_opt(r.rel_change),
            table_opt(r.fpp0_physical)
        )?;
        if with_stats {
            write!(
                out,
                "  {:>8}  {:>8}  {:>11}",
                r.stats.steps, r.stats.failed, r.stats.evaluations
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_branch_csv(out: &mut dyn Write, points: &[BranchPoint]) -> io::Result<()> {
    writeln!(out, "{BRANCH_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{}",
            csv_num(p.beta),
            p.flow,
            csv_num(p.fpp0),
            p.iterations,
            p.converged
        )?;
    }
    Ok(())
}

pub fn write_branch_table(out: &mut dyn Write, points: &[BranchPoint]) -> io::Result<()> {
    writeln!(
        out,
        "{:>12}  {:>8}  {:>12}  {:>10}  {:>9}",
        "beta", "flow", "f''(0)", "iterations", "converged"
    )?;
    for p in points {
        writeln!(
            out,
            "{:>12}  {:>8}  {:>12}  {:>10}  {:>9}",
            table_num(p.beta),
            p.flow.as_str(),
            table_num(p.fpp0),
            p.iterations,
            p.converged
        )?;
    }
    Ok(())
}

pub fn write_beta_min_csv(out: &mut dyn Write, r: &BetaMinResult) -> io::Result<()> {
    writeln!(out, "{BETA_MIN_HEADER}")?;
    writeln!(
        out,
        "{},{},{},{},{}",
        csv_num(r.beta_min),
        csv_num(r.fpp0_normal),
        csv_num(r.fpp0_reverse),
        csv_num(r.bracket.0),
        csv_num(r.bracket.1)
    )
}

/// Error raised while reading back one of the CSV layouts.
#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header `{found}`, expected `{expected}`")]
    Header { found: String, expected: String },
    #[error("bad field `{0}`")]
    Field(String),
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn check_header(r: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<(), ParseError> {
    let header = r.headers()?.clone();
    let found: Vec<&str> = header.iter().collect();
    if !expected.contains(&found.join(",").as_str()) {
        return Err(ParseError::Header {
            found: found.join(","),
            expected: expected[0].to_string(),
        });
    }
    Ok(())
}

fn num(s: &str) -> Result<f64, ParseError> {
    s.trim()
        .parse()
        .map_err(|_| ParseError::Field(s.to_string()))
}

fn opt_num(s: &str) -> Result<Option<f64>, ParseError> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        num(s).map(Some)
    }
}

fn count(s: &str) -> Result<usize, ParseError> {
    s.trim()
        .parse()
        .map_err(|_| ParseError::Field(s.to_string()))
}

pub fn parse_profile_csv(text: &str) -> Result<Vec<ProfilePoint>, ParseError> {
    let mut r = reader(text);
    check_header(&mut r, &[PROFILE_HEADER])?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(ProfilePoint {
                eta: num(&rec[0])?,
                f: num(&rec[1])?,
                fp: num(&rec[2])?,
                fpp: num(&rec[3])?,
            })
        })
        .collect()
}

pub fn parse_iterations_csv(text: &str) -> Result<Vec<IterationRecord>, ParseError> {
    let mut r = reader(text);
    check_header(&mut r, &[ITERATION_HEADER, ITERATION_STATS_HEADER])?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            let fpp0_physical = opt_num(&rec[4])?;
            let stats = if rec.len() == 8 {
                IntegrationStats {
                    steps: count(&rec[5])?,
                    failed: count(&rec[6])?,
                    evaluations: count(&rec[7])?,
                }
            } else {
                IntegrationStats::default()
            };
            Ok(IterationRecord {
                j: count(&rec[0])?,
                h_star: num(&rec[1])?,
                gamma: num(&rec[2])?,
                rel_change: opt_num(&rec[3])?,
                fpp0_physical,
                halted_early: fpp0_physical.is_none(),
                stats,
            })
        })
        .collect()
}

pub fn parse_branch_csv(text: &str) -> Result<Vec<BranchPoint>, ParseError> {
    let mut r = reader(text);
    check_header(&mut r, &[BRANCH_HEADER])?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(BranchPoint {
                beta: num(&rec[0])?,
                flow: rec[1]
                    .parse::<Flow>()
                    .map_err(|_| ParseError::Field(rec[1].to_string()))?,
                fpp0: num(&rec[2])?,
                iterations: count(&rec[3])?,
                converged: rec[4]
                    .parse()
                    .map_err(|_| ParseError::Field(rec[4].to_string()))?,
            })
        })
        .collect()
}
