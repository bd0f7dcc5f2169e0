//! Newline-delimited report rows and the human summary.

use std::io::Write;

use serde::Serialize;

use super::config::{CaseConfig, SCHEMA_VERSION};
use crate::integrate::{Estimate, Verdict};

pub const GIT_DESCRIBE: &str = env!("DMVERIFY_GIT_DESCRIBE");

/// One flattened row per (case, f, t). The leading fields have fixed names; the
/// rest are extras.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRecord {
    pub family: String,
    pub p: usize,
    pub q: usize,
    #[serde(rename = "N")]
    pub big_n: Option<usize>,
    pub sign: String,
    pub f_name: String,
    pub t: Option<f64>,
    pub lhs_value: Option<f64>,
    pub lhs_stderr: Option<f64>,
    pub rhs_value: Option<f64>,
    pub rhs_stderr: Option<f64>,
    pub ratio: Option<f64>,
    pub c_hat: Option<f64>,
    pub sigma_distance: Option<f64>,
    pub verdict: Verdict,
    pub method: String,
    pub n: u64,
    pub seed: u64,
    pub schema_version: u32,
    pub case: String,
    pub kind: String,
    pub radius: Option<f64>,
    pub lhs_value_im: Option<f64>,
    pub rhs_value_im: Option<f64>,
    pub lhs_method: Option<String>,
    pub reference_value: Option<f64>,
    pub reason: Option<String>,
    pub master_seed: u64,
    pub git_describe: String,
    pub config: CaseConfig,
    pub wall_time_ms: f64,
}

impl ReportRecord {
    /// A row with every optional field empty.
    pub fn blank(config: &CaseConfig, verdict: Verdict, seed: u64, master_seed: u64) -> Self {
        Self {
            family: String::new(),
            p: 0,
            q: 0,
            big_n: None,
            sign: String::new(),
            f_name: String::new(),
            t: None,
            lhs_value: None,
            lhs_stderr: None,
            rhs_value: None,
            rhs_stderr: None,
            ratio: None,
            c_hat: None,
            sigma_distance: None,
            verdict,
            method: String::new(),
            n: 0,
            seed,
            schema_version: SCHEMA_VERSION,
            case: config.name.clone(),
            kind: config.kind.as_str().to_string(),
            radius: None,
            lhs_value_im: None,
            rhs_value_im: None,
            lhs_method: None,
            reference_value: None,
            reason: None,
            master_seed,
            git_describe: GIT_DESCRIBE.to_string(),
            config: config.clone(),
            wall_time_ms: 0.0,
        }
    }

    pub fn set_lhs(&mut self, e: &Estimate) {
        self.lhs_value = Some(e.value.re);
        self.lhs_value_im = Some(e.value.im);
        self.lhs_stderr = Some(e.stderr);
        self.lhs_method = Some(e.method.as_str().to_string());
    }

    pub fn set_rhs(&mut self, e: &Estimate) {
        self.rhs_value = Some(e.value.re);
        self.rhs_value_im = Some(e.value.im);
        self.rhs_stderr = Some(e.stderr);
        self.method = e.method.as_str().to_string();
        self.n = e.n;
    }
}

pub fn write_rows(out: &mut dyn Write, rows: &[ReportRecord]) -> std::io::Result<()> {
    for row in rows {
        serde_json::to_writer(&mut *out, row)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub pass: usize,
    pub fail: usize,
    pub error: usize,
    pub skipped: usize,
}

impl Tally {
    pub fn of(rows: &[ReportRecord]) -> Self {
        let mut t = Tally::default();
        for r in rows {
            match r.verdict {
                Verdict::Pass => t.pass += 1,
                Verdict::Fail => t.fail += 1,
                Verdict::Error => t.error += 1,
                Verdict::Skipped => t.skipped += 1,
            }
        }
        t
    }

    pub fn total(&self) -> usize {
        self.pass + self.fail + self.error + self.skipped
    }
}

pub fn write_summary(out: &mut dyn Write, cases: &[(String, Vec<ReportRecord>)], exit: i32) -> std::io::Result<()> {
    writeln!(out, "dmverify {GIT_DESCRIBE}")?;
    for (name, rows) in cases {
        let t = Tally::of(rows);
        let label = rows
            .first()
            .map(|r| match r.big_n {
                Some(n) => format!("{} N={} {}", r.family, n, r.sign),
                None if r.family == "spin" => "spin".to_string(),
                None => format!("{}({},{}) {}", r.family, r.p, r.q, r.sign),
            })
            .unwrap_or_default();
        let c_hat = rows
            .iter()
            .find_map(|r| r.c_hat)
            .map(|c| format!("  c_hat={c:.9}"))
            .unwrap_or_default();
        writeln!(
            out,
            "  {:<30} {:<22} rows={:<4} pass={:<4} fail={:<3} error={:<3} skipped={}{}",
            name,
            label,
            t.total(),
            t.pass,
            t.fail,
            t.error,
            t.skipped,
            c_hat
        )?;
        for r in rows.iter().filter(|r| r.verdict != Verdict::Pass) {
            writeln!(
                out,
                "    {} f={} t={} {}",
                r.verdict.as_str(),
                r.f_name,
                r.t.map(|t| t.to_string()).unwrap_or_else(|| "-".into()),
                r.reason.as_deref().unwrap_or("")
            )?;
        }
    }
    let all: Vec<ReportRecord> = cases.iter().flat_map(|(_, r)| r.iter().cloned()).collect();
    let t = Tally::of(&all);
    writeln!(
        out,
        "summary: {} rows, {} pass, {} fail, {} error, {} skipped; exit {}",
        t.total(),
        t.pass,
        t.fail,
        t.error,
        t.skipped,
        exit
    )
}
