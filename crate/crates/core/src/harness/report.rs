//! Run reports and their CSV / table renderings.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Against the closed-form solution.
    Exact,
    /// Against a run on the bisected grid.
    SelfConvergence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub problem: String,
    pub formulation: String,
    pub grid: String,
    pub panels: usize,
    pub order: usize,
    pub rel_l2_error: Option<f64>,
    pub error_kind: ErrorKind,
    pub cond_p: Option<f64>,
    pub max_cond_t: Option<f64>,
    pub bc_residual: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Table,
}

pub const CSV_HEADER: &str = "problem,formulation,grid,panels,order,rel_l2_error,cond_P,max_cond_T,seconds";

fn sci(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6e}")).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl RunReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{:.6}",
            csv_field(&self.problem),
            csv_field(&self.formulation),
            csv_field(&self.grid),
            self.panels,
            self.order,
            sci(self.rel_l2_error),
            sci(self.cond_p),
            sci(self.max_cond_t),
            self.seconds
        )
    }
}

pub fn to_csv(reports: &[RunReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn to_table(reports: &[RunReport]) -> String {
    let header = [
        "problem", "formulation", "grid", "p", "error", "cond(P)", "max cond(T)", "seconds",
    ];
    let rows: Vec<[String; 8]> = reports
        .iter()
        .map(|r| {
            let err = match (r.rel_l2_error, r.error_kind) {
                (Some(e), ErrorKind::SelfConvergence) => format!("{e:.3e}*"),
                (e, _) => e.map(|e| format!("{e:.3e}")).unwrap_or_else(|| "-".into()),
            };
            let opt = |v: Option<f64>| v.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
            [
                r.problem.clone(),
                r.formulation.clone(),
                r.grid.clone(),
                r.order.to_string(),
                err,
                opt(r.cond_p),
                opt(r.max_cond_t),
                format!("{:.3}", r.seconds),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &header);
    for row in &rows {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&mut out, &cells);
    }
    if reports.iter().any(|r| r.error_kind == ErrorKind::SelfConvergence) {
        out.push_str("* self-convergence error\n");
    }
    out
}

pub fn emit(reports: &[RunReport], format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Csv => to_csv(reports),
        ReportFormat::Table => to_table(reports),
    }
    .into_bytes()
}
