//! Study results and their CSV and markdown forms.

use std::fmt::Write as _;
use std::path::Path;

use crate::CliError;

pub const CSV_HEADER: &str = "m,n,error,order,wall_time_s,storage_scalars";

/// One rung. A failed rung keeps its mesh and the reason, nothing else.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub m: usize,
    pub n: usize,
    pub error: Option<f64>,
    pub order: Option<f64>,
    pub wall_time: Option<f64>,
    pub storage: Option<usize>,
    pub failure: Option<String>,
}

impl Row {
    pub fn failed(m: usize, n: usize, reason: impl Into<String>) -> Self {
        Self {
            m,
            n,
            error: None,
            order: None,
            wall_time: None,
            storage: None,
            failure: Some(reason.into()),
        }
    }

    pub fn is_failed(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<Row>,
}

impl ConvergenceReport {
    /// Fills `order = log₂(E_prev / E)` wherever both errors exist.
    pub fn compute_orders(&mut self) {
        for i in 0..self.rows.len() {
            self.rows[i].order = match (
                i.checked_sub(1).and_then(|j| self.rows[j].error),
                self.rows[i].error,
            ) {
                (Some(prev), Some(cur)) if prev > 0.0 && cur > 0.0 => Some((prev / cur).log2()),
                _ => None,
            };
        }
    }

    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(Row::is_failed)
    }

    /// Every float rounded to the precision the CSV carries.
    pub fn rounded(&self) -> Self {
        let r = |v: Option<f64>| v.map(|x| fmt_sig(x).parse::<f64>().unwrap());
        Self {
            rows: self
                .rows
                .iter()
                .map(|row| Row {
                    error: r(row.error),
                    order: r(row.order),
                    wall_time: r(row.wall_time),
                    failure: None,
                    ..row.clone()
                })
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), fmt_sig);
            let order = match row.order {
                Some(o) => fmt_sig(o),
                None if i == 0 => String::new(),
                None => "-".to_string(),
            };
            let storage = row
                .storage
                .map_or_else(|| "-".to_string(), |v| v.to_string());
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                row.m,
                row.n,
                cell(row.error),
                order,
                cell(row.wall_time),
                storage
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_csv()).map_err(|e| CliError::Io(path.display().to_string(), e))
    }

    pub fn parse_csv(text: &str) -> Result<Self, CliError> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(CSV_HEADER) {
            return Err(CliError::Parse("missing or wrong CSV header".into()));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |what: &str| CliError::Parse(format!("row {}: bad {what}", i + 1));
            if cells.len() != 6 {
                return Err(bad("cell count"));
            }
            let float = |c: &str, what: &str| -> Result<Option<f64>, CliError> {
                match c {
                    "" | "-" => Ok(None),
                    v => v.parse().map(Some).map_err(|_| bad(what)),
                }
            };
            let error = float(cells[2], "error")?;
            rows.push(Row {
                m: cells[0].parse().map_err(|_| bad("m"))?,
                n: cells[1].parse().map_err(|_| bad("n"))?,
                error,
                order: float(cells[3], "order")?,
                wall_time: float(cells[4], "wall time")?,
                storage: match cells[5] {
                    "-" => None,
                    v => Some(v.parse().map_err(|_| bad("storage"))?),
                },
                failure: None,
            });
        }
        Ok(Self { rows })
    }

    /// Table with errors to five significant digits and orders to two decimals.
    pub fn to_markdown(&self, title: &str) -> String {
        let mut s = String::new();
        if !title.is_empty() {
            let _ = writeln!(s, "### {title}\n");
        }
        s.push_str("| m | n | E | Order | time (s) | storage |\n|---:|---:|---:|---:|---:|---:|\n");
        for row in &self.rows {
            let dash = || "-".to_string();
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} |",
                row.m,
                row.n,
                row.error.map_or_else(dash, |e| format!("{e:.4e}")),
                row.order.map_or_else(
                    || if row.is_failed() {
                        dash()
                    } else {
                        String::new()
                    },
                    |o| format!("{o:.2}")
                ),
                row.wall_time.map_or_else(dash, |t| format!("{t:.2}")),
                row.storage.map_or_else(dash, |v| v.to_string()),
            );
        }
        for row in self.rows.iter().filter(|r| r.failure.is_some()) {
            let _ = writeln!(
                s,
                "\n`{}:{}` failed: {}",
                row.m,
                row.n,
                row.failure.as_deref().unwrap_or("")
            );
        }
        s
    }
}

/// Six significant digits, shortest form, like C's `%.6g`.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mant))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}
