//! CSV tables and text summaries.
//!
//! Short tables print three significant digits, `.full.csv` siblings print
//! every value at round-trip precision.

use std::fmt::Write as _;

use ifem_core::error_norms::{loglog_slope, record_orders, Column};
use ifem_core::ErrorRecord;

pub const UNIFORM_HEADER: &str = "dof,De,De_order,Die,Die_order,Dre,Dre_order,Dpe,Dpe_order";
pub const ADAPTIVE_HEADER: &str = "iter,dof,energy_err,eta,kappa";

const UNIFORM_COLUMNS: [Column; 4] = [Column::De, Column::Die, Column::Dre, Column::Dpe];

/// Scientific notation with three significant digits and a two-digit
/// exponent, e.g. `1.23e-04`.
pub fn sci3(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.2e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn full(x: f64) -> String {
    format!("{x:e}")
}

pub fn uniform_csv(records: &[ErrorRecord], precise: bool) -> String {
    let orders: Vec<Vec<f64>> = UNIFORM_COLUMNS.iter().map(|&c| record_orders(records, c)).collect();
    let mut s = format!("{UNIFORM_HEADER}\n");
    for (i, r) in records.iter().enumerate() {
        let _ = write!(s, "{}", r.dof);
        for (c, o) in UNIFORM_COLUMNS.iter().zip(&orders) {
            let value = c.of(r);
            let order = match i.checked_sub(1) {
                None => String::new(),
                Some(k) if precise => o[k].to_string(),
                Some(k) => format!("{:.2}", o[k]),
            };
            let value = if precise { full(value) } else { sci3(value) };
            let _ = write!(s, ",{value},{order}");
        }
        s.push('\n');
    }
    s
}

pub fn adaptive_csv(records: &[ErrorRecord], precise: bool) -> String {
    let mut s = format!("{ADAPTIVE_HEADER}\n");
    for (i, r) in records.iter().enumerate() {
        let row = if precise {
            format!("{i},{},{},{},{}", r.dof, full(r.energy_error), full(r.eta_global), r.kappa)
        } else {
            format!("{i},{},{},{},{:.3}", r.dof, sci3(r.energy_error), sci3(r.eta_global), r.kappa)
        };
        s.push_str(&row);
        s.push('\n');
    }
    s
}

pub fn uniform_summary(records: &[ErrorRecord]) -> String {
    let mut s = String::from("final orders in dof:");
    for (name, c) in ["De", "Die", "Dre", "Dpe"].iter().zip(UNIFORM_COLUMNS) {
        let o = record_orders(records, c).last().copied().unwrap_or(f64::NAN);
        let _ = write!(s, " {name} {o:.2}");
    }
    s.push('\n');
    s
}

/// Least-squares slope of `log e` against `log N` over the final half.
pub fn final_half_slope(records: &[ErrorRecord], column: Column) -> f64 {
    let tail = &records[records.len() / 2..];
    let dofs: Vec<usize> = tail.iter().map(|r| r.dof).collect();
    let errs: Vec<f64> = tail.iter().map(|r| column.of(r)).collect();
    loglog_slope(&dofs, &errs)
}

pub fn adaptive_summary(records: &[ErrorRecord]) -> String {
    let mut s = String::from("slopes over the final half of the iterations:");
    for (name, c) in [
        ("energy", Column::Energy),
        ("eta", Column::Eta),
        ("recovered_energy", Column::RecoveredEnergy),
        ("Dre", Column::Dre),
    ] {
        let _ = write!(s, " {name} {:.3}", final_half_slope(records, c));
    }
    if let Some(last) = records.last() {
        let _ = write!(s, "\nfinal: dof {} energy {} eta {} kappa {:.4}", last.dof, sci3(last.energy_error), sci3(last.eta_global), last.kappa);
    }
    s.push('\n');
    s
}
