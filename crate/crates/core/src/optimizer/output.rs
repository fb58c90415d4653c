use std::io::Write;

use super::pipeline::{OptReport, OptResult};
use crate::error::Result;
use crate::format::sig6;
use crate::scalar::Scalar;

fn share_headers(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("n_{i}")).collect()
}

/// One `n_1..n_K,utility` row per evaluated candidate.
pub fn write_candidates_csv<T: Scalar, W: Write>(report: &OptReport<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let k = report.candidates.first().map_or(0, |s| s.len());
    let mut header = share_headers(k);
    header.push("utility".to_string());
    w.write_record(&header)?;
    for (s, v) in report.candidates.iter().zip(&report.values) {
        let mut row: Vec<String> = s.shares().iter().map(|x| sig6(x.as_f64())).collect();
        row.push(sig6(v.as_f64()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One summary row per method.
pub fn write_results_csv<T: Scalar, W: Write>(results: &[OptResult<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let k = results.first().map_or(0, |r| r.strategy.len());
    let mut header = vec!["method".to_string()];
    header.extend(share_headers(k));
    header.extend(
        [
            "utility",
            "expected_cost",
            "risk",
            "candidates",
            "raw_drawn",
            "gd_iterations",
            "surface_rmse",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;
    for r in results {
        let mut row = vec![r.method.name().to_string()];
        row.extend(r.strategy.shares().iter().map(|x| sig6(x.as_f64())));
        row.push(sig6(r.utility.as_f64()));
        row.push(sig6(r.expected_cost.as_f64()));
        row.push(sig6(r.risk.as_f64()));
        row.push(r.diagnostics.candidates.to_string());
        row.push(r.diagnostics.raw_drawn.to_string());
        row.push(r.diagnostics.gd_iterations.to_string());
        row.push(r.diagnostics.surface_rmse.map(sig6).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
