//! CSV output.

use std::io::Write;
use std::path::Path;

use crate::experiment::ResultRow;

pub const HEADER: [&str; 10] = [
    "experiment",
    "d",
    "N",
    "theta",
    "gamma_sq",
    "exact",
    "closed_form",
    "mc_estimate",
    "mc_stderr",
    "seed",
];

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct EmitError {
    pub path: String,
    #[source]
    pub source: csv::Error,
}

/// Formats `x` with 12 significant digits in fixed-point notation.
pub fn format_sig12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 || !x.is_finite() {
        return format!(
            "{:.*}",
            (DIGITS - 1) as usize,
            if x.is_finite() { 0.0 } else { x }
        );
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (DIGITS - 1 - magnitude).max(0) as usize;
    let text = format!("{x:.decimals$}");
    // rounding can carry into a new leading digit, e.g. 9.99…95 -> 10.0…0
    let carried = text
        .trim_start_matches('-')
        .split('.')
        .next()
        .map_or(0, |int| int.trim_start_matches('0').len()) as i32;
    if carried > magnitude + 1 && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        text
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig12).unwrap_or_default()
}

fn record(row: &ResultRow) -> [String; 10] {
    [
        row.experiment.clone(),
        row.d.to_string(),
        row.rounds.to_string(),
        opt(row.theta),
        opt(row.gamma_sq),
        format_sig12(row.exact),
        opt(row.closed_form),
        opt(row.mc_estimate),
        opt(row.mc_stderr),
        row.seed.map(|s| s.to_string()).unwrap_or_default(),
    ]
}

/// Writes the header and one line per row, each terminated by `\n`.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is UTF-8")
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<(), EmitError> {
    let wrap = |source| EmitError {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(|e| wrap(e.into()))?;
    write_csv(rows, std::io::BufWriter::new(file)).map_err(wrap)
}
