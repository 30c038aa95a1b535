use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use mal_core::rearrangement::decreasing_rearrangement;
use mal_core::WeightedValues;

use crate::CliError;

/// Reads `value,weight` rows (an optional `value,weight` header is skipped)
/// and writes `breakpoint,level` rows, one per step, with the breakpoint
/// being the right end of the step.
pub fn run(input: &Path, out: &Path) -> Result<(), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(input)
        .map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
    let (mut values, mut weights) = (Vec::new(), Vec::new());
    for (k, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
        let line = row.position().map_or(k as u64 + 1, |p| p.line());
        if k == 0 && row.len() == 2 && &row[0] == "value" && &row[1] == "weight" {
            continue;
        }
        let bad = |msg: &str| CliError::Config(format!("{} line {line}: {msg}", input.display()));
        if row.len() != 2 {
            return Err(bad("expected two columns `value,weight`"));
        }
        let v: f64 = row[0].parse().map_err(|_| bad("value is not a number"))?;
        let w: f64 = row[1].parse().map_err(|_| bad("weight is not a number"))?;
        if !v.is_finite() {
            return Err(bad("value must be finite"));
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(bad("weight must be positive"));
        }
        values.push(v);
        weights.push(w);
    }
    let table = WeightedValues::new(values, weights).map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
    let step = decreasing_rearrangement(&table);
    let file = File::create(out).map_err(|e| CliError::io(out, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(w, "breakpoint,level")?;
        for (b, v) in step.breakpoints()[1..].iter().zip(step.levels()) {
            writeln!(w, "{b:.16e},{v:.16e}")?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| CliError::io(out, e))
}
