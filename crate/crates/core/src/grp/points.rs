use std::io::{BufRead, Write};

use crate::error::{Result, SyncError};
use crate::Complex64;

/// Writes `id,x,y` rows with a header line.
pub fn write_points<W: Write>(mut w: W, points: &[Complex64]) -> Result<()> {
    writeln!(w, "id,x,y")?;
    for (i, p) in points.iter().enumerate() {
        writeln!(w, "{i},{},{}", p.re, p.im)?;
    }
    Ok(())
}

/// Reads `id,x,y` rows; ids must be `0..n` in order.
pub fn read_points<R: BufRead>(r: R) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if lineno == 0 && line.starts_with("id") || line.is_empty() {
            continue;
        }
        let err = |message: String| SyncError::Parse {
            line: lineno + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        }
        let id: usize = fields[0].parse().map_err(|e| err(format!("bad id: {e}")))?;
        if id != out.len() {
            return Err(err(format!("id {id} out of sequence")));
        }
        let x: f64 = fields[1].parse().map_err(|e| err(format!("bad x: {e}")))?;
        let y: f64 = fields[2].parse().map_err(|e| err(format!("bad y: {e}")))?;
        out.push(Complex64::new(x, y));
    }
    Ok(out)
}
