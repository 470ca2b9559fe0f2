//! Grid dumps as CSV: one row per cell in storage order, `x,u` in 1D and
//! `x,y,u` in 2D, with a header row.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scl::grid::{CellAverages, Torus};

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_cell_averages<const D: usize, W: Write>(u: &CellAverages<D>, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ["x", "y"][..D].to_vec();
    header.push("u");
    wtr.write_record(&header).map_err(csv_err)?;
    for (c, v) in u.values().iter().enumerate() {
        let mut row: Vec<String> = u.grid().center(c).iter().map(|x| format!("{x:e}")).collect();
        row.push(format!("{v:e}"));
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// Reads a dump written for `grid`; cell centers must match the grid.
pub fn read_cell_averages<const D: usize, R: Read>(grid: Torus<D>, reader: R) -> Result<CellAverages<D>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let tol = 1e-9 * grid.length;
    let mut u = Vec::with_capacity(grid.cells());
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        if record.len() != D + 1 {
            return Err(Error::Parse(format!("row {}: expected {} columns", row + 1, D + 1)));
        }
        let values: Vec<f64> = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", row + 1))))
            .collect::<Result<_>>()?;
        if row >= grid.cells() {
            return Err(Error::GridMismatch(row + 1, grid.cells()));
        }
        let center = grid.center(row);
        if center.iter().zip(&values).any(|(a, b)| (a - b).abs() > tol) {
            return Err(Error::Parse(format!("row {}: cell center does not match the grid", row + 1)));
        }
        u.push(values[D]);
    }
    if u.len() != grid.cells() {
        return Err(Error::GridMismatch(u.len(), grid.cells()));
    }
    CellAverages::new(grid, u)
}
