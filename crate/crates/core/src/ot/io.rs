//! CSV formats: measures as `x1,...,xd,weight` rows, plans as sparse
//! `i,j,gamma` triplets, potentials as `side,index,value`.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::ot::dual::PotentialSamples;
use crate::ot::measure::{DiscreteMeasure, PointCloud};
use crate::ot::plan::TransportPlan;

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Reads a measure; a header row is optional (detected by a non-numeric
/// first field). Every row must have the same number of columns.
pub fn read_measure<R: Read>(reader: R) -> Result<DiscreteMeasure> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    let mut width = None;
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let fields: Vec<&str> = record.iter().collect();
        if line == 0 && fields.first().is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if fields.len() < 2 {
            return Err(Error::Parse(format!("row {}: need coordinates and a weight", line + 1)));
        }
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::Parse(format!("row {}: expected {w} columns", line + 1)))
            }
            _ => {}
        }
        let values: Vec<f64> = fields
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", line + 1))))
            .collect::<Result<_>>()?;
        let (w, x) = values.split_last().unwrap();
        coords.extend_from_slice(x);
        weights.push(*w);
    }
    let dim = width.ok_or(Error::EmptySupport)? - 1;
    DiscreteMeasure::new(PointCloud::new(dim, coords)?, weights)
}

pub fn write_measure<W: Write>(measure: &DiscreteMeasure, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=measure.dim()).map(|k| format!("x{k}")).collect();
    header.push("weight".into());
    wtr.write_record(&header).map_err(csv_err)?;
    for (p, w) in measure.points().iter().zip(measure.weights()) {
        let mut row: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
        row.push(format!("{w:e}"));
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_plan<W: Write>(plan: &TransportPlan<'_>, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["i", "j", "gamma"]).map_err(csv_err)?;
    for e in plan.entries() {
        wtr.write_record(&[e.source.to_string(), e.target.to_string(), format!("{:e}", e.mass)])
            .map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_potentials<W: Write>(pot: &PotentialSamples, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["side", "index", "value"]).map_err(csv_err)?;
    for (side, values) in [("phi", &pot.phi), ("psi", &pot.psi)] {
        for (k, v) in values.iter().enumerate() {
            wtr.write_record(&[side.to_string(), k.to_string(), format!("{v:e}")])
                .map_err(csv_err)?;
        }
    }
    wtr.flush().map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_round_trip() {
        let m = DiscreteMeasure::new(
            PointCloud::from_points(2, &[[0.5, -1.0], [0.25, 3.0]]).unwrap(),
            vec![0.75, 0.25],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_measure(&m, &mut buf).unwrap();
        let back = read_measure(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn headerless_input() {
        let m = read_measure("0,1\n1,1\n".as_bytes()).unwrap();
        assert_eq!(m.dim(), 1);
        assert_eq!(m.total_mass(), 2.0);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(read_measure("0,1\n1,1,1\n".as_bytes()).is_err());
    }
}
