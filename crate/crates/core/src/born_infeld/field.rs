use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::born_infeld::state::{bi_embed, energy_u, hull_residual, state_manifold_residual, AbiState, Vec3, COMPONENTS};
use crate::error::{Error, Result};

/// Cell averages of the ABI variables on the periodic unit interval in
/// `x_1`. `D_1` and `B_1` are the same constants in every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AbiField1D {
    cells: Vec<AbiState>,
    b1: f64,
    d1: f64,
}

impl AbiField1D {
    pub fn new(cells: Vec<AbiState>) -> Result<Self> {
        let first = cells.first().ok_or(Error::EmptySupport)?;
        let (b1, d1) = (first.b[0], first.d[0]);
        if let Some(i) = cells.iter().position(|c| c.b[0] != b1 || c.d[0] != d1) {
            return Err(Error::InvalidArgument(format!(
                "cell {i} breaks the divergence constraint: B1 = {}, D1 = {} (expected {b1}, {d1})",
                cells[i].b[0], cells[i].d[0]
            )));
        }
        if let Some(i) = cells.iter().position(|c| c.to_array().iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidArgument(format!("cell {i} is not finite")));
        }
        Ok(Self { cells, b1, d1 })
    }

    /// Samples `f` at the cell centers of an `n`-cell grid.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> AbiState) -> Result<Self> {
        Self::new((0..n).map(|i| f((i as f64 + 0.5) / n as f64)).collect())
    }

    pub fn uniform(n: usize, s: AbiState) -> Result<Self> {
        Self::new(vec![s; n])
    }

    pub fn cells(&self) -> &[AbiState] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.cells.len() as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.cell_width()
    }

    pub fn b1_const(&self) -> f64 {
        self.b1
    }

    pub fn d1_const(&self) -> f64 {
        self.d1
    }

    /// `sum_i u_i dx` for each of the 10 components.
    pub fn component_sums(&self) -> [f64; 10] {
        let dx = self.cell_width();
        let mut s = [0.0; 10];
        for c in &self.cells {
            for (acc, v) in s.iter_mut().zip(c.to_array()) {
                *acc += v;
            }
        }
        s.map(|v| v * dx)
    }

    /// `sum_i |u_i| dx` for each component.
    pub fn component_l1(&self) -> [f64; 10] {
        let dx = self.cell_width();
        let mut s = [0.0; 10];
        for c in &self.cells {
            for (acc, v) in s.iter_mut().zip(c.to_array()) {
                *acc += v.abs();
            }
        }
        s.map(|v| v * dx)
    }

    /// `sum_i U(u_i) dx`.
    pub fn total_entropy(&self) -> Result<f64> {
        let mut total = 0.0;
        for c in &self.cells {
            total += energy_u(c)?;
        }
        Ok(total * self.cell_width())
    }

    pub fn max_hull_residual(&self) -> f64 {
        self.cells.iter().map(hull_residual).fold(0.0, f64::max)
    }

    /// Writes `x,h,Q1,...,B3`, one row per cell.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        let mut header = vec!["x"];
        header.extend(COMPONENTS);
        w.write_record(&header).map_err(io)?;
        for (i, c) in self.cells.iter().enumerate() {
            let mut row = vec![format!("{:.17e}", self.center(i))];
            row.extend(c.to_array().iter().map(|v| format!("{v:.17e}")));
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
    }
}

/// Largest per-cell distance to the BI manifold.
pub fn manifold_residual(field: &AbiField1D) -> f64 {
    field.cells.iter().map(state_manifold_residual).fold(0.0, f64::max)
}

/// Per component, `|sum_i u_i dx|` change from `initial` to `current`
/// relative to the larger of the two `L^1` norms (0 when both vanish).
pub fn conservation_drift(initial: &AbiField1D, current: &AbiField1D) -> [f64; 10] {
    let (s0, s1) = (initial.component_sums(), current.component_sums());
    let (l0, l1) = (initial.component_l1(), current.component_l1());
    std::array::from_fn(|k| {
        let scale = l0[k].max(l1[k]);
        if scale > 0.0 {
            (s1[k] - s0[k]).abs() / scale
        } else {
            0.0
        }
    })
}

/// `(h, Q, D, B) -> (h, Q - h u, D, B)` in every cell.
pub fn galilean_boost(field: &AbiField1D, u: Vec3) -> AbiField1D {
    AbiField1D {
        cells: field.cells.iter().map(|c| c.boosted(u)).collect(),
        ..*field
    }
}

/// Named initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `h = 1`, all fields zero.
    Rest,
    /// `bi_embed` of `D = (0, a sin 2 pi k x, 0)`, `B = (0, 0, a cos 2 pi k x)`.
    ManifoldSine { amplitude: f64, k: f64 },
    /// Chaplygin gas (`D = B = 0`) with state `(hL, QL e1)` on `[0, 1/2)` and
    /// `(hR, QR e1)` on `[1/2, 1)`.
    ChaplyginRiemann { hl: f64, ql: f64, hr: f64, qr: f64 },
    Boosted(Box<Profile>, Vec3),
}

impl Profile {
    pub fn field(&self, n: usize) -> Result<AbiField1D> {
        match self {
            Profile::Rest => AbiField1D::uniform(n, AbiState::REST),
            &Profile::ManifoldSine { amplitude, k } => AbiField1D::from_fn(n, |x| {
                let (s, c) = (2.0 * PI * k * x).sin_cos();
                bi_embed([0.0, amplitude * s, 0.0], [0.0, 0.0, amplitude * c])
            }),
            &Profile::ChaplyginRiemann { hl, ql, hr, qr } => {
                if hl <= 0.0 || hr <= 0.0 {
                    return Err(Error::NonpositiveDensity(hl.min(hr)));
                }
                AbiField1D::from_fn(n, |x| {
                    let (h, q) = if x < 0.5 { (hl, ql) } else { (hr, qr) };
                    AbiState {
                        h,
                        q: [q, 0.0, 0.0],
                        ..AbiState::REST
                    }
                })
            }
            Profile::Boosted(inner, u) => Ok(galilean_boost(&inner.field(n)?, *u)),
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let words: Vec<&str> = s.split_whitespace().collect();
        let (p, rest) = parse_profile(&words)?;
        if !rest.is_empty() {
            return Err(Error::Parse(format!("trailing words in profile {s:?}: {rest:?}")));
        }
        Ok(p)
    }
}

fn numbers(words: &[&str], n: usize, what: &str) -> Result<Vec<f64>> {
    if words.len() < n {
        return Err(Error::Parse(format!("{what} takes {n} numbers, got {words:?}")));
    }
    words[..n]
        .iter()
        .map(|w| w.parse::<f64>().map_err(|_| Error::Parse(format!("{what}: {w:?} is not a number"))))
        .collect()
}

fn parse_profile<'a>(words: &'a [&'a str]) -> Result<(Profile, &'a [&'a str])> {
    let (name, args) = words.split_first().ok_or_else(|| Error::Parse("empty profile".into()))?;
    match *name {
        "rest" => Ok((Profile::Rest, args)),
        "manifold-sine" => {
            let v = numbers(args, 2, name)?;
            Ok((Profile::ManifoldSine { amplitude: v[0], k: v[1] }, &args[2..]))
        }
        "chaplygin-riemann" => {
            let v = numbers(args, 4, name)?;
            Ok((
                Profile::ChaplyginRiemann {
                    hl: v[0],
                    ql: v[1],
                    hr: v[2],
                    qr: v[3],
                },
                &args[4..],
            ))
        }
        "boosted" => {
            let (inner, rest) = parse_profile(args)?;
            // one number is a boost along x1, three give the full velocity
            let u = match rest.len() {
                1 => [numbers(rest, 1, name)?[0], 0.0, 0.0],
                3 => {
                    let v = numbers(rest, 3, name)?;
                    [v[0], v[1], v[2]]
                }
                _ => return Err(Error::Parse(format!("boosted takes 1 or 3 velocity components, got {rest:?}"))),
            };
            Ok((Profile::Boosted(Box::new(inner), u), &[]))
        }
        other => Err(Error::Parse(format!("unknown profile {other:?}"))),
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Rest => write!(f, "rest"),
            Profile::ManifoldSine { amplitude, k } => write!(f, "manifold-sine {amplitude} {k}"),
            Profile::ChaplyginRiemann { hl, ql, hr, qr } => write!(f, "chaplygin-riemann {hl} {ql} {hr} {qr}"),
            Profile::Boosted(inner, u) => write!(f, "boosted {inner} {} {} {}", u[0], u[1], u[2]),
        }
    }
}
