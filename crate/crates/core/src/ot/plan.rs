use crate::error::{Error, Result};
use crate::ot::measure::{dot, DiscreteMeasure};

/// Relative tolerance on the marginals of a plan.
pub const MARGINAL_TOLERANCE: f64 = 1e-9;

/// One nonzero entry `gamma_ij` of a coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// Sparse nonnegative coupling between two discrete measures.
#[derive(Debug, Clone)]
pub struct TransportPlan<'a> {
    source: &'a DiscreteMeasure,
    target: &'a DiscreteMeasure,
    entries: Vec<PlanEntry>,
}

impl<'a> TransportPlan<'a> {
    /// Builds a plan and checks nonnegativity and both marginals.
    pub fn new(
        source: &'a DiscreteMeasure,
        target: &'a DiscreteMeasure,
        entries: Vec<PlanEntry>,
    ) -> Result<Self> {
        let plan = Self::new_unchecked(source, target, entries);
        for e in &plan.entries {
            if e.source >= source.len() || e.target >= target.len() {
                return Err(Error::InvalidArgument(format!(
                    "entry ({}, {}) outside a {}x{} plan",
                    e.source,
                    e.target,
                    source.len(),
                    target.len()
                )));
            }
            if !(e.mass >= 0.0) {
                return Err(Error::InvalidArgument(format!("negative plan entry {}", e.mass)));
            }
        }
        let err = plan.marginal_error();
        if err > MARGINAL_TOLERANCE {
            return Err(Error::InvalidArgument(format!("plan marginals off by {err:e} (relative)")));
        }
        Ok(plan)
    }

    pub(crate) fn new_unchecked(
        source: &'a DiscreteMeasure,
        target: &'a DiscreteMeasure,
        entries: Vec<PlanEntry>,
    ) -> Self {
        Self {
            source,
            target,
            entries,
        }
    }

    pub fn source(&self) -> &'a DiscreteMeasure {
        self.source
    }

    pub fn target(&self) -> &'a DiscreteMeasure {
        self.target
    }

    pub fn entries(&self) -> &[PlanEntry] {
        &self.entries
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut rows = vec![0.0; self.source.len()];
        for e in &self.entries {
            rows[e.source] += e.mass;
        }
        rows
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut cols = vec![0.0; self.target.len()];
        for e in &self.entries {
            cols[e.target] += e.mass;
        }
        cols
    }

    /// Largest marginal deviation relative to the total mass.
    pub fn marginal_error(&self) -> f64 {
        let scale = self.source.total_mass().max(self.target.total_mass());
        let rows = self.row_sums();
        let cols = self.column_sums();
        let r = rows
            .iter()
            .zip(self.source.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let c = cols
            .iter()
            .zip(self.target.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        r.max(c) / scale
    }

    /// `sum gamma_ij x_i . y_j`, the quantity maximized by optimal plans.
    pub fn inner_product_value(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.mass * dot(self.source.point(e.source), self.target.point(e.target)))
            .sum()
    }

    /// `sum gamma_ij |x_i - y_j|^2 / 2`.
    pub fn quadratic_cost(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let d2: f64 = self
                    .source
                    .point(e.source)
                    .iter()
                    .zip(self.target.point(e.target))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                0.5 * e.mass * d2
            })
            .sum()
    }

    /// Dense `m x n` matrix of the coupling. Meant for small plans.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut g = vec![vec![0.0; self.target.len()]; self.source.len()];
        for e in &self.entries {
            g[e.source][e.target] += e.mass;
        }
        g
    }
}

/// Discrete stand-in for the transport map: `T_i = sum_j gamma_ij y_j / w_i`.
pub fn barycentric_map(plan: &TransportPlan<'_>) -> Result<Vec<Vec<f64>>> {
    let src = plan.source();
    let tgt = plan.target();
    let dim = tgt.dim();
    let mut images = vec![vec![0.0; dim]; src.len()];
    let mut row_mass = vec![0.0; src.len()];
    for e in plan.entries() {
        row_mass[e.source] += e.mass;
        for (t, y) in images[e.source].iter_mut().zip(tgt.point(e.target)) {
            *t += e.mass * y;
        }
    }
    for (i, image) in images.iter_mut().enumerate() {
        if row_mass[i] <= 0.0 {
            return Err(Error::ZeroRowMass(i));
        }
        let w = src.weights()[i];
        image.iter_mut().for_each(|t| *t /= w);
    }
    Ok(images)
}

/// Which side of the weak Monge-Ampere identity is compared against the
/// target integral `sum_j v_j f(y_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PushforwardForm {
    /// `sum_ij gamma_ij f(y_j)`: the coupling's second marginal.
    Coupling,
    /// `sum_i w_i f(T_i)` with `T` the barycentric map.
    Barycentric,
}

/// Largest deviation `|pushforward integral of f - target integral of f|`
/// over a family of test functions.
pub fn pushforward_residual(
    plan: &TransportPlan<'_>,
    family: &[&dyn Fn(&[f64]) -> f64],
    form: PushforwardForm,
) -> Result<f64> {
    let tgt = plan.target();
    let images = match form {
        PushforwardForm::Barycentric => Some(barycentric_map(plan)?),
        PushforwardForm::Coupling => None,
    };
    let mut worst: f64 = 0.0;
    for f in family {
        let target_side: f64 = tgt
            .points()
            .iter()
            .zip(tgt.weights())
            .map(|(y, v)| v * f(y))
            .sum();
        let pushed: f64 = match &images {
            None => plan.entries().iter().map(|e| e.mass * f(tgt.point(e.target))).sum(),
            Some(images) => images
                .iter()
                .zip(plan.source().weights())
                .map(|(t, w)| w * f(t))
                .sum(),
        };
        worst = worst.max((pushed - target_side).abs());
    }
    Ok(worst)
}
