//! Pool-adjacent-violators: weighted L2 projection onto nondecreasing
//! sequences.

/// Projection of `values` onto nondecreasing sequences in the norm
/// `sum w_k x_k^2`. Weights must be positive.
pub fn pav(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    let mut out = values.to_vec();
    pav_in_place(&mut out, Some(weights), &mut Vec::new());
    out
}

pub(crate) struct Block {
    sum: f64,
    weight: f64,
    len: usize,
}

impl Block {
    fn mean(&self) -> f64 {
        self.sum / self.weight
    }
}

/// In-place projection; `weights = None` means uniform weights. `blocks`
/// is scratch space reused across calls.
pub(crate) fn pav_in_place(y: &mut [f64], weights: Option<&[f64]>, blocks: &mut Vec<Block>) {
    blocks.clear();
    for (k, &v) in y.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[k]);
        let mut b = Block {
            sum: w * v,
            weight: w,
            len: 1,
        };
        while let Some(top) = blocks.last() {
            if top.mean() > b.mean() {
                b.sum += top.sum;
                b.weight += top.weight;
                b.len += top.len;
                blocks.pop();
            } else {
                break;
            }
        }
        blocks.push(b);
    }
    let mut k = 0;
    for b in blocks.iter() {
        let m = b.mean();
        for v in &mut y[k..k + b.len] {
            *v = m;
        }
        k += b.len;
    }
}
