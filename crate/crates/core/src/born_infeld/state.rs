use serde::Serialize;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Conserved variables `(h, Q, D, B)` of the augmented Born-Infeld system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbiState {
    pub h: f64,
    pub q: Vec3,
    pub d: Vec3,
    pub b: Vec3,
}

/// Component order of [`AbiState::to_array`].
pub const COMPONENTS: [&str; 10] = ["h", "Q1", "Q2", "Q3", "D1", "D2", "D3", "B1", "B2", "B3"];

impl AbiState {
    /// `h = 1` and all fields zero.
    pub const REST: AbiState = AbiState {
        h: 1.0,
        q: [0.0; 3],
        d: [0.0; 3],
        b: [0.0; 3],
    };

    pub fn to_array(&self) -> [f64; 10] {
        let (q, d, b) = (self.q, self.d, self.b);
        [self.h, q[0], q[1], q[2], d[0], d[1], d[2], b[0], b[1], b[2]]
    }

    pub fn from_array(u: &[f64; 10]) -> Self {
        Self {
            h: u[0],
            q: [u[1], u[2], u[3]],
            d: [u[4], u[5], u[6]],
            b: [u[7], u[8], u[9]],
        }
    }

    fn check(&self) -> Result<()> {
        if self.h > 0.0 {
            Ok(())
        } else {
            Err(Error::NonpositiveDensity(self.h))
        }
    }

    /// `(h, Q - h u, D, B)`.
    pub fn boosted(&self, u: Vec3) -> Self {
        Self {
            q: [self.q[0] - self.h * u[0], self.q[1] - self.h * u[1], self.q[2] - self.h * u[2]],
            ..*self
        }
    }
}

/// `sqrt(1 + D^2 + B^2 + Q^2 + 2 |D x B - Q|)`, the least `h` of the
/// convex hull of the BI manifold.
fn hull_bound(q: Vec3, d: Vec3, b: Vec3) -> f64 {
    (1.0 + dot(d, d) + dot(b, b) + dot(q, q) + 2.0 * norm(sub(cross(d, b), q))).sqrt()
}

/// The state on the BI manifold over `(D, B)`:
/// `h = sqrt(1 + D^2 + B^2 + (D x B)^2)`, `Q = D x B`.
pub fn bi_embed(d: Vec3, b: Vec3) -> AbiState {
    let q = cross(d, b);
    AbiState {
        h: hull_bound(q, d, b),
        q,
        d,
        b,
    }
}

/// `max(0, sqrt(1 + D^2 + B^2 + Q^2 + 2|D x B - Q|) - h)`.
pub fn hull_residual(s: &AbiState) -> f64 {
    (hull_bound(s.q, s.d, s.b) - s.h).max(0.0)
}

/// `|h - sqrt(1 + D^2 + B^2 + (D x B)^2)| + |Q - D x B|`.
pub fn state_manifold_residual(s: &AbiState) -> f64 {
    let m = bi_embed(s.d, s.b);
    (s.h - m.h).abs() + norm(sub(s.q, m.q))
}

/// The extra entropy `U = (1 + D^2 + B^2 + Q^2) / h`.
pub fn energy_u(s: &AbiState) -> Result<f64> {
    s.check()?;
    Ok((1.0 + dot(s.d, s.d) + dot(s.b, s.b) + dot(s.q, s.q)) / s.h)
}

/// Flux along `x_1` of `(h, Q, D, B)`:
/// `Q_1`; `(Q_1 Q - B_1 B - D_1 D) / h - e_1 / h`; and for `D`, `B` the
/// curl terms `e_1 x W` with `W = (D x Q - B) / h`, `V = (B x Q + D) / h`.
pub fn abi_flux(s: &AbiState) -> Result<[f64; 10]> {
    s.check()?;
    let inv = 1.0 / s.h;
    let (q, d, b) = (s.q, s.d, s.b);
    let v = cross(b, q);
    let v = [(v[0] + d[0]) * inv, (v[1] + d[1]) * inv, (v[2] + d[2]) * inv];
    let w = cross(d, q);
    let w = [(w[0] - b[0]) * inv, (w[1] - b[1]) * inv, (w[2] - b[2]) * inv];
    let mom = |k: usize| (q[0] * q[k] - b[0] * b[k] - d[0] * d[k]) * inv;
    Ok([
        q[0],
        mom(0) - inv,
        mom(1),
        mom(2),
        // (curl W)_1 has no x_1 derivative; (curl W)_2 = -d_1 W_3, (curl W)_3 = d_1 W_2
        0.0,
        -w[2],
        w[1],
        0.0,
        -v[2],
        v[1],
    ])
}

/// Signal speed used by the Rusanov flux: `|Q_1| / h + 1.2`, the light
/// cone plus transport plus a safety margin.
pub fn wave_speed_bound(s: &AbiState) -> f64 {
    s.q[0].abs() / s.h + 1.2
}

type Mat10 = nalgebra::SMatrix<f64, 10, 10>;

/// Central finite-difference Jacobian of [`abi_flux`].
pub fn flux_jacobian(s: &AbiState) -> Result<Mat10> {
    let u = s.to_array();
    let mut jac = Mat10::zeros();
    for j in 0..10 {
        let eps = 1e-6 * (1.0 + u[j].abs());
        let (mut up, mut dn) = (u, u);
        up[j] += eps;
        dn[j] -= eps;
        let fp = abi_flux(&AbiState::from_array(&up))?;
        let fm = abi_flux(&AbiState::from_array(&dn))?;
        for i in 0..10 {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * eps);
        }
    }
    Ok(jac)
}

/// Hessian of `U` in the variables of [`AbiState::to_array`]; positive
/// definite for `h > 0`.
pub fn entropy_hessian(s: &AbiState) -> Result<Mat10> {
    s.check()?;
    let u = s.to_array();
    let h = s.h;
    let z2: f64 = u[1..].iter().map(|v| v * v).sum();
    let mut m = Mat10::identity() * (2.0 / h);
    m[(0, 0)] = 2.0 * (1.0 + z2) / (h * h * h);
    for i in 1..10 {
        m[(0, i)] = -2.0 * u[i] / (h * h);
        m[(i, 0)] = m[(0, i)];
    }
    Ok(m)
}

/// Components that move in one space dimension; the rows of `D_1` and
/// `B_1` in the flux Jacobian vanish.
const MOVING: [usize; 8] = [0, 1, 2, 3, 5, 6, 8, 9];

/// Spectral radius of the flux Jacobian `A` at `s`, and the relative
/// asymmetry of `U'' A` on the moving components.
///
/// With `D_1`, `B_1` frozen, `A` is block triangular: its spectrum is
/// `{0, 0}` plus that of the moving block. `U` is a convex entropy, so
/// `U'' A` is symmetric on that block and the eigenvalues are those of
/// the symmetric pencil `(U'' A, U'')`; a symmetric eigensolver copes
/// with the repeated eigenvalues of the linearly degenerate fields.
pub fn jacobian_spectrum(s: &AbiState) -> Result<(f64, f64)> {
    let jac = flux_jacobian(s)?;
    let hess = entropy_hessian(s)?;
    let a = nalgebra::SMatrix::<f64, 8, 8>::from_fn(|i, j| jac[(MOVING[i], MOVING[j])]);
    let a0 = nalgebra::SMatrix::<f64, 8, 8>::from_fn(|i, j| hess[(MOVING[i], MOVING[j])]);
    let sa = a0 * a;
    let asym = (sa - sa.transpose()).norm() / sa.norm().max(f64::MIN_POSITIVE);
    let l = a0
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("entropy Hessian is not positive definite".into()))?
        .l();
    let linv = l.try_inverse().ok_or_else(|| Error::InvalidArgument("singular Cholesky factor".into()))?;
    let m = linv * (0.5 * (sa + sa.transpose())) * linv.transpose();
    let eig = nalgebra::linalg::SymmetricEigen::new(m).eigenvalues;
    Ok((eig.iter().map(|v| v.abs()).fold(0.0, f64::max), asym))
}

/// Spectral radius of the finite-difference flux Jacobian at `s`.
pub fn jacobian_spectral_radius(s: &AbiState) -> Result<f64> {
    jacobian_spectrum(s).map(|(r, _)| r)
}
