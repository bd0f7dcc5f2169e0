//! Coordinate maps and the t-deformed kernel matrices.
//!
//! Notation: `X = bb†` (p×p), `Y = b†b` (q×q), `pm = +1` for the non-compact
//! sign and `−1` for the compact one, so `1 + pm·Y` is `1 ± b†b`.
//!
//! The kernel of the deformation at `t` is
//!
//! ```text
//! [[ 1 + 2pm X,                 2 b (1 + pm Y)^((1+t)/2) ],
//!  [ −2pm (1 + pm Y)^((1−t)/2) b†,  −1 − 2pm Y           ]]
//! ```
//!
//! The lower left block is usually written `b†(1 + pm X)^((1−t)/2)`; the two agree
//! because `b† f(X) = f(Y) b†`. Writing it through `Y` means one q×q
//! eigendecomposition serves every `t`.

use crate::error::{Error, Result};
use crate::matrixkit::{self, herm_eig, identity, norm_inf, CMatrix, HermEig, HermitianPd, C64};
use crate::spaces::{s_matrix, KernelMatrix, Sign, SpaceSpec};

/// Condition number above which the chart is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Hermiticity tolerance for arguments of fractional powers.
const POWER_TOL: f64 = 1e-9;

/// Relative tolerance for the internal consistency assertions.
const CONSISTENCY_TOL: f64 = 1e-10;

fn check_shape(spec: &SpaceSpec, b: &CMatrix, what: &str, transposed: bool) -> Result<()> {
    let (r, c) = if transposed {
        (spec.q(), spec.p())
    } else {
        (spec.p(), spec.q())
    };
    if b.shape() != (r, c) {
        return Err(Error::ShapeMismatch {
            expected: format!("{what} of shape {r}x{c}"),
            got: format!("{}x{}", b.nrows(), b.ncols()),
        });
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "t",
            value: t,
            reason: "must lie in [0, 1]",
        })
    }
}

/// A pair `(Z, Z̃)` with `Z` p×q and `Z̃` q×p.
#[derive(Debug, Clone)]
pub struct CoordinatePair {
    spec: SpaceSpec,
    z: CMatrix,
    zt: CMatrix,
}

impl CoordinatePair {
    pub fn new(spec: SpaceSpec, z: CMatrix, zt: CMatrix) -> Result<Self> {
        check_shape(&spec, &z, "Z", false)?;
        check_shape(&spec, &zt, "Z~", true)?;
        matrixkit::ensure_finite(&z, "Z")?;
        matrixkit::ensure_finite(&zt, "Z~")?;
        Ok(Self { spec, z, zt })
    }

    pub fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    pub fn z(&self) -> &CMatrix {
        &self.z
    }

    pub fn zt(&self) -> &CMatrix {
        &self.zt
    }
}

/// Condition number in the 2-norm; infinite for singular input.
pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of `1 − M` after a conditioning check.
pub(crate) fn chart_inverse(one_minus: CMatrix) -> Result<CMatrix> {
    let condition = condition_number(&one_minus);
    if !(condition < MAX_CONDITION) {
        return Err(Error::NearSingular { condition });
    }
    one_minus
        .try_inverse()
        .ok_or(Error::NearSingular { condition })
}

/// `Q(Z, Z̃) = [[(1+ZZ̃)(1−ZZ̃)⁻¹, −2Z(1−Z̃Z)⁻¹], [2Z̃(1−ZZ̃)⁻¹, −(1+Z̃Z)(1−Z̃Z)⁻¹]]`.
pub fn q_map(pair: &CoordinatePair) -> Result<KernelMatrix> {
    let (p, q) = (pair.spec.p(), pair.spec.q());
    let zzt = &pair.z * &pair.zt;
    let ztz = &pair.zt * &pair.z;
    let a_inv = chart_inverse(identity(p) - &zzt)?;
    let b_inv = chart_inverse(identity(q) - &ztz)?;
    let mut m = CMatrix::zeros(p + q, p + q);
    m.view_mut((0, 0), (p, p))
        .copy_from(&((identity(p) + &zzt) * &a_inv));
    m.view_mut((0, p), (p, q))
        .copy_from(&(&pair.z * &b_inv).scale(-2.0));
    m.view_mut((p, 0), (q, p))
        .copy_from(&(&pair.zt * &a_inv).scale(2.0));
    m.view_mut((p, p), (q, q))
        .copy_from(&(-(identity(q) + &ztz) * &b_inv));
    Ok(KernelMatrix::new_unchecked(pair.spec, m))
}

/// `R(b, b̃) = (−b(1+b̃b)^{−1/2}, −b̃(1+bb̃)^{−1/2})` for the non-compact sign and
/// `R₋(b, b̃) = R(b, −b̃)` for the compact sign.
///
/// Fractional powers are only taken where `1 ± b̃b` is Hermitian positive
/// definite, which holds on the homotopy images.
pub fn r_map(spec: &SpaceSpec, b: &CMatrix, bt: &CMatrix) -> Result<CoordinatePair> {
    check_shape(spec, b, "b", false)?;
    check_shape(spec, bt, "b~", true)?;
    let (p, q) = (spec.p(), spec.q());
    let bt_eff = bt.scale(spec.sign().pm());
    let right = HermitianPd::new(identity(q) + &bt_eff * b, POWER_TOL)?;
    let left = HermitianPd::new(identity(p) + b * &bt_eff, POWER_TOL)?;
    let z = -(b * right.power(-0.5));
    let zt = -(bt_eff * left.power(-0.5));
    CoordinatePair::new(*spec, z, zt)
}

/// Image `(b′, b̃′)` of `(t, b)` under the homotopy.
#[derive(Debug, Clone)]
pub struct HomotopyPoint {
    pub t: f64,
    pub sign: Sign,
    pub b: CMatrix,
    pub b_prime: CMatrix,
    pub b_tilde_prime: CMatrix,
    /// Relative residual of `b(1 ± Y)^{t/2} = (1 ± X)^{t/2} b`, or of the
    /// comparison with the direct formula for [`homotopy_svd_form`].
    pub residual: f64,
}

/// `(t, b) ↦ (b(1 ± b†b)^{t/2}, b†(1 ± bb†)^{−t/2})`.
pub fn homotopy(spec: &SpaceSpec, t: f64, b: &CMatrix) -> Result<HomotopyPoint> {
    check_t(t)?;
    let (b_prime, b_tilde_prime, residual) = homotopy_parts(spec, t, b)?;
    if residual > CONSISTENCY_TOL {
        return Err(Error::ConvergenceFailure("intertwining identity"));
    }
    Ok(HomotopyPoint {
        t,
        sign: spec.sign(),
        b: b.clone(),
        b_prime,
        b_tilde_prime,
        residual,
    })
}

/// The homotopy formula without the range check on `t`, for finite differences
/// that step slightly past the ends of [0, 1].
pub fn homotopy_images(spec: &SpaceSpec, t: f64, b: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let (b_prime, b_tilde_prime, _) = homotopy_parts(spec, t, b)?;
    Ok((b_prime, b_tilde_prime))
}

fn homotopy_parts(spec: &SpaceSpec, t: f64, b: &CMatrix) -> Result<(CMatrix, CMatrix, f64)> {
    check_shape(spec, b, "b", false)?;
    let pm = spec.sign().pm();
    let (p, q) = (spec.p(), spec.q());
    let left = HermitianPd::new(identity(p) + (b * b.adjoint()).scale(pm), POWER_TOL)?;
    let right = HermitianPd::new(identity(q) + (b.adjoint() * b).scale(pm), POWER_TOL)?;
    let b_prime = b * right.power(t / 2.0);
    let b_tilde_prime = b.adjoint() * left.power(-t / 2.0);
    let other = left.power(t / 2.0) * b;
    let residual = norm_inf(&(&b_prime - &other)) / norm_inf(&other).max(1.0);
    Ok((b_prime, b_tilde_prime, residual))
}

/// Directional derivative of the homotopy at `(t, b)` along `(dt, db)`, in
/// closed form through the Fréchet derivative of the matrix powers.
pub fn homotopy_tangent(
    spec: &SpaceSpec,
    t: f64,
    b: &CMatrix,
    dt: f64,
    db: &CMatrix,
) -> Result<(CMatrix, CMatrix)> {
    check_shape(spec, b, "b", false)?;
    check_shape(spec, db, "db", false)?;
    let pm = spec.sign().pm();
    let (p, q) = (spec.p(), spec.q());
    let left = HermitianPd::new(identity(p) + (b * b.adjoint()).scale(pm), POWER_TOL)?;
    let right = HermitianPd::new(identity(q) + (b.adjoint() * b).scale(pm), POWER_TOL)?;
    let d_right = (db.adjoint() * b + b.adjoint() * db).scale(pm);
    let d_left = (db * b.adjoint() + b * db.adjoint()).scale(pm);
    let r_pow = right.power(t / 2.0);
    let l_pow = left.power(-t / 2.0);
    let d_b_prime = db * &r_pow
        + b * (right.power_derivative(t / 2.0, &d_right) + (right.ln() * &r_pow).scale(0.5 * dt));
    let d_b_tilde = db.adjoint() * &l_pow
        + b.adjoint()
            * (left.power_derivative(-t / 2.0, &d_left) - (left.ln() * &l_pow).scale(0.5 * dt));
    Ok((d_b_prime, d_b_tilde))
}

/// Per-point data shared by the kernels at every `t`.
#[derive(Debug, Clone)]
pub struct KernelPrep {
    spec: SpaceSpec,
    x: CMatrix,
    y: CMatrix,
    y_eig: HermEig,
    /// `b V`, with `Y = V Λ V†`.
    bv: CMatrix,
}

impl KernelPrep {
    /// Fails with `NotPositiveDefinite` on the compact sign when `‖b‖₂ > 1`.
    /// The closed unit ball is admitted, since every block stays finite there.
    pub fn new(spec: &SpaceSpec, b: &CMatrix) -> Result<Self> {
        let prep = Self::build(spec, b)?;
        if spec.sign() == Sign::Compact && prep.norm_sq() > 1.0 + 1e-12 {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: 1.0 - prep.norm_sq(),
            });
        }
        Ok(prep)
    }

    /// `None` when `‖b‖₂² ≥ radius`; used by rejection sampling.
    pub fn within(spec: &SpaceSpec, b: &CMatrix, radius: f64) -> Result<Option<Self>> {
        let prep = Self::build(spec, b)?;
        if prep.norm_sq() >= radius || (spec.sign() == Sign::Compact && prep.norm_sq() > 1.0 + 1e-12) {
            return Ok(None);
        }
        Ok(Some(prep))
    }

    fn build(spec: &SpaceSpec, b: &CMatrix) -> Result<Self> {
        check_shape(spec, b, "b", false)?;
        let x = b * b.adjoint();
        let y = b.adjoint() * b;
        let y_eig = herm_eig(&y, 1e-10)?;
        let bv = b * &y_eig.vectors;
        Ok(Self {
            spec: *spec,
            x,
            y,
            y_eig,
            bv,
        })
    }

    /// `λ_max(b†b) = ‖b‖₂²`.
    pub fn norm_sq(&self) -> f64 {
        self.y_eig.values[self.y_eig.values.len() - 1].max(0.0)
    }

    pub fn x(&self) -> &CMatrix {
        &self.x
    }

    pub fn y(&self) -> &CMatrix {
        &self.y
    }

    /// The kernel at `t`; `t` is assumed to lie in [0, 1].
    pub fn kernel_matrix(&self, t: f64) -> CMatrix {
        let (p, q) = (self.spec.p(), self.spec.q());
        let pm = self.spec.sign().pm();
        let v = &self.y_eig.vectors;
        let mut upper = self.bv.clone();
        let mut lower = v.clone();
        for (j, &lam) in self.y_eig.values.iter().enumerate() {
            let base = (1.0 + pm * lam).max(0.0);
            let up = 2.0 * base.powf((1.0 + t) / 2.0);
            let lo = -2.0 * pm * base.powf((1.0 - t) / 2.0);
            upper.column_mut(j).scale_mut(up);
            lower.column_mut(j).scale_mut(lo);
        }
        let mut m = CMatrix::zeros(p + q, p + q);
        let mut tl = self.x.scale(2.0 * pm);
        for i in 0..p {
            tl[(i, i)] += C64::new(1.0, 0.0);
        }
        let mut br = self.y.scale(-2.0 * pm);
        for i in 0..q {
            br[(i, i)] -= C64::new(1.0, 0.0);
        }
        m.view_mut((0, 0), (p, p)).copy_from(&tl);
        m.view_mut((0, p), (p, q)).copy_from(&(upper * v.adjoint()));
        m.view_mut((p, 0), (q, p))
            .copy_from(&(lower * self.bv.adjoint()));
        m.view_mut((p, p), (q, q)).copy_from(&br);
        m
    }

    pub fn kernel(&self, t: f64) -> Result<KernelMatrix> {
        check_t(t)?;
        Ok(KernelMatrix::new_unchecked(self.spec, self.kernel_matrix(t)))
    }
}

/// The deformed kernel at `t ∈ [0, 1]`.
pub fn dm_kernel(spec: &SpaceSpec, t: f64, b: &CMatrix) -> Result<KernelMatrix> {
    check_t(t)?;
    KernelPrep::new(spec, b)?.kernel(t)
}

/// The same kernel with the lower left block written as `b†(1 ± X)^{(1−t)/2}`,
/// each power taken directly. Slower; kept as a cross-check.
pub fn dm_kernel_literal(spec: &SpaceSpec, t: f64, b: &CMatrix) -> Result<KernelMatrix> {
    check_t(t)?;
    check_shape(spec, b, "b", false)?;
    let pm = spec.sign().pm();
    let (p, q) = (spec.p(), spec.q());
    let x = b * b.adjoint();
    let y = b.adjoint() * b;
    let left = HermitianPd::new(identity(p) + x.scale(pm), POWER_TOL)?;
    let right = HermitianPd::new(identity(q) + y.scale(pm), POWER_TOL)?;
    let mut m = CMatrix::zeros(p + q, p + q);
    m.view_mut((0, 0), (p, p))
        .copy_from(&(identity(p) + x.scale(2.0 * pm)));
    m.view_mut((0, p), (p, q))
        .copy_from(&(b * right.power((1.0 + t) / 2.0)).scale(2.0));
    m.view_mut((p, 0), (q, p))
        .copy_from(&(b.adjoint() * left.power((1.0 - t) / 2.0)).scale(-2.0 * pm));
    m.view_mut((p, p), (q, q))
        .copy_from(&(-identity(q) - y.scale(2.0 * pm)));
    Ok(KernelMatrix::new_unchecked(*spec, m))
}

/// Metric H with `H M_t† H⁻¹ = M_t`: `diag((1 ± X)^t, 1_q)` for the compact sign,
/// `s·diag((1 ± X)^t, 1_q)` for the non-compact one.
///
/// `M_t = S M_0 S⁻¹` with `S = diag((1 ± X)^{t/2}, 1)`, so the plain
/// (pseudo-)Hermiticity of `M_0` carries over to `M_t` with the metric `S²`.
pub fn deformation_metric(spec: &SpaceSpec, t: f64, b: &CMatrix) -> Result<CMatrix> {
    check_t(t)?;
    check_shape(spec, b, "b", false)?;
    let (p, q) = (spec.p(), spec.q());
    let left = HermitianPd::new(identity(p) + (b * b.adjoint()).scale(spec.sign().pm()), POWER_TOL)?;
    let mut g = identity(p + q);
    g.view_mut((0, 0), (p, p)).copy_from(&left.power(t));
    Ok(match spec.sign() {
        Sign::Compact => g,
        Sign::Noncompact => s_matrix(spec) * g,
    })
}

fn real_diagonal(m: &CMatrix, what: &'static str) -> Result<Vec<f64>> {
    let scale = norm_inf(m).max(1.0);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j && m[(i, j)].norm() > 1e-12 * scale {
                return Err(Error::InvalidSpec(format!("{what} is not diagonal")));
            }
        }
    }
    Ok((0..m.nrows()).map(|i| m[(i, i)].re).collect())
}

/// The homotopy written in a singular value frame `b = u D v†`:
/// `(u D(1 ± D†D)^{t/2} v†, v D†(1 ± DD†)^{−t/2} u†)`. For CI and DIII pass
/// `v = ū` so that `b = u D uᵗ`.
///
/// The result is compared with [`homotopy`] at `u D v†`; the relative
/// difference is stored in `residual` and must stay below 1e−10.
pub fn homotopy_svd_form(
    spec: &SpaceSpec,
    t: f64,
    u: &CMatrix,
    d: &CMatrix,
    v: &CMatrix,
) -> Result<HomotopyPoint> {
    check_t(t)?;
    let (p, q) = (spec.p(), spec.q());
    check_shape(spec, d, "D", false)?;
    if u.shape() != (p, p) || v.shape() != (q, q) {
        return Err(Error::ShapeMismatch {
            expected: format!("u {p}x{p}, v {q}x{q}"),
            got: format!(
                "u {}x{}, v {}x{}",
                u.nrows(),
                u.ncols(),
                v.nrows(),
                v.ncols()
            ),
        });
    }
    let pm = spec.sign().pm();
    let dtd = real_diagonal(&(d.adjoint() * d), "D†D")?;
    let ddt = real_diagonal(&(d * d.adjoint()), "DD†")?;
    let power = |vals: &[f64], alpha: f64| -> Result<CMatrix> {
        let mut out = CMatrix::zeros(vals.len(), vals.len());
        for (i, &x) in vals.iter().enumerate() {
            let base = 1.0 + pm * x;
            if base <= 0.0 {
                return Err(Error::NotPositiveDefinite {
                    min_eigenvalue: base,
                });
            }
            out[(i, i)] = C64::new(base.powf(alpha), 0.0);
        }
        Ok(out)
    };
    let b_prime = u * d * power(&dtd, t / 2.0)? * v.adjoint();
    let b_tilde_prime = v * d.adjoint() * power(&ddt, -t / 2.0)? * u.adjoint();
    let b = u * d * v.adjoint();
    let direct = homotopy(spec, t, &b)?;
    let residual = (norm_inf(&(&b_prime - &direct.b_prime))
        / norm_inf(&direct.b_prime).max(1.0))
    .max(norm_inf(&(&b_tilde_prime - &direct.b_tilde_prime)) / norm_inf(&direct.b_tilde_prime).max(1.0));
    if residual > CONSISTENCY_TOL {
        return Err(Error::ConvergenceFailure("singular value form of the homotopy"));
    }
    Ok(HomotopyPoint {
        t,
        sign: spec.sign(),
        b,
        b_prime,
        b_tilde_prime,
        residual,
    })
}

/// `q_map ∘ r_map ∘ homotopy`, the composite the kernel is derived from.
pub fn composite_kernel(spec: &SpaceSpec, t: f64, b: &CMatrix) -> Result<KernelMatrix> {
    let h = homotopy(spec, t, b)?;
    let pair = r_map(spec, &h.b_prime, &h.b_tilde_prime)?;
    q_map(&pair)
}
