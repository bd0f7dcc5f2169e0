//! Catalogue of the symmetric spaces AIII, CI and DIII.
//!
//! The coordinate `b` is always a p×q matrix (N×N for CI and DIII, with p = q = N),
//! so the upper right block `2b(...)` of a kernel matrix has the right shape.
//! Kernel matrices are (p+q)×(p+q) matrices of the form `g s g⁻¹`.

mod sampling;

pub use sampling::{gaussian_density, haar_unitary, propose_box, sample_ball, sample_gaussian};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixkit::{self, c64, norm_inf, CMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    AIII,
    CI,
    DIII,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::AIII => "AIII",
            Family::CI => "CI",
            Family::DIII => "DIII",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Compact,
    Noncompact,
}

impl Sign {
    /// The `±` of `(1 ± b†b)`: −1 for compact, +1 for non-compact.
    pub fn pm(self) -> f64 {
        match self {
            Sign::Compact => -1.0,
            Sign::Noncompact => 1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Compact => "compact",
            Sign::Noncompact => "noncompact",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpaceSpec {
    family: Family,
    p: usize,
    q: usize,
    sign: Sign,
}

impl SpaceSpec {
    pub fn aiii(p: usize, q: usize, sign: Sign) -> Result<Self> {
        if q == 0 || p < q {
            return Err(Error::InvalidSpec(format!(
                "AIII requires p >= q >= 1, got p = {p}, q = {q}"
            )));
        }
        Ok(Self {
            family: Family::AIII,
            p,
            q,
            sign,
        })
    }

    pub fn ci(n: usize, sign: Sign) -> Result<Self> {
        Self::square(Family::CI, n, sign)
    }

    pub fn diii(n: usize, sign: Sign) -> Result<Self> {
        Self::square(Family::DIII, n, sign)
    }

    fn square(family: Family, n: usize, sign: Sign) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec(format!("{family} requires N >= 1")));
        }
        Ok(Self {
            family,
            p: n,
            q: n,
            sign,
        })
    }

    /// Builds a spec from the family and its size parameters; `n` is used for
    /// CI and DIII, `p`/`q` for AIII.
    pub fn new(family: Family, p: usize, q: usize, n: usize, sign: Sign) -> Result<Self> {
        match family {
            Family::AIII => Self::aiii(p, q, sign),
            Family::CI => Self::ci(n, sign),
            Family::DIII => Self::diii(n, sign),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn with_sign(self, sign: Sign) -> Self {
        Self { sign, ..self }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// N for CI/DIII; `None` for AIII.
    pub fn big_n(&self) -> Option<usize> {
        match self.family {
            Family::AIII => None,
            _ => Some(self.p),
        }
    }

    /// Size of kernel matrices, p + q.
    pub fn n(&self) -> usize {
        self.p + self.q
    }

    /// Complex dimension of W.
    pub fn m(&self) -> usize {
        match self.family {
            Family::AIII => self.p * self.q,
            Family::CI => self.p * (self.p + 1) / 2,
            Family::DIII => self.p * (self.p - 1) / 2,
        }
    }

    pub fn real_dim(&self) -> usize {
        2 * self.m()
    }

    /// Positions `(i, j)` of the independent entries of `b`, in coordinate order.
    pub fn coordinate_entries(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.m());
        for i in 0..self.p {
            for j in 0..self.q {
                let keep = match self.family {
                    Family::AIII => true,
                    Family::CI => i <= j,
                    Family::DIII => i < j,
                };
                if keep {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Sign of the mirrored entry: `b_ji = mirror · b_ij`.
    fn mirror(&self) -> Option<f64> {
        match self.family {
            Family::AIII => None,
            Family::CI => Some(1.0),
            Family::DIII => Some(-1.0),
        }
    }

    pub fn label(&self) -> String {
        match self.family {
            Family::AIII => format!("AIII({},{}) {}", self.p, self.q, self.sign),
            _ => format!("{} N={} {}", self.family, self.p, self.sign),
        }
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A point of W: a p×q matrix with the family's symmetry.
#[derive(Debug, Clone)]
pub struct WElement {
    spec: SpaceSpec,
    b: CMatrix,
}

impl WElement {
    pub fn new(spec: SpaceSpec, b: CMatrix) -> Result<Self> {
        if b.shape() != (spec.p, spec.q) {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", spec.p, spec.q),
                got: format!("{}x{}", b.nrows(), b.ncols()),
            });
        }
        matrixkit::ensure_finite(&b, "W element")?;
        let scale = norm_inf(&b).max(1.0);
        match spec.family {
            Family::CI => {
                let r = matrixkit::transpose_residual(&b, 1.0);
                if r > 1e-12 * scale {
                    return Err(Error::NotSymmetric { residual: r });
                }
            }
            Family::DIII => {
                let r = matrixkit::transpose_residual(&b, -1.0);
                if r > 1e-12 * scale {
                    return Err(Error::NotAntisymmetric { residual: r });
                }
            }
            Family::AIII => {}
        }
        Ok(Self { spec, b })
    }

    pub fn zero(spec: SpaceSpec) -> Self {
        Self {
            spec,
            b: CMatrix::zeros(spec.p, spec.q),
        }
    }

    /// Builds `b` from its independent complex coordinates; structure is exact.
    pub fn from_coords(spec: SpaceSpec, coords: &[C64]) -> Self {
        debug_assert_eq!(coords.len(), spec.m());
        let mut b = CMatrix::zeros(spec.p, spec.q);
        let mirror = spec.mirror();
        for (&(i, j), &c) in spec.coordinate_entries().iter().zip(coords) {
            b[(i, j)] = c;
            if let Some(sgn) = mirror {
                if i != j {
                    b[(j, i)] = c * sgn;
                }
            }
        }
        Self { spec, b }
    }

    /// Builds `b` from real coordinates `(Re c_1, Im c_1, Re c_2, ...)`.
    pub fn from_real_coords(spec: SpaceSpec, x: &[f64]) -> Self {
        let coords: Vec<C64> = x.chunks_exact(2).map(|p| c64(p[0], p[1])).collect();
        Self::from_coords(spec, &coords)
    }

    pub fn coords(&self) -> Vec<C64> {
        matrix_coords(&self.spec, &self.b)
    }

    pub fn real_coords(&self) -> Vec<f64> {
        self.coords().iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.b
    }

    pub fn into_matrix(self) -> CMatrix {
        self.b
    }

    pub fn spectral_norm(&self) -> f64 {
        matrixkit::spectral_norm(&self.b)
    }

    pub fn in_unit_ball(&self) -> bool {
        self.spectral_norm() < 1.0
    }
}

/// Independent coordinates of any p×q matrix (no structure check).
pub fn matrix_coords(spec: &SpaceSpec, b: &CMatrix) -> Vec<C64> {
    spec.coordinate_entries()
        .iter()
        .map(|&(i, j)| b[(i, j)])
        .collect()
}

/// A kernel matrix `g s g⁻¹`.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    spec: SpaceSpec,
    m: CMatrix,
}

impl KernelMatrix {
    pub fn new(spec: SpaceSpec, m: CMatrix) -> Result<Self> {
        let n = spec.n();
        if m.shape() != (n, n) {
            return Err(Error::ShapeMismatch {
                expected: format!("{n}x{n}"),
                got: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        Ok(Self { spec, m })
    }

    pub(crate) fn new_unchecked(spec: SpaceSpec, m: CMatrix) -> Self {
        Self { spec, m }
    }

    pub fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }
}

/// `s = diag(1_p, −1_q)`.
pub fn s_matrix(spec: &SpaceSpec) -> CMatrix {
    CMatrix::from_fn(spec.n(), spec.n(), |i, j| {
        if i != j {
            C64::new(0.0, 0.0)
        } else if i < spec.p {
            C64::new(1.0, 0.0)
        } else {
            C64::new(-1.0, 0.0)
        }
    })
}

/// `Σ_x = σ_x ⊗ 1_N`.
pub fn sigma_x(n: usize) -> CMatrix {
    CMatrix::from_fn(2 * n, 2 * n, |i, j| {
        if (i + n == j) || (j + n == i) {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `Σ_y = σ_y ⊗ 1_N`.
pub fn sigma_y(n: usize) -> CMatrix {
    CMatrix::from_fn(2 * n, 2 * n, |i, j| {
        if i + n == j {
            C64::new(0.0, -1.0)
        } else if j + n == i {
            C64::new(0.0, 1.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Orthonormal real basis of W under `Re Tr(X†Y)`: for each independent entry
/// a real unit and an imaginary unit, mirrored per family and normalized.
pub fn w_basis(spec: &SpaceSpec) -> Vec<WElement> {
    let m = spec.m();
    let mut out = Vec::with_capacity(2 * m);
    for (k, &(i, j)) in spec.coordinate_entries().iter().enumerate() {
        let norm = if spec.mirror().is_some() && i != j {
            std::f64::consts::SQRT_2
        } else {
            1.0
        };
        for unit in [c64(1.0, 0.0), c64(0.0, 1.0)] {
            let mut coords = vec![C64::new(0.0, 0.0); m];
            coords[k] = unit / norm;
            out.push(WElement::from_coords(*spec, &coords));
        }
    }
    out
}

/// Residuals of the kernel-matrix invariants, all relative to the scale of M.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelDiagnostics {
    /// ‖M² − 1‖∞ / max(1, ‖M‖∞)².
    pub involution: f64,
    /// |tr M − (p − q)| / max(1, ‖M‖∞).
    pub trace: f64,
    /// ‖H M† − M H‖∞ / (max(1, ‖M‖∞)·‖H‖∞), H the Hermiticity metric.
    pub hermiticity: f64,
    /// CI: ‖Mᵗ + Σ_y M Σ_y‖∞, DIII: ‖Mᵗ + Σ_x M Σ_x‖∞, relative; `None` for AIII.
    pub transpose: Option<f64>,
    pub passed: bool,
}

impl KernelDiagnostics {
    pub fn max_residual(&self) -> f64 {
        self.involution
            .max(self.trace)
            .max(self.hermiticity)
            .max(self.transpose.unwrap_or(0.0))
    }
}

/// Checks every kernel invariant with the plain metric: `M† = M` (compact) or
/// `M† = sMs` (non-compact).
pub fn check_kernel(m: &CMatrix, spec: &SpaceSpec, tol: f64) -> Result<KernelDiagnostics> {
    check_kernel_with_metric(m, spec, None, tol)
}

/// As [`check_kernel`], testing pseudo-Hermiticity `H M† H⁻¹ = M` against the
/// given metric H instead. With `None`, H = 1 (compact) or H = s (non-compact).
pub fn check_kernel_with_metric(
    m: &CMatrix,
    spec: &SpaceSpec,
    metric: Option<&CMatrix>,
    tol: f64,
) -> Result<KernelDiagnostics> {
    let n = spec.n();
    if m.shape() != (n, n) {
        return Err(Error::ShapeMismatch {
            expected: format!("{n}x{n}"),
            got: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let scale = norm_inf(m).max(1.0);
    let involution = norm_inf(&(m * m - CMatrix::identity(n, n))) / (scale * scale);
    let expected_trace = spec.p as f64 - spec.q as f64;
    let trace = (m.trace() - C64::new(expected_trace, 0.0)).norm() / scale;

    let default_metric;
    let h = match metric {
        Some(h) => h,
        None => {
            default_metric = match spec.sign {
                Sign::Compact => CMatrix::identity(n, n),
                Sign::Noncompact => s_matrix(spec),
            };
            &default_metric
        }
    };
    let hermiticity = norm_inf(&(h * m.adjoint() - m * h)) / (scale * norm_inf(h));

    let transpose = match spec.family {
        Family::AIII => None,
        Family::CI => {
            let sy = sigma_y(spec.p);
            Some(norm_inf(&(m.transpose() + &sy * m * &sy)) / scale)
        }
        Family::DIII => {
            let sx = sigma_x(spec.p);
            Some(norm_inf(&(m.transpose() + &sx * m * &sx)) / scale)
        }
    };
    let mut diag = KernelDiagnostics {
        involution,
        trace,
        hermiticity,
        transpose,
        passed: false,
    };
    diag.passed = diag.max_residual() <= tol;
    Ok(diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedStream;

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            v.len(),
            v.iter().map(|&x| c64(x, 0.0)),
        ))
    }

    #[test]
    fn spec_dimensions() {
        let a = SpaceSpec::aiii(2, 1, Sign::Compact).unwrap();
        assert_eq!((a.n(), a.m()), (3, 2));
        assert_eq!(SpaceSpec::ci(2, Sign::Compact).unwrap().m(), 3);
        assert_eq!(SpaceSpec::diii(3, Sign::Compact).unwrap().m(), 3);
        assert!(SpaceSpec::aiii(1, 2, Sign::Compact).is_err());
        assert!(SpaceSpec::ci(0, Sign::Compact).is_err());
    }

    #[test]
    fn s_matrix_examples() {
        let s11 = s_matrix(&SpaceSpec::aiii(1, 1, Sign::Compact).unwrap());
        assert_eq!(s11, diag(&[1.0, -1.0]));
        let s21 = s_matrix(&SpaceSpec::aiii(2, 1, Sign::Compact).unwrap());
        assert_eq!(s21, diag(&[1.0, 1.0, -1.0]));
        let ci2 = s_matrix(&SpaceSpec::ci(2, Sign::Compact).unwrap());
        assert_eq!(ci2, diag(&[1.0, 1.0, -1.0, -1.0]));
        assert_eq!(&ci2 * &ci2, CMatrix::identity(4, 4));
    }

    #[test]
    fn w_basis_examples() {
        let b = w_basis(&SpaceSpec::aiii(1, 1, Sign::Compact).unwrap());
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].matrix()[(0, 0)], c64(1.0, 0.0));
        assert_eq!(b[1].matrix()[(0, 0)], c64(0.0, 1.0));

        assert_eq!(w_basis(&SpaceSpec::ci(1, Sign::Compact).unwrap()).len(), 2);

        let d = w_basis(&SpaceSpec::diii(2, Sign::Compact).unwrap());
        assert_eq!(d.len(), 2);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((d[0].matrix()[(0, 1)] - c64(r, 0.0)).norm() < 1e-15);
        assert!((d[0].matrix()[(1, 0)] - c64(-r, 0.0)).norm() < 1e-15);
        assert!((d[1].matrix()[(0, 1)] - c64(0.0, r)).norm() < 1e-15);
    }

    #[test]
    fn w_basis_is_orthonormal() {
        for spec in [
            SpaceSpec::aiii(2, 2, Sign::Compact).unwrap(),
            SpaceSpec::ci(3, Sign::Compact).unwrap(),
            SpaceSpec::diii(4, Sign::Compact).unwrap(),
        ] {
            let basis = w_basis(&spec);
            assert_eq!(basis.len(), spec.real_dim());
            for (k, x) in basis.iter().enumerate() {
                for (l, y) in basis.iter().enumerate() {
                    let ip = (x.matrix().adjoint() * y.matrix()).trace().re;
                    let expected = if k == l { 1.0 } else { 0.0 };
                    assert!((ip - expected).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn w_element_structure_checks() {
        let ci = SpaceSpec::ci(2, Sign::Compact).unwrap();
        let bad = CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        assert!(matches!(WElement::new(ci, bad), Err(Error::NotSymmetric { .. })));
        let coords = [c64(0.1, 0.2), c64(0.3, -0.1), c64(-0.2, 0.0)];
        let w = WElement::from_coords(ci, &coords);
        assert_eq!(w.coords(), coords.to_vec());
        assert_eq!(matrixkit::transpose_residual(w.matrix(), 1.0), 0.0);
    }

    #[test]
    fn check_kernel_on_s_and_perturbations() {
        for spec in [
            SpaceSpec::aiii(2, 1, Sign::Compact).unwrap(),
            SpaceSpec::ci(2, Sign::Noncompact).unwrap(),
            SpaceSpec::diii(2, Sign::Compact).unwrap(),
        ] {
            let d = check_kernel(&s_matrix(&spec), &spec, 1e-10).unwrap();
            assert_eq!(d.max_residual(), 0.0);
            assert!(d.passed);
        }

        let spec = SpaceSpec::aiii(2, 1, Sign::Compact).unwrap();
        let mut stream = SeedStream::new(3);
        let u = haar_unitary(3, &mut stream);
        let m = &u * s_matrix(&spec) * u.adjoint();
        assert!(check_kernel(&m, &spec, 1e-10).unwrap().passed);

        let eps = 1e-3;
        let mut pert = s_matrix(&spec);
        pert[(0, 1)] = c64(eps, 0.0);
        pert[(1, 0)] = c64(eps, 0.0);
        let d = check_kernel(&pert, &spec, 1e-10).unwrap();
        assert!(!d.passed);
        assert!(d.involution > eps && d.involution < 3.0 * eps);

        assert!(matches!(
            check_kernel(&CMatrix::zeros(2, 2), &spec, 1e-10),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
