//! Dense complex matrix utilities.
//!
//! Everything here works on small dense matrices (n ≤ 16). Fractional powers are
//! only ever taken of Hermitian positive definite arguments, through their
//! eigendecomposition, so the principal branch is unambiguous.
//!
//! The Hermitian eigensolver and the plain SVD are nalgebra's; the Takagi and Hua
//! canonical forms for complex symmetric and antisymmetric matrices are built on
//! top of them.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Default relative tolerance for equality checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Singular values below `RANK_TOL * ‖b‖∞` are treated as zero.
pub const RANK_TOL: f64 = 1e-13;

const EIG_MAX_ITER: usize = 10_000;

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Induced ∞-norm (maximum absolute row sum).
pub fn norm_inf(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_finite(m: &CMatrix, what: &'static str) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() == m.ncols() && m.nrows() > 0 {
        Ok(m.nrows())
    } else {
        Err(Error::ShapeMismatch {
            expected: "non-empty square matrix".into(),
            got: format!("{}x{}", m.nrows(), m.ncols()),
        })
    }
}

/// Entrywise complex conjugate.
pub fn conj(m: &CMatrix) -> CMatrix {
    m.map(|z| z.conj())
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// ‖m − m†‖∞.
pub fn hermitian_residual(m: &CMatrix) -> f64 {
    norm_inf(&(m - m.adjoint()))
}

/// ‖m − sign·mᵗ‖∞; `sign = 1` tests symmetry, `sign = -1` antisymmetry.
pub fn transpose_residual(m: &CMatrix, sign: f64) -> f64 {
    norm_inf(&(m - m.transpose().scale(sign)))
}

/// ‖u†u − 1‖∞.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    norm_inf(&(u.adjoint() * u - identity(u.ncols())))
}

/// Relative residual ‖a − b‖∞ / max(1, ‖b‖∞).
pub fn relative_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    norm_inf(&(a - b)) / norm_inf(b).max(1.0)
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermEig {
    /// `U f(Λ) U†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }
}

/// Hermitian eigendecomposition. Fails with `NotHermitian` unless
/// `‖P − P†‖∞ ≤ tol·‖P‖∞`.
pub fn herm_eig(p: &CMatrix, tol: f64) -> Result<HermEig> {
    let n = ensure_square(p)?;
    ensure_finite(p, "eigensolver input")?;
    let scale = norm_inf(p);
    let residual = hermitian_residual(p);
    if residual > tol * scale {
        return Err(Error::NotHermitian {
            residual: residual / scale.max(f64::MIN_POSITIVE),
        });
    }
    if n == 1 {
        return Ok(HermEig {
            values: vec![p[(0, 0)].re],
            vectors: identity(1),
        });
    }
    let eig = SymmetricEigen::try_new(hermitian_part(p), f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::ConvergenceFailure("Hermitian eigensolver"))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermEig { values, vectors })
}

/// A Hermitian positive definite matrix together with its eigendecomposition.
#[derive(Debug, Clone)]
pub struct HermitianPd {
    matrix: CMatrix,
    eig: HermEig,
}

impl HermitianPd {
    pub fn new(p: CMatrix, tol: f64) -> Result<Self> {
        let eig = herm_eig(&p, tol)?;
        let n = eig.values.len() as f64;
        let min = eig.values[0];
        let max = eig.values[eig.values.len() - 1].abs();
        if min <= 0.0 || min <= n * f64::EPSILON * max {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
        Ok(Self {
            matrix: hermitian_part(&p),
            eig,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.values
    }

    pub fn dim(&self) -> usize {
        self.eig.values.len()
    }

    pub fn power(&self, alpha: f64) -> CMatrix {
        if alpha == 0.0 {
            identity(self.dim())
        } else if alpha == 1.0 {
            self.matrix.clone()
        } else {
            self.eig.map(|x| x.powf(alpha))
        }
    }

    pub fn ln(&self) -> CMatrix {
        self.eig.map(f64::ln)
    }

    /// Fréchet derivative of `P ↦ P^alpha` in the direction `e` (Daleckii-Krein).
    pub fn power_derivative(&self, alpha: f64, e: &CMatrix) -> CMatrix {
        let v = &self.eig.vectors;
        let lam = &self.eig.values;
        let mut g = v.adjoint() * e * v;
        for i in 0..lam.len() {
            for j in 0..lam.len() {
                let (a, b) = (lam[i], lam[j]);
                let gamma = if (a - b).abs() > 1e-6 * a.max(b) {
                    (a.powf(alpha) - b.powf(alpha)) / (a - b)
                } else {
                    let mid = 0.5 * (a + b);
                    alpha * mid.powf(alpha - 1.0)
                };
                g[(i, j)] *= gamma;
            }
        }
        v * g * v.adjoint()
    }
}

/// Principal real power `P^alpha = U Λ^alpha U†`.
pub fn principal_power(p: &HermitianPd, alpha: f64) -> CMatrix {
    p.power(alpha)
}

/// Full singular value decomposition `b = u D v†` with square unitary factors.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    /// Descending, length `min(rows, cols)`.
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

impl Svd {
    /// Rectangular diagonal factor D with the shape of the input.
    pub fn d_matrix(&self) -> CMatrix {
        let mut d = CMatrix::zeros(self.u.nrows(), self.v.nrows());
        for (k, s) in self.singular_values.iter().enumerate() {
            d[(k, k)] = C64::new(*s, 0.0);
        }
        d
    }

    pub fn reconstruct(&self) -> CMatrix {
        &self.u * self.d_matrix() * self.v.adjoint()
    }

    /// Number of singular values above the rank threshold.
    pub fn rank(&self) -> usize {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values
            .iter()
            .filter(|&&s| s > RANK_TOL * top.max(f64::MIN_POSITIVE))
            .count()
    }
}

pub fn svd(b: &CMatrix) -> Result<Svd> {
    let (rows, cols) = b.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::ShapeMismatch {
            expected: "non-empty matrix".into(),
            got: format!("{rows}x{cols}"),
        });
    }
    ensure_finite(b, "svd input")?;
    let k = rows.min(cols);
    if max_abs(b) == 0.0 {
        return Ok(Svd {
            u: identity(rows),
            singular_values: vec![0.0; k],
            v: identity(cols),
        });
    }
    let dec = b
        .clone()
        .try_svd(true, true, f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::ConvergenceFailure("singular value decomposition"))?;
    let u_thin = dec.u.expect("u requested");
    let v_thin = dec.v_t.expect("v_t requested").adjoint();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &c| dec.singular_values[c].total_cmp(&dec.singular_values[a]));
    let singular_values = order.iter().map(|&j| dec.singular_values[j]).collect();
    let u_sorted = CMatrix::from_fn(rows, k, |i, j| u_thin[(i, order[j])]);
    let v_sorted = CMatrix::from_fn(cols, k, |i, j| v_thin[(i, order[j])]);
    Ok(Svd {
        u: complete_unitary(&u_sorted),
        singular_values,
        v: complete_unitary(&v_sorted),
    })
}

fn project_out(x: &mut DVector<C64>, basis: &[DVector<C64>]) {
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for q in basis {
            let coeff = q.dotc(x);
            x.axpy(-coeff, q, C64::new(1.0, 0.0));
        }
    }
}

/// Orthonormalizes the columns of `cols` (n×k, assumed close to orthonormal)
/// and extends them to an n×n unitary.
pub fn complete_unitary(cols: &CMatrix) -> CMatrix {
    let n = cols.nrows();
    let mut basis: Vec<DVector<C64>> = Vec::with_capacity(n);
    for j in 0..cols.ncols() {
        let mut x = cols.column(j).into_owned();
        project_out(&mut x, &basis);
        let norm = x.norm();
        if norm > 1e-8 {
            basis.push(x.unscale(norm));
        }
    }
    while basis.len() < n {
        let mut best: Option<(f64, DVector<C64>)> = None;
        for i in 0..n {
            let mut x = DVector::<C64>::zeros(n);
            x[i] = C64::new(1.0, 0.0);
            project_out(&mut x, &basis);
            let norm = x.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, x));
            }
        }
        let (norm, x) = best.expect("n > 0");
        basis.push(x.unscale(norm));
    }
    CMatrix::from_columns(&basis)
}

/// Takagi factorization `b = u D uᵗ` of a complex symmetric matrix.
#[derive(Debug, Clone)]
pub struct Takagi {
    pub u: CMatrix,
    /// Descending, non-negative.
    pub values: Vec<f64>,
}

impl Takagi {
    pub fn d_matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&d| C64::new(d, 0.0)),
        ))
    }

    pub fn reconstruct(&self) -> CMatrix {
        &self.u * self.d_matrix() * self.u.transpose()
    }
}

/// Takagi factorization.
///
/// With `b = B + iC` and `u = x + iy`, the condition `b ū = σ u` is the real
/// symmetric eigenproblem `[[B, C], [C, −B]] (x; y) = σ (x; y)`, whose spectrum is
/// `±σ_k`. Eigenvectors for `+σ` are automatically orthogonal to the images of all
/// other eigenvectors under `(x; y) ↦ (−y; x)`, which makes the resulting `u`
/// columns complex-orthonormal even inside degenerate clusters.
pub fn takagi(b: &CMatrix) -> Result<Takagi> {
    let n = ensure_square(b)?;
    ensure_finite(b, "takagi input")?;
    let scale = norm_inf(b);
    let residual = transpose_residual(b, 1.0);
    if residual > 1e-12 * scale {
        return Err(Error::NotSymmetric {
            residual: residual / scale,
        });
    }
    if scale == 0.0 {
        return Ok(Takagi {
            u: identity(n),
            values: vec![0.0; n],
        });
    }
    let sym = (b + b.transpose()).scale(0.5);
    let mut k = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = sym[(i, j)];
            k[(i, j)] = z.re;
            k[(i, n + j)] = z.im;
            k[(n + i, j)] = z.im;
            k[(n + i, n + j)] = -z.re;
        }
    }
    let eig = SymmetricEigen::try_new(k, f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::ConvergenceFailure("Takagi eigensolver"))?;
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]));
    let threshold = RANK_TOL * scale;
    let mut cols = Vec::new();
    let mut values = Vec::with_capacity(n);
    for &idx in order.iter().take(n) {
        let sigma = eig.eigenvalues[idx];
        if sigma > threshold {
            let col = eig.eigenvectors.column(idx);
            let u = DVector::from_fn(n, |i, _| C64::new(col[i], col[n + i]));
            let norm = u.norm();
            cols.push(u.unscale(norm));
            values.push(sigma);
        }
    }
    values.resize(n, 0.0);
    let u = if cols.is_empty() {
        identity(n)
    } else {
        complete_unitary(&CMatrix::from_columns(&cols))
    };
    Ok(Takagi { u, values })
}

/// Canonical form `b = u D uᵗ` of a complex antisymmetric matrix, with D block
/// diagonal in 2×2 blocks `d_k·[[0, 1], [−1, 0]]` and a trailing zero row and
/// column when the dimension is odd.
#[derive(Debug, Clone)]
pub struct Hua {
    pub u: CMatrix,
    /// Block values `d_k`, descending, length `⌊N/2⌋`.
    pub values: Vec<f64>,
}

/// Block diagonal canonical antisymmetric matrix of size `n` with the given
/// block values.
pub fn antisymmetric_canonical(n: usize, values: &[f64]) -> CMatrix {
    let mut d = CMatrix::zeros(n, n);
    for (k, &v) in values.iter().enumerate() {
        d[(2 * k, 2 * k + 1)] = C64::new(v, 0.0);
        d[(2 * k + 1, 2 * k)] = C64::new(-v, 0.0);
    }
    d
}

impl Hua {
    pub fn d_matrix(&self) -> CMatrix {
        antisymmetric_canonical(self.u.nrows(), &self.values)
    }

    pub fn reconstruct(&self) -> CMatrix {
        &self.u * self.d_matrix() * self.u.transpose()
    }
}

/// Antisymmetric canonical form by pairing the doubly degenerate singular
/// subspaces: for a unit left singular vector `w` with value `d`, the partner
/// `b w̄ / d` is orthogonal to `w` and spans the rest of the pair.
pub fn hua(b: &CMatrix) -> Result<Hua> {
    let n = ensure_square(b)?;
    ensure_finite(b, "hua input")?;
    let scale = norm_inf(b);
    let residual = transpose_residual(b, -1.0);
    if residual > 1e-12 * scale {
        return Err(Error::NotAntisymmetric {
            residual: residual / scale,
        });
    }
    let pairs = n / 2;
    if scale == 0.0 {
        return Ok(Hua {
            u: identity(n),
            values: vec![0.0; pairs],
        });
    }
    let asym = (b - b.transpose()).scale(0.5);
    let dec = svd(&asym)?;
    let threshold = RANK_TOL * scale;
    let nonzero = dec
        .singular_values
        .iter()
        .filter(|&&s| s > threshold)
        .count();
    let mut chosen: Vec<DVector<C64>> = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(pairs);
    for j in 0..nonzero {
        if 2 * values.len() >= nonzero {
            break;
        }
        let mut w = dec.u.column(j).into_owned();
        project_out(&mut w, &chosen);
        let norm = w.norm();
        if norm < 0.5 {
            continue;
        }
        let w = w.unscale(norm);
        let image = &asym * w.map(|z| z.conj());
        let mut partner = image.clone();
        project_out(&mut partner, &chosen);
        let pnorm = partner.norm();
        let partner = partner.unscale(pnorm);
        let d = partner.dotc(&image).re;
        chosen.push(partner);
        chosen.push(w);
        values.push(d);
    }
    values.resize(pairs, 0.0);
    let u = if chosen.is_empty() {
        identity(n)
    } else {
        complete_unitary(&CMatrix::from_columns(&chosen))
    };
    Ok(Hua { u, values })
}

/// Pfaffian of a complex antisymmetric matrix by skew-symmetric Gaussian
/// elimination with partial pivoting (Parlett-Reid).
pub fn pfaffian(a: &CMatrix) -> Result<C64> {
    let n = ensure_square(a)?;
    if n % 2 == 1 {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut m = (a - a.transpose()).scale(0.5);
    let mut pf = C64::new(1.0, 0.0);
    for k in (0..n - 1).step_by(2) {
        let mut kp = k + 1;
        let mut best = m[(k + 1, k)].norm();
        for i in k + 2..n {
            if m[(i, k)].norm() > best {
                best = m[(i, k)].norm();
                kp = i;
            }
        }
        if kp != k + 1 {
            m.swap_rows(k + 1, kp);
            m.swap_columns(k + 1, kp);
            pf = -pf;
        }
        let pivot = m[(k, k + 1)];
        if pivot == C64::new(0.0, 0.0) {
            return Ok(C64::new(0.0, 0.0));
        }
        pf *= pivot;
        if k + 2 < n {
            let tau: Vec<C64> = (k + 2..n).map(|j| m[(k, j)] / pivot).collect();
            let col: Vec<C64> = (k + 2..n).map(|i| m[(i, k + 1)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    m[(i, j)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
    }
    Ok(pf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn real(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
        CMatrix::from_row_slice(
            rows,
            cols,
            &data.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>(),
        )
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let e = herm_eig(&identity(2), 1e-12).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
        assert!(relative_diff(&e.vectors, &identity(2)) < 1e-14);

        let e = herm_eig(&real(2, 2, &[3.0, 0.0, 0.0, -1.0]), 1e-12).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eig_two_by_two_characteristic_polynomial() {
        // λ² − 4λ + 3 = 0
        let p = real(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let e = herm_eig(&p, 1e-12).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        assert!(relative_diff(&e.reconstruct(), &p) < 1e-12);
        assert!(unitarity_residual(&e.vectors) < 1e-12);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let p = real(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(herm_eig(&p, 1e-12), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn principal_power_examples() {
        let id = HermitianPd::new(identity(3), 1e-12).unwrap();
        assert!(relative_diff(&id.power(0.37), &identity(3)) < 1e-15);

        let four = HermitianPd::new(real(1, 1, &[4.0]), 1e-12).unwrap();
        assert!((four.power(0.5)[(0, 0)].re - 2.0).abs() < 1e-15);

        let p = HermitianPd::new(real(2, 2, &[2.0, 1.0, 1.0, 2.0]), 1e-12).unwrap();
        let r3 = 3f64.sqrt();
        let expected = real(
            2,
            2,
            &[(r3 + 1.0) / 2.0, (r3 - 1.0) / 2.0, (r3 - 1.0) / 2.0, (r3 + 1.0) / 2.0],
        );
        let root = principal_power(&p, 0.5);
        assert!(relative_diff(&root, &expected) < 1e-14);
        assert!(relative_diff(&(&root * &root), p.matrix()) < 1e-14);
        assert!(relative_diff(&p.power(1.0), p.matrix()) == 0.0);
    }

    #[test]
    fn power_derivative_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(3, 3, &mut rng);
        let p = &a * a.adjoint() + identity(3);
        let e = hermitian_part(&random(3, 3, &mut rng));
        let h = 1e-6;
        let pd = HermitianPd::new(p.clone(), 1e-12).unwrap();
        let plus = HermitianPd::new(&p + e.scale(h), 1e-12).unwrap().power(0.37);
        let minus = HermitianPd::new(&p - e.scale(h), 1e-12).unwrap().power(0.37);
        let fd = (plus - minus).unscale(2.0 * h);
        assert!(norm_inf(&(pd.power_derivative(0.37, &e) - fd)) < 1e-8);
        // degenerate spectrum falls back to the derivative
        let id = HermitianPd::new(identity(2).scale(2.0), 1e-12).unwrap();
        let e = real(2, 2, &[1.0, 0.5, 0.5, -1.0]);
        let expected = e.scale(0.5 * 2f64.powf(-0.5));
        assert!(norm_inf(&(id.power_derivative(0.5, &e) - expected)) < 1e-14);
    }

    #[test]
    fn power_rejects_indefinite() {
        let p = real(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            HermitianPd::new(p, 1e-12),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let singular = real(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(HermitianPd::new(singular, 1e-12).is_err());
    }

    #[test]
    fn svd_examples() {
        let z = svd(&CMatrix::zeros(2, 3)).unwrap();
        assert!(z.singular_values.iter().all(|&s| s == 0.0));

        let d = svd(&real(2, 2, &[2.0, 0.0, 0.0, 1.0])).unwrap();
        assert!((d.singular_values[0] - 2.0).abs() < 1e-15);
        assert!((d.singular_values[1] - 1.0).abs() < 1e-15);
        assert!(relative_diff(&d.reconstruct(), &real(2, 2, &[2.0, 0.0, 0.0, 1.0])) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (r, c) in [(2, 3), (3, 2), (4, 4), (1, 3)] {
            let b = random(r, c, &mut rng);
            let s = svd(&b).unwrap();
            assert!(norm_inf(&(s.reconstruct() - &b)) <= 1e-12 * norm_inf(&b));
            assert!(unitarity_residual(&s.u) < 1e-12 && unitarity_residual(&s.v) < 1e-12);
            assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
            // squared singular values are the top eigenvalues of b†b
            let e = herm_eig(&(b.adjoint() * &b), 1e-12).unwrap();
            let mut top: Vec<f64> = e.values.iter().rev().take(r.min(c)).cloned().collect();
            top.iter_mut().for_each(|x| *x = x.max(0.0).sqrt());
            for (a, b) in top.iter().zip(&s.singular_values) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn takagi_examples() {
        let t = takagi(&CMatrix::from_element(1, 1, C64::new(0.0, 1.0))).unwrap();
        assert!((t.values[0] - 1.0).abs() < 1e-15);
        let phase = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        // u is determined up to sign
        assert!((t.u[(0, 0)] - phase).norm() < 1e-14 || (t.u[(0, 0)] + phase).norm() < 1e-14);

        let t = takagi(&CMatrix::zeros(3, 3)).unwrap();
        assert!(t.values.iter().all(|&d| d == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=5 {
            let a = random(n, n, &mut rng);
            let b = &a + a.transpose();
            let t = takagi(&b).unwrap();
            assert!(norm_inf(&(t.reconstruct() - &b)) <= 1e-10 * norm_inf(&b));
            assert!(unitarity_residual(&t.u) < 1e-12);
            let s = svd(&b).unwrap();
            for (x, y) in t.values.iter().zip(&s.singular_values) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn takagi_degenerate_and_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = complete_unitary(&random(4, 4, &mut rng));
        let d = CMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(0.8, 0.0),
            C64::new(0.8, 0.0),
            C64::new(0.3, 0.0),
            C64::new(0.0, 0.0),
        ]));
        let b = &u * d * u.transpose();
        let t = takagi(&b).unwrap();
        assert!(norm_inf(&(t.reconstruct() - &b)) <= 1e-10 * norm_inf(&b));
        assert!(unitarity_residual(&t.u) < 1e-12);
        assert!((t.values[0] - 0.8).abs() < 1e-12 && (t.values[1] - 0.8).abs() < 1e-12);
        assert!(t.values[3] == 0.0);
    }

    #[test]
    fn takagi_rejects_nonsymmetric() {
        let b = real(2, 2, &[1.0, 2.0, 3.0, 1.0]);
        assert!(matches!(takagi(&b), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn hua_examples() {
        let isy = real(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let h = hua(&isy).unwrap();
        assert!((h.values[0] - 1.0).abs() < 1e-15);
        assert!(norm_inf(&(h.reconstruct() - &isy)) < 1e-14);

        let h = hua(&CMatrix::zeros(3, 3)).unwrap();
        assert_eq!(h.values, vec![0.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in 2..=7 {
            let a = random(n, n, &mut rng);
            let b = &a - a.transpose();
            let h = hua(&b).unwrap();
            assert!(
                norm_inf(&(h.reconstruct() - &b)) <= 1e-10 * norm_inf(&b),
                "n = {n}"
            );
            assert!(unitarity_residual(&h.u) < 1e-12);
            let s = svd(&b).unwrap();
            for (k, d) in h.values.iter().enumerate() {
                assert!((d - s.singular_values[2 * k]).abs() < 1e-10);
                assert!((d - s.singular_values[2 * k + 1]).abs() < 1e-10);
            }
            if n % 2 == 1 {
                let dm = h.d_matrix();
                assert!((0..n).all(|j| dm[(n - 1, j)].norm() == 0.0));
            }
        }
    }

    #[test]
    fn hua_degenerate_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let u = complete_unitary(&random(4, 4, &mut rng));
        let b = &u * antisymmetric_canonical(4, &[0.6, 0.6]) * u.transpose();
        let h = hua(&b).unwrap();
        assert!(norm_inf(&(h.reconstruct() - &b)) <= 1e-10 * norm_inf(&b));
        assert!(unitarity_residual(&h.u) < 1e-12);
    }

    #[test]
    fn hua_rejects_symmetric() {
        assert!(matches!(
            hua(&identity(2)),
            Err(Error::NotAntisymmetric { .. })
        ));
    }

    #[test]
    fn pfaffian_squares_to_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        assert!((pfaffian(&real(2, 2, &[0.0, 3.0, -3.0, 0.0])).unwrap().re - 3.0).abs() < 1e-15);
        for n in [2, 4, 6, 8] {
            let a = random(n, n, &mut rng);
            let k = &a - a.transpose();
            let pf = pfaffian(&k).unwrap();
            let det = k.determinant();
            assert!((pf * pf - det).norm() < 1e-10 * det.norm().max(1.0), "n = {n}");
        }
        assert_eq!(pfaffian(&CMatrix::zeros(3, 3)).unwrap(), C64::new(0.0, 0.0));
    }
}
