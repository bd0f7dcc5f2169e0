//! The invariant two-form, invariant densities, and the boundary pullback of the
//! holomorphic volume form.
//!
//! In Q-coordinates the invariant two-form is
//! `ω = Tr((1−ZZ̃)⁻¹ dZ ∧ (1−Z̃Z)⁻¹ dZ̃)`, evaluated on tangent pairs `(dZ, dZ̃)`.
//! Densities are reported relative to the origin; any overall constant is left
//! to the proportionality constant of the integral identity.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::{chart_inverse, homotopy_images, homotopy_tangent, r_map};
use crate::matrixkit::{self, antisymmetric_canonical, identity, pfaffian, CMatrix, C64};
use crate::seed::SeedStream;
use crate::spaces::{haar_unitary, matrix_coords, w_basis, Family, Sign, SpaceSpec, WElement};

/// Finite-difference step for every Jacobian in this module.
pub const FD_STEP: f64 = 1e-6;

/// Singular values closer than this are separated before a boundary frame is built.
pub const DEGENERACY_GAP: f64 = 1e-8;

/// `A[k][l] = ω(V_k, V_l)` for a list of tangent directions.
#[derive(Debug, Clone)]
pub struct TwoFormMatrix {
    pub a: CMatrix,
}

impl TwoFormMatrix {
    pub fn antisymmetry_residual(&self) -> f64 {
        matrixkit::norm_inf(&(&self.a + self.a.transpose()))
    }
}

/// Evaluates ω at `(Z, Z̃)` on each pair of tangents `(dZ, dZ̃)`.
pub fn omega_in_q_coords(
    spec: &SpaceSpec,
    z: &CMatrix,
    zt: &CMatrix,
    tangents: &[(CMatrix, CMatrix)],
) -> Result<TwoFormMatrix> {
    let (p, q) = (spec.p(), spec.q());
    let left = chart_inverse(identity(p) - z * zt)?;
    let right = chart_inverse(identity(q) - zt * z)?;
    let k = tangents.len();
    // α_k = (1−ZZ̃)⁻¹ dZ_k, β_l = (1−Z̃Z)⁻¹ dZ̃_l
    let alpha: Vec<CMatrix> = tangents.iter().map(|(dz, _)| &left * dz).collect();
    let beta: Vec<CMatrix> = tangents.iter().map(|(_, dzt)| &right * dzt).collect();
    let mut a = CMatrix::zeros(k, k);
    for i in 0..k {
        for j in i + 1..k {
            let v = trace_product(&alpha[i], &beta[j]) - trace_product(&alpha[j], &beta[i]);
            a[(i, j)] = v;
            a[(j, i)] = -v;
        }
    }
    Ok(TwoFormMatrix { a })
}

fn trace_product(x: &CMatrix, y: &CMatrix) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            acc += x[(i, j)] * y[(j, i)];
        }
    }
    acc
}

/// Slice sign: `Z̃ = slice_sign·Z†`, −1 on the compact slice, +1 on the
/// non-compact one.
fn slice_sign(sign: Sign) -> f64 {
    sign.pm()
}

/// Invariant density on the real slice `Z̃ = ∓Z†`, relative to the origin.
#[derive(Debug, Clone)]
pub struct DensityEvaluator {
    spec: SpaceSpec,
    tangents: Vec<(CMatrix, CMatrix)>,
    pf0: f64,
}

impl DensityEvaluator {
    pub fn new(spec: &SpaceSpec) -> Result<Self> {
        let sigma = slice_sign(spec.sign());
        let tangents: Vec<(CMatrix, CMatrix)> = w_basis(spec)
            .into_iter()
            .map(|e| {
                let e = e.into_matrix();
                let et = e.adjoint().scale(sigma);
                (e, et)
            })
            .collect();
        let zero = CMatrix::zeros(spec.p(), spec.q());
        let a0 = omega_in_q_coords(spec, &zero, &zero.adjoint(), &tangents)?;
        let pf0 = pfaffian(&a0.a)?.norm();
        Ok(Self {
            spec: *spec,
            tangents,
            pf0,
        })
    }

    pub fn two_form(&self, z: &CMatrix) -> Result<TwoFormMatrix> {
        let zt = z.adjoint().scale(slice_sign(self.spec.sign()));
        omega_in_q_coords(&self.spec, z, &zt, &self.tangents)
    }

    pub fn density(&self, z: &CMatrix) -> Result<f64> {
        if self.tangents.is_empty() {
            return Ok(1.0);
        }
        Ok(pfaffian(&self.two_form(z)?.a)?.norm() / self.pf0)
    }
}

/// Invariant density at `Z` on the slice of the spec's sign, normalized to 1 at
/// the origin. Raises `NearSingular` at the edge of the non-compact ball.
pub fn invariant_density(spec: &SpaceSpec, z: &CMatrix) -> Result<f64> {
    DensityEvaluator::new(spec)?.density(z)
}

/// Largest deviation of `(Q∘R)*ω` from the flat form `Tr(db ∧ db̃)` over the
/// real basis pairs at the point `(b, ±b†)`, with the Jacobian of `R` taken by
/// central differences at steps h and h/2, Richardson-extrapolated. Plain
/// central differences lose ~1e−5 near the compact boundary, where the third
/// derivatives of `R₋` blow up.
pub fn flat_form_residual(spec: &SpaceSpec, b: &CMatrix) -> Result<f64> {
    flat_form_residual_with_step(spec, b, FD_STEP)
}

/// As [`flat_form_residual`] with an explicit difference step.
pub fn flat_form_residual_with_step(spec: &SpaceSpec, b: &CMatrix, h: f64) -> Result<f64> {
    let sigma = slice_sign(spec.sign());
    let basis: Vec<CMatrix> = w_basis(spec).into_iter().map(WElement::into_matrix).collect();
    // r_map applies R₋ on the compact sign, so feeding it b† evaluates R at (b, −b†).
    let image = |x: &CMatrix| r_map(spec, x, &x.adjoint());
    let center = image(b)?;
    let mut jac = Vec::with_capacity(basis.len());
    let central = |e: &CMatrix, h: f64| -> Result<(CMatrix, CMatrix)> {
        let plus = image(&(b + e.scale(h)))?;
        let minus = image(&(b - e.scale(h)))?;
        Ok(((plus.z() - minus.z()).unscale(2.0 * h), (plus.zt() - minus.zt()).unscale(2.0 * h)))
    };
    for e in &basis {
        let (z1, zt1) = central(e, h)?;
        let (z2, zt2) = central(e, 0.5 * h)?;
        jac.push(((z2.scale(4.0) - z1).unscale(3.0), (zt2.scale(4.0) - zt1).unscale(3.0)));
    }
    let pulled = omega_in_q_coords(spec, center.z(), center.zt(), &jac)?;
    let mut worst: f64 = 0.0;
    for (k, ek) in basis.iter().enumerate() {
        for (l, el) in basis.iter().enumerate() {
            let flat = trace_product(ek, &el.adjoint().scale(sigma))
                - trace_product(el, &ek.adjoint().scale(sigma));
            worst = worst.max((pulled.a[(k, l)] - flat).norm());
        }
    }
    Ok(worst)
}

/// A map from real parameters to a point `(b, b̃)` of the complexified space.
pub type PointMap<'a> = dyn Fn(&[f64]) -> Result<(CMatrix, CMatrix)> + 'a;

/// Evaluates the holomorphic volume form `Ω = ⋀^m Tr(db ∧ db̃)` on the images
/// of `directions` under `map` at `point`: the determinant of the 2m×2m matrix
/// whose columns are the independent entries of `(db, db̃ᵗ)` along each
/// direction. The combinatorial factor m! and the weights of mirrored entries
/// are dropped.
pub fn volume_pullback(
    spec: &SpaceSpec,
    map: &PointMap<'_>,
    point: &[f64],
    directions: &[Vec<f64>],
) -> Result<C64> {
    let dim = spec.real_dim();
    if directions.len() != dim || directions.iter().any(|d| d.len() != point.len()) {
        return Err(Error::ShapeMismatch {
            expected: format!("{dim} directions of length {}", point.len()),
            got: format!("{} directions", directions.len()),
        });
    }
    let tangents = directions
        .iter()
        .map(|d| fd_tangent(map, point, d))
        .collect::<Result<Vec<_>>>()?;
    volume_from_tangents(spec, &tangents)
}

/// Central-difference image of one parameter direction under `map`.
pub fn fd_tangent(map: &PointMap<'_>, point: &[f64], d: &[f64]) -> Result<(CMatrix, CMatrix)> {
    let shifted = |s: f64| -> Vec<f64> { point.iter().zip(d).map(|(x, dx)| x + s * dx).collect() };
    let (bp, btp) = map(&shifted(FD_STEP))?;
    let (bm, btm) = map(&shifted(-FD_STEP))?;
    Ok((
        (bp - bm).unscale(2.0 * FD_STEP),
        (btp - btm).unscale(2.0 * FD_STEP),
    ))
}

/// Holomorphic coordinates `(db, db̃ᵗ)` of a tangent, as one column.
fn tangent_column(spec: &SpaceSpec, tangent: &(CMatrix, CMatrix)) -> Vec<C64> {
    let mut col = matrix_coords(spec, &tangent.0);
    col.extend(matrix_coords(spec, &tangent.1.transpose()));
    col
}

fn det_of_columns(cols: &[Vec<C64>]) -> C64 {
    let n = cols.len();
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    CMatrix::from_fn(n, n, |i, j| cols[j][i]).determinant()
}

/// Ω evaluated on 2m tangents `(db, db̃)`.
pub fn volume_from_tangents(spec: &SpaceSpec, tangents: &[(CMatrix, CMatrix)]) -> Result<C64> {
    if tangents.len() != spec.real_dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} tangents", spec.real_dim()),
            got: format!("{} tangents", tangents.len()),
        });
    }
    let cols: Vec<Vec<C64>> = tangents.iter().map(|x| tangent_column(spec, x)).collect();
    Ok(det_of_columns(&cols))
}

/// A boundary point `b = u D v†` with top singular value `√r`.
///
/// `values` holds the singular values (AIII, CI) or the block values (DIII), in
/// descending order, `values[0] = √r`. For CI and DIII `v = ū`.
#[derive(Debug, Clone)]
pub struct BoundaryFrame {
    pub u: CMatrix,
    pub values: Vec<f64>,
    pub v: CMatrix,
}

impl BoundaryFrame {
    /// Haar frame with the remaining values uniform in (0, √r).
    pub fn random(spec: &SpaceSpec, r: f64, stream: &mut SeedStream) -> Result<Self> {
        use rand::Rng;
        if !(r > 0.0) || (spec.sign() == Sign::Compact && r >= 1.0) {
            return Err(Error::OutOfRange {
                name: "r",
                value: r,
                reason: "compact boundaries need 0 < r < 1, non-compact ones r > 0",
            });
        }
        let count = match spec.family() {
            Family::AIII => spec.q(),
            Family::CI => spec.p(),
            Family::DIII => spec.p() / 2,
        };
        if count == 0 {
            return Err(Error::InvalidSpec("W is zero-dimensional".into()));
        }
        let top = r.sqrt();
        let mut values = vec![top];
        for _ in 1..count {
            values.push(top * stream.random::<f64>());
        }
        values[1..].sort_by(|a, b| b.total_cmp(a));
        separate(&mut values);
        let u = haar_unitary(spec.p(), stream);
        let v = match spec.family() {
            Family::AIII => haar_unitary(spec.q(), stream),
            _ => matrixkit::conj(&u),
        };
        Ok(Self { u, values, v })
    }

    pub fn d_matrix(&self, spec: &SpaceSpec) -> CMatrix {
        match spec.family() {
            Family::DIII => antisymmetric_canonical(spec.p(), &self.values),
            _ => {
                let mut d = CMatrix::zeros(spec.p(), spec.q());
                for (i, &x) in self.values.iter().enumerate() {
                    d[(i, i)] = C64::new(x, 0.0);
                }
                d
            }
        }
    }

    pub fn b(&self, spec: &SpaceSpec) -> CMatrix {
        &self.u * self.d_matrix(spec) * self.v.adjoint()
    }

    /// The same frame with the top value replaced.
    pub fn with_top(&self, top: f64) -> Self {
        let mut out = self.clone();
        out.values[0] = top;
        out
    }
}

/// Pushes values apart so that no two (and none from zero) are closer than
/// [`DEGENERACY_GAP`]; the top value is left fixed.
fn separate(values: &mut [f64]) {
    for i in 1..values.len() {
        if values[i - 1] - values[i] < DEGENERACY_GAP {
            values[i] = values[i - 1] - DEGENERACY_GAP;
        }
    }
    if let Some(last) = values.last_mut() {
        if *last < DEGENERACY_GAP {
            *last = DEGENERACY_GAP;
        }
    }
}

fn to_real(spec: &SpaceSpec, m: &CMatrix) -> Vec<f64> {
    matrix_coords(spec, m)
        .into_iter()
        .flat_map(|c| [c.re, c.im])
        .collect()
}

/// Real basis of the anti-Hermitian n×n matrices.
fn anti_hermitian_basis(n: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut a = CMatrix::zeros(n, n);
            if i == j {
                a[(i, i)] = C64::new(0.0, 1.0);
            } else if i < j {
                a[(i, j)] = C64::new(1.0, 0.0);
                a[(j, i)] = C64::new(-1.0, 0.0);
            } else {
                a[(i, j)] = C64::new(0.0, 1.0);
                a[(j, i)] = C64::new(0.0, 1.0);
            }
            out.push(a);
        }
    }
    out
}

/// Orthonormal real directions tangent to the sphere `{‖b‖₂² = r}` at the frame,
/// from the singular value parametrization with the top value frozen. Returns
/// the `2m − 1` directions and the ratio of the smallest retained to the largest
/// discarded singular value of the generator matrix (large when the frame is
/// well separated).
pub fn sphere_directions(spec: &SpaceSpec, frame: &BoundaryFrame) -> Result<(Vec<Vec<f64>>, f64)> {
    let b = frame.b(spec);
    let mut gens: Vec<CMatrix> = Vec::new();
    match spec.family() {
        Family::AIII => {
            for a in anti_hermitian_basis(spec.p()) {
                gens.push(&a * &b);
            }
            for a in anti_hermitian_basis(spec.q()) {
                gens.push(-(&b * &a));
            }
            for i in 1..frame.values.len() {
                let mut e = CMatrix::zeros(spec.p(), spec.q());
                e[(i, i)] = C64::new(1.0, 0.0);
                gens.push(&frame.u * e * frame.v.adjoint());
            }
        }
        Family::CI | Family::DIII => {
            for a in anti_hermitian_basis(spec.p()) {
                gens.push(&a * &b + &b * a.transpose());
            }
            for i in 1..frame.values.len() {
                let mut unit = vec![0.0; frame.values.len()];
                unit[i] = 1.0;
                let e = match spec.family() {
                    Family::CI => {
                        let mut e = CMatrix::zeros(spec.p(), spec.p());
                        e[(i, i)] = C64::new(1.0, 0.0);
                        e
                    }
                    _ => antisymmetric_canonical(spec.p(), &unit),
                };
                gens.push(&frame.u * e * frame.u.transpose());
            }
        }
    }
    let dim = spec.real_dim();
    let g = DMatrix::<f64>::from_fn(dim, gens.len(), |i, j| to_real(spec, &gens[j])[i]);
    let svd = g.svd(true, false);
    let u = svd.u.ok_or(Error::ConvergenceFailure("sphere frame"))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &c| svd.singular_values[c].total_cmp(&svd.singular_values[a]));
    let keep = dim - 1;
    if order.len() < keep {
        return Err(Error::ConvergenceFailure("sphere frame has too few generators"));
    }
    let kept = svd.singular_values[order[keep - 1]];
    let dropped = order
        .get(keep)
        .map(|&k| svd.singular_values[k])
        .unwrap_or(0.0);
    let separation = if dropped > 0.0 { kept / dropped } else { f64::INFINITY };
    let dirs = order[..keep]
        .iter()
        .map(|&k| u.column(k).iter().cloned().collect())
        .collect();
    Ok((dirs, separation))
}

/// Outcome of one boundary check.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryCheck {
    /// `|Ω(∂_t, T_1, …, T_{2m−1})| / |Ω(E_1, …, E_{2m})|` with closed-form tangents.
    pub ratio: f64,
    /// The same ratio with central-difference tangents.
    pub ratio_fd: f64,
    /// `|Ω(E_1, …, E_{2m})|`, the interior reference at the same `(t, b)`.
    pub reference: f64,
    /// Largest ratio obtained by replacing one sphere direction with the unit
    /// secant toward the point with top value `0.99·√r`; clearly nonzero when
    /// the check has power.
    pub power_ratio: f64,
    /// Gap indicator from [`sphere_directions`].
    pub separation: f64,
}

/// Pulls Ω back to `[0, 1] × {‖b‖₂² = r}` through the homotopy at `(t, frame)`.
pub fn boundary_vanishing_check(
    spec: &SpaceSpec,
    r: f64,
    frame: &BoundaryFrame,
    t: f64,
) -> Result<BoundaryCheck> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange {
            name: "t",
            value: t,
            reason: "must lie in [0, 1]",
        });
    }
    let top = frame.values[0];
    if (top * top - r).abs() > 1e-12 * r.max(1.0) {
        return Err(Error::InvalidSpec(format!(
            "frame top value squared {} does not match r = {r}",
            top * top
        )));
    }
    let dim = spec.real_dim();
    let b = frame.b(spec);
    let here = to_real(spec, &b);
    let as_matrix = |x: &[f64]| WElement::from_real_coords(*spec, x).into_matrix();

    let (sphere, separation) = sphere_directions(spec, frame)?;
    let inner = to_real(spec, &frame.with_top(0.99 * top).b(spec));
    let mut secant: Vec<f64> = inner.iter().zip(&here).map(|(a, b)| a - b).collect();
    let norm = secant.iter().map(|x| x * x).sum::<f64>().sqrt();
    secant.iter_mut().for_each(|x| *x /= norm);

    let exact = |dt: f64, d: &[f64]| homotopy_tangent(spec, t, &b, dt, &as_matrix(d));
    let col = |x: Result<(CMatrix, CMatrix)>| x.map(|x| tangent_column(spec, &x));

    let zero = vec![0.0; dim];
    let time = col(exact(1.0, &zero))?;
    let sphere_cols = sphere
        .iter()
        .map(|d| col(exact(0.0, d)))
        .collect::<Result<Vec<_>>>()?;
    let radial = col(exact(0.0, &secant))?;
    let interior = (0..dim)
        .map(|k| {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            col(exact(0.0, &e))
        })
        .collect::<Result<Vec<_>>>()?;

    let reference = det_of_columns(&interior).norm();
    let mut cols = vec![time.clone()];
    cols.extend(sphere_cols.iter().cloned());
    let value = det_of_columns(&cols).norm();
    let mut power: f64 = 0.0;
    for j in 1..cols.len() {
        let mut probe = cols.clone();
        probe[j] = radial.clone();
        power = power.max(det_of_columns(&probe).norm());
    }

    let map = |x: &[f64]| -> Result<(CMatrix, CMatrix)> {
        homotopy_images(spec, x[0], &as_matrix(&x[1..]))
    };
    let mut point = vec![t];
    point.extend_from_slice(&here);
    let lift = |d: &[f64], dt: f64| -> Vec<f64> {
        let mut v = vec![dt];
        v.extend_from_slice(d);
        v
    };
    let mut directions = vec![lift(&zero, 1.0)];
    directions.extend(sphere.iter().map(|d| lift(d, 0.0)));
    let value_fd = volume_pullback(spec, &map, &point, &directions)?.norm();

    Ok(BoundaryCheck {
        ratio: value / reference,
        ratio_fd: value_fd / reference,
        reference,
        power_ratio: power / reference,
        separation,
    })
}
