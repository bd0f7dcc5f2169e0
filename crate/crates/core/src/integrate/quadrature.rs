//! Tensor Gauss-Legendre quadrature over W for complex dimension m ≤ 2.
//!
//! Coordinates are polar per complex direction. With `u = |c|²`:
//!
//! - m = 1: `c = √u e^{iφ}`, `dA = ½ du dφ`;
//! - m = 2: `c = √u (√(1−s) e^{iφ₁}, √s e^{iφ₂})`, `dA = ¼ u du ds dφ₁ dφ₂`.
//!
//! On a ball `‖b‖₂² < R` the radial range is `u < R / ‖b(direction)‖₂²`, exact
//! because the spectral norm is homogeneous. On all of W the radius
//! `ρ = x/(1−x)` maps `x ∈ [0, 1)` to `[0, ∞)`; that is used for the
//! algebraically decaying invariant side. The Gaussian-damped flat side is
//! truncated to a ball instead, where Gauss-Legendre converges much faster.

use std::f64::consts::TAU;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;

use super::functions::TestFunction;
use super::{Estimate, Method};
use crate::error::{Error, Result};
use crate::geometry::DensityEvaluator;
use crate::kernels::{q_map, CoordinatePair, KernelPrep};
use crate::matrixkit::{spectral_norm, C64};
use crate::spaces::{Sign, SpaceSpec, WElement};

/// Largest complex dimension handled by quadrature.
pub const MAX_QUADRATURE_M: usize = 2;

/// Default nested orders; the last two set the convergence gap.
pub const DEFAULT_ORDERS: [usize; 3] = [16, 24, 32];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// `{‖b‖₂² < radius}`.
    Ball { radius: f64 },
    /// All of W.
    Whole,
}

/// Gauss-Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre(order: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(order.max(1)).expect("order >= 1"));
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect()
}

fn radial_nodes(domain: Domain, order: usize, dir_norm_sq: f64, power: i32) -> Vec<(f64, f64)> {
    // returns (|c|, weight) with the radial part of the Lebesgue measure included
    match domain {
        Domain::Ball { radius } => {
            let umax = radius / dir_norm_sq;
            gauss_legendre(order, 0.0, umax)
                .into_iter()
                .map(|(u, w)| {
                    // ρ^{2m−1} dρ = ½ u^{m−1} du
                    (u.sqrt(), 0.5 * u.powi(power) * w)
                })
                .collect()
        }
        Domain::Whole => gauss_legendre(order, 0.0, 1.0)
            .into_iter()
            .map(|(x, w)| {
                let rho = x / (1.0 - x);
                (rho, rho.powi(2 * power + 1) * w / ((1.0 - x) * (1.0 - x)))
            })
            .collect(),
    }
}

/// Integrates `k` complex integrands over the domain at one order. The integrand
/// writes its `k` values for a coordinate vector into the output slice.
///
/// Summation order is fixed, so results do not depend on the thread count.
pub fn integrate_coords<F>(
    m: usize,
    dir_norm_sq: &(dyn Fn(&[C64]) -> f64 + Sync),
    domain: Domain,
    order: usize,
    k: usize,
    integrand: F,
) -> Result<Vec<C64>>
where
    F: Fn(&[C64], &mut [C64]) -> Result<()> + Sync,
{
    if m > MAX_QUADRATURE_M {
        return Err(Error::DimensionTooLarge {
            real_dim: 2 * m,
            max: 2 * MAX_QUADRATURE_M,
        });
    }
    let zero = C64::new(0.0, 0.0);
    if m == 0 {
        let mut out = vec![zero; k];
        integrand(&[], &mut out)?;
        return Ok(out);
    }
    let angles = gauss_legendre(order, 0.0, TAU);
    let partials: Vec<Result<Vec<C64>>> = match m {
        1 => angles
            .par_iter()
            .map(|&(phi, wphi)| {
                let dir = [C64::from_polar(1.0, phi)];
                let mut acc = vec![zero; k];
                let mut vals = vec![zero; k];
                for (rho, wr) in radial_nodes(domain, order, dir_norm_sq(&dir), 0) {
                    integrand(&[dir[0] * rho], &mut vals)?;
                    for (a, v) in acc.iter_mut().zip(&vals) {
                        *a += *v * (wr * wphi);
                    }
                }
                Ok(acc)
            })
            .collect(),
        _ => {
            let ss = gauss_legendre(order, 0.0, 1.0);
            let outer: Vec<(f64, f64, f64, f64)> = ss
                .iter()
                .flat_map(|&(s, ws)| angles.iter().map(move |&(p1, w1)| (s, ws, p1, w1)))
                .collect();
            outer
                .par_iter()
                .map(|&(s, ws, p1, w1)| {
                    let mut acc = vec![zero; k];
                    let mut vals = vec![zero; k];
                    for &(p2, w2) in &angles {
                        let dir = [
                            C64::from_polar((1.0 - s).sqrt(), p1),
                            C64::from_polar(s.sqrt(), p2),
                        ];
                        // angular measure ½ ds dφ₁ dφ₂
                        let wang = 0.5 * ws * w1 * w2;
                        for (rho, wr) in radial_nodes(domain, order, dir_norm_sq(&dir), 1) {
                            integrand(&[dir[0] * rho, dir[1] * rho], &mut vals)?;
                            for (a, v) in acc.iter_mut().zip(&vals) {
                                *a += *v * (wr * wang);
                            }
                        }
                    }
                    Ok(acc)
                })
                .collect()
        }
    };
    let mut total = vec![zero; k];
    for part in partials {
        for (t, v) in total.iter_mut().zip(part?) {
            *t += v;
        }
    }
    Ok(total)
}

/// Runs [`integrate_coords`] at each nested order; the value is the last order's
/// and the stderr surrogate is the gap to the previous one.
pub fn nested<F>(
    m: usize,
    dir_norm_sq: &(dyn Fn(&[C64]) -> f64 + Sync),
    domain: Domain,
    orders: &[usize],
    k: usize,
    integrand: F,
) -> Result<Vec<Estimate>>
where
    F: Fn(&[C64], &mut [C64]) -> Result<()> + Sync,
{
    if orders.is_empty() || orders.iter().any(|&o| o < 8) {
        return Err(Error::OutOfRange {
            name: "order",
            value: orders.iter().cloned().min().unwrap_or(0) as f64,
            reason: "quadrature orders must be at least 8",
        });
    }
    let runs = orders
        .iter()
        .map(|&o| integrate_coords(m, dir_norm_sq, domain, o, k, &integrand))
        .collect::<Result<Vec<_>>>()?;
    let last = runs.last().expect("non-empty");
    Ok((0..k)
        .map(|j| {
            let gap = if runs.len() > 1 {
                (last[j] - runs[runs.len() - 2][j]).norm()
            } else {
                0.0
            };
            Estimate {
                value: last[j],
                stderr: gap,
                n: *orders.last().expect("non-empty") as u64,
                method: Method::Quadrature,
            }
        })
        .collect())
}

/// Integrates over W of the spec with its coordinates.
pub fn integrate_w<F>(
    spec: &SpaceSpec,
    domain: Domain,
    orders: &[usize],
    k: usize,
    integrand: F,
) -> Result<Vec<Estimate>>
where
    F: Fn(&WElement, &mut [C64]) -> Result<()> + Sync,
{
    let spec = *spec;
    let norm = move |dir: &[C64]| -> f64 {
        let n = spectral_norm(WElement::from_coords(spec, dir).matrix());
        n * n
    };
    nested(spec.m(), &norm, domain, orders, k, |coords, out| {
        integrand(&WElement::from_coords(spec, coords), out)
    })
}

fn check_functions(spec: &SpaceSpec, fs: &[TestFunction]) -> Result<()> {
    fs.iter().try_for_each(|f| f.validate(spec))
}

/// Invariant-measure side: `∫ f(Q(Z, ∓Z†)) ρ(Z) dZ` over all of W (compact) or
/// the unit ball (non-compact), with ρ the invariant density relative to the
/// origin.
pub fn lhs_quadrature(spec: &SpaceSpec, fs: &[TestFunction], orders: &[usize]) -> Result<Vec<Estimate>> {
    check_functions(spec, fs)?;
    if spec.m() > MAX_QUADRATURE_M {
        return Err(Error::DimensionTooLarge {
            real_dim: spec.real_dim(),
            max: 2 * MAX_QUADRATURE_M,
        });
    }
    let density = DensityEvaluator::new(spec)?;
    let (domain, slice) = match spec.sign() {
        Sign::Compact => (Domain::Whole, -1.0),
        Sign::Noncompact => (Domain::Ball { radius: 1.0 }, 1.0),
    };
    let p = spec.p();
    integrate_w(spec, domain, orders, fs.len(), |w, out| {
        let z = w.matrix();
        let pair = CoordinatePair::new(*spec, z.clone(), z.adjoint().scale(slice))?;
        let m = q_map(&pair)?;
        let rho = density.density(z)?;
        for (o, f) in out.iter_mut().zip(fs) {
            *o = f.eval(m.matrix(), p) * rho;
        }
        Ok(())
    })
}

/// Squared radius beyond which every damped integrand on the non-compact flat
/// side is below `e^{−50}` relative: `|f| ≤ poly·e^{−λ(n + 4‖b‖₂²)}`.
pub fn gaussian_cutoff(fs: &[TestFunction]) -> f64 {
    let lambda = fs.iter().map(|f| f.damping()).fold(f64::INFINITY, f64::min);
    50.0 / (4.0 * lambda)
}

/// Flat side: `∫ f(M_t(b)) db` over the ball of the given radius (compact) or
/// W (non-compact, truncated at [`gaussian_cutoff`]), for every `(f, t)`;
/// output index `f_index·|ts| + t_index`.
pub fn rhs_quadrature(
    spec: &SpaceSpec,
    fs: &[TestFunction],
    ts: &[f64],
    orders: &[usize],
    radius: f64,
) -> Result<Vec<Estimate>> {
    check_functions(spec, fs)?;
    for &t in ts {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange {
                name: "t",
                value: t,
                reason: "must lie in [0, 1]",
            });
        }
    }
    let domain = match spec.sign() {
        Sign::Compact => {
            if !(radius > 0.0 && radius <= 1.0) {
                return Err(Error::OutOfRange {
                    name: "radius",
                    value: radius,
                    reason: "must lie in (0, 1]",
                });
            }
            Domain::Ball { radius }
        }
        Sign::Noncompact => Domain::Ball {
            radius: gaussian_cutoff(fs),
        },
    };
    let p = spec.p();
    let nt = ts.len();
    integrate_w(spec, domain, orders, fs.len() * nt, |w, out| {
        let prep = KernelPrep::new(spec, w.matrix())?;
        for (j, &t) in ts.iter().enumerate() {
            let m = prep.kernel_matrix(t);
            for (i, f) in fs.iter().enumerate() {
                out[i * nt + j] = f.eval(&m, p);
            }
        }
        Ok(())
    })
}
