//! Scalar spin identity probe.
//!
//! Left side: `∫_ℂ f(S₊, S₋, S_z) (1+|z|²)⁻² dA` with coherent-state symbols
//! `S₊ = 2S z̄/(1+|z|²)`, `S₋ = 2S z/(1+|z|²)`, `S_z = S(1−|z|²)/(1+|z|²)`.
//! Right side: `2S ∫_{|z|² ≤ 2S} f(z̄(2S−|z|²), z, S−|z|²) dA`.
//!
//! Both are reported as computed; no equality is asserted.

use serde::{Deserialize, Serialize};

use super::quadrature::{nested, Domain};
use super::Estimate;
use crate::error::{Error, Result};
use crate::matrixkit::{c64, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinFunction {
    One,
    SPlus,
    SMinus,
    SZ,
    SZSq,
    SPlusSMinus,
}

impl SpinFunction {
    pub const ALL: [SpinFunction; 6] = [
        SpinFunction::One,
        SpinFunction::SPlus,
        SpinFunction::SMinus,
        SpinFunction::SZ,
        SpinFunction::SZSq,
        SpinFunction::SPlusSMinus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpinFunction::One => "one",
            SpinFunction::SPlus => "s_plus",
            SpinFunction::SMinus => "s_minus",
            SpinFunction::SZ => "s_z",
            SpinFunction::SZSq => "s_z_sq",
            SpinFunction::SPlusSMinus => "s_plus_s_minus",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn eval(self, s_plus: C64, s_minus: C64, s_z: C64) -> C64 {
        match self {
            SpinFunction::One => c64(1.0, 0.0),
            SpinFunction::SPlus => s_plus,
            SpinFunction::SMinus => s_minus,
            SpinFunction::SZ => s_z,
            SpinFunction::SZSq => s_z * s_z,
            SpinFunction::SPlusSMinus => s_plus * s_minus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinRow {
    pub function: SpinFunction,
    pub lhs: Estimate,
    pub rhs: Estimate,
    /// `LHS/RHS` (real part) when the right side is resolvable.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinReport {
    pub s: f64,
    pub rows: Vec<SpinRow>,
    /// Whether all defined ratios agree within `1e−8` relative.
    pub f_independent: bool,
}

pub fn spin_probe(s: f64, fs: &[SpinFunction], orders: &[usize]) -> Result<SpinReport> {
    let two_s = 2.0 * s;
    if !(two_s >= 1.0 && two_s.fract() == 0.0) {
        return Err(Error::OutOfRange {
            name: "S",
            value: s,
            reason: "must be a positive half-integer",
        });
    }
    let unit = |_: &[C64]| 1.0;
    let lhs = nested(1, &unit, Domain::Whole, orders, fs.len(), |c, out| {
        let z = c[0];
        let u = z.norm_sqr();
        let d = 1.0 + u;
        let (sp, sm, sz) = (z.conj() * (two_s / d), z * (two_s / d), c64(s * (1.0 - u) / d, 0.0));
        for (o, f) in out.iter_mut().zip(fs) {
            *o = f.eval(sp, sm, sz) / (d * d);
        }
        Ok(())
    })?;
    let rhs = nested(1, &unit, Domain::Ball { radius: two_s }, orders, fs.len(), |c, out| {
        let z = c[0];
        let u = z.norm_sqr();
        let (sp, sm, sz) = (z.conj() * (two_s - u), z, c64(s - u, 0.0));
        for (o, f) in out.iter_mut().zip(fs) {
            *o = f.eval(sp, sm, sz) * two_s;
        }
        Ok(())
    })?;
    let rows: Vec<SpinRow> = fs
        .iter()
        .zip(lhs.into_iter().zip(rhs))
        .map(|(&function, (mut lhs, mut rhs))| {
            for e in [&mut lhs, &mut rhs] {
                // exact zeros by symmetry come out at rounding level
                if e.value.norm() < 1e-12 * (1.0 + two_s).powi(4) {
                    e.value = c64(0.0, 0.0);
                }
            }
            let ratio = (rhs.value.norm() > 1e-10).then(|| (lhs.value / rhs.value).re);
            SpinRow {
                function,
                lhs,
                rhs,
                ratio,
            }
        })
        .collect();
    let defined: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let f_independent = defined
        .iter()
        .all(|&r| (r - defined[0]).abs() <= 1e-8 * defined[0].abs());
    Ok(SpinReport {
        s,
        rows,
        f_independent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::DEFAULT_ORDERS;
    use std::f64::consts::PI;

    #[test]
    fn constant_function_areas() {
        for s in [0.5, 1.0, 2.0] {
            let rep = spin_probe(s, &[SpinFunction::One], &DEFAULT_ORDERS).unwrap();
            let row = &rep.rows[0];
            assert!((row.lhs.value.re - PI).abs() < 1e-8);
            assert!((row.rhs.value.re - 4.0 * PI * s * s).abs() < 1e-8);
            assert!((row.ratio.unwrap() - 1.0 / (4.0 * s * s)).abs() < 1e-10);
        }
    }

    #[test]
    fn moment_table() {
        let s = 1.5;
        let rep = spin_probe(s, &SpinFunction::ALL, &DEFAULT_ORDERS).unwrap();
        let get = |f: SpinFunction| rep.rows.iter().find(|r| r.function == f).unwrap();
        let sz2 = get(SpinFunction::SZSq);
        assert!((sz2.lhs.value.re - PI * s * s / 3.0).abs() < 1e-8);
        assert!((sz2.rhs.value.re - 4.0 * PI * s.powi(4) / 3.0).abs() < 1e-8);
        let pm = get(SpinFunction::SPlusSMinus);
        assert!((pm.lhs.value.re - 2.0 * PI * s * s / 3.0).abs() < 1e-8);
        assert!((pm.rhs.value.re - 8.0 * PI * s.powi(4) / 3.0).abs() < 1e-8);
        assert_eq!(get(SpinFunction::SZ).ratio, None);
        assert!(rep.f_independent);
    }

    #[test]
    fn rejects_non_half_integers() {
        assert!(spin_probe(0.3, &[SpinFunction::One], &DEFAULT_ORDERS).is_err());
        assert!(spin_probe(0.0, &[SpinFunction::One], &DEFAULT_ORDERS).is_err());
    }
}
