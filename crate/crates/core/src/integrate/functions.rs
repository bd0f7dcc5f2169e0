//! Test functions: polynomials in kernel-matrix entries times an optional
//! damping factor `exp(−λ·tr(sM))`.

use crate::error::{Error, Result};
use crate::matrixkit::{CMatrix, C64};
use crate::spaces::{Family, Sign, SpaceSpec};

/// `M[row][col]^power`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Factor {
    pub row: usize,
    pub col: usize,
    pub power: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: C64,
    pub factors: Vec<Factor>,
}

impl Monomial {
    pub fn constant(c: f64) -> Self {
        Self {
            coeff: C64::new(c, 0.0),
            factors: Vec::new(),
        }
    }

    pub fn entry(row: usize, col: usize, power: u32) -> Self {
        Self {
            coeff: C64::new(1.0, 0.0),
            factors: vec![Factor { row, col, power }],
        }
    }

    fn eval(&self, m: &CMatrix) -> C64 {
        self.factors
            .iter()
            .fold(self.coeff, |acc, f| acc * m[(f.row, f.col)].powu(f.power))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    name: String,
    monomials: Vec<Monomial>,
    damping: f64,
}

/// Names of the built-in functions.
pub const BUILTINS: &[(&str, &str)] = &[
    ("one", "1"),
    ("m11", "M[0][0]"),
    ("m11_sq", "M[0][0]^2"),
    ("cross", "M[0][c] * M[c][0], c = p (p + 1 for DIII)"),
    ("cross_sq", "(M[0][c] * M[c][0])^2"),
    ("exp_trace", "exp(-tr(sM))"),
    ("exp_half_trace", "exp(-tr(sM)/2)"),
    ("m11_damped", "M[0][0] * exp(-tr(sM)/2)"),
    ("m11_sq_damped", "M[0][0]^2 * exp(-tr(sM)/2)"),
    ("cross_damped", "M[0][c] * M[c][0] * exp(-tr(sM)/2)"),
    ("cross_sq_damped", "(M[0][c] * M[c][0])^2 * exp(-tr(sM)/2)"),
];

/// Built-in suites.
pub const SUITES: &[(&str, &[&str])] = &[
    ("polynomial", &["one", "m11", "m11_sq", "cross"]),
    (
        "damped",
        &["exp_half_trace", "m11_damped", "m11_sq_damped", "cross_damped"],
    ),
    ("mixed", &["one", "m11", "m11_sq", "cross", "exp_trace"]),
];

pub fn suite(name: &str) -> Option<&'static [&'static str]> {
    SUITES.iter().find(|(n, _)| *n == name).map(|(_, fs)| *fs)
}

impl TestFunction {
    pub fn new(name: impl Into<String>, monomials: Vec<Monomial>, damping: f64) -> Result<Self> {
        if !(damping >= 0.0 && damping.is_finite()) {
            return Err(Error::OutOfRange {
                name: "damping",
                value: damping,
                reason: "must be finite and non-negative",
            });
        }
        Ok(Self {
            name: name.into(),
            monomials,
            damping,
        })
    }

    /// Resolves a built-in name for the given space. `cross` pairs row 0 with
    /// the first column of the off-diagonal block, shifted by one for DIII where
    /// the diagonal of the antisymmetric block vanishes.
    pub fn builtin(name: &str, spec: &SpaceSpec) -> Option<Self> {
        let c = match spec.family() {
            Family::DIII => spec.p() + 1,
            _ => spec.p(),
        };
        let cross_pow = |power| Monomial {
            coeff: C64::new(1.0, 0.0),
            factors: vec![
                Factor { row: 0, col: c, power },
                Factor { row: c, col: 0, power },
            ],
        };
        let cross = cross_pow(1);
        let (monomial, damping) = match name {
            "one" => (Monomial::constant(1.0), 0.0),
            "m11" => (Monomial::entry(0, 0, 1), 0.0),
            "m11_sq" => (Monomial::entry(0, 0, 2), 0.0),
            "cross" => (cross, 0.0),
            "cross_sq" => (cross_pow(2), 0.0),
            "exp_trace" => (Monomial::constant(1.0), 1.0),
            "exp_half_trace" => (Monomial::constant(1.0), 0.5),
            "m11_damped" => (Monomial::entry(0, 0, 1), 0.5),
            "m11_sq_damped" => (Monomial::entry(0, 0, 2), 0.5),
            "cross_damped" => (cross, 0.5),
            "cross_sq_damped" => (cross_pow(2), 0.5),
            _ => return None,
        };
        Some(Self {
            name: name.to_string(),
            monomials: vec![monomial],
            damping,
        })
    }

    /// Resolves every member of a suite.
    pub fn suite(name: &str, spec: &SpaceSpec) -> Option<Vec<Self>> {
        suite(name).map(|names| {
            names
                .iter()
                .map(|n| Self::builtin(n, spec).expect("suite members are built-ins"))
                .collect()
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    /// Checks indices against the kernel size and integrability on the sign.
    pub fn validate(&self, spec: &SpaceSpec) -> Result<()> {
        let n = spec.n();
        for f in self.monomials.iter().flat_map(|m| &m.factors) {
            if f.row >= n || f.col >= n {
                return Err(Error::ShapeMismatch {
                    expected: format!("indices below {n} in `{}`", self.name),
                    got: format!("M[{}][{}]", f.row, f.col),
                });
            }
        }
        if spec.sign() == Sign::Noncompact && self.damping <= 0.0 {
            return Err(Error::NonIntegrable(self.name.clone()));
        }
        Ok(())
    }

    /// `f(M)`; `p` is the size of the first diagonal block of `s`.
    pub fn eval(&self, m: &CMatrix, p: usize) -> C64 {
        let poly: C64 = self.monomials.iter().map(|mono| mono.eval(m)).sum();
        if self.damping == 0.0 {
            return poly;
        }
        let mut trace_sm = C64::new(0.0, 0.0);
        for i in 0..m.nrows() {
            if i < p {
                trace_sm += m[(i, i)];
            } else {
                trace_sm -= m[(i, i)];
            }
        }
        poly * (-self.damping * trace_sm).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::s_matrix;

    #[test]
    fn builtins_on_s() {
        let spec = SpaceSpec::aiii(2, 1, Sign::Compact).unwrap();
        let s = s_matrix(&spec);
        let f = |n: &str| TestFunction::builtin(n, &spec).unwrap().eval(&s, 2);
        assert_eq!(f("one"), C64::new(1.0, 0.0));
        assert_eq!(f("m11"), C64::new(1.0, 0.0));
        assert_eq!(f("cross"), C64::new(0.0, 0.0));
        assert!((f("exp_trace").re - (-3.0f64).exp()).abs() < 1e-15);
        assert!((f("m11_damped").re - (-1.5f64).exp()).abs() < 1e-15);
        for (name, _) in BUILTINS {
            assert!(TestFunction::builtin(name, &spec).is_some());
        }
        for (name, members) in SUITES {
            assert_eq!(TestFunction::suite(name, &spec).unwrap().len(), members.len());
        }
    }

    #[test]
    fn diii_cross_is_not_identically_zero() {
        use crate::kernels::dm_kernel;
        use crate::spaces::WElement;
        let spec = SpaceSpec::diii(2, Sign::Compact).unwrap();
        let b = WElement::from_real_coords(spec, &[0.3, 0.2]);
        let m = dm_kernel(&spec, 0.5, b.matrix()).unwrap().into_matrix();
        let cross = TestFunction::builtin("cross", &spec).unwrap().eval(&m, 2);
        assert!(cross.norm() > 1e-2);
    }

    #[test]
    fn validation() {
        let nc = SpaceSpec::aiii(1, 1, Sign::Noncompact).unwrap();
        let m11 = TestFunction::builtin("m11", &nc).unwrap();
        assert!(matches!(m11.validate(&nc), Err(Error::NonIntegrable(_))));
        assert!(TestFunction::builtin("m11_damped", &nc).unwrap().validate(&nc).is_ok());
        let bad = TestFunction::new("bad", vec![Monomial::entry(0, 5, 1)], 0.0).unwrap();
        assert!(bad.validate(&nc.with_sign(Sign::Compact)).is_err());
        assert!(TestFunction::new("neg", vec![], -1.0).is_err());
    }
}
