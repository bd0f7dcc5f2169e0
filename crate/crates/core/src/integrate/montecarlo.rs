//! Monte Carlo estimates of the flat side and the Haar oracle.
//!
//! Work is split into a fixed number of chunks, each with its own derived seed
//! stream. Chunks run on the rayon pool and are merged in index order, so the
//! result depends on `(seed, n, chunks)` only.
//!
//! One sample of `b` serves every `(f, t)` cell, so the estimates at different
//! `t` share random numbers and their differences are estimated with the
//! paired standard error.

use rayon::prelude::*;

use super::functions::TestFunction;
use super::{Estimate, Method};
use crate::error::{Error, Result};
use crate::kernels::KernelPrep;
use crate::matrixkit::{c64, CMatrix, C64};
use crate::seed::SeedStream;
use crate::spaces::{
    gaussian_density, haar_unitary, propose_box, s_matrix, sample_gaussian, Family, Sign, SpaceSpec, WElement,
};

pub const MIN_SAMPLES: u64 = 1000;

/// Streaming mean and variance of complex samples, `m2 = Σ|x − mean|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Welford {
    n: u64,
    mean: C64,
    m2: f64,
}

impl Default for Welford {
    fn default() -> Self {
        Self {
            n: 0,
            mean: c64(0.0, 0.0),
            m2: 0.0,
        }
    }
}

impl Welford {
    pub fn push(&mut self, x: C64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += (delta.conj() * (x - self.mean)).re;
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &Welford) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        self.mean += delta * (nb / n as f64);
        self.m2 += other.m2 + delta.norm_sqr() * na * nb / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> C64 {
        self.mean
    }

    /// Sample variance of the complex values.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n: u64,
    pub chunks: usize,
    pub seed: u64,
    /// Compact sign: squared spectral radius of the ball.
    pub radius: f64,
    /// Non-compact sign: proposal standard deviation per real coordinate;
    /// `None` picks `1/√(8λ_min)`.
    pub sigma: Option<f64>,
}

impl McConfig {
    pub fn new(n: u64, seed: u64) -> Self {
        Self {
            n,
            chunks: 16,
            seed,
            radius: 1.0,
            sigma: None,
        }
    }
}

/// Difference `RHS(f, t_i) − RHS(f, t_j)` estimated on shared samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStat {
    pub f: usize,
    pub t_i: usize,
    pub t_j: usize,
    pub diff: C64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McGrid {
    /// Index `f·|ts| + t`.
    pub cells: Vec<Estimate>,
    pub pairs: Vec<PairStat>,
    pub sigma: Option<f64>,
}

/// Proposal width matched to the slowest-decaying damping factor.
pub fn default_sigma(fs: &[TestFunction]) -> Option<f64> {
    let lambda = fs.iter().map(|f| f.damping()).fold(f64::INFINITY, f64::min);
    (lambda > 0.0 && lambda.is_finite()).then(|| (1.0 / (8.0 * lambda)).sqrt())
}

fn chunk_sizes(n: u64, chunks: usize) -> Vec<u64> {
    let c = chunks as u64;
    (0..c).map(|i| n / c + u64::from(i < n % c)).collect()
}

fn check_budget(n: u64, chunks: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::OutOfRange {
            name: "n",
            value: n as f64,
            reason: "at least 1000 samples are required",
        });
    }
    if chunks == 0 {
        return Err(Error::OutOfRange {
            name: "chunks",
            value: 0.0,
            reason: "must be positive",
        });
    }
    Ok(())
}

struct ChunkAcc {
    cells: Vec<Welford>,
    pairs: Vec<Welford>,
}

/// Flat-side estimates for every `(f, t)` on common samples.
pub fn rhs_mc_grid(spec: &SpaceSpec, fs: &[TestFunction], ts: &[f64], cfg: &McConfig) -> Result<McGrid> {
    check_budget(cfg.n, cfg.chunks)?;
    fs.iter().try_for_each(|f| f.validate(spec))?;
    if let Some(&t) = ts.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::OutOfRange {
            name: "t",
            value: t,
            reason: "must lie in [0, 1]",
        });
    }
    let (nf, nt) = (fs.len(), ts.len());
    let p = spec.p();
    let sigma = match spec.sign() {
        Sign::Compact => {
            if !(cfg.radius > 0.0 && cfg.radius <= 1.0) {
                return Err(Error::OutOfRange {
                    name: "radius",
                    value: cfg.radius,
                    reason: "must lie in (0, 1]",
                });
            }
            None
        }
        Sign::Noncompact => Some(match cfg.sigma {
            Some(s) => s,
            None => default_sigma(fs).ok_or_else(|| Error::NonIntegrable("undamped function".into()))?,
        }),
    };
    let box_volume = (std::f64::consts::PI * cfg.radius).powi(spec.m() as i32);
    let pair_index: Vec<(usize, usize)> = (0..nt)
        .flat_map(|i| (i + 1..nt).map(move |j| (i, j)))
        .collect();

    let sizes = chunk_sizes(cfg.n, cfg.chunks);
    let accs: Vec<Result<ChunkAcc>> = sizes
        .par_iter()
        .enumerate()
        .map(|(chunk, &count)| {
            let mut stream = SeedStream::derive(cfg.seed, &[chunk as u64]);
            let mut acc = ChunkAcc {
                cells: vec![Welford::default(); nf * nt],
                pairs: vec![Welford::default(); nf * pair_index.len()],
            };
            let mut vals = vec![c64(0.0, 0.0); nf * nt];
            for _ in 0..count {
                let (prep, weight) = match sigma {
                    None => {
                        let w = WElement::from_coords(*spec, &propose_box(spec, cfg.radius, &mut stream));
                        (KernelPrep::within(spec, w.matrix(), cfg.radius)?, box_volume)
                    }
                    Some(s) => {
                        let w = sample_gaussian(spec, s, &mut stream)?;
                        let g = gaussian_density(spec, s, &w);
                        (Some(KernelPrep::new(spec, w.matrix())?), 1.0 / g)
                    }
                };
                match prep {
                    Some(prep) => {
                        for (j, &t) in ts.iter().enumerate() {
                            let m = prep.kernel_matrix(t);
                            for (i, f) in fs.iter().enumerate() {
                                vals[i * nt + j] = f.eval(&m, p) * weight;
                            }
                        }
                        if vals.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                            return Err(Error::NonFinite("Monte Carlo integrand"));
                        }
                    }
                    None => vals.iter_mut().for_each(|v| *v = c64(0.0, 0.0)),
                }
                for (a, v) in acc.cells.iter_mut().zip(&vals) {
                    a.push(*v);
                }
                for i in 0..nf {
                    for (k, &(a, b)) in pair_index.iter().enumerate() {
                        acc.pairs[i * pair_index.len() + k].push(vals[i * nt + a] - vals[i * nt + b]);
                    }
                }
            }
            Ok(acc)
        })
        .collect();

    let mut total = ChunkAcc {
        cells: vec![Welford::default(); nf * nt],
        pairs: vec![Welford::default(); nf * pair_index.len()],
    };
    for acc in accs {
        let acc = acc?;
        total.cells.iter_mut().zip(&acc.cells).for_each(|(a, b)| a.merge(b));
        total.pairs.iter_mut().zip(&acc.pairs).for_each(|(a, b)| a.merge(b));
    }
    let method = if sigma.is_some() { Method::McGaussian } else { Method::McBall };
    let cells = total
        .cells
        .iter()
        .map(|w| Estimate {
            value: w.mean(),
            stderr: w.stderr(),
            n: w.count(),
            method,
        })
        .collect();
    let pairs = (0..nf)
        .flat_map(|i| pair_index.iter().enumerate().map(move |(k, &(a, b))| (i, k, a, b)))
        .map(|(i, k, a, b)| {
            let w = &total.pairs[i * pair_index.len() + k];
            PairStat {
                f: i,
                t_i: a,
                t_j: b,
                diff: w.mean(),
                stderr: w.stderr(),
            }
        })
        .collect();
    Ok(McGrid { cells, pairs, sigma })
}

/// Single-cell wrapper around [`rhs_mc_grid`].
pub fn rhs_mc(spec: &SpaceSpec, f: &TestFunction, t: f64, cfg: &McConfig) -> Result<Estimate> {
    Ok(rhs_mc_grid(spec, std::slice::from_ref(f), &[t], cfg)?.cells[0])
}

/// `E f(U s U†)` over Haar unitaries, which equals `LHS(f)/LHS(1)` for AIII on
/// the compact sign.
pub fn lhs_haar(spec: &SpaceSpec, fs: &[TestFunction], n: u64, chunks: usize, seed: u64) -> Result<Vec<Estimate>> {
    if spec.family() != Family::AIII || spec.sign() != Sign::Compact {
        return Err(Error::UnsupportedFamily(format!(
            "Haar oracle needs AIII on the compact sign, got {spec}"
        )));
    }
    check_budget(n, chunks)?;
    fs.iter().try_for_each(|f| f.validate(spec))?;
    let s = s_matrix(spec);
    let dim = spec.n();
    let p = spec.p();
    let accs: Vec<Vec<Welford>> = chunk_sizes(n, chunks)
        .par_iter()
        .enumerate()
        .map(|(chunk, &count)| {
            let mut stream = SeedStream::derive(seed, &[chunk as u64]);
            let mut acc = vec![Welford::default(); fs.len()];
            for _ in 0..count {
                let u = haar_unitary(dim, &mut stream);
                let m: CMatrix = &u * &s * u.adjoint();
                for (a, f) in acc.iter_mut().zip(fs) {
                    a.push(f.eval(&m, p));
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Welford::default(); fs.len()];
    for acc in &accs {
        total.iter_mut().zip(acc).for_each(|(a, b)| a.merge(b));
    }
    Ok(total
        .iter()
        .map(|w| Estimate {
            value: w.mean(),
            stderr: w.stderr(),
            n: w.count(),
            method: Method::Haar,
        })
        .collect())
}
