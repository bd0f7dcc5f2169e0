use rand::Rng;
use rand_distr::StandardNormal;

use super::{SpaceSpec, WElement};
use crate::error::{Error, Result};
use crate::matrixkit::{c64, CMatrix, C64};
use crate::seed::SeedStream;

/// Largest complex dimension for which rejection sampling of the ball is offered.
pub const MAX_BALL_DIM: usize = 6;

/// Coordinates uniform on the polydisc `|c_k|² < radius`, which contains the
/// ball `{‖b‖₂² < radius}`.
pub fn propose_box(spec: &SpaceSpec, radius: f64, stream: &mut SeedStream) -> Vec<C64> {
    (0..spec.m())
        .map(|_| {
            let u: f64 = stream.random();
            let phi: f64 = stream.random::<f64>() * std::f64::consts::TAU;
            C64::from_polar((radius * u).sqrt(), phi)
        })
        .collect()
}

/// Uniform (flat) sample of `{b ∈ W : ‖b‖₂² < radius}` by rejection.
pub fn sample_ball(spec: &SpaceSpec, radius: f64, stream: &mut SeedStream) -> Result<WElement> {
    if !(radius > 0.0 && radius <= 1.0) {
        return Err(Error::OutOfRange {
            name: "radius",
            value: radius,
            reason: "must lie in (0, 1]",
        });
    }
    if spec.m() > MAX_BALL_DIM {
        return Err(Error::DimensionTooLarge {
            real_dim: spec.real_dim(),
            max: 2 * MAX_BALL_DIM,
        });
    }
    loop {
        let w = WElement::from_coords(*spec, &propose_box(spec, radius, stream));
        let norm = w.spectral_norm();
        if norm * norm < radius {
            return Ok(w);
        }
    }
}

/// Independent complex Gaussian coordinates with `Re`, `Im ~ N(0, sigma²)`.
pub fn sample_gaussian(spec: &SpaceSpec, sigma: f64, stream: &mut SeedStream) -> Result<WElement> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::OutOfRange {
            name: "sigma",
            value: sigma,
            reason: "must be positive",
        });
    }
    let coords: Vec<C64> = (0..spec.m())
        .map(|_| {
            let re: f64 = stream.sample(StandardNormal);
            let im: f64 = stream.sample(StandardNormal);
            c64(sigma * re, sigma * im)
        })
        .collect();
    Ok(WElement::from_coords(*spec, &coords))
}

/// Proposal density of [`sample_gaussian`] with respect to Lebesgue measure on
/// the real coordinates.
pub fn gaussian_density(spec: &SpaceSpec, sigma: f64, w: &WElement) -> f64 {
    let s2 = sigma * sigma;
    let r2: f64 = w.coords().iter().map(|c| c.norm_sqr()).sum();
    (2.0 * std::f64::consts::PI * s2).powi(-(spec.m() as i32)) * (-r2 / (2.0 * s2)).exp()
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix with
/// the phases of diag(R) moved into Q.
pub fn haar_unitary(n: usize, stream: &mut SeedStream) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = stream.sample(StandardNormal);
        let im: f64 = stream.sample(StandardNormal);
        c64(re, im)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixkit::{transpose_residual, unitarity_residual};
    use crate::spaces::Sign;

    #[test]
    fn ball_mean_square_radius() {
        let spec = SpaceSpec::aiii(1, 1, Sign::Compact).unwrap();
        let mut s = SeedStream::new(1);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_ball(&spec, 1.0, &mut s).unwrap().matrix()[(0, 0)].norm_sqr())
            .collect();
        assert!(xs.iter().all(|&x| x < 1.0));
        let mean = xs.iter().sum::<f64>() / n as f64;
        // |b|² is uniform on [0, 1]: variance 1/12
        let se = (1.0 / 12.0 / n as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn ball_structure_and_determinism() {
        for spec in [
            SpaceSpec::ci(2, Sign::Compact).unwrap(),
            SpaceSpec::diii(3, Sign::Compact).unwrap(),
        ] {
            let mut a = SeedStream::new(9);
            let mut b = SeedStream::new(9);
            for _ in 0..50 {
                let x = sample_ball(&spec, 0.5, &mut a).unwrap();
                let y = sample_ball(&spec, 0.5, &mut b).unwrap();
                assert_eq!(x.matrix(), y.matrix());
                let sign = if spec.family() == crate::spaces::Family::CI { 1.0 } else { -1.0 };
                assert_eq!(transpose_residual(x.matrix(), sign), 0.0);
                assert!(x.spectral_norm().powi(2) < 0.5);
            }
        }
        let spec = SpaceSpec::aiii(1, 1, Sign::Compact).unwrap();
        assert!(sample_ball(&spec, 1.5, &mut SeedStream::new(0)).is_err());
    }

    #[test]
    fn gaussian_moments_and_density() {
        let spec = SpaceSpec::aiii(1, 1, Sign::Noncompact).unwrap();
        let sigma = 0.7;
        let mut s = SeedStream::new(2);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_gaussian(&spec, sigma, &mut s).unwrap().matrix()[(0, 0)].norm_sqr())
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        // |b|² is exponential with mean 2σ², so its sd is also 2σ²
        let se = 2.0 * sigma * sigma / (n as f64).sqrt();
        assert!((mean - 2.0 * sigma * sigma).abs() < 3.0 * se);

        let zero = WElement::zero(spec);
        let expected = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma);
        assert!((gaussian_density(&spec, sigma, &zero) - expected).abs() < 1e-15);

        let ci = SpaceSpec::ci(3, Sign::Noncompact).unwrap();
        let w = sample_gaussian(&ci, 1.0, &mut s).unwrap();
        assert_eq!(transpose_residual(w.matrix(), 1.0), 0.0);
    }

    #[test]
    fn haar_unitary_properties() {
        let mut s = SeedStream::new(4);
        let n = 100_000;
        let mut xs = Vec::with_capacity(n);
        let mut mean = c64(0.0, 0.0);
        for _ in 0..n {
            let u = haar_unitary(2, &mut s);
            assert!(unitarity_residual(&u) < 1e-12);
            xs.push(u[(0, 0)].norm_sqr());
            mean += u[(0, 0)];
        }
        mean /= n as f64;
        // E|U11|² = 1/2, so each of Re, Im has variance 1/4
        let se = (0.25 / n as f64).sqrt();
        assert!(mean.re.abs() < 3.0 * se && mean.im.abs() < 3.0 * se);

        // Kolmogorov-Smirnov against U(0, 1); 1% critical value 1.628/√n
        xs.sort_by(f64::total_cmp);
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| ((i + 1) as f64 / n as f64 - x).max(x - i as f64 / n as f64))
            .fold(0.0, f64::max);
        assert!(d < 1.628 / (n as f64).sqrt(), "KS statistic {d}");
    }
}
