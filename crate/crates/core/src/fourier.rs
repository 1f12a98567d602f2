//! Fourier contour embedding.
//!
//! A resampled contour is read as a complex signal `x + iy` over `t in [0, 1)`
//! and summarized by its `2K + 1` lowest-frequency coefficients
//! `c_k = (1/N) sum_n f(n/N) exp(-2 pi i k n / N)` for `k = -K..=K`.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::{resample_equidistant, Contour, Point2, ResampledContour};
use num_complex::Complex64;

/// Coefficients `c_{-K} ..= c_K` of a truncated contour series.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSignature {
    degree: usize,
    coeffs: Vec<Complex64>,
}

impl FourierSignature {
    /// `coeffs` must hold `2 * degree + 1` values ordered from `k = -degree`.
    pub fn new(degree: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * degree + 1 {
            return Err(Error::InvalidArgument(format!(
                "degree {degree} needs {} coefficients, got {}",
                2 * degree + 1,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("Fourier signature"));
        }
        Ok(Self { degree, coeffs })
    }

    pub fn zeros(degree: usize) -> Self {
        Self {
            degree,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * degree + 1],
        }
    }

    /// Parses the interleaved `[u_{-K}, v_{-K}, ..., u_K, v_K]` layout.
    pub fn from_flat(values: &[f64]) -> Result<Self> {
        if values.len() < 2 || values.len() % 4 != 2 {
            return Err(Error::InvalidArgument(format!(
                "flat signature length {} is not 2(2K+1)",
                values.len()
            )));
        }
        let degree = (values.len() / 2 - 1) / 2;
        let coeffs = values.chunks_exact(2).map(|uv| Complex64::new(uv[0], uv[1])).collect();
        Self::new(degree, coeffs)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.coeffs.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn flat_len(&self) -> usize {
        2 * self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient for frequency `k`, `-K <= k <= K`.
    pub fn get(&self, k: i64) -> Complex64 {
        self.coeffs[(k + self.degree as i64) as usize]
    }

    pub fn set(&mut self, k: i64, value: Complex64) {
        self.coeffs[(k + self.degree as i64) as usize] = value;
    }

    /// The zero-frequency term, i.e. the contour centre.
    pub fn center(&self) -> Point2 {
        let c0 = self.get(0);
        Point2::new(c0.re, c0.im)
    }

    /// Iterates `(k, c_k)` from `k = -K`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let k0 = -(self.degree as i64);
        self.coeffs.iter().enumerate().map(move |(j, &c)| (k0 + j as i64, c))
    }
}

/// `exp(-2 pi i m / N)` for `m = 0..N`.
fn roots_of_unity(samples: usize) -> Vec<Complex64> {
    (0..samples)
        .map(|m| Complex64::from_polar(1.0, -TAU * m as f64 / samples as f64))
        .collect()
}

/// `sum_n values[n] * roots[k n mod N]`, walking the phase index modulo `N`
/// so large `k n` products never lose precision.
fn phase_sum(values: impl Iterator<Item = Complex64>, k: i64, roots: &[Complex64]) -> Complex64 {
    let m = roots.len();
    let step = k.rem_euclid(m as i64) as usize;
    let mut idx = 0;
    let mut acc = Complex64::new(0.0, 0.0);
    for v in values {
        acc += v * roots[idx];
        idx += step;
        if idx >= m {
            idx -= m;
        }
    }
    acc
}

fn dft_coefficient(points: &[Point2], k: i64, roots: &[Complex64]) -> Complex64 {
    phase_sum(points.iter().map(|p| Complex64::new(p.x, p.y)), k, roots) / points.len() as f64
}

/// Direct summation of the degree-`degree` coefficients.
pub fn fourier_coefficients(points: &ResampledContour, degree: usize) -> Result<FourierSignature> {
    let samples = points.len();
    if 2 * degree + 1 > samples {
        return Err(Error::DegreeTooLarge { degree, samples });
    }
    let k0 = -(degree as i64);
    let roots = roots_of_unity(samples);
    let coeffs = (0..2 * degree + 1)
        .map(|j| dft_coefficient(points.points(), k0 + j as i64, &roots))
        .collect();
    FourierSignature::new(degree, coeffs)
}

/// Resample to `samples` points, then take the degree-`degree` coefficients.
pub fn embed(c: &Contour, degree: usize, samples: usize) -> Result<FourierSignature> {
    if 2 * degree + 1 > samples {
        return Err(Error::DegreeTooLarge { degree, samples });
    }
    fourier_coefficients(&resample_equidistant(c, samples)?, degree)
}

/// Evaluates the truncated series at `t = j / count` for `j = 0..count`.
pub fn reconstruct(s: &FourierSignature, count: usize) -> Vec<Point2> {
    if count == 0 {
        return Vec::new();
    }
    let roots = roots_of_unity(count);
    (0..count)
        .map(|j| {
            // exp(+2 pi i k j / N) = roots[(-k j) mod N]
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, c) in s.iter() {
                let idx = (-k * j as i64).rem_euclid(count as i64) as usize;
                acc += c * roots[idx];
            }
            Point2::new(acc.re, acc.im)
        })
        .collect()
}

/// Inverse transform to a polygon with `count` vertices.
///
/// Fails with `ZeroPerimeter` when the series is constant, since a polygon of
/// coincident points is not a valid [`Contour`].
pub fn reconstruct_contour(s: &FourierSignature, count: usize) -> Result<Contour> {
    if count < 3 {
        return Err(Error::InvalidArgument(format!(
            "reconstruction needs at least 3 points, got {count}"
        )));
    }
    Contour::new(reconstruct(s, count))
}

/// Moves the coordinate origin to `origin`; only `c_0` changes.
pub fn recenter(s: &FourierSignature, origin: Point2) -> FourierSignature {
    let mut out = s.clone();
    out.set(0, s.get(0) - Complex64::new(origin.x, origin.y));
    out
}

/// All `N` DFT coefficients, indexed by residue `k = 0..N`.
pub fn full_spectrum(points: &ResampledContour) -> Vec<Complex64> {
    let roots = roots_of_unity(points.len());
    (0..points.len())
        .map(|k| dft_coefficient(points.points(), k as i64, &roots))
        .collect()
}

/// `(1/N) sum_n |f(n/N)|^2`; by Parseval equals the sum of `|c_k|^2` over the full spectrum.
pub fn signal_energy(points: &ResampledContour) -> f64 {
    let n = points.len() as f64;
    points.points().iter().map(|p| p.x * p.x + p.y * p.y).sum::<f64>() / n
}

/// Mean squared distance between the samples and their degree-`degree`
/// reconstruction at the same sample times, computed as the Parseval tail
/// `sum_{|k| > K} |c_k|^2`.
///
/// The tail is accumulated from the highest residue inward, so the value is
/// non-increasing in `degree` in floating point as well as exactly.
pub fn truncation_l2_error(points: &ResampledContour, degree: usize) -> Result<f64> {
    let samples = points.len();
    if 2 * degree + 1 > samples {
        return Err(Error::DegreeTooLarge { degree, samples });
    }
    let spectrum = full_spectrum(points);
    Ok(tail_energy(&spectrum, degree))
}

/// Parseval tail `sum_{|k| > degree} |c_k|^2` of a full spectrum from [`full_spectrum`].
pub fn tail_energy(spectrum: &[Complex64], degree: usize) -> f64 {
    let n = spectrum.len();
    let max_degree = (n - 1) / 2;
    let mut tail = 0.0;
    if n.is_multiple_of(2) {
        // Nyquist residue has no partner.
        tail += spectrum[n / 2].norm_sqr();
    }
    let mut k = max_degree;
    while k > degree {
        tail += spectrum[k].norm_sqr() + spectrum[n - k].norm_sqr();
        k -= 1;
    }
    tail
}

/// The same quantity as [`truncation_l2_error`], evaluated directly in the
/// spatial domain.
pub fn truncation_l2_error_direct(points: &ResampledContour, degree: usize) -> Result<f64> {
    let sig = fourier_coefficients(points, degree)?;
    let recon = reconstruct(&sig, points.len());
    let n = points.len() as f64;
    Ok(points
        .points()
        .iter()
        .zip(&recon)
        .map(|(p, q)| (p.x - q.x).powi(2) + (p.y - q.y).powi(2))
        .sum::<f64>()
        / n)
}
