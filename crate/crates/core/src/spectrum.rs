//! Single-photon frequency distributions.
//!
//! A [`Spectrum`] is the probability density of the detected frequency of
//! either photon. Both photons share it. All quadrature and sampling over a
//! spectrum is restricted to its [`support`](Spectrum::support): eight
//! standard deviations either side of the centre for a Gaussian, the knot
//! range for a table.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{composite_nodes, trapezoid};

/// Half-width of the truncated support in units of sigma.
pub const SUPPORT_HALF_WIDTH: f64 = 8.0;

/// Tolerance on the normalisation of a tabulated density after rescaling.
const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    Gaussian,
    Tabulated,
}

/// First two moments of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// Normal density with mean `center` and standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpectrum {
    center: f64,
    sigma: f64,
}

impl GaussianSpectrum {
    pub fn new(center: f64, sigma: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::InvalidSpectrum(format!("center must be finite, got {center}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidSpectrum(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { center, sigma })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn density(&self, omega: f64) -> f64 {
        let z = (omega - self.center) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * PI).sqrt())
    }
}

/// Piecewise-linear density through caller-supplied knots.
///
/// The table is rescaled to unit trapezoidal mass on construction. Mean and
/// variance are trapezoidal moments over the knots.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedSpectrum {
    omega: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
    mean: f64,
    sigma: f64,
}

impl TabulatedSpectrum {
    pub fn new(knots: &[[f64; 2]]) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidSpectrum("table needs at least two knots".into()));
        }
        let omega: Vec<f64> = knots.iter().map(|k| k[0]).collect();
        let raw: Vec<f64> = knots.iter().map(|k| k[1]).collect();
        if omega.iter().chain(&raw).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpectrum("table entries must be finite".into()));
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpectrum("knot frequencies must be strictly increasing".into()));
        }
        if raw.iter().any(|&d| d < 0.0) {
            return Err(Error::InvalidSpectrum("density must be non-negative".into()));
        }
        let mass = trapezoid(&omega, &raw);
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidSpectrum(format!("table is not normalisable (mass {mass})")));
        }
        let density: Vec<f64> = raw.iter().map(|d| d / mass).collect();

        let mut cdf = Vec::with_capacity(omega.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 1..omega.len() {
            acc += 0.5 * (omega[i] - omega[i - 1]) * (density[i] + density[i - 1]);
            cdf.push(acc);
        }
        if (acc - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidSpectrum(format!("normalisation drifted to {acc}")));
        }

        let first: Vec<f64> = omega.iter().zip(&density).map(|(w, d)| w * d).collect();
        let mean = trapezoid(&omega, &first);
        let second: Vec<f64> = omega
            .iter()
            .zip(&density)
            .map(|(w, d)| (w - mean) * (w - mean) * d)
            .collect();
        let variance = trapezoid(&omega, &second);
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::InvalidSpectrum(format!("table has degenerate variance {variance}")));
        }

        Ok(Self {
            omega,
            density,
            cdf,
            mean,
            sigma: variance.sqrt(),
        })
    }

    /// Samples `density` on `n` evenly spaced knots over `[lo, hi]`.
    pub fn from_fn<F: Fn(f64) -> f64>(density: F, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidSpectrum("need n >= 2 knots over a non-empty range".into()));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let knots: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let w = lo + i as f64 * step;
                [w, density(w)]
            })
            .collect();
        Self::new(&knots)
    }

    pub fn knots(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.omega.iter().zip(&self.density).map(|(&w, &d)| [w, d])
    }

    fn segment(&self, omega: f64) -> Option<usize> {
        let n = self.omega.len();
        if omega < self.omega[0] || omega > self.omega[n - 1] {
            return None;
        }
        let i = self.omega.partition_point(|&w| w <= omega);
        Some(i.clamp(1, n - 1) - 1)
    }

    fn eval_in(&self, i: usize, omega: f64) -> f64 {
        let (x0, x1) = (self.omega[i], self.omega[i + 1]);
        let t = (omega - x0) / (x1 - x0);
        self.density[i] + t * (self.density[i + 1] - self.density[i])
    }

    fn density(&self, omega: f64) -> f64 {
        match self.segment(omega) {
            Some(i) => self.eval_in(i, omega),
            None => 0.0,
        }
    }

    fn inverse_cdf(&self, u: f64) -> f64 {
        let n = self.omega.len();
        let i = (self.cdf.partition_point(|&c| c <= u).clamp(1, n - 1)) - 1;
        let h = self.omega[i + 1] - self.omega[i];
        let d0 = self.density[i];
        let slope = (self.density[i + 1] - d0) / h;
        let r = (u - self.cdf[i]).max(0.0);
        // Solve d0*y + slope*y^2/2 = r on [0, h] in the cancellation-free form.
        let disc = (d0 * d0 + 2.0 * slope * r).max(0.0);
        let denom = d0 + disc.sqrt();
        let y = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        self.omega[i] + y.clamp(0.0, h)
    }

    /// Exact autocorrelation of the interpolant: the product of two linear
    /// pieces is quadratic, so Simpson's rule on the merged breakpoints is
    /// exact.
    fn autocorrelation(&self, delta: f64) -> f64 {
        let n = self.omega.len();
        let lo = self.omega[0].max(self.omega[0] + delta);
        let hi = self.omega[n - 1].min(self.omega[n - 1] + delta);
        if hi <= lo {
            return 0.0;
        }
        let mut breaks: Vec<f64> = Vec::with_capacity(2 * n + 2);
        breaks.push(lo);
        let (mut i, mut j) = (0, 0);
        while i < n || j < n {
            let a = if i < n { self.omega[i] } else { f64::INFINITY };
            let b = if j < n { self.omega[j] + delta } else { f64::INFINITY };
            let next = if a <= b {
                i += 1;
                a
            } else {
                j += 1;
                b
            };
            if next > lo && next < hi {
                breaks.push(next);
            }
        }
        breaks.push(hi);

        let mut seg_a = 0usize;
        let mut seg_b = 0usize;
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let (u, v) = (w[0], w[1]);
            if v <= u {
                continue;
            }
            let m = 0.5 * (u + v);
            while seg_a + 2 < n && self.omega[seg_a + 1] <= m {
                seg_a += 1;
            }
            while seg_b + 2 < n && self.omega[seg_b + 1] + delta <= m {
                seg_b += 1;
            }
            let p = |x: f64| self.eval_in(seg_a, x) * self.eval_in(seg_b, x - delta);
            total += (v - u) / 6.0 * (p(u) + 4.0 * p(m) + p(v));
        }
        total
    }
}

/// Frequency distribution shared by both photons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpectrumSpec", into = "SpectrumSpec")]
pub enum Spectrum {
    Gaussian(GaussianSpectrum),
    Tabulated(TabulatedSpectrum),
}

/// JSON form: `{"kind":"gaussian","center":x,"sigma":s}` or
/// `{"kind":"tabulated","knots":[[w,d],...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpectrumSpec {
    Gaussian { center: f64, sigma: f64 },
    Tabulated { knots: Vec<[f64; 2]> },
}

impl TryFrom<SpectrumSpec> for Spectrum {
    type Error = Error;

    fn try_from(spec: SpectrumSpec) -> Result<Self> {
        match spec {
            SpectrumSpec::Gaussian { center, sigma } => Spectrum::gaussian(center, sigma),
            SpectrumSpec::Tabulated { knots } => Ok(Spectrum::Tabulated(TabulatedSpectrum::new(&knots)?)),
        }
    }
}

impl From<Spectrum> for SpectrumSpec {
    fn from(s: Spectrum) -> Self {
        match s {
            Spectrum::Gaussian(g) => SpectrumSpec::Gaussian {
                center: g.center,
                sigma: g.sigma,
            },
            Spectrum::Tabulated(t) => SpectrumSpec::Tabulated {
                knots: t.knots().collect(),
            },
        }
    }
}

impl Spectrum {
    pub fn gaussian(center: f64, sigma: f64) -> Result<Self> {
        Ok(Spectrum::Gaussian(GaussianSpectrum::new(center, sigma)?))
    }

    pub fn tabulated(knots: &[[f64; 2]]) -> Result<Self> {
        Ok(Spectrum::Tabulated(TabulatedSpectrum::new(knots)?))
    }

    /// Tabulated copy of this spectrum on `n` even knots over its support.
    pub fn to_tabulated(&self, n: usize) -> Result<Self> {
        let (lo, hi) = self.support();
        Ok(Spectrum::Tabulated(TabulatedSpectrum::from_fn(
            |w| self.density(w),
            lo,
            hi,
            n,
        )?))
    }

    pub fn kind(&self) -> SpectrumKind {
        match self {
            Spectrum::Gaussian(_) => SpectrumKind::Gaussian,
            Spectrum::Tabulated(_) => SpectrumKind::Tabulated,
        }
    }

    /// Probability density of the photon frequency at `omega`.
    pub fn density(&self, omega: f64) -> f64 {
        match self {
            Spectrum::Gaussian(g) => g.density(omega),
            Spectrum::Tabulated(t) => t.density(omega),
        }
    }

    pub fn moments(&self) -> Moments {
        let (mean, sigma) = match self {
            Spectrum::Gaussian(g) => (g.center, g.sigma),
            Spectrum::Tabulated(t) => (t.mean, t.sigma),
        };
        Moments {
            mean,
            variance: sigma * sigma,
        }
    }

    pub fn center(&self) -> f64 {
        self.moments().mean
    }

    pub fn sigma(&self) -> f64 {
        match self {
            Spectrum::Gaussian(g) => g.sigma,
            Spectrum::Tabulated(t) => t.sigma,
        }
    }

    /// Coherence time, the inverse bandwidth.
    pub fn coherence_time(&self) -> f64 {
        1.0 / self.sigma()
    }

    /// Interval outside which the density is treated as zero.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Spectrum::Gaussian(g) => (
                g.center - SUPPORT_HALF_WIDTH * g.sigma,
                g.center + SUPPORT_HALF_WIDTH * g.sigma,
            ),
            Spectrum::Tabulated(t) => (t.omega[0], t.omega[t.omega.len() - 1]),
        }
    }

    /// Draws a frequency from the spectrum, restricted to the support.
    pub fn sample_frequency<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Spectrum::Gaussian(g) => loop {
                let z: f64 = rng.sample(StandardNormal);
                if z.abs() <= SUPPORT_HALF_WIDTH {
                    return g.center + g.sigma * z;
                }
            },
            Spectrum::Tabulated(t) => t.inverse_cdf(rng.random::<f64>()),
        }
    }

    /// Density of the difference `omega - omega'` of two independent draws.
    pub fn difference_density(&self, delta: f64) -> f64 {
        match self {
            Spectrum::Gaussian(g) => {
                let s2 = g.sigma * g.sigma;
                (-delta * delta / (4.0 * s2)).exp() / (2.0 * (PI * s2).sqrt())
            }
            Spectrum::Tabulated(t) => t.autocorrelation(delta),
        }
    }

    /// Largest `|omega - omega'|` with non-zero difference density.
    pub fn difference_range(&self) -> f64 {
        let (lo, hi) = self.support();
        hi - lo
    }

    /// `E[exp(i*omega*t)]` and its derivative in `t`, by composite quadrature
    /// over the support. Works for either kind.
    pub fn characteristic(&self, t: f64) -> (Complex64, Complex64) {
        let (lo, hi) = self.support();
        let width = (0.5 * self.sigma()).min(if t != 0.0 { 0.5 / t.abs() } else { f64::INFINITY });
        let mut phi = Complex64::new(0.0, 0.0);
        let mut dphi = Complex64::new(0.0, 0.0);
        let mut accumulate = |a: f64, b: f64| {
            for (w, wt) in composite_nodes(a, b, width) {
                let e = Complex64::from_polar(wt * self.density(w), w * t);
                phi += e;
                dphi += Complex64::new(0.0, w) * e;
            }
        };
        match self {
            Spectrum::Gaussian(_) => accumulate(lo, hi),
            // Kinks at the knots: integrate segment by segment.
            Spectrum::Tabulated(tab) => {
                for w in tab.omega.windows(2) {
                    accumulate(w[0], w[1]);
                }
            }
        }
        (phi, dphi)
    }
}
