//! Outcome probabilities of two delayed photons meeting at a balanced beam
//! splitter and detected with frequency resolution.
//!
//! All two-photon quantities are densities over an ordered pair of
//! frequencies `(omega, omega')` on the plane. A bunch density already
//! includes both output channels. The probability of a binned event is the
//! density times `delta_omega^2`.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::spectrum::{Spectrum, SpectrumKind, SUPPORT_HALF_WIDTH};

/// Factor standing in for "much smaller than" in the resolution condition.
pub const RESOLUTION_FACTOR: f64 = 0.05;

/// Coarsest detector resolution that still erases which-time information.
pub fn max_resolution(delta_t: f64, sigma: f64) -> f64 {
    if delta_t == 0.0 {
        RESOLUTION_FACTOR * sigma
    } else {
        RESOLUTION_FACTOR * (1.0 / delta_t.abs()).min(sigma)
    }
}

/// All parameters of one experimental configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    delta_t: f64,
    eta: f64,
    gamma: f64,
    delta_omega: f64,
    auto_resolution: bool,
    enforce_resolution: bool,
    spectrum: Spectrum,
}

/// Builder for [`ExperimentConfig`]. Unset fields default to
/// `delta_t = 0`, `eta = 1`, `gamma = 1` and the coarsest admissible
/// resolution.
#[derive(Debug, Clone)]
pub struct ExperimentBuilder {
    delta_t: f64,
    eta: f64,
    gamma: f64,
    delta_omega: Option<f64>,
    enforce_resolution: bool,
    spectrum: Spectrum,
}

impl ExperimentBuilder {
    pub fn delta_t(mut self, v: f64) -> Self {
        self.delta_t = v;
        self
    }

    pub fn eta(mut self, v: f64) -> Self {
        self.eta = v;
        self
    }

    pub fn gamma(mut self, v: f64) -> Self {
        self.gamma = v;
        self
    }

    pub fn delta_omega(mut self, v: f64) -> Self {
        self.delta_omega = Some(v);
        self
    }

    /// Skip the resolution check, for exploratory runs.
    pub fn allow_coarse_resolution(mut self) -> Self {
        self.enforce_resolution = false;
        self
    }

    pub fn build(self) -> Result<ExperimentConfig> {
        let sigma = self.spectrum.sigma();
        let cfg = ExperimentConfig {
            delta_t: self.delta_t,
            eta: self.eta,
            gamma: self.gamma,
            delta_omega: self
                .delta_omega
                .unwrap_or_else(|| max_resolution(self.delta_t, sigma)),
            auto_resolution: self.delta_omega.is_none(),
            enforce_resolution: self.enforce_resolution,
            spectrum: self.spectrum,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn builder(spectrum: Spectrum) -> ExperimentBuilder {
        ExperimentBuilder {
            delta_t: 0.0,
            eta: 1.0,
            gamma: 1.0,
            delta_omega: None,
            enforce_resolution: true,
            spectrum,
        }
    }

    /// Configuration with the coarsest admissible resolution.
    pub fn new(delta_t: f64, eta: f64, gamma: f64, spectrum: Spectrum) -> Result<Self> {
        Self::builder(spectrum).delta_t(delta_t).eta(eta).gamma(gamma).build()
    }

    fn validate(&self) -> Result<()> {
        if !self.delta_t.is_finite() {
            return Err(Error::InvalidConfig(format!("delta_t must be finite, got {}", self.delta_t)));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidConfig(format!("eta must lie in [0, 1], got {}", self.eta)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if !(self.delta_omega.is_finite() && self.delta_omega > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "delta_omega must be positive, got {}",
                self.delta_omega
            )));
        }
        let limit = max_resolution(self.delta_t, self.spectrum.sigma());
        if self.enforce_resolution && self.delta_omega > limit * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "delta_omega = {} violates the resolution condition (limit {limit:.6e})",
                self.delta_omega
            )));
        }
        Ok(())
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta_omega(&self) -> f64 {
        self.delta_omega
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn sigma(&self) -> f64 {
        self.spectrum.sigma()
    }

    /// Same configuration at another delay. An automatically chosen
    /// resolution follows the new delay; a fixed one is re-checked.
    pub fn with_delta_t(&self, delta_t: f64) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.delta_t = delta_t;
        if cfg.auto_resolution {
            cfg.delta_omega = max_resolution(delta_t, cfg.spectrum.sigma());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_spectrum(&self, spectrum: Spectrum) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.spectrum = spectrum;
        if cfg.auto_resolution {
            cfg.delta_omega = max_resolution(cfg.delta_t, cfg.spectrum.sigma());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resolution-grid frequency nearest to `omega`, kept inside the support.
    pub fn bin_frequency(&self, omega: f64) -> f64 {
        let center = self.spectrum.center();
        let (lo, hi) = self.spectrum.support();
        let k_min = ((lo - center) / self.delta_omega).ceil();
        let k_max = ((hi - center) / self.delta_omega).floor();
        let k = ((omega - center) / self.delta_omega).round().clamp(k_min, k_max);
        center + k * self.delta_omega
    }
}

/// Output port of the beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    One,
    Two,
}

impl Channel {
    pub fn index(self) -> usize {
        match self {
            Channel::One => 0,
            Channel::Two => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Channel::One),
            1 => Some(Channel::Two),
            _ => None,
        }
    }

    /// 1-based label used in files.
    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

/// One experimental outcome.
///
/// For a coincidence, `omega_a` is the frequency seen in channel 1 and
/// `omega_b` the one in channel 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectionEvent {
    NoDetection,
    Single { channel: Channel, omega: f64 },
    Bunch { channel: Channel, omega_a: f64, omega_b: f64 },
    Coincidence { omega_a: f64, omega_b: f64 },
}

impl DetectionEvent {
    pub fn frequencies(&self) -> (Option<f64>, Option<f64>) {
        match *self {
            DetectionEvent::NoDetection => (None, None),
            DetectionEvent::Single { omega, .. } => (Some(omega), None),
            DetectionEvent::Bunch { omega_a, omega_b, .. }
            | DetectionEvent::Coincidence { omega_a, omega_b } => (Some(omega_a), Some(omega_b)),
        }
    }

    pub fn channel(&self) -> Option<Channel> {
        match *self {
            DetectionEvent::Single { channel, .. } | DetectionEvent::Bunch { channel, .. } => Some(channel),
            _ => None,
        }
    }

    /// `omega - omega'` for two-photon events.
    pub fn frequency_difference(&self) -> Option<f64> {
        match *self {
            DetectionEvent::Bunch { omega_a, omega_b, .. }
            | DetectionEvent::Coincidence { omega_a, omega_b } => Some(omega_a - omega_b),
            _ => None,
        }
    }

    /// Whether every frequency sits on the grid `center + k*delta_omega`.
    pub fn is_aligned(&self, center: f64, delta_omega: f64) -> bool {
        let on_grid = |w: f64| {
            let k = (w - center) / delta_omega;
            (k - k.round()).abs() < 1e-9 * k.abs().max(1.0)
        };
        let (a, b) = self.frequencies();
        a.is_none_or(on_grid) && b.is_none_or(on_grid)
    }
}

fn pair_weight(cfg: &ExperimentConfig, omega: f64, omega_p: f64) -> f64 {
    let s = &cfg.spectrum;
    cfg.gamma * cfg.gamma * s.density(omega) * s.density(omega_p)
}

fn beat(cfg: &ExperimentConfig, omega: f64, omega_p: f64) -> f64 {
    cfg.eta * cfg.eta * ((omega - omega_p) * cfg.delta_t).cos()
}

/// Density of both photons leaving through the same port.
pub fn prob_bunch_density(cfg: &ExperimentConfig, omega: f64, omega_p: f64) -> f64 {
    pair_weight(cfg, omega, omega_p) * (1.0 + beat(cfg, omega, omega_p))
}

/// Density of the photons leaving through different ports.
pub fn prob_coinc_density(cfg: &ExperimentConfig, omega: f64, omega_p: f64) -> f64 {
    pair_weight(cfg, omega, omega_p) * (1.0 - beat(cfg, omega, omega_p))
}

/// Outcomes in which at least one photon is lost.
#[derive(Debug, Clone, Copy)]
pub struct LossEvents<'a> {
    /// Probability that neither detector clicks, `(1 - gamma)^2`.
    pub p_none: f64,
    gamma: f64,
    spectrum: &'a Spectrum,
}

impl LossEvents<'_> {
    /// Density of a single click at `omega`, summed over both ports.
    pub fn single_density(&self, omega: f64) -> f64 {
        2.0 * self.gamma * (1.0 - self.gamma) * self.spectrum.density(omega)
    }

    /// Total single-click probability.
    pub fn p_single(&self) -> f64 {
        2.0 * self.gamma * (1.0 - self.gamma)
    }
}

/// Photons are lost independently with probability `1 - gamma`.
pub fn prob_loss_events(cfg: &ExperimentConfig) -> LossEvents<'_> {
    LossEvents {
        p_none: (1.0 - cfg.gamma) * (1.0 - cfg.gamma),
        gamma: cfg.gamma,
        spectrum: &cfg.spectrum,
    }
}

/// Bunch and coincidence probabilities with the frequencies ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonResolved {
    pub bunch: f64,
    pub coincidence: f64,
}

/// Overlap `|E[exp(i*omega*dt)]|^2 = E[cos((omega - omega') dt)]` and its
/// derivative in `dt`.
pub(crate) fn overlap(spectrum: &Spectrum, delta_t: f64) -> (f64, f64) {
    match spectrum {
        Spectrum::Gaussian(g) => {
            let s2 = g.sigma() * g.sigma();
            let e = (-delta_t * delta_t * s2).exp();
            (e, -2.0 * delta_t * s2 * e)
        }
        Spectrum::Tabulated(_) => overlap_by_quadrature(spectrum, delta_t),
    }
}

pub(crate) fn overlap_by_quadrature(spectrum: &Spectrum, delta_t: f64) -> (f64, f64) {
    let (phi, dphi) = spectrum.characteristic(delta_t);
    (phi.norm_sqr(), 2.0 * (phi.conj() * dphi).re)
}

fn nonresolved_from_overlap(cfg: &ExperimentConfig, overlap: f64) -> NonResolved {
    let g2 = cfg.gamma * cfg.gamma;
    let e2 = cfg.eta * cfg.eta;
    NonResolved {
        bunch: 0.5 * g2 * (1.0 + e2 * overlap),
        coincidence: 0.5 * g2 * (1.0 - e2 * overlap),
    }
}

/// Closed form for Gaussian spectra, quadrature of the frequency-resolved
/// densities otherwise.
pub fn prob_nonresolved(cfg: &ExperimentConfig) -> NonResolved {
    nonresolved_from_overlap(cfg, overlap(&cfg.spectrum, cfg.delta_t).0)
}

/// Quadrature route for any spectrum kind. The double integral of the
/// beat term over the plane factorises into the squared modulus of the
/// spectrum's characteristic function.
pub fn prob_nonresolved_quadrature(cfg: &ExperimentConfig) -> NonResolved {
    nonresolved_from_overlap(cfg, overlap_by_quadrature(&cfg.spectrum, cfg.delta_t).0)
}

/// One row of the beat profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeatPoint {
    pub delta: f64,
    pub bunch: f64,
    pub coincidence: f64,
}

/// Densities of the frequency difference `delta = omega_a - omega_b` of a
/// bunch or coincidence event, on an even grid spanning `±8·sqrt(2)·sigma`.
/// Their sum is `gamma^2` times the difference density of the spectrum.
pub fn beat_profile(cfg: &ExperimentConfig, n_points: usize) -> Result<Vec<BeatPoint>> {
    if n_points < 2 {
        return Err(Error::InvalidConfig(format!("beat profile needs n_points >= 2, got {n_points}")));
    }
    let half = SUPPORT_HALF_WIDTH * SQRT_2 * cfg.sigma();
    let step = 2.0 * half / (n_points - 1) as f64;
    let g2 = cfg.gamma * cfg.gamma;
    let e2 = cfg.eta * cfg.eta;
    Ok((0..n_points)
        .map(|i| {
            let delta = -half + i as f64 * step;
            let envelope = 0.5 * g2 * cfg.spectrum.difference_density(delta);
            let c = e2 * (delta * cfg.delta_t).cos();
            BeatPoint {
                delta,
                bunch: envelope * (1.0 + c),
                coincidence: envelope * (1.0 - c),
            }
        })
        .collect())
}

/// Visibility `(max - min)/(max + min)` of the beat factor `1 + V cos(delta*dt)`,
/// with `V` fitted by weighted least squares on the bunch/coincidence
/// contrast. Points with negligible envelope are skipped.
pub fn beat_visibility(profile: &[BeatPoint], delta_t: f64) -> f64 {
    let peak = profile
        .iter()
        .map(|p| p.bunch + p.coincidence)
        .fold(0.0, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for p in profile {
        let total = p.bunch + p.coincidence;
        if total <= 1e-12 * peak {
            continue;
        }
        let c = (p.delta * delta_t).cos();
        num += (p.bunch - p.coincidence) * c;
        den += total * c * c;
    }
    if den > 0.0 { num / den } else { 0.0 }
}

/// Whether the configured spectrum is Gaussian.
pub(crate) fn is_gaussian(cfg: &ExperimentConfig) -> bool {
    cfg.spectrum.kind() == SpectrumKind::Gaussian
}
