//! Monte Carlo detection events and maximum-likelihood delay estimation.
//!
//! The likelihood depends on the delay only through `cos(delta * dt)`, so
//! `dt` and `-dt` are indistinguishable and the estimator reports `|dt|`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fisher;
use crate::interference::{BeatPoint, Channel, DetectionEvent, ExperimentConfig};
use crate::spectrum::SUPPORT_HALF_WIDTH;

/// Log-likelihood terms are floored at `ln(1e-300)`.
const LOG_FLOOR: f64 = -690.775_527_898_213_7;

/// Grid steps between exact re-evaluations of the cosine recurrence.
const RESYNC: usize = 64;

/// Number of grid maxima handed to the golden-section refinement.
const REFINE_CANDIDATES: usize = 3;

/// Sampled events together with what produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct EventDataset {
    pub config: ExperimentConfig,
    pub seed: u64,
    /// Random stream within `seed`; trial index for repeated experiments.
    pub stream: u64,
    pub events: Vec<DetectionEvent>,
}

impl EventDataset {
    /// Wraps externally supplied events.
    pub fn from_events(config: ExperimentConfig, events: Vec<DetectionEvent>) -> Self {
        Self {
            config,
            seed: 0,
            stream: 0,
            events,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Number of events with both photons detected.
    pub fn detected_pairs(&self) -> usize {
        self.events.iter().filter(|e| e.frequency_difference().is_some()).count()
    }
}

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sample_one<R: Rng>(cfg: &ExperimentConfig, rng: &mut R) -> DetectionEvent {
    let spectrum = cfg.spectrum();
    let w1 = spectrum.sample_frequency(rng);
    let w2 = spectrum.sample_frequency(rng);
    let e2 = cfg.eta() * cfg.eta();
    let p_bunch = 0.5 * (1.0 + e2 * ((w1 - w2) * cfg.delta_t()).cos());
    let bunch = rng.random::<f64>() < p_bunch;
    let channel = if rng.random::<bool>() { Channel::One } else { Channel::Two };
    let kept1 = rng.random::<f64>() < cfg.gamma();
    let kept2 = rng.random::<f64>() < cfg.gamma();
    let (w1, w2) = (cfg.bin_frequency(w1), cfg.bin_frequency(w2));

    // Output channel of each photon.
    let (c1, c2) = if bunch { (channel, channel) } else { (Channel::One, Channel::Two) };
    match (kept1, kept2) {
        (true, true) if bunch => DetectionEvent::Bunch { channel, omega_a: w1, omega_b: w2 },
        (true, true) => DetectionEvent::Coincidence { omega_a: w1, omega_b: w2 },
        (true, false) => DetectionEvent::Single { channel: c1, omega: w1 },
        (false, true) => DetectionEvent::Single { channel: c2, omega: w2 },
        (false, false) => DetectionEvent::NoDetection,
    }
}

/// Draws `n` independent repetitions of the experiment.
pub fn sample_events(cfg: &ExperimentConfig, n: usize, seed: u64) -> EventDataset {
    sample_events_stream(cfg, n, seed, 0)
}

/// As [`sample_events`] on an explicit random stream of `seed`.
pub fn sample_events_stream(cfg: &ExperimentConfig, n: usize, seed: u64, stream: u64) -> EventDataset {
    let mut rng = trial_rng(seed, stream);
    let events = (0..n).map(|_| sample_one(cfg, &mut rng)).collect();
    EventDataset {
        config: cfg.clone(),
        seed,
        stream,
        events,
    }
}

/// Two-photon events reduced to distinct `(delta, sign)` pairs with counts.
/// Sign is `+1` for bunching and `-1` for coincidence.
#[derive(Debug, Clone)]
struct Terms {
    eta2: f64,
    delta: Vec<f64>,
    sign: Vec<f64>,
    count: Vec<f64>,
}

impl Terms {
    fn new(data: &EventDataset) -> Self {
        let mut raw: Vec<(f64, i8)> = data
            .events
            .iter()
            .filter_map(|e| match *e {
                DetectionEvent::Bunch { omega_a, omega_b, .. } => Some(((omega_a - omega_b).abs(), 1)),
                DetectionEvent::Coincidence { omega_a, omega_b } => Some(((omega_a - omega_b).abs(), -1)),
                _ => None,
            })
            .collect();
        raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut t = Terms {
            eta2: data.config.eta() * data.config.eta(),
            delta: Vec::new(),
            sign: Vec::new(),
            count: Vec::new(),
        };
        for (d, s) in raw {
            let s = f64::from(s);
            if t.delta.last() == Some(&d) && t.sign.last() == Some(&s) {
                *t.count.last_mut().unwrap() += 1.0;
            } else {
                t.delta.push(d);
                t.sign.push(s);
                t.count.push(1.0);
            }
        }
        t
    }

    /// Events whose term actually varies with the delay.
    fn informative(&self) -> usize {
        if self.eta2 == 0.0 {
            return 0;
        }
        self.delta
            .iter()
            .zip(&self.count)
            .filter(|(d, _)| **d != 0.0)
            .map(|(_, c)| *c as usize)
            .sum()
    }

    fn term(&self, i: usize, cos: f64, clamped: &mut usize) -> f64 {
        let arg = 1.0 + self.sign[i] * self.eta2 * cos;
        if arg > 0.0 {
            arg.ln() * self.count[i]
        } else {
            *clamped += self.count[i] as usize;
            LOG_FLOOR * self.count[i]
        }
    }

    fn evaluate(&self, delta_t: f64) -> LogLikelihood {
        let mut clamped = 0;
        let mut value = 0.0;
        if self.eta2 > 0.0 {
            for i in 0..self.delta.len() {
                value += self.term(i, (self.delta[i] * delta_t).cos(), &mut clamped);
            }
        }
        LogLikelihood { value, clamped }
    }

    /// Log-likelihood on `t_k = k*step`, `k = 0..n`, by rotating each
    /// event's phase instead of calling `cos` at every node.
    fn evaluate_grid(&self, step: f64, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        if self.eta2 == 0.0 {
            return out;
        }
        let mut clamped = 0;
        for i in 0..self.delta.len() {
            let d = self.delta[i];
            let (rs, rc) = (d * step).sin_cos();
            let (mut s, mut c) = (0.0, 1.0);
            for (k, slot) in out.iter_mut().enumerate() {
                if k % RESYNC == 0 {
                    (s, c) = (d * step * k as f64).sin_cos();
                }
                *slot += self.term(i, c, &mut clamped);
                (s, c) = (s * rc + c * rs, c * rc - s * rs);
            }
        }
        out
    }
}

/// Log-likelihood value with the number of floored terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikelihood {
    pub value: f64,
    pub clamped: usize,
}

/// Delay-dependent part of the dataset log-likelihood.
pub fn log_likelihood(data: &EventDataset, delta_t: f64) -> f64 {
    log_likelihood_with_diagnostics(data, delta_t).value
}

pub fn log_likelihood_with_diagnostics(data: &EventDataset, delta_t: f64) -> LogLikelihood {
    Terms::new(data).evaluate(delta_t)
}

/// Outcome of [`mle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateResult {
    /// Estimate of `|dt|`.
    pub delta_t_hat: f64,
    pub log_likelihood: f64,
    pub n_informative: usize,
    /// `1/sqrt(n_informative * F)` with the per-pair Fisher information
    /// evaluated at the estimate.
    pub stderr_crb: f64,
    /// Log terms floored at the estimate.
    pub clamped: usize,
}

/// Search range used when none is given: twice the configured delay plus
/// five coherence times.
pub fn default_search_max(cfg: &ExperimentConfig) -> f64 {
    2.0 * cfg.delta_t().abs() + 5.0 / cfg.sigma()
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 { (x1, f1) } else { (x2, f2) }
}

/// Maximum-likelihood estimate of `|dt|` over `[0, search_max]`.
///
/// A grid fine enough to resolve the narrowest beat seeds a golden-section
/// refinement of the best few grid maxima.
pub fn mle(data: &EventDataset, search_max: f64) -> Result<EstimateResult> {
    if !(search_max.is_finite() && search_max > 0.0) {
        return Err(Error::InvalidConfig(format!("search_max must be positive, got {search_max}")));
    }
    let terms = Terms::new(data);
    let n_informative = terms.informative();
    if n_informative == 0 {
        return Err(Error::Unidentifiable(
            "no two-photon event depends on the delay".to_string(),
        ));
    }
    let cfg = &data.config;
    let width = 2.0 * SUPPORT_HALF_WIDTH * cfg.sigma();
    let max_step = PI / (10.0 * width);
    let intervals = (search_max / max_step).ceil().max(1.0) as usize;
    let step = search_max / intervals as f64;
    let grid = terms.evaluate_grid(step, intervals + 1);

    let mut peaks: Vec<usize> = (0..grid.len())
        .filter(|&k| (k == 0 || grid[k] >= grid[k - 1]) && (k + 1 == grid.len() || grid[k] >= grid[k + 1]))
        .collect();
    peaks.sort_by(|&a, &b| grid[b].total_cmp(&grid[a]));
    peaks.truncate(REFINE_CANDIDATES);

    let f = |t: f64| terms.evaluate(t).value;
    let tol = 1e-10 * search_max;
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in peaks {
        let lo = (k as f64 - 1.0).max(0.0) * step;
        let hi = ((k + 1) as f64 * step).min(search_max);
        let mut candidate = golden_section(f, lo, hi, tol);
        // Endpoints are not visited by the bracket itself.
        for edge in [lo, hi] {
            let v = f(edge);
            if v > candidate.1 {
                candidate = (edge, v);
            }
        }
        if candidate.1 > best.1 {
            best = candidate;
        }
    }

    let (delta_t_hat, _) = best;
    let at = terms.evaluate(delta_t_hat);
    let fi_pair = per_pair_fi(cfg, delta_t_hat)?;
    let stderr_crb = 1.0 / (n_informative as f64 * fi_pair).sqrt();
    Ok(EstimateResult {
        delta_t_hat,
        log_likelihood: at.value,
        n_informative,
        stderr_crb,
        clamped: at.clamped,
    })
}

/// Fisher information per detected photon pair.
fn per_pair_fi(cfg: &ExperimentConfig, delta_t: f64) -> Result<f64> {
    let g2 = cfg.gamma() * cfg.gamma();
    Ok(fisher::fi_resolved_at(cfg, delta_t)? / g2)
}

/// Spread of repeated estimates against the Cramér–Rao bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrbReport {
    pub empirical_variance: f64,
    pub crb: f64,
    pub ratio: f64,
    pub bias: f64,
    pub n_trials: usize,
    /// Estimates in trial order.
    #[serde(skip)]
    pub estimates: Vec<f64>,
}

/// Repeats sampling and estimation `n_trials` times with the default search
/// range.
pub fn crb_validation(cfg: &ExperimentConfig, n_events: usize, n_trials: usize, seed: u64) -> Result<CrbReport> {
    crb_validation_with(cfg, n_events, n_trials, seed, default_search_max(cfg))
}

/// Trial `i` uses stream `i` of `seed`, so the report does not depend on
/// how trials are scheduled across threads.
pub fn crb_validation_with(
    cfg: &ExperimentConfig,
    n_events: usize,
    n_trials: usize,
    seed: u64,
    search_max: f64,
) -> Result<CrbReport> {
    if n_trials < 50 {
        return Err(Error::InvalidConfig(format!("crb validation needs at least 50 trials, got {n_trials}")));
    }
    let trials: Vec<(f64, usize)> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let data = sample_events_stream(cfg, n_events, seed, i as u64);
            let est = mle(&data, search_max)?;
            Ok((est.delta_t_hat, data.detected_pairs()))
        })
        .collect::<Result<_>>()?;

    let n = n_trials as f64;
    let mean = trials.iter().map(|t| t.0).sum::<f64>() / n;
    let empirical_variance = trials.iter().map(|t| (t.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let mean_pairs = trials.iter().map(|t| t.1 as f64).sum::<f64>() / n;
    let crb = 1.0 / (mean_pairs * per_pair_fi(cfg, cfg.delta_t())?);
    Ok(CrbReport {
        empirical_variance,
        crb,
        ratio: empirical_variance / crb,
        bias: mean - cfg.delta_t().abs(),
        n_trials,
        estimates: trials.into_iter().map(|t| t.0).collect(),
    })
}

/// Histogram of bunch and coincidence counts against `delta = omega_a -
/// omega_b` over `±8·sqrt(2)·sigma`, as densities per event.
///
/// Binned frequencies put `delta` on multiples of the resolution, so each
/// histogram bin spans `steps` resolution steps and is centred on a lattice
/// point; bins out of step with the lattice bias the fitted visibility.
pub fn sampled_beat_profile(data: &EventDataset, steps: usize) -> Vec<BeatPoint> {
    let half = SUPPORT_HALF_WIDTH * std::f64::consts::SQRT_2 * data.config.sigma();
    let width = steps.max(1) as f64 * data.config.delta_omega();
    let reach = (half / width).ceil() as i64;
    let n_bins = (2 * reach + 1) as usize;
    let mut bunch = vec![0.0; n_bins];
    let mut coinc = vec![0.0; n_bins];
    for e in &data.events {
        let (target, d) = match *e {
            DetectionEvent::Bunch { omega_a, omega_b, .. } => (&mut bunch, omega_a - omega_b),
            DetectionEvent::Coincidence { omega_a, omega_b } => (&mut coinc, omega_a - omega_b),
            _ => continue,
        };
        let k = (d / width).round() as i64 + reach;
        if (0..n_bins as i64).contains(&k) {
            target[k as usize] += 1.0;
        }
    }
    let norm = 1.0 / (data.len().max(1) as f64 * width);
    (0..n_bins)
        .map(|k| BeatPoint {
            delta: (k as i64 - reach) as f64 * width,
            bunch: bunch[k] * norm,
            coincidence: coinc[k] * norm,
        })
        .collect()
}
