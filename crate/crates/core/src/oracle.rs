//! Brute-force discrete-mode verifier.
//!
//! The two-photon state is written on a finite frequency grid as a labelled
//! amplitude array `A[x][y]` over single-photon slots `x = (channel, inner
//! mode, bin)`, one index per photon. The physical state is
//! `sum A[x][y] a†_x a†_y |vac>`; detection probabilities are read from the
//! symmetrised amplitudes `A[x][y] + A[y][x]`. Nothing here uses the closed
//! forms of [`crate::interference`] or [`crate::fisher`] except where
//! explicitly comparing against them.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fisher;
use crate::interference::{self, Channel, DetectionEvent, ExperimentConfig};

/// Default number of frequency bins.
pub const DEFAULT_GRID_POINTS: usize = 256;

/// Default central-difference step, in units of the coherence time.
pub const DEFAULT_STEP: f64 = 1e-4;

/// Outcomes below this probability are left out of the FI sum.
const FI_PROBABILITY_FLOOR: f64 = 1e-14;

const CHANNELS: usize = 2;
const MODES: usize = 2;
const MODE_A: usize = 0;
const MODE_B: usize = 1;

/// Beam-splitter transfer matrix `(1/sqrt 2) [[1, -1], [1, 1]]`; row is the
/// input port, column the output port.
pub fn beamsplitter_matrix() -> [[Complex64; 2]; 2] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [
        [Complex64::new(r, 0.0), Complex64::new(-r, 0.0)],
        [Complex64::new(r, 0.0), Complex64::new(r, 0.0)],
    ]
}

/// Two-photon state on a discrete frequency grid.
#[derive(Debug, Clone)]
pub struct DiscreteState {
    grid: Vec<f64>,
    spacing: f64,
    amplitudes: Vec<Complex64>,
}

impl DiscreteState {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    fn bins(&self) -> usize {
        self.grid.len()
    }

    fn slots(&self) -> usize {
        CHANNELS * MODES * self.bins()
    }

    fn slot(&self, channel: usize, mode: usize, bin: usize) -> usize {
        (channel * MODES + mode) * self.bins() + bin
    }

    /// Labelled amplitude with photon 1 in slot `(c1, m1, j)` and photon 2
    /// in `(c2, m2, k)`.
    pub fn amplitude(&self, first: (Channel, usize, usize), second: (Channel, usize, usize)) -> Complex64 {
        let x = self.slot(first.0.index(), first.1, first.2);
        let y = self.slot(second.0.index(), second.1, second.2);
        self.amplitudes[x * self.slots() + y]
    }

    fn at(&self, x: usize, y: usize) -> Complex64 {
        self.amplitudes[x * self.slots() + y]
    }

    /// Fock-space norm `sum_xy conj(A[x][y]) (A[x][y] + A[y][x])`.
    pub fn norm_sqr(&self) -> f64 {
        let n = self.slots();
        let mut total = 0.0;
        for x in 0..n {
            for y in 0..n {
                let a = self.at(x, y);
                total += (a.conj() * (a + self.at(y, x))).re;
            }
        }
        total
    }

    /// Total squared weight on a given inner mode of either photon.
    pub fn mode_weight(&self, photon: usize, mode: usize) -> f64 {
        let n = self.slots();
        let m = self.bins();
        let mut total = 0.0;
        for x in 0..n {
            for y in 0..n {
                let slot = if photon == 0 { x } else { y };
                if (slot / m) % MODES == mode {
                    total += self.at(x, y).norm_sqr();
                }
            }
        }
        total
    }

    /// Applies a 2×2 channel transfer matrix to every creation operator,
    /// `a†_c -> sum_d u[c][d] a†_d`, leaving inner mode and frequency alone.
    pub fn apply_channel_unitary(&self, u: &[[Complex64; 2]; 2]) -> DiscreteState {
        let n = self.slots();
        let half = MODES * self.bins();
        let mut amp = self.amplitudes.clone();
        // First photon index.
        for r in 0..half {
            for y in 0..n {
                let a0 = amp[r * n + y];
                let a1 = amp[(half + r) * n + y];
                amp[r * n + y] = u[0][0] * a0 + u[1][0] * a1;
                amp[(half + r) * n + y] = u[0][1] * a0 + u[1][1] * a1;
            }
        }
        // Second photon index.
        for x in 0..n {
            let row = &mut amp[x * n..(x + 1) * n];
            for r in 0..half {
                let a0 = row[r];
                let a1 = row[half + r];
                row[r] = u[0][0] * a0 + u[1][0] * a1;
                row[half + r] = u[0][1] * a0 + u[1][1] * a1;
            }
        }
        DiscreteState {
            grid: self.grid.clone(),
            spacing: self.spacing,
            amplitudes: amp,
        }
    }

    pub fn apply_beamsplitter(&self) -> DiscreteState {
        self.apply_channel_unitary(&beamsplitter_matrix())
    }

    /// Detection probability of the unordered slot pair `{x, y}`.
    fn pair_probability(&self, x: usize, y: usize) -> f64 {
        if x == y {
            2.0 * self.at(x, x).norm_sqr()
        } else {
            (self.at(x, y) + self.at(y, x)).norm_sqr()
        }
    }

    /// Enumerates every outcome with inner modes traced out, and splits each
    /// photon's detection with efficiency `gamma`.
    pub fn outcome_table(&self, gamma: f64) -> OutcomeTable {
        let m = self.bins();
        let mut bunch = [vec![0.0; m * m], vec![0.0; m * m]];
        let mut coincidence = vec![0.0; m * m];
        let mut occupation = [vec![0.0; m], vec![0.0; m]];

        for (c, table) in bunch.iter_mut().enumerate() {
            for j in 0..m {
                for k in j..m {
                    let p = if j == k {
                        let xa = self.slot(c, MODE_A, j);
                        let xb = self.slot(c, MODE_B, j);
                        self.pair_probability(xa, xa)
                            + self.pair_probability(xb, xb)
                            + self.pair_probability(xa, xb)
                    } else {
                        let mut p = 0.0;
                        for m1 in 0..MODES {
                            for m2 in 0..MODES {
                                p += self.pair_probability(self.slot(c, m1, j), self.slot(c, m2, k));
                            }
                        }
                        p
                    };
                    table[j * m + k] = p;
                    occupation[c][j] += p;
                    occupation[c][k] += p;
                }
            }
        }
        for j in 0..m {
            for k in 0..m {
                let mut p = 0.0;
                for m1 in 0..MODES {
                    for m2 in 0..MODES {
                        p += self.pair_probability(self.slot(0, m1, j), self.slot(1, m2, k));
                    }
                }
                coincidence[j * m + k] = p;
                occupation[0][j] += p;
                occupation[1][k] += p;
            }
        }

        let g2 = gamma * gamma;
        let one_lost = gamma * (1.0 - gamma);
        for t in bunch.iter_mut().chain(std::iter::once(&mut coincidence)) {
            t.iter_mut().for_each(|p| *p *= g2);
        }
        let single = occupation.map(|occ| occ.into_iter().map(|n| n * one_lost).collect());
        OutcomeTable {
            grid: self.grid.clone(),
            spacing: self.spacing,
            bunch,
            coincidence,
            single,
            none: (1.0 - gamma) * (1.0 - gamma),
        }
    }
}

/// Builds the input state at the configured delay on `m` bins spanning the
/// spectrum's support.
pub fn build_state(cfg: &ExperimentConfig, m: usize) -> Result<DiscreteState> {
    build_state_at(cfg, cfg.delta_t(), m)
}

/// As [`build_state`] at an arbitrary delay. Emission times are
/// `-delta_t/2` and `+delta_t/2`.
pub fn build_state_at(cfg: &ExperimentConfig, delta_t: f64, m: usize) -> Result<DiscreteState> {
    if m < 8 {
        return Err(Error::InvalidConfig(format!("oracle grid needs at least 8 bins, got {m}")));
    }
    let (lo, hi) = cfg.spectrum().support();
    let spacing = (hi - lo) / m as f64;
    if delta_t != 0.0 {
        let limit = std::f64::consts::PI / (8.0 * delta_t.abs());
        if spacing > limit {
            return Err(Error::GridTooCoarse { spacing, limit });
        }
    }
    let grid: Vec<f64> = (0..m).map(|j| lo + (j as f64 + 0.5) * spacing).collect();
    let weights: Vec<f64> = grid.iter().map(|&w| cfg.spectrum().density(w) * spacing).collect();
    let total: f64 = weights.iter().sum();
    let (t1, t2) = (-0.5 * delta_t, 0.5 * delta_t);
    let mag: Vec<f64> = weights.iter().map(|w| (w / total).sqrt()).collect();
    let photon1: Vec<Complex64> = grid.iter().zip(&mag).map(|(&w, &f)| Complex64::from_polar(f, -w * t1)).collect();
    let photon2: Vec<Complex64> = grid.iter().zip(&mag).map(|(&w, &f)| Complex64::from_polar(f, -w * t2)).collect();

    let mut state = DiscreteState {
        grid,
        spacing,
        amplitudes: Vec::new(),
    };
    let n = state.slots();
    let mut amp = vec![Complex64::new(0.0, 0.0); n * n];
    let eta = cfg.eta();
    let eta_b = (1.0 - eta * eta).max(0.0).sqrt();
    for (j, &a1) in photon1.iter().enumerate() {
        for (k, &a2) in photon2.iter().enumerate() {
            let base = a1 * a2;
            let y = state.slot(1, MODE_A, k);
            amp[state.slot(0, MODE_A, j) * n + y] = base * eta;
            amp[state.slot(0, MODE_B, j) * n + y] = base * eta_b;
        }
    }
    state.amplitudes = amp;
    Ok(state)
}

/// Every outcome probability of one configuration on the oracle grid.
///
/// `bunch[c][j*m + k]` (with `j <= k`) is both photons in channel `c` at
/// bins `j`, `k`; `coincidence[j*m + k]` is bin `j` in channel 1 and bin `k`
/// in channel 2.
#[derive(Debug, Clone)]
pub struct OutcomeTable {
    pub grid: Vec<f64>,
    pub spacing: f64,
    pub bunch: [Vec<f64>; 2],
    pub coincidence: Vec<f64>,
    pub single: [Vec<f64>; 2],
    pub none: f64,
}

impl OutcomeTable {
    fn m(&self) -> usize {
        self.grid.len()
    }

    /// All probabilities in a fixed order (independent of the delay).
    fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        let m = self.m();
        self.bunch
            .iter()
            .flat_map(move |t| (0..m).flat_map(move |j| (j..m).map(move |k| t[j * m + k])))
            .chain(self.coincidence.iter().copied())
            .chain(self.single.iter().flatten().copied())
            .chain(std::iter::once(self.none))
    }

    pub fn total(&self) -> f64 {
        self.flat().sum()
    }

    pub fn bunch_total(&self) -> f64 {
        self.bunch.iter().flatten().sum()
    }

    pub fn bunch_total_in(&self, channel: Channel) -> f64 {
        self.bunch[channel.index()].iter().sum()
    }

    pub fn coincidence_total(&self) -> f64 {
        self.coincidence.iter().sum()
    }

    /// Outcomes as detection events, bin centres standing in for frequencies.
    pub fn events(&self) -> Vec<(DetectionEvent, f64)> {
        let m = self.m();
        let g = &self.grid;
        let mut out = Vec::with_capacity(2 * m * m + 2 * m + 1);
        out.push((DetectionEvent::NoDetection, self.none));
        for (c, s) in self.single.iter().enumerate() {
            let channel = Channel::from_index(c).unwrap();
            for j in 0..m {
                out.push((DetectionEvent::Single { channel, omega: g[j] }, s[j]));
            }
        }
        for (c, t) in self.bunch.iter().enumerate() {
            let channel = Channel::from_index(c).unwrap();
            for j in 0..m {
                for k in j..m {
                    out.push((
                        DetectionEvent::Bunch { channel, omega_a: g[j], omega_b: g[k] },
                        t[j * m + k],
                    ));
                }
            }
        }
        for j in 0..m {
            for k in 0..m {
                out.push((
                    DetectionEvent::Coincidence { omega_a: g[j], omega_b: g[k] },
                    self.coincidence[j * m + k],
                ));
            }
        }
        out
    }

    /// Largest absolute gap between these bin probabilities and the
    /// closed-form densities times the squared bin width.
    ///
    /// The densities cover ordered frequency pairs: an unordered bunch pair
    /// off the diagonal collects the full density, a diagonal bin half of
    /// it, and an ordered coincidence (channel 1, channel 2) half of it.
    pub fn max_abs_density_error(&self, cfg: &ExperimentConfig) -> f64 {
        let m = self.m();
        let h2 = self.spacing * self.spacing;
        let g = &self.grid;
        let mut worst: f64 = 0.0;
        for j in 0..m {
            for k in j..m {
                let expect = interference::prob_bunch_density(cfg, g[j], g[k]) * h2 * if j == k { 0.5 } else { 1.0 };
                let got = self.bunch[0][j * m + k] + self.bunch[1][j * m + k];
                worst = worst.max((got - expect).abs());
            }
            for k in 0..m {
                let expect = 0.5 * interference::prob_coinc_density(cfg, g[j], g[k]) * h2;
                worst = worst.max((self.coincidence[j * m + k] - expect).abs());
            }
        }
        worst
    }
}

/// Finite-difference Fisher information over the full outcome table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteDifferenceFi {
    pub fi: f64,
    /// Probability mass of outcomes skipped for being below the floor.
    pub excluded_mass: f64,
}

fn table_at(cfg: &ExperimentConfig, delta_t: f64, m: usize) -> Result<OutcomeTable> {
    Ok(build_state_at(cfg, delta_t, m)?
        .apply_beamsplitter()
        .outcome_table(cfg.gamma()))
}

/// `sum_X (dP/d dt)^2 / P` with central differences of step `h`.
pub fn fi_finite_difference(cfg: &ExperimentConfig, m: usize, h: f64) -> Result<FiniteDifferenceFi> {
    let limit = 1e-3 / cfg.sigma();
    if !(h > 0.0 && h <= limit) {
        return Err(Error::StepTooLarge { step: h, limit });
    }
    let dt = cfg.delta_t();
    let center = table_at(cfg, dt, m)?;
    let up: Vec<f64> = table_at(cfg, dt + h, m)?.flat().collect();
    let down: Vec<f64> = table_at(cfg, dt - h, m)?.flat().collect();
    let mut fi = 0.0;
    let mut excluded_mass = 0.0;
    for ((p, u), d) in center.flat().zip(up).zip(down) {
        if p < FI_PROBABILITY_FLOOR {
            excluded_mass += p;
            continue;
        }
        let dp = (u - d) / (2.0 * h);
        fi += dp * dp / p;
    }
    Ok(FiniteDifferenceFi { fi, excluded_mass })
}

/// Summary printed by the `oracle-check` command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleReport {
    pub max_abs_density_error: f64,
    pub fi_quadrature: f64,
    pub fi_finite_difference: f64,
    pub rel_error: f64,
}

pub fn oracle_check(cfg: &ExperimentConfig, m: usize, h: f64) -> Result<OracleReport> {
    let table = build_state(cfg, m)?.apply_beamsplitter().outcome_table(cfg.gamma());
    let max_abs_density_error = table.max_abs_density_error(cfg);
    let fi_quadrature = fisher::fi_resolved(cfg)?;
    let fd = fi_finite_difference(cfg, m, h)?;
    let rel_error = if fi_quadrature > 0.0 {
        (fd.fi - fi_quadrature).abs() / fi_quadrature
    } else {
        fd.fi.abs()
    };
    Ok(OracleReport {
        max_abs_density_error,
        fi_quadrature,
        fi_finite_difference: fd.fi,
        rel_error,
    })
}
