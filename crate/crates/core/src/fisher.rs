//! Fisher information for delay estimation.
//!
//! Every quantity is per repetition of the experiment and in units of
//! inverse time squared. Loss events carry no delay dependence and
//! contribute nothing; only bunch and coincidence outcomes enter.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interference::{self, ExperimentConfig};
use crate::quadrature::{composite_nodes, integrate, QuadOptions};
use crate::spectrum::{Spectrum, SUPPORT_HALF_WIDTH};

/// Relative accuracy requested from the resolved-FI quadrature.
pub const FI_REL_TOL: f64 = 1e-7;

const FI_MAX_PANELS: usize = 200_000;

/// Beat factor of the resolved Fisher information,
/// `sin^2 x / (1 - eta^4 cos^2 x)`.
///
/// The denominator is evaluated as `sin^2 x + (1 - eta^4) cos^2 x`, which
/// has no cancellation near `x = k*pi`. At `eta = 1` the function is
/// identically one, including the removable singular points.
pub fn zeta(eta: f64, x: f64) -> f64 {
    let one_minus = 1.0 - eta.powi(4);
    if one_minus <= 0.0 {
        return 1.0;
    }
    let (s, c) = x.sin_cos();
    let s2 = s * s;
    s2 / (s2 + one_minus * c * c)
}

/// Average of [`zeta`] over one period, `(1 - sqrt(1 - eta^4)) / eta^4`,
/// written as `1 / (1 + sqrt(1 - eta^4))` so that small `eta` is exact.
pub fn zeta_period_average(eta: f64) -> f64 {
    let u = eta.powi(4).min(1.0);
    1.0 / (1.0 + (1.0 - u).sqrt())
}

/// Frequency-resolved Fisher information of the configured experiment.
pub fn fi_resolved(cfg: &ExperimentConfig) -> Result<f64> {
    fi_resolved_at(cfg, cfg.delta_t())
}

/// Frequency-resolved Fisher information at an arbitrary delay, keeping
/// every other parameter of `cfg`.
pub fn fi_resolved_at(cfg: &ExperimentConfig, delta_t: f64) -> Result<f64> {
    let eta = cfg.eta();
    let eta4 = eta.powi(4);
    if eta4 == 0.0 {
        return Ok(0.0);
    }
    let sigma = cfg.sigma();
    let period_width = if delta_t != 0.0 {
        PI / (4.0 * delta_t.abs())
    } else {
        f64::INFINITY
    };
    let opts = QuadOptions {
        max_panel_width: period_width.min(0.5 * sigma),
        rel_tol: FI_REL_TOL,
        abs_tol: 1e-300,
        max_panels: FI_MAX_PANELS,
    };
    let spectrum = cfg.spectrum();
    // The integrand is even in delta; integrate the positive half-line.
    let integral = match spectrum {
        Spectrum::Gaussian(_) => {
            let s2 = sigma * sigma;
            let reach = SUPPORT_HALF_WIDTH * SQRT_2 * sigma;
            let r = integrate(
                |d: f64| (-d * d / (4.0 * s2)).exp() * d * d * zeta(eta, d * delta_t),
                0.0,
                reach,
                &opts,
            )?;
            2.0 * r.value / (4.0 * PI * s2).sqrt()
        }
        Spectrum::Tabulated(_) => {
            let reach = spectrum.difference_range();
            let r = integrate(
                |d: f64| spectrum.difference_density(d) * d * d * zeta(eta, d * delta_t),
                0.0,
                reach,
                &opts,
            )?;
            2.0 * r.value
        }
    };
    let g2 = cfg.gamma() * cfg.gamma();
    Ok(eta4 * g2 * integral)
}

/// Fisher information for fully indistinguishable photons, `2 gamma^2 sigma^2`.
pub fn fi_eta1(cfg: &ExperimentConfig) -> f64 {
    let g2 = cfg.gamma() * cfg.gamma();
    2.0 * g2 * cfg.spectrum().moments().variance
}

/// Fisher information when only bunch/coincidence is recorded.
pub fn fi_nonresolved(cfg: &ExperimentConfig) -> f64 {
    fi_nonresolved_at(cfg, cfg.delta_t())
}

pub fn fi_nonresolved_at(cfg: &ExperimentConfig, delta_t: f64) -> f64 {
    let eta4 = cfg.eta().powi(4);
    if delta_t == 0.0 || eta4 == 0.0 {
        return 0.0;
    }
    let g2 = cfg.gamma() * cfg.gamma();
    if interference::is_gaussian(cfg) {
        let s2 = cfg.sigma() * cfg.sigma();
        let x = delta_t * delta_t * s2;
        // exp(2x) - eta^4 without cancellation as x -> 0 at eta = 1.
        let denom = (2.0 * x).exp_m1() + (1.0 - eta4);
        if !denom.is_finite() {
            return 0.0;
        }
        4.0 * g2 * eta4 * x * s2 / denom
    } else {
        let (c, dc) = interference::overlap(cfg.spectrum(), delta_t);
        let e2 = cfg.eta() * cfg.eta();
        let p_b = 0.5 * g2 * (1.0 + e2 * c);
        let p_c = 0.5 * g2 * (1.0 - e2 * c);
        let dp = 0.5 * g2 * e2 * dc;
        let term = |p: f64| if p > 0.0 { dp * dp / p } else { 0.0 };
        term(p_b) + term(p_c)
    }
}

/// Long-delay limit `2 (1 - sqrt(1 - eta^4)) gamma^2 sigma^2`.
pub fn fi_large_delay(eta: f64, gamma: f64, sigma: f64) -> f64 {
    let eta4 = eta.powi(4).min(1.0);
    let factor = eta4 / (1.0 + (1.0 - eta4).sqrt());
    2.0 * factor * gamma * gamma * sigma * sigma
}

/// Quantum Fisher information for the delay, `2 sigma^2`.
pub fn qfi(spectrum: &Spectrum) -> f64 {
    2.0 * spectrum.moments().variance
}

/// Quantum Fisher information matrix for (delay, total emission time).
pub fn qfim(spectrum: &Spectrum) -> [[f64; 2]; 2] {
    let h = qfi(spectrum);
    [[h, 0.0], [0.0, h]]
}

/// Scalar products of the probe state and its parameter derivatives,
/// computed by two-dimensional quadrature, and the matrix built from them.
///
/// Index 0 is the delay, index 1 the total emission time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfimQuadrature {
    pub norm: f64,
    /// `<d_i psi | d_j psi>`.
    pub derivative_products: [[Complex64; 2]; 2],
    /// `<psi | d_i psi>`.
    pub state_derivative: [Complex64; 2],
    pub qfim: [[f64; 2]; 2],
}

pub fn qfim_by_quadrature(spectrum: &Spectrum) -> QfimQuadrature {
    let (lo, hi) = spectrum.support();
    let nodes: Vec<(f64, f64)> = composite_nodes(lo, hi, 0.25 * spectrum.sigma())
        .into_iter()
        .map(|(w, wt)| (w, wt * spectrum.density(w)))
        .collect();

    // The delay and emission-time phases cancel between bra and ket, as does
    // the inner-mode factor eta^2 + (1 - eta^2).
    let mut norm = 0.0;
    let mut dd = [[0.0f64; 2]; 2];
    let mut sd = [0.0f64; 2];
    for &(w1, p1) in &nodes {
        for &(w2, p2) in &nodes {
            let p = p1 * p2;
            let k = [w1 - w2, w1 + w2];
            norm += p;
            for i in 0..2 {
                sd[i] += p * k[i];
                for j in 0..2 {
                    dd[i][j] += p * k[i] * k[j];
                }
            }
        }
    }
    let derivative_products = dd.map(|row| row.map(|v| Complex64::new(0.25 * v, 0.0)));
    let state_derivative = sd.map(|v| Complex64::new(0.0, -0.5 * v));
    let mut qfim = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let v = derivative_products[i][j] - state_derivative[i].conj() * state_derivative[j];
            qfim[i][j] = 4.0 * v.re;
        }
    }
    QfimQuadrature {
        norm,
        derivative_products,
        state_derivative,
        qfim,
    }
}

/// Cramér–Rao bound `1 / (n * fi)`; infinite when there is no information.
pub fn crb(fi: f64, n: u64) -> f64 {
    if fi <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / (n as f64 * fi)
    }
}

/// Fisher information from every route, with the derived bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherReport {
    pub fi_resolved: f64,
    pub fi_eta1: f64,
    pub fi_nonresolved: f64,
    pub fi_large_delay: f64,
    pub qfi: f64,
    pub crb_resolved: f64,
    pub crb_nonresolved: f64,
    pub qcrb: f64,
    pub n_repetitions: u64,
}

pub fn fisher_report(cfg: &ExperimentConfig, n_repetitions: u64) -> Result<FisherReport> {
    if n_repetitions == 0 {
        return Err(Error::InvalidConfig("n_repetitions must be at least 1".into()));
    }
    let fi_resolved = fi_resolved(cfg)?;
    let fi_nonresolved = fi_nonresolved(cfg);
    let qfi = qfi(cfg.spectrum());
    Ok(FisherReport {
        fi_resolved,
        fi_eta1: fi_eta1(cfg),
        fi_nonresolved,
        fi_large_delay: fi_large_delay(cfg.eta(), cfg.gamma(), cfg.sigma()),
        qfi,
        crb_resolved: crb(fi_resolved, n_repetitions),
        crb_nonresolved: crb(fi_nonresolved, n_repetitions),
        qcrb: crb(qfi, n_repetitions),
        n_repetitions,
    })
}

/// Parameter varied by [`fisher_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanAxis {
    DeltaT,
    /// Spectral variance; needs a Gaussian template.
    SigmaSq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub axis_value: f64,
    pub report: Result<FisherReport>,
}

/// Evaluates [`fisher_report`] along one axis. Points are computed in
/// parallel and returned in grid order; a failing point does not abort
/// the others.
pub fn fisher_scan(
    template: &ExperimentConfig,
    axis: ScanAxis,
    grid: &[f64],
    n_repetitions: u64,
) -> Result<Vec<ScanPoint>> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("scan grid is empty".into()));
    }
    if axis == ScanAxis::SigmaSq && !interference::is_gaussian(template) {
        return Err(Error::InvalidConfig("a variance scan needs a Gaussian spectrum".into()));
    }
    Ok(grid
        .par_iter()
        .map(|&v| {
            let cfg = match axis {
                ScanAxis::DeltaT => template.with_delta_t(v),
                ScanAxis::SigmaSq => {
                    if v > 0.0 {
                        Spectrum::gaussian(template.spectrum().center(), v.sqrt())
                            .and_then(|s| template.with_spectrum(s))
                    } else {
                        Err(Error::InvalidConfig(format!("variance must be positive, got {v}")))
                    }
                }
            };
            ScanPoint {
                axis_value: v,
                report: cfg.and_then(|c| fisher_report(&c, n_repetitions)),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(delta_t: f64, eta: f64, gamma: f64, sigma: f64) -> ExperimentConfig {
        ExperimentConfig::new(delta_t, eta, gamma, Spectrum::gaussian(0.0, sigma).unwrap()).unwrap()
    }

    /// Trapezoidal average of zeta over one period (periodic integrand, so
    /// the rule is spectrally accurate).
    fn numeric_average(eta: f64, nodes: usize) -> f64 {
        let h = PI / nodes as f64;
        (0..nodes).map(|i| zeta(eta, i as f64 * h)).sum::<f64>() / nodes as f64
    }

    #[test]
    fn zeta_values() {
        for k in -2..=2 {
            assert!(zeta(0.75, k as f64 * PI).abs() < 1e-30);
        }
        assert!((zeta(0.75, PI / 2.0) - 1.0).abs() < 1e-15);
        assert_eq!(zeta(1.0, 0.3), 1.0);
        assert_eq!(zeta(1.0, PI), 1.0);
        assert_eq!(zeta(1.0, 0.0), 1.0);
    }

    #[test]
    fn zeta_average_closed_form() {
        assert_eq!(zeta_period_average(1.0), 1.0);
        assert!((zeta_period_average(1e-4) - 0.5).abs() < 1e-6);
        assert_eq!(zeta_period_average(0.0), 0.5);
        assert!((zeta_period_average(0.75) - numeric_average(0.75, 10_000)).abs() < 1e-8);
        let e4: f64 = 0.75f64.powi(4);
        assert!((zeta_period_average(0.75) - (1.0 - (1.0 - e4).sqrt()) / e4).abs() < 1e-15);
    }

    #[test]
    fn resolved_fi_at_eta_one_is_two_sigma_squared() {
        for sigma in [0.5, 1.0, 2.5] {
            for dt in [0.0, 0.3, 1.0, 7.0] {
                let f = fi_resolved(&cfg(dt, 1.0, 1.0, sigma)).unwrap();
                assert!((f / (2.0 * sigma * sigma) - 1.0).abs() < 1e-6, "{sigma} {dt} {f}");
            }
        }
        assert_eq!(fi_resolved(&cfg(1.0, 0.0, 1.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn resolved_fi_tends_to_large_delay_limit() {
        let f = fi_resolved(&cfg(10.0, 0.75, 1.0, 1.0)).unwrap();
        let lim = fi_large_delay(0.75, 1.0, 1.0);
        assert!((f / lim - 1.0).abs() < 5e-3);
    }

    #[test]
    fn resolved_fi_small_delay_series() {
        // zeta(x) ~ x^2/(1 - eta^4) for small x, and E[delta^4] = 12 sigma^4.
        let (eta, dt) = (0.6, 1e-3);
        let f = fi_resolved(&cfg(dt, eta, 1.0, 1.0)).unwrap();
        let e4: f64 = eta.powi(4);
        let series = e4 * 12.0 * dt * dt / (1.0 - e4);
        assert!((f / series - 1.0).abs() < 1e-4, "{f} vs {series}");
    }

    #[test]
    fn eta1_values() {
        assert_eq!(fi_eta1(&cfg(1.0, 1.0, 1.0, 1.0)), 2.0);
        assert_eq!(fi_eta1(&cfg(0.1, 0.3, 1.0, 2.5)), 12.5);
        assert_eq!(fi_eta1(&cfg(1.0, 1.0, 0.5, 1.0)), 0.5);
        let c = cfg(0.7, 1.0, 0.5, 1.0);
        assert!((fi_resolved(&c).unwrap() - fi_eta1(&c)).abs() < 1e-9);
    }

    #[test]
    fn nonresolved_values() {
        assert_eq!(fi_nonresolved(&cfg(0.0, 1.0, 1.0, 1.0)), 0.0);
        let f = fi_nonresolved(&cfg(1e-3, 1.0, 0.8, 1.0));
        assert!((f / (2.0 * 0.64) - 1.0).abs() < 1e-5);
        let f = fi_nonresolved(&cfg(5.0, 1.0, 1.0, 1.0));
        let expect = 100.0 / (50f64.exp() - 1.0);
        assert!((f - expect).abs() < 1e-30 && f < 1e-18);
        assert_eq!(fi_nonresolved(&cfg(100.0, 0.5, 1.0, 1.0)), 0.0);
    }

    #[test]
    fn nonresolved_matches_numerical_derivative() {
        let c = cfg(0.8, 0.7, 0.9, 1.2);
        let h = 1e-5;
        let pb = |dt: f64| interference::prob_nonresolved(&c.with_delta_t(dt).unwrap());
        let (p, up, dn) = (pb(0.8), pb(0.8 + h), pb(0.8 - h));
        let db = (up.bunch - dn.bunch) / (2.0 * h);
        let dc = (up.coincidence - dn.coincidence) / (2.0 * h);
        let fd = db * db / p.bunch + dc * dc / p.coincidence;
        assert!((fd / fi_nonresolved(&c) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn tabulated_routes_agree_with_gaussian() {
        let g = Spectrum::gaussian(0.0, 1.0).unwrap();
        let c = ExperimentConfig::new(1.7, 0.75, 1.0, g.clone()).unwrap();
        let t = c.with_spectrum(g.to_tabulated(1601).unwrap()).unwrap();
        let (a, b) = (fi_resolved(&c).unwrap(), fi_resolved(&t).unwrap());
        assert!((a / b - 1.0).abs() < 1e-4, "{a} {b}");
        let (a, b) = (fi_nonresolved(&c), fi_nonresolved(&t));
        assert!((a / b - 1.0).abs() < 1e-4, "{a} {b}");
    }

    #[test]
    fn large_delay_values() {
        assert_eq!(fi_large_delay(1.0, 0.7, 1.3), 2.0 * 0.49 * 1.69);
        assert_eq!(fi_large_delay(0.0, 1.0, 1.0), 0.0);
        let v = fi_large_delay(0.75, 1.0, 1.0);
        assert!((v - 2.0 * (1.0 - (1.0f64 - 0.316_406_25).sqrt())).abs() < 1e-15);
        assert!((v - 0.346_41).abs() < 1e-5);
        let f = fi_resolved(&cfg(20.0, 0.75, 1.0, 1.0)).unwrap();
        assert!((f / v - 1.0).abs() < 2e-3);
    }

    #[test]
    fn qfim_by_quadrature_is_diagonal() {
        let q = qfim_by_quadrature(&Spectrum::gaussian(0.0, 1.0).unwrap());
        assert!((q.qfim[0][0] - 2.0).abs() < 1e-9);
        assert!((q.qfim[1][1] - 2.0).abs() < 1e-9);
        assert!(q.qfim[0][1].abs() < 1e-12 && q.qfim[1][0].abs() < 1e-12);

        let s = Spectrum::gaussian(3.0, 2.0).unwrap();
        let q = qfim_by_quadrature(&s);
        assert!((q.norm - 1.0).abs() < 1e-12);
        assert!((q.derivative_products[1][1].re - 11.0).abs() < 1e-6);
        assert!((q.derivative_products[0][0].re - 2.0).abs() < 1e-9);
        assert!(q.derivative_products[0][1].norm() < 1e-9);
        assert!(q.state_derivative[0].norm() < 1e-9);
        assert!((q.state_derivative[1].im + 3.0).abs() < 1e-9);
        assert_eq!(qfim(&s), [[8.0, 0.0], [0.0, 8.0]]);
        assert!((q.qfim[1][1] - 8.0).abs() < 1e-8);
    }

    #[test]
    fn crb_values() {
        assert_eq!(crb(2.0, 1), 0.5);
        assert_eq!(crb(0.0, 10), f64::INFINITY);
        let c = cfg(3.0, 1.0, 1.0, 1.4);
        let r = fisher_report(&c, 1000).unwrap();
        assert!((r.crb_resolved / r.qcrb - 1.0).abs() < 1e-6);
        assert_eq!(r.crb_nonresolved, 1.0 / (1000.0 * r.fi_nonresolved));
        assert!(fisher_report(&c, 0).is_err());
    }

    #[test]
    fn scans() {
        let t = cfg(0.0, 0.75, 1.0, 1.0);
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
        let pts = fisher_scan(&t, ScanAxis::DeltaT, &grid, 1).unwrap();
        assert_eq!(pts.len(), grid.len());
        for (p, &g) in pts.iter().zip(&grid) {
            assert_eq!(p.axis_value, g);
            let r = p.report.as_ref().unwrap();
            assert!(r.fi_resolved >= r.fi_nonresolved - 1e-9);
        }

        let t = cfg(1.0, 0.75, 1.0, 1.0);
        let grid = [1.0, 4.0, 16.0, 64.0];
        let pts = fisher_scan(&t, ScanAxis::SigmaSq, &grid, 1).unwrap();
        let last = pts[3].report.as_ref().unwrap();
        assert!(last.fi_nonresolved < 1e-40);
        assert!((last.fi_resolved / (64.0 * 2.0 * zeta_period_average(0.75) * 0.75f64.powi(4)) - 1.0).abs() < 1e-3);

        let t = cfg(0.0, 1.0, 1.0, 1.0);
        let pts = fisher_scan(&t, ScanAxis::DeltaT, &[0.0, 1.0, 2.5, 5.0], 1).unwrap();
        for p in &pts {
            assert!((p.report.as_ref().unwrap().fi_resolved / 2.0 - 1.0).abs() < 1e-6);
        }

        let bad = fisher_scan(&t, ScanAxis::SigmaSq, &[1.0, -1.0], 1).unwrap();
        assert!(bad[0].report.is_ok() && bad[1].report.is_err());
        assert!(fisher_scan(&t, ScanAxis::DeltaT, &[], 1).is_err());
    }

    proptest! {
        #[test]
        fn zeta_is_bounded_and_pi_periodic(eta in 0.0f64..0.999, x in -50.0f64..50.0) {
            let z = zeta(eta, x);
            prop_assert!((0.0..=1.0).contains(&z));
            prop_assert!((zeta(eta, x + PI) - z).abs() < 1e-12);
        }

        #[test]
        fn resolved_fi_below_quantum_limit(eta in 0.0f64..=1.0, st in 0.0f64..10.0, gamma in 0.1f64..=1.0) {
            let c = cfg(st, eta, gamma, 1.0);
            let f = fi_resolved(&c).unwrap();
            prop_assert!(f <= gamma * gamma * qfi(c.spectrum()) + 1e-9);
            prop_assert!(f >= fi_nonresolved(&c) - 1e-9);
        }
    }

    #[test]
    fn zeta_average_for_many_eta() {
        for eta in [0.1, 0.25, 0.5, 0.75, 0.9, 0.99] {
            assert!((zeta_period_average(eta) - numeric_average(eta, 10_000)).abs() < 1e-8);
        }
    }
}
