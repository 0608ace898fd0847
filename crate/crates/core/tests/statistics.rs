//! Goodness-of-fit checks of the Monte Carlo sampler against the densities.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spectral_hom::interference::{self, prob_bunch_density};
use spectral_hom::simulation::{self, log_likelihood, mle, sample_events};
use spectral_hom::{fisher, DetectionEvent, ExperimentConfig, Spectrum};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

fn cfg(delta_t: f64, eta: f64, gamma: f64, sigma: f64) -> ExperimentConfig {
    ExperimentConfig::new(delta_t, eta, gamma, Spectrum::gaussian(0.0, sigma).unwrap()).unwrap()
}

fn chi_square_p(observed: &[f64], expected: &[f64]) -> f64 {
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let dof = (observed.len() - 1) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}

#[test]
fn bunch_histogram_follows_density() {
    let c = cfg(1.0, 0.75, 1.0, 1.0);
    let dw = c.delta_omega();
    let n = 100_000;
    let data = sample_events(&c, n, 2024);

    // 20 x 20 cells of 8 x 8 resolution bins, plus one overflow cell.
    let per_cell = 8;
    let cells = 20;
    let first = -((cells * per_cell / 2) as i64);
    let cell_of = |w: f64| {
        let k = (w / dw).round() as i64 - first;
        (k >= 0 && k < (cells * per_cell) as i64).then(|| k as usize / per_cell)
    };
    let mut observed = vec![0.0; cells * cells + 1];
    for e in &data.events {
        if let DetectionEvent::Bunch { omega_a, omega_b, .. } = *e {
            match (cell_of(omega_a), cell_of(omega_b)) {
                (Some(i), Some(j)) => observed[i * cells + j] += 1.0,
                _ => observed[cells * cells] += 1.0,
            }
        }
    }
    let mut expected = vec![0.0; cells * cells + 1];
    for ka in 0..cells * per_cell {
        for kb in 0..cells * per_cell {
            let wa = (first + ka as i64) as f64 * dw;
            let wb = (first + kb as i64) as f64 * dw;
            let p = 0.5 * prob_bunch_density(&c, wa, wb) * dw * dw;
            expected[(ka / per_cell) * cells + kb / per_cell] += p * n as f64;
        }
    }
    let inside: f64 = expected.iter().sum();
    expected[cells * cells] = interference::prob_nonresolved(&c).bunch * n as f64 - inside;

    // Merge sparse cells into the overflow cell.
    let (mut obs, mut exp) = (Vec::new(), Vec::new());
    let (mut o_rest, mut e_rest) = (0.0, 0.0);
    for (o, e) in observed.iter().zip(&expected) {
        if *e >= 5.0 {
            obs.push(*o);
            exp.push(*e);
        } else {
            o_rest += o;
            e_rest += e;
        }
    }
    obs.push(o_rest);
    exp.push(e_rest);
    let p = chi_square_p(&obs, &exp);
    assert!(obs.len() > 200);
    assert!(p > 0.001, "chi-square p = {p}");
}

#[test]
fn frequency_draws_follow_spectrum() {
    let s = Spectrum::gaussian(1.5, 0.7).unwrap();
    let normal = Normal::new(1.5, 0.7).unwrap();
    let bins = 50;
    let edges: Vec<f64> = (1..bins).map(|i| normal.inverse_cdf(i as f64 / bins as f64)).collect();
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut observed = vec![0.0; bins];
    for _ in 0..n {
        let w = s.sample_frequency(&mut rng);
        observed[edges.partition_point(|&e| e < w)] += 1.0;
    }
    let expected = vec![n as f64 / bins as f64; bins];
    let p = chi_square_p(&observed, &expected);
    assert!(p > 0.001, "chi-square p = {p}");
}

#[test]
fn coincidence_fraction_matches_nonresolved_probability() {
    let c = cfg(1.0, 0.75, 0.8, 2.5);
    let n = 100_000;
    let data = sample_events(&c, n, 31);
    let pairs = data.detected_pairs() as f64;
    let coinc = data
        .events
        .iter()
        .filter(|e| matches!(e, DetectionEvent::Coincidence { .. }))
        .count() as f64;
    let nr = interference::prob_nonresolved(&c);
    let p = nr.coincidence / (nr.bunch + nr.coincidence);
    let se = (p * (1.0 - p) / pairs).sqrt();
    assert!((coinc / pairs - p).abs() < 3.0 * se, "{} vs {p}", coinc / pairs);
}

#[test]
fn loss_fraction_is_binomial() {
    let n = 100_000;
    let data = sample_events(&cfg(1.0, 0.75, 0.5, 1.0), n, 4);
    let none = data
        .events
        .iter()
        .filter(|e| matches!(e, DetectionEvent::NoDetection))
        .count() as f64
        / n as f64;
    assert!((none - 0.25).abs() < 3.0 * (0.25f64 * 0.75 / n as f64).sqrt(), "{none}");
    let singles = data
        .events
        .iter()
        .filter(|e| matches!(e, DetectionEvent::Single { .. }))
        .count() as f64
        / n as f64;
    assert!((singles - 0.5).abs() < 3.0 * (0.25f64 / n as f64).sqrt(), "{singles}");
}

#[test]
fn observed_information_matches_fisher_information() {
    let c = cfg(2.0, 0.75, 1.0, 1.0);
    let n = 100_000;
    let data = sample_events(&c, n, 77);
    let h = 1e-3;
    let f = |t: f64| log_likelihood(&data, t) / n as f64;
    let observed = -(f(2.0 + h) - 2.0 * f(2.0) + f(2.0 - h)) / (h * h);
    let fi = fisher::fi_resolved(&c).unwrap();
    assert!((observed / fi - 1.0).abs() < 0.1, "{observed} vs {fi}");
}

#[test]
fn zero_delay_estimate_is_consistent_with_zero() {
    let data = sample_events(&cfg(0.0, 0.75, 1.0, 1.0), 100_000, 8);
    let est = mle(&data, 5.0).unwrap();
    assert!(est.delta_t_hat <= 3.0 * est.stderr_crb, "{est:?}");
}

#[test]
fn estimate_at_acceptance_setting() {
    let c = cfg(2.0, 0.75, 1.0, 1.0);
    let data = sample_events(&c, 100_000, 5);
    let est = mle(&data, simulation::default_search_max(&c)).unwrap();
    assert!((est.delta_t_hat - 2.0).abs() < 5.0 * est.stderr_crb, "{est:?}");
    assert!(est.log_likelihood.is_finite());
    assert_eq!(est.n_informative, data.detected_pairs() - zero_differences(&data));
}

fn zero_differences(data: &simulation::EventDataset) -> usize {
    data.events
        .iter()
        .filter(|e| e.frequency_difference() == Some(0.0))
        .count()
}
