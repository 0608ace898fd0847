//! Composite Gauss–Kronrod quadrature with panel-width control.
//!
//! Oscillatory integrands are handled by seeding the adaptive loop with
//! panels no wider than a caller-supplied width (typically a fraction of the
//! oscillation period), then bisecting the panel with the largest error
//! estimate until the tolerance is met.

// QUADPACK tables, kept at their published precision.
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod 15-point abscissae (non-negative half) and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Embedded Gauss 7-point weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Controls for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Widest panel allowed in the initial partition.
    pub max_panel_width: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Refinement cap; exceeding it is reported as non-convergence.
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            max_panel_width: f64::INFINITY,
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_panels: 50_000,
        }
    }
}

/// One GK15 panel: (Kronrod estimate, |Kronrod − Gauss|).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Integral> {
    integrate_with_breaks(f, &[a, b], opts)
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, never letting a panel
/// straddle one of the interior breakpoints.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    opts: &QuadOptions,
) -> Result<Integral> {
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let n = ((hi - lo) / opts.max_panel_width).ceil().max(1.0) as usize;
        let width = (hi - lo) / n as f64;
        for i in 0..n {
            let a = lo + i as f64 * width;
            let b = if i + 1 == n { hi } else { a + width };
            let (value, error) = gk15(&f, a, b);
            heap.push(Panel { a, b, value, error });
        }
    }

    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        let target = (opts.rel_tol * value.abs()).max(opts.abs_tol);
        if error <= target {
            return Ok(Integral {
                value,
                error,
                panels: heap.len(),
            });
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::Quadrature {
                estimate: error,
                target,
                panels: heap.len(),
            });
        }
        // Bisect a batch of the worst panels per pass so the summation above
        // stays cheap relative to the work done.
        let batch = (heap.len() / 16).max(1);
        for _ in 0..batch {
            let Some(worst) = heap.pop() else { break };
            let mid = 0.5 * (worst.a + worst.b);
            let (v1, e1) = gk15(&f, worst.a, mid);
            let (v2, e2) = gk15(&f, mid, worst.b);
            heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
            heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        }
    }
}

/// Composite 15-point Kronrod nodes and weights over `[a, b]` with panels
/// no wider than `max_panel_width`, for tensor-product rules.
pub fn composite_nodes(a: f64, b: f64, max_panel_width: f64) -> Vec<(f64, f64)> {
    let n = ((b - a) / max_panel_width).ceil().max(1.0) as usize;
    let width = (b - a) / n as f64;
    let half = 0.5 * width;
    let mut nodes = Vec::with_capacity(15 * n);
    for i in 0..n {
        let center = a + (i as f64 + 0.5) * width;
        for j in 0..7 {
            nodes.push((center - half * XGK[j], half * WGK[j]));
            nodes.push((center + half * XGK[j], half * WGK[j]));
        }
        nodes.push((center, half * WGK[7]));
    }
    nodes
}

/// Trapezoidal rule over tabulated samples.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gk15_is_exact_for_polynomials() {
        let (v, e) = gk15(&|x: f64| x.powi(8) - 3.0 * x.powi(3), -1.0, 2.0);
        let exact = (2f64.powi(9) + 1.0) / 9.0 - 0.75 * (16.0 - 1.0);
        assert!((v - exact).abs() < 1e-12);
        assert!(e < 1e-10);
    }

    #[test]
    fn oscillatory_integral_with_narrow_panels() {
        let omega = 200.0;
        let opts = QuadOptions {
            max_panel_width: PI / (4.0 * omega),
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            ..Default::default()
        };
        let r = integrate(|x: f64| (omega * x).cos() * (-x * x).exp(), -6.0, 6.0, &opts).unwrap();
        let exact = PI.sqrt() * (-omega * omega / 4.0).exp();
        assert!((r.value - exact).abs() < 1e-12, "{} vs {}", r.value, exact);
    }

    #[test]
    fn refinement_cap_reports_estimate() {
        let opts = QuadOptions {
            rel_tol: 1e-15,
            abs_tol: 0.0,
            max_panels: 4,
            ..Default::default()
        };
        let err = integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, &opts).unwrap_err();
        match err {
            Error::Quadrature { estimate, panels, .. } => {
                assert!(estimate > 0.0);
                assert!(panels >= 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn composite_nodes_integrate_gaussian() {
        let s: f64 = composite_nodes(-8.0, 8.0, 0.5)
            .iter()
            .map(|&(x, w)| w * (-0.5 * x * x).exp())
            .sum();
        assert!((s - (2.0 * PI).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn trapezoid_linear_exact() {
        let x = [0.0, 0.5, 2.0];
        let y = [1.0, 2.0, 5.0];
        assert!((trapezoid(&x, &y) - 6.0).abs() < 1e-15);
    }
}
