//! JSON run configuration and command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;
use spectral_hom::fisher::ScanAxis;
use spectral_hom::spectrum::SpectrumSpec;
use spectral_hom::{ExperimentConfig, Spectrum};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentSection,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub beats: BeatsSection,
    pub scan: ScanSection,
    pub simulate: SimulateSection,
    pub estimate: EstimateSection,
    pub validate: ValidateSection,
    pub oracle: OracleSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub delta_t: f64,
    pub eta: f64,
    pub gamma: f64,
    /// Frequency resolution; the coarsest admissible value when absent.
    pub delta_omega: Option<f64>,
    pub allow_coarse_resolution: bool,
    pub spectrum: SpectrumSpec,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            delta_t: 1.0,
            eta: 1.0,
            gamma: 1.0,
            delta_omega: None,
            allow_coarse_resolution: false,
            spectrum: SpectrumSpec::Gaussian { center: 0.0, sigma: 1.0 },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeatsSection {
    pub n_points: usize,
}

impl Default for BeatsSection {
    fn default() -> Self {
        Self { n_points: 2001 }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    DeltaT,
    SigmaSq,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub axis: AxisName,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub n_repetitions: u64,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            axis: AxisName::DeltaT,
            start: 0.0,
            stop: 5.0,
            points: 51,
            n_repetitions: 1,
        }
    }
}

impl ScanSection {
    pub fn axis(&self) -> ScanAxis {
        match self.axis {
            AxisName::DeltaT => ScanAxis::DeltaT,
            AxisName::SigmaSq => ScanAxis::SigmaSq,
        }
    }

    pub fn grid(&self) -> anyhow::Result<Vec<f64>> {
        if self.points == 0 {
            bail!("scan.points must be at least 1");
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            bail!("scan range must be finite");
        }
        if self.points == 1 {
            return Ok(vec![self.start]);
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        Ok((0..self.points).map(|i| self.start + i as f64 * step).collect())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub n_events: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self { n_events: 10_000 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateSection {
    /// Events CSV to read; simulated from the experiment when absent.
    pub events: Option<PathBuf>,
    pub n_events: usize,
    pub search_max: Option<f64>,
}

impl Default for EstimateSection {
    fn default() -> Self {
        Self {
            events: None,
            n_events: 10_000,
            search_max: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSection {
    pub n_events: usize,
    pub n_trials: usize,
    pub search_max: Option<f64>,
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self {
            n_events: 10_000,
            n_trials: 200,
            search_max: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub grid_points: usize,
    /// Finite-difference step in units of the coherence time.
    pub step: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            grid_points: 256,
            step: 1e-4,
        }
    }
}

/// Values given on the command line, applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub delta_t: Option<f64>,
    pub eta: Option<f64>,
    pub gamma: Option<f64>,
    pub sigma: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) -> anyhow::Result<()> {
        let e = &mut self.experiment;
        if let Some(v) = o.delta_t {
            e.delta_t = v;
        }
        if let Some(v) = o.eta {
            e.eta = v;
        }
        if let Some(v) = o.gamma {
            e.gamma = v;
        }
        if let Some(v) = o.sigma {
            match &mut e.spectrum {
                SpectrumSpec::Gaussian { sigma, .. } => *sigma = v,
                SpectrumSpec::Tabulated { .. } => bail!("--sigma applies only to a Gaussian spectrum"),
            }
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.out {
            self.out = Some(v.clone());
        }
        Ok(())
    }

    pub fn experiment(&self) -> anyhow::Result<ExperimentConfig> {
        let e = &self.experiment;
        let spectrum = Spectrum::try_from(e.spectrum.clone())?;
        let mut b = ExperimentConfig::builder(spectrum).delta_t(e.delta_t).eta(e.eta).gamma(e.gamma);
        if let Some(dw) = e.delta_omega {
            b = b.delta_omega(dw);
        }
        if e.allow_coarse_resolution {
            b = b.allow_coarse_resolution();
        }
        Ok(b.build()?)
    }
}
