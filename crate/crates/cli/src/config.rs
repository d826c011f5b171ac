//! JSON configuration. Every field has a default; unknown keys are rejected.

use serde::{Deserialize, Serialize};

use dnctd::chrono::gdd_from_dispersion;
use dnctd::detection::{DetectorModel, DetectorPair, NoiseMode, Scheme, SourceModel};
use dnctd::lidar::{DepthOptions, ScanConfig};
use dnctd::montecarlo::{NoiseModel, RunConfig};

/// Validation failure at a dotted field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub reason: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub seed: u64,
    /// Simulated seconds per Monte Carlo point.
    pub duration_s: f64,
    pub biphoton: BiphotonConfig,
    pub source: SourceModel<f64>,
    /// ν, pairs per second.
    pub pair_rate: f64,
    pub channel: ChannelConfig,
    pub noise: NoiseConfig,
    pub dispersion: DispersionConfig,
    pub detectors: DetectorPair<f64>,
    pub window: WindowConfig,
    pub histogram: HistogramConfig,
    pub sweep: SweepConfig,
    pub scan: ScanSection,
    pub saturation: SaturationConfig,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self {
            seed: 1,
            duration_s: 0.2,
            biphoton: BiphotonConfig::default(),
            source: SourceModel::default(),
            pair_rate: 7.6e5,
            channel: ChannelConfig::default(),
            noise: NoiseConfig::default(),
            dispersion: DispersionConfig::default(),
            detectors: DetectorPair::default(),
            window: WindowConfig::default(),
            histogram: HistogramConfig::default(),
            sweep: SweepConfig::default(),
            scan: ScanSection::default(),
            saturation: SaturationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BiphotonConfig {
    pub tau_minus_fwhm_ps: f64,
    pub tau_plus_fwhm_ps: f64,
    pub wavelength_nm: f64,
}

impl Default for BiphotonConfig {
    fn default() -> Self {
        Self {
            tau_minus_fwhm_ps: 0.1,
            tau_plus_fwhm_ps: 17.7,
            wavelength_nm: 1560.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub tau_p: f64,
    pub tau_r: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { tau_p: 0.05, tau_r: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub mode: NoiseMode,
    /// Normalised noise power N/(ν·τ_p) in dB; sets the noise rate.
    pub normalized_db: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            mode: NoiseMode::Pulsed,
            normalized_db: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiberConfig {
    /// Dispersion parameter D in ps/(nm·km); positive is anomalous.
    pub dispersion_ps_nm_km: f64,
    pub length_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionConfig {
    pub probe_fiber: FiberConfig,
    pub reference_fiber: FiberConfig,
    /// Explicit GDD in ps², overriding the fibre when set.
    pub gdd_probe_ps2: Option<f64>,
    pub gdd_ref_ps2: Option<f64>,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self {
            probe_fiber: FiberConfig {
                dispersion_ps_nm_km: 18.0,
                length_km: 5.0,
            },
            reference_fiber: FiberConfig {
                dispersion_ps_nm_km: -18.0,
                length_km: 5.0,
            },
            gdd_probe_ps2: None,
            gdd_ref_ps2: None,
        }
    }
}

impl Default for FiberConfig {
    fn default() -> Self {
        Self {
            dispersion_ps_nm_km: 18.0,
            length_km: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    pub width_ps: f64,
    pub offset_ps: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            width_ps: 200.0,
            offset_ps: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HistogramConfig {
    pub bin_width_ps: u64,
    pub range_ps: u64,
    /// Bin width of the Monte Carlo histograms written next to the analytic curves.
    pub mc_bin_width_ps: u64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self {
            bin_width_ps: 1,
            range_ps: 5000,
            mc_bin_width_ps: 20,
        }
    }
}

/// Evenly spaced points from `start` to `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Range {
    pub fn new(start: f64, stop: f64, steps: usize) -> Self {
        Self { start, stop, steps }
    }

    pub fn points(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.start];
        }
        let d = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.start + d * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Normalised noise power, dB.
    pub noise_db: Range,
    /// Normalised probe power, dB, at the configured noise rate.
    pub probe_db: Range,
    pub window_ps: Range,
    /// log₁₀ of the pair rate ν.
    pub log10_pair_rate: Range,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            noise_db: Range::new(0.0, 30.0, 7),
            probe_db: Range::new(-30.0, 0.0, 7),
            window_ps: Range::new(10.0, 200.0, 20),
            log10_pair_rate: Range::new(4.0, 6.0, 5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub letters: String,
    pub depths_cm: Vec<f64>,
    pub tilt_cm_per_px: f64,
    pub width: usize,
    pub height: usize,
    pub dwell_s: f64,
    pub pair_rate: f64,
    pub noise_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub gate_margin_ps: f64,
    pub depth: DepthOptions,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            letters: "UOT".into(),
            depths_cm: vec![100.0, 110.0, 120.0],
            tilt_cm_per_px: 0.02,
            width: 64,
            height: 64,
            dwell_s: 0.1,
            pair_rate: 7.6e4,
            noise_db: vec![0.0, 25.0],
            schemes: vec![Scheme::Ctd, Scheme::Dnctd],
            gate_margin_ps: 1000.0,
            depth: DepthOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaturationConfig {
    /// log₁₀ of the offered noise photon rate.
    pub log10_rate: Range,
    pub duration_s: f64,
}

impl Default for SaturationConfig {
    fn default() -> Self {
        Self {
            log10_rate: Range::new(5.0, 8.0, 13),
            duration_s: 0.01,
        }
    }
}

fn err(path: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.to_string(),
        reason: reason.into(),
    }
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(err(path, format!("must be positive and finite, got {v}")))
    }
}

fn nonneg(path: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(err(path, format!("must be non-negative and finite, got {v}")))
    }
}

fn finite(path: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(err(path, format!("must be finite, got {v}")))
    }
}

fn unit(path: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(err(path, format!("must lie in [0, 1], got {v}")))
    }
}

fn range(path: &str, r: &Range) -> Result<(), ConfigError> {
    finite(&format!("{path}.start"), r.start)?;
    finite(&format!("{path}.stop"), r.stop)?;
    if r.steps == 0 {
        return Err(err(&format!("{path}.steps"), "must be at least 1"));
    }
    Ok(())
}

fn detector(path: &str, d: &DetectorModel<f64>) -> Result<(), ConfigError> {
    positive(&format!("{path}.jitter_fwhm"), d.jitter_fwhm)?;
    if !(d.efficiency > 0.0 && d.efficiency <= 1.0) {
        return Err(err(&format!("{path}.efficiency"), format!("must lie in (0, 1], got {}", d.efficiency)));
    }
    nonneg(&format!("{path}.dead_time_ns"), d.dead_time_ns)?;
    nonneg(&format!("{path}.dark_rate"), d.dark_rate)
}

impl ConfigFile {
    /// Parses JSON, reporting the path of unknown or mistyped fields, then validates.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError {
                path: if path == "." { "$".into() } else { path },
                reason: e.into_inner().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("duration_s", self.duration_s)?;
        positive("biphoton.tau_minus_fwhm_ps", self.biphoton.tau_minus_fwhm_ps)?;
        positive("biphoton.tau_plus_fwhm_ps", self.biphoton.tau_plus_fwhm_ps)?;
        positive("biphoton.wavelength_nm", self.biphoton.wavelength_nm)?;
        positive("source.rep_rate", self.source.rep_rate)?;
        positive("pair_rate", self.pair_rate)?;
        if self.pair_rate > self.source.rep_rate {
            return Err(err("pair_rate", "exceeds one pair per pulse"));
        }
        unit("channel.tau_p", self.channel.tau_p)?;
        unit("channel.tau_r", self.channel.tau_r)?;
        finite("noise.normalized_db", self.noise.normalized_db)?;
        for (name, f) in [
            ("dispersion.probe_fiber", &self.dispersion.probe_fiber),
            ("dispersion.reference_fiber", &self.dispersion.reference_fiber),
        ] {
            finite(&format!("{name}.dispersion_ps_nm_km"), f.dispersion_ps_nm_km)?;
            nonneg(&format!("{name}.length_km"), f.length_km)?;
        }
        for (name, v) in [
            ("dispersion.gdd_probe_ps2", self.dispersion.gdd_probe_ps2),
            ("dispersion.gdd_ref_ps2", self.dispersion.gdd_ref_ps2),
        ] {
            if let Some(v) = v {
                finite(name, v)?;
            }
        }
        detector("detectors.probe", &self.detectors.probe)?;
        detector("detectors.reference", &self.detectors.reference)?;
        positive("window.width_ps", self.window.width_ps)?;
        finite("window.offset_ps", self.window.offset_ps)?;
        if self.histogram.bin_width_ps == 0 {
            return Err(err("histogram.bin_width_ps", "must be positive"));
        }
        if self.histogram.mc_bin_width_ps == 0 {
            return Err(err("histogram.mc_bin_width_ps", "must be positive"));
        }
        if self.histogram.range_ps == 0 {
            return Err(err("histogram.range_ps", "must be positive"));
        }
        range("sweep.noise_db", &self.sweep.noise_db)?;
        range("sweep.probe_db", &self.sweep.probe_db)?;
        range("sweep.window_ps", &self.sweep.window_ps)?;
        if let Some(w) = self.sweep.window_ps.points().iter().find(|w| **w <= 0.0) {
            return Err(err("sweep.window_ps", format!("windows must be positive, got {w}")));
        }
        range("sweep.log10_pair_rate", &self.sweep.log10_pair_rate)?;
        if let Some(p) = self.sweep.log10_pair_rate.points().iter().find(|p| 10f64.powf(**p) > self.source.rep_rate) {
            return Err(err("sweep.log10_pair_rate", format!("10^{p} pairs/s exceeds the repetition rate")));
        }
        let s = &self.scan;
        if s.depths_cm.len() != s.letters.chars().count() && !s.letters.is_empty() {
            return Err(err("scan.depths_cm", format!("{} letters need {} depths", s.letters.chars().count(), s.letters.chars().count())));
        }
        for (i, d) in s.depths_cm.iter().enumerate() {
            finite(&format!("scan.depths_cm[{i}]"), *d)?;
        }
        if let Some(c) = s.letters.chars().find(|c| dnctd::lidar::glyph(*c).is_none()) {
            return Err(err("scan.letters", format!("no glyph for {c:?}")));
        }
        finite("scan.tilt_cm_per_px", s.tilt_cm_per_px)?;
        if s.width == 0 || s.height == 0 {
            return Err(err("scan.width", "image dimensions must be positive"));
        }
        positive("scan.dwell_s", s.dwell_s)?;
        positive("scan.pair_rate", s.pair_rate)?;
        for (i, d) in s.noise_db.iter().enumerate() {
            finite(&format!("scan.noise_db[{i}]"), *d)?;
        }
        nonneg("scan.gate_margin_ps", s.gate_margin_ps)?;
        positive("scan.depth.search_window_ps", s.depth.search_window_ps)?;
        positive("scan.depth.peak_half_width_ps", s.depth.peak_half_width_ps)?;
        nonneg("scan.depth.min_significance", s.depth.min_significance)?;
        range("saturation.log10_rate", &self.saturation.log10_rate)?;
        positive("saturation.duration_s", self.saturation.duration_s)?;
        Ok(())
    }

    pub fn gdd_probe(&self) -> Result<f64, ConfigError> {
        self.gdd_for(self.dispersion.gdd_probe_ps2, &self.dispersion.probe_fiber, "dispersion.probe_fiber")
    }

    pub fn gdd_ref(&self) -> Result<f64, ConfigError> {
        self.gdd_for(self.dispersion.gdd_ref_ps2, &self.dispersion.reference_fiber, "dispersion.reference_fiber")
    }

    fn gdd_for(&self, explicit: Option<f64>, fiber: &FiberConfig, path: &str) -> Result<f64, ConfigError> {
        match explicit {
            Some(g) => Ok(g),
            None => gdd_from_dispersion(fiber.dispersion_ps_nm_km, fiber.length_km, self.biphoton.wavelength_nm)
                .map_err(|e| err(path, e.to_string())),
        }
    }

    /// Noise photon rate implied by the normalised noise power.
    pub fn noise_rate(&self) -> f64 {
        dnctd::detection::noise_rate_for(self.noise.normalized_db, self.pair_rate, self.channel.tau_p)
    }

    pub fn run_config(&self) -> Result<RunConfig, ConfigError> {
        Ok(RunConfig {
            tau_minus_fwhm: self.biphoton.tau_minus_fwhm_ps,
            tau_plus_fwhm: self.biphoton.tau_plus_fwhm_ps,
            source: self.source,
            pair_rate: self.pair_rate,
            tau_p: self.channel.tau_p,
            tau_r: self.channel.tau_r,
            noise: NoiseModel {
                mode: self.noise.mode,
                rate: self.noise_rate(),
                wavepacket: None,
            },
            gdd_probe: self.gdd_probe()?,
            gdd_ref: self.gdd_ref()?,
            detectors: self.detectors,
            probe_delay: 0.0,
            reference_delay: 0.0,
            window: self.window.width_ps,
            window_offset: self.window.offset_ps,
        })
    }

    pub fn scan_config(&self) -> Result<ScanConfig, ConfigError> {
        let mut run = self.run_config()?;
        run.pair_rate = self.scan.pair_rate;
        Ok(ScanConfig {
            run,
            dwell: self.scan.dwell_s,
            bin_width_ps: self.histogram.bin_width_ps,
            gate_margin_ps: self.scan.gate_margin_ps,
            depth: self.scan.depth.clone(),
        })
    }

    /// Canonical JSON of the effective configuration, used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }
}
