//! Detector response and scheme-level SNR analytics for CTD, NCTD and DNCTD.
//!
//! The coincidence schemes are evaluated with a window-resolved model:
//! true coincidences come from the (possibly dispersed) biphoton
//! difference-time density, false coincidences from independent noise and
//! reference photons sharing the same pulse. Both densities are convolved
//! with the combined detector jitter before the window is applied.

use serde::{Deserialize, Serialize};

use crate::chrono::{false_difference_density, fwhm_to_sigma, ChronocyclicGaussian2, Gaussian1D, Photon};
use crate::error::{Error, Result};
use crate::scalar::{to_db, Scalar};

/// Combined coincidence timing uncertainty of the detector pair, FWHM in ps.
pub const COMBINED_JITTER_FWHM_PS: f64 = 83.3;

/// Single-photon detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct DetectorModel<T> {
    /// Timing jitter, FWHM in ps.
    pub jitter_fwhm: T,
    pub efficiency: T,
    /// Non-paralyzable dead time in ns.
    pub dead_time_ns: T,
    /// Dark counts per second.
    pub dark_rate: T,
}

impl<T: Scalar> Default for DetectorModel<T> {
    fn default() -> Self {
        Self {
            jitter_fwhm: T::lit(COMBINED_JITTER_FWHM_PS / std::f64::consts::SQRT_2),
            efficiency: T::one(),
            dead_time_ns: T::lit(900.0),
            dark_rate: T::zero(),
        }
    }
}

impl<T: Scalar> DetectorModel<T> {
    pub fn validate(&self) -> Result<()> {
        nonneg("jitter_fwhm", self.jitter_fwhm)?;
        nonneg("dead_time_ns", self.dead_time_ns)?;
        nonneg("dark_rate", self.dark_rate)?;
        unit_interval("efficiency", self.efficiency)
    }

    pub fn jitter_sigma(&self) -> T {
        self.jitter_fwhm / crate::chrono::fwhm_per_sigma()
    }
}

/// Probe and reference detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct DetectorPair<T> {
    pub probe: DetectorModel<T>,
    pub reference: DetectorModel<T>,
}

impl<T: Scalar> Default for DetectorPair<T> {
    fn default() -> Self {
        Self {
            probe: DetectorModel::default(),
            reference: DetectorModel::default(),
        }
    }
}

impl<T: Scalar> DetectorPair<T> {
    /// Both detectors identical, with the combined coincidence jitter split evenly.
    pub fn symmetric(combined_jitter_fwhm: T, efficiency: T, dead_time_ns: T) -> Self {
        let d = DetectorModel {
            jitter_fwhm: combined_jitter_fwhm / T::lit(2.0).sqrt(),
            efficiency,
            dead_time_ns,
            dark_rate: T::zero(),
        };
        Self { probe: d, reference: d }
    }

    /// FWHM of the jitter on `t_probe − t_reference`.
    pub fn combined_jitter_fwhm(&self) -> T {
        self.probe.jitter_fwhm.hypot(self.reference.jitter_fwhm)
    }

    pub fn validate(&self) -> Result<()> {
        self.probe.validate()?;
        self.reference.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Classical target detection from probe singles.
    Ctd,
    /// Coincidence-based non-classical target detection.
    Nctd,
    /// Coincidence detection with non-local dispersion cancellation.
    Dnctd,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Ctd, Scheme::Nctd, Scheme::Dnctd];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Ctd => "ctd",
            Scheme::Nctd => "nctd",
            Scheme::Dnctd => "dnctd",
        }
    }

    pub fn uses_coincidences(&self) -> bool {
        !matches!(self, Scheme::Ctd)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ctd" => Ok(Scheme::Ctd),
            "nctd" => Ok(Scheme::Nctd),
            "dnctd" => Ok(Scheme::Dnctd),
            other => Err(Error::param("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

/// Temporal structure of the environmental noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// Noise arrives with each source pulse, shaped like the probe photon.
    #[default]
    Pulsed,
    /// Uniform in time.
    Cw,
}

/// Pulsed pump source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct SourceModel<T> {
    /// Pulses per second.
    pub rep_rate: T,
}

impl<T: Scalar> Default for SourceModel<T> {
    fn default() -> Self {
        Self {
            rep_rate: T::lit(76.0e6),
        }
    }
}

impl<T: Scalar> SourceModel<T> {
    /// Mean pairs per pulse for a given pair rate.
    pub fn pair_probability(&self, pair_rate: T) -> T {
        pair_rate / self.rep_rate
    }

    pub fn period_ps(&self) -> T {
        T::lit(1e12) / self.rep_rate
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rep_rate > T::zero()) || !self.rep_rate.is_finite() {
            return Err(Error::param("rep_rate", "must be positive and finite"));
        }
        Ok(())
    }
}

/// Parameters of one target-detection measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct SchemeConfig<T> {
    pub scheme: Scheme,
    /// ν, pairs per second.
    pub pair_rate: T,
    /// Probe path transmission τ_p.
    pub tau_p: T,
    /// Reference path transmission τ_r.
    pub tau_r: T,
    /// N, noise photons per second at the probe detector input.
    pub noise_rate: T,
    #[serde(default)]
    pub noise_mode: NoiseMode,
    /// Coincidence window width in ps.
    pub window: T,
    /// Window centre in ps (probe minus reference).
    #[serde(default)]
    pub window_offset: T,
    #[serde(default)]
    pub gdd_probe: T,
    #[serde(default)]
    pub gdd_ref: T,
}

impl<T: Scalar> SchemeConfig<T> {
    pub fn validate(&self) -> Result<()> {
        nonneg("pair_rate", self.pair_rate)?;
        nonneg("noise_rate", self.noise_rate)?;
        unit_interval("tau_p", self.tau_p)?;
        unit_interval("tau_r", self.tau_r)?;
        if !(self.window > T::zero()) {
            return Err(Error::param("window", format!("must be positive, got {}", self.window)));
        }
        if !self.window_offset.is_finite() || !self.gdd_probe.is_finite() || !self.gdd_ref.is_finite() {
            return Err(Error::param("gdd", "offsets and dispersion must be finite"));
        }
        if self.scheme != Scheme::Dnctd && (self.gdd_probe != T::zero() || self.gdd_ref != T::zero()) {
            return Err(Error::param(
                "gdd",
                format!("{} measures undispersed photons; gdd must be zero", self.scheme),
            ));
        }
        Ok(())
    }

    /// Same measurement under another scheme. Non-dispersive schemes drop the GDD.
    pub fn with_scheme(&self, scheme: Scheme) -> Self {
        let mut out = *self;
        out.scheme = scheme;
        if scheme != Scheme::Dnctd {
            out.gdd_probe = T::zero();
            out.gdd_ref = T::zero();
        }
        out
    }
}

/// Analytic SNR of one scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeSnr<T> {
    pub scheme: Scheme,
    /// Signal counts per second (true coincidences or probe singles).
    pub true_rate: T,
    /// Background counts per second (false coincidences or noise singles).
    pub false_rate: T,
    pub snr: T,
    pub snr_db: T,
    /// Window capture of the true and false densities (1 for CTD).
    pub capture_true: T,
    pub capture_false: T,
    pub diagnostic: Option<String>,
}

/// All three schemes evaluated on a common parameter set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnrResult<T> {
    pub ctd: SchemeSnr<T>,
    pub nctd: SchemeSnr<T>,
    pub dnctd: SchemeSnr<T>,
    pub normalized_noise_power_db: T,
    /// Statistical uncertainty in dB when the result is estimated from counts.
    pub uncertainty_db: Option<T>,
}

impl<T: Scalar> SnrResult<T> {
    pub fn get(&self, scheme: Scheme) -> &SchemeSnr<T> {
        match scheme {
            Scheme::Ctd => &self.ctd,
            Scheme::Nctd => &self.nctd,
            Scheme::Dnctd => &self.dnctd,
        }
    }

    /// `SNR_a − SNR_b` in dB.
    pub fn improvement_db(&self, a: Scheme, b: Scheme) -> T {
        self.get(a).snr_db - self.get(b).snr_db
    }
}

/// Adds Gaussian timing jitter of the given FWHM.
pub fn convolve_jitter<T: Scalar>(d: &Gaussian1D<T>, jitter_fwhm: T) -> Result<Gaussian1D<T>> {
    let s = fwhm_to_sigma(jitter_fwhm)?;
    Ok(Gaussian1D {
        mean: d.mean,
        var: d.var + s * s,
    })
}

/// Probability mass of `d` inside `[offset − w/2, offset + w/2]`.
pub fn window_capture<T: Scalar>(d: &Gaussian1D<T>, w: T, offset: T) -> Result<T> {
    if !(w > T::zero()) {
        return Err(Error::param("window", format!("must be positive, got {w}")));
    }
    if w.is_infinite() {
        return Ok(T::one());
    }
    let half = w / T::lit(2.0);
    if d.var == T::zero() {
        let inside = d.mean >= offset - half && d.mean <= offset + half;
        return Ok(if inside { T::one() } else { T::zero() });
    }
    let scale = d.std() * T::lit(2.0).sqrt();
    let hi = (offset + half - d.mean) / scale;
    let lo = (offset - half - d.mean) / scale;
    Ok(T::lit(0.5) * (hi.erf() - lo.erf()))
}

/// Classical singles SNR `ν·τ_p / N`; infinite when `N = 0`.
pub fn snr_ctd<T: Scalar>(pair_rate: T, tau_p: T, noise_rate: T) -> T {
    if noise_rate == T::zero() {
        return T::infinity();
    }
    pair_rate * tau_p / noise_rate
}

/// Coincidence SNR `ν·τ_p·τ_r / (N·(ν·Δ)·τ_r)`, where `Δ` is the per-trial
/// normalisation (`Δ = 1` when ν and N are expressed per trial). ν and τ_r cancel.
pub fn snr_nctd<T: Scalar>(pair_rate: T, tau_p: T, tau_r: T, noise_rate: T, trial: T) -> T {
    let num = pair_rate * tau_p * tau_r;
    let den = noise_rate * pair_rate * trial * tau_r;
    if den == T::zero() {
        if noise_rate * trial == T::zero() {
            return T::infinity();
        }
        return tau_p / (noise_rate * trial);
    }
    num / den
}

/// `SNR_NCTD / SNR_CTD = 1/(ν·Δ)` in linear units.
pub fn nctd_over_ctd<T: Scalar>(pair_rate: T, trial: T) -> T {
    T::one() / (pair_rate * trial)
}

/// `10·log₁₀(N / (ν·τ_p))`. The normalised probe power is its negation.
pub fn normalized_noise_power<T: Scalar>(noise_rate: T, pair_rate: T, tau_p: T) -> T {
    to_db(noise_rate / (pair_rate * tau_p))
}

pub fn normalized_probe_power<T: Scalar>(noise_rate: T, pair_rate: T, tau_p: T) -> T {
    -normalized_noise_power(noise_rate, pair_rate, tau_p)
}

/// Noise rate giving the requested normalised noise power.
pub fn noise_rate_for<T: Scalar>(normalized_noise_db: T, pair_rate: T, tau_p: T) -> T {
    pair_rate * tau_p * crate::scalar::from_db(normalized_noise_db)
}

/// Jitter-convolved true and false difference-time densities for a scheme.
pub fn coincidence_densities<T: Scalar>(
    cfg: &SchemeConfig<T>,
    detectors: &DetectorPair<T>,
    state: &ChronocyclicGaussian2<T>,
) -> Result<(Gaussian1D<T>, Gaussian1D<T>)> {
    let dispersed = state.apply_gdd_pair(cfg.gdd_probe, cfg.gdd_ref);
    // noise shares the probe's undispersed spectral/temporal distribution
    let noise = state.marginal(Photon::Probe).apply_gdd(cfg.gdd_probe);
    let jitter = detectors.combined_jitter_fwhm();
    let true_d = convolve_jitter(&dispersed.difference_time_density(), jitter)?;
    let false_d = convolve_jitter(
        &false_difference_density(&noise, &dispersed.marginal(Photon::Reference)),
        jitter,
    )?;
    Ok((true_d, false_d))
}

/// Window-resolved analytic SNR of the configured scheme.
pub fn scheme_snr<T: Scalar>(
    cfg: &SchemeConfig<T>,
    source: &SourceModel<T>,
    detectors: &DetectorPair<T>,
    state: &ChronocyclicGaussian2<T>,
) -> Result<SchemeSnr<T>> {
    cfg.validate()?;
    source.validate()?;
    detectors.validate()?;
    let (eta_p, eta_r) = (detectors.probe.efficiency, detectors.reference.efficiency);
    let probe_noise = cfg.noise_rate * eta_p;

    let (true_rate, false_rate, capture_true, capture_false) = match cfg.scheme {
        Scheme::Ctd => (
            cfg.pair_rate * cfg.tau_p * eta_p,
            probe_noise + detectors.probe.dark_rate,
            T::one(),
            T::one(),
        ),
        Scheme::Nctd | Scheme::Dnctd => {
            let (true_d, false_d) = coincidence_densities(cfg, detectors, state)?;
            let pt = window_capture(&true_d, cfg.window, cfg.window_offset)?;
            let pf = window_capture(&false_d, cfg.window, cfg.window_offset)?;
            let ref_click = cfg.pair_rate * cfg.tau_r * eta_r;
            let true_rate = cfg.pair_rate * cfg.tau_p * cfg.tau_r * eta_p * eta_r * pt;
            let w_s = cfg.window * T::lit(1e-12);
            let mut false_rate = match cfg.noise_mode {
                // per-pulse noise clicks × per-pulse reference clicks × rep rate
                NoiseMode::Pulsed => probe_noise * ref_click / source.rep_rate * pf,
                NoiseMode::Cw => probe_noise * ref_click * w_s,
            };
            // dark counts are uncorrelated with everything
            let (dark_p, dark_r) = (detectors.probe.dark_rate, detectors.reference.dark_rate);
            let probe_singles = cfg.pair_rate * cfg.tau_p * eta_p + probe_noise;
            false_rate = false_rate + (dark_p * (ref_click + dark_r) + probe_singles * dark_r) * w_s;
            (true_rate, false_rate, pt, pf)
        }
    };

    let (snr, diagnostic) = if false_rate == T::zero() {
        (
            T::infinity(),
            Some(format!("{}: zero background rate, SNR is unbounded", cfg.scheme)),
        )
    } else {
        (true_rate / false_rate, None)
    };
    Ok(SchemeSnr {
        scheme: cfg.scheme,
        true_rate,
        false_rate,
        snr,
        snr_db: to_db(snr),
        capture_true,
        capture_false,
        diagnostic,
    })
}

/// Evaluates CTD, NCTD and DNCTD. `cfg` supplies the DNCTD dispersion pair; the
/// other schemes are evaluated without dispersion.
pub fn compare_schemes<T: Scalar>(
    cfg: &SchemeConfig<T>,
    source: &SourceModel<T>,
    detectors: &DetectorPair<T>,
    state: &ChronocyclicGaussian2<T>,
) -> Result<SnrResult<T>> {
    let mut dn = *cfg;
    dn.scheme = Scheme::Dnctd;
    Ok(SnrResult {
        ctd: scheme_snr(&cfg.with_scheme(Scheme::Ctd), source, detectors, state)?,
        nctd: scheme_snr(&cfg.with_scheme(Scheme::Nctd), source, detectors, state)?,
        dnctd: scheme_snr(&dn, source, detectors, state)?,
        normalized_noise_power_db: normalized_noise_power(cfg.noise_rate, cfg.pair_rate, cfg.tau_p),
        uncertainty_db: None,
    })
}

/// Window-resolved per-trial normalisation `Δ = P_false / (f_rep · P_true)`,
/// so that `SNR_NCTD / SNR_CTD = 1/(ν·Δ)`.
pub fn trial_normalization<T: Scalar>(nctd: &SchemeSnr<T>, source: &SourceModel<T>) -> T {
    nctd.capture_false / (source.rep_rate * nctd.capture_true)
}

fn nonneg<T: Scalar>(name: &str, v: T) -> Result<()> {
    if !(v >= T::zero()) || !v.is_finite() {
        return Err(Error::param(name, format!("must be finite and non-negative, got {v}")));
    }
    Ok(())
}

fn unit_interval<T: Scalar>(name: &str, v: T) -> Result<()> {
    if !(v >= T::zero() && v <= T::one()) {
        return Err(Error::param(name, format!("must lie in [0, 1], got {v}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn nominal() -> (SchemeConfig<f64>, SourceModel<f64>, DetectorPair<f64>, ChronocyclicGaussian2<f64>) {
        let cfg = SchemeConfig {
            scheme: Scheme::Dnctd,
            pair_rate: 7.6e5,
            tau_p: 0.05,
            tau_r: 0.5,
            noise_rate: 2.0e5,
            noise_mode: NoiseMode::Pulsed,
            window: 200.0,
            window_offset: 0.0,
            gdd_probe: -116.2,
            gdd_ref: 116.2,
        };
        let state = ChronocyclicGaussian2::from_principal_fwhm(0.1, 17.7).unwrap();
        (cfg, SourceModel::default(), DetectorPair::default(), state)
    }

    #[test]
    fn jitter_convolution() {
        let z = Gaussian1D::new(0.0, 0.0).unwrap();
        assert_relative_eq!(convolve_jitter(&z, 83.3).unwrap().std(), 35.374253, epsilon = 1e-5);
        let d = Gaussian1D::new(0.0, 7.73f64.powi(2)).unwrap();
        assert_relative_eq!(convolve_jitter(&d, 83.3).unwrap().std(), 36.208986, epsilon = 1e-5);
        assert_eq!(convolve_jitter(&d, 0.0).unwrap(), d);
    }

    #[test]
    fn capture_probabilities() {
        let d = Gaussian1D::new(0.0, 35.378f64.powi(2)).unwrap();
        assert_relative_eq!(window_capture(&d, 83.3, 0.0).unwrap(), 0.7607, epsilon = 1e-3);
        assert_eq!(window_capture(&d, f64::INFINITY, 0.0).unwrap(), 1.0);
        assert!(window_capture(&d, 1e-9, 0.0).unwrap() < 1e-10);
        assert!(window_capture(&d, 0.0, 0.0).is_err());
        assert!(window_capture(&d, -1.0, 0.0).is_err());
        assert_relative_eq!(window_capture(&d, 1e6, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn closed_form_snrs() {
        assert_relative_eq!(snr_ctd(1e6, 0.1, 1e5), 1.0);
        assert_relative_eq!(snr_ctd(1e6, 0.1, 1e7), 0.01);
        assert_relative_eq!(to_db(snr_ctd(1e6, 0.1, 1e7)), -20.0);
        assert!(snr_ctd(1e6, 0.1, 0.0f64).is_infinite());
        assert_relative_eq!(snr_ctd(1e6, 0.1 * 0.3, 1e5 * 0.3), snr_ctd(1e6, 0.1, 1e5));

        assert_relative_eq!(snr_nctd(1e6, 0.1, 0.5, 1e5, 1e-6), 1.0);
        assert_relative_eq!(snr_nctd(1e6, 0.1, 1.0, 1e5, 1e-6), snr_nctd(1e6, 0.1, 0.5, 1e5, 1e-6));
        assert_relative_eq!(
            snr_nctd(0.01, 0.1, 0.5, 1e-3, 1.0) / snr_ctd(0.01, 0.1, 1e-3),
            1.0 / 0.01,
            max_relative = 1e-12
        );
    }

    #[test]
    fn normalized_powers() {
        assert_relative_eq!(normalized_noise_power(5e3, 1e5, 0.05), 0.0);
        assert_relative_eq!(normalized_noise_power(316.227766 * 5e3, 1e5, 0.05), 25.0, epsilon = 1e-6);
        assert_relative_eq!(normalized_noise_power(7.0 * 5e3, 7.0 * 1e5, 0.05), normalized_noise_power(5e3, 1e5, 0.05));
        assert_relative_eq!(normalized_probe_power(2e3, 1e5, 0.05), -normalized_noise_power(2e3, 1e5, 0.05));
        assert_relative_eq!(noise_rate_for(25.0, 1e5, 0.05), 316.227766 * 5e3, max_relative = 1e-8);
    }

    #[test]
    fn config_validation() {
        let (cfg, ..) = nominal();
        assert!(cfg.validate().is_ok());
        let mut bad = cfg.with_scheme(Scheme::Nctd);
        bad.gdd_probe = -1.0;
        assert!(bad.validate().is_err());
        let mut bad = cfg;
        bad.tau_p = 1.5;
        assert!(bad.validate().is_err());
        let mut bad = cfg;
        bad.window = 0.0;
        assert!(bad.validate().is_err());
        let mut dp = DetectorPair::<f64>::default();
        dp.probe.efficiency = 1.2;
        assert!(dp.validate().is_err());
    }

    #[test]
    fn dnctd_without_gdd_is_nctd() {
        let (cfg, src, det, st) = nominal();
        let mut zero = cfg;
        zero.gdd_probe = 0.0;
        zero.gdd_ref = 0.0;
        let d = scheme_snr(&zero, &src, &det, &st).unwrap();
        let n = scheme_snr(&cfg.with_scheme(Scheme::Nctd), &src, &det, &st).unwrap();
        assert_eq!(d.snr, n.snr);
        assert_eq!(d.true_rate, n.true_rate);
    }

    #[test]
    fn ctd_uses_singles() {
        let (cfg, src, det, st) = nominal();
        let c = scheme_snr(&cfg.with_scheme(Scheme::Ctd), &src, &det, &st).unwrap();
        assert_relative_eq!(c.snr, snr_ctd(cfg.pair_rate, cfg.tau_p, cfg.noise_rate));
        let mut quiet = cfg.with_scheme(Scheme::Ctd);
        quiet.noise_rate = 0.0;
        let q = scheme_snr(&quiet, &src, &det, &st).unwrap();
        assert!(q.snr.is_infinite());
        assert!(q.diagnostic.is_some());
    }

    #[test]
    fn nctd_over_ctd_law_holds_for_window_model() {
        let (cfg, src, det, st) = nominal();
        let r = compare_schemes(&cfg, &src, &det, &st).unwrap();
        let delta = trial_normalization(&r.nctd, &src);
        assert_relative_eq!(r.nctd.snr / r.ctd.snr, nctd_over_ctd(cfg.pair_rate, delta), max_relative = 1e-12);
    }

    #[test]
    fn combined_jitter_is_nominal_value() {
        let d = DetectorPair::<f64>::default();
        assert_relative_eq!(d.combined_jitter_fwhm(), 83.3, max_relative = 1e-12);
    }

    #[test]
    fn scheme_parse() {
        assert_eq!("DNCTD".parse::<Scheme>().unwrap(), Scheme::Dnctd);
        assert!("qi".parse::<Scheme>().is_err());
    }
}
