//! Pulse-by-pulse simulation of the ranging experiment.
//!
//! Pulses are generated in fixed blocks, each with its own random stream, so a
//! run is reproducible from its seed whatever the thread count. Within a block,
//! pulses carrying a pair or a noise burst are reached by geometric skipping
//! rather than by visiting every pulse.

mod deadtime;
mod experiment;

pub use deadtime::{apply_dead_time, nonparalyzable_rate};
pub use experiment::{
    measure_schemes, run_snr_experiment, saturation_compare, saturation_scan, MeasuredSnr, SaturationPoint,
    SaturationTable, SchemeMeasurements,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Geometric, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chrono::Photon;
use crate::detection::{DetectorModel, DetectorPair, NoiseMode, Scheme, SchemeConfig, SourceModel};
use crate::error::{param, Error, Result};
use crate::stream::{Channel, TagStream, Truth};
use crate::{Biphoton, Wavepacket};

/// Defaults: 1560 nm pairs, 17.7 ps / 0.1 ps principal widths, 5 km of ±18 ps/(nm km) fibre.
pub const DEFAULT_TAU_MINUS_FWHM_PS: f64 = 0.1;
pub const DEFAULT_TAU_PLUS_FWHM_PS: f64 = 17.7;
pub const DEFAULT_GDD_PS2: f64 = 116.276_28;

/// Pulses per generation block. Part of the seed contract; changing it changes outputs.
const BLOCK_PULSES: u64 = 1 << 20;
/// Largest supported timestamp, half of `u64` range.
const MAX_TIMESTAMP_PS: f64 = (u64::MAX / 2) as f64;

/// Environmental noise entering the probe detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    pub mode: NoiseMode,
    /// Photons per second at the probe detector input. In pulsed mode the mean
    /// per pulse is `rate / rep_rate`.
    pub rate: f64,
    /// Temporal shape of pulsed noise before dispersion. `None` uses the probe marginal.
    #[serde(skip)]
    pub wavepacket: Option<Wavepacket>,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            mode: NoiseMode::Pulsed,
            rate: 0.0,
            wavepacket: None,
        }
    }
}

impl NoiseModel {
    pub fn per_pulse(&self, source: &SourceModel<f64>) -> f64 {
        self.rate / source.rep_rate
    }
}

/// One experiment: source, channel, noise, dispersion and detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub tau_minus_fwhm: f64,
    pub tau_plus_fwhm: f64,
    pub source: SourceModel<f64>,
    /// ν, pairs per second.
    pub pair_rate: f64,
    pub tau_p: f64,
    pub tau_r: f64,
    pub noise: NoiseModel,
    pub gdd_probe: f64,
    pub gdd_ref: f64,
    pub detectors: DetectorPair<f64>,
    /// Extra delay of the probe arm (time of flight), ps. Pulsed noise shares it.
    pub probe_delay: f64,
    pub reference_delay: f64,
    /// Coincidence window width and centre, ps.
    pub window: f64,
    pub window_offset: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tau_minus_fwhm: DEFAULT_TAU_MINUS_FWHM_PS,
            tau_plus_fwhm: DEFAULT_TAU_PLUS_FWHM_PS,
            source: SourceModel::default(),
            pair_rate: 7.6e5,
            tau_p: 1.0,
            tau_r: 1.0,
            noise: NoiseModel::default(),
            gdd_probe: -DEFAULT_GDD_PS2,
            gdd_ref: DEFAULT_GDD_PS2,
            detectors: DetectorPair::default(),
            probe_delay: 0.0,
            reference_delay: 0.0,
            window: 200.0,
            window_offset: 0.0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.detectors.validate()?;
        self.biphoton()?;
        let finite_nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(param(name, format!("must be finite and non-negative, got {v}")))
            }
        };
        finite_nonneg("pair_rate", self.pair_rate)?;
        finite_nonneg("noise.rate", self.noise.rate)?;
        for (name, v) in [("tau_p", self.tau_p), ("tau_r", self.tau_r)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(param(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        for (name, v) in [
            ("gdd_probe", self.gdd_probe),
            ("gdd_ref", self.gdd_ref),
            ("probe_delay", self.probe_delay),
            ("reference_delay", self.reference_delay),
            ("window_offset", self.window_offset),
        ] {
            if !v.is_finite() {
                return Err(param(name, "must be finite"));
            }
        }
        if !(self.window > 0.0) {
            return Err(param("window", format!("must be positive, got {}", self.window)));
        }
        let mu = self.pair_probability();
        if mu > 1.0 {
            return Err(param("pair_rate", format!("{mu} pairs per pulse exceeds one")));
        }
        if mu > 0.1 {
            log::warn!("{mu:.3} pairs per pulse; multi-pair emission is not modelled");
        }
        Ok(())
    }

    pub fn pair_probability(&self) -> f64 {
        self.source.pair_probability(self.pair_rate)
    }

    /// Undispersed biphoton state.
    pub fn biphoton(&self) -> Result<Biphoton> {
        Biphoton::from_principal_fwhm(self.tau_minus_fwhm, self.tau_plus_fwhm)
    }

    /// The same experiment under `scheme`; only DNCTD keeps the dispersion.
    pub fn for_scheme(&self, scheme: Scheme) -> Self {
        let mut out = self.clone();
        if scheme != Scheme::Dnctd {
            out.gdd_probe = 0.0;
            out.gdd_ref = 0.0;
        }
        out
    }

    /// Analytic counterpart used by [`crate::detection::scheme_snr`].
    pub fn scheme_config(&self, scheme: Scheme) -> SchemeConfig<f64> {
        let c = self.for_scheme(scheme);
        SchemeConfig {
            scheme,
            pair_rate: c.pair_rate,
            tau_p: c.tau_p,
            tau_r: c.tau_r,
            noise_rate: c.noise.rate,
            noise_mode: c.noise.mode,
            window: c.window,
            window_offset: c.window_offset - (c.probe_delay - c.reference_delay),
            gdd_probe: c.gdd_probe,
            gdd_ref: c.gdd_ref,
        }
    }

    /// Expected centre of the true coincidence peak (probe minus reference), ps.
    pub fn peak_offset(&self) -> f64 {
        self.probe_delay - self.reference_delay
    }
}

/// Independent random stream for one (component, block) of a run.
fn component_rng(seed: u64, component: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(component.wrapping_add(1))));
    rng.set_stream(block);
    rng
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed, e.g. for a companion run.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    splitmix(seed ^ splitmix(salt.wrapping_mul(0xA076_1D64_78BD_642F)))
}

const PAIRS: u64 = 0;
const NOISE: u64 = 1;
const DARK_PROBE: u64 = 2;
const DARK_REF: u64 = 3;

/// Precomputed sampling parameters shared by all blocks.
struct Plan {
    period: f64,
    mu: f64,
    mean: [f64; 2],
    chol: [f64; 3],
    noise_mean: f64,
    noise_std: f64,
    noise_lambda: f64,
    probe: DetectorModel<f64>,
    reference: DetectorModel<f64>,
    jitter: [f64; 2],
    cfg: RunConfig,
}

impl Plan {
    fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let state = cfg.biphoton()?;
        let dispersed = state.apply_gdd_pair(cfg.gdd_probe, cfg.gdd_ref);
        let (mean, cov) = dispersed.arrival_times();
        let l11 = cov[0][0].sqrt();
        let l21 = cov[1][0] / l11;
        let l22 = (cov[1][1] - l21 * l21).max(0.0).sqrt();
        let noise_wp = cfg.noise.wavepacket.unwrap_or_else(|| state.marginal(Photon::Probe));
        let noise_t = noise_wp.apply_gdd(cfg.gdd_probe).arrival_density();
        Ok(Self {
            period: cfg.source.period_ps(),
            mu: cfg.pair_probability(),
            mean,
            chol: [l11, l21, l22],
            noise_mean: noise_t.mean,
            noise_std: noise_t.std(),
            noise_lambda: cfg.noise.per_pulse(&cfg.source),
            probe: cfg.detectors.probe,
            reference: cfg.detectors.reference,
            jitter: [cfg.detectors.probe.jitter_sigma(), cfg.detectors.reference.jitter_sigma()],
            cfg: cfg.clone(),
        })
    }

    fn pulse_time(&self, k: u64) -> f64 {
        (k + 1) as f64 * self.period
    }
}

#[derive(Default)]
struct BlockOut {
    probe: Vec<(u64, Truth)>,
    reference: Vec<(u64, Truth)>,
}

fn to_timestamp(t: f64) -> u64 {
    t.round().max(0.0) as u64
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Pulse indices in `[from, to)` selected independently with probability `p`.
fn bernoulli_pulses(rng: &mut ChaCha8Rng, p: f64, from: u64, to: u64, mut f: impl FnMut(&mut ChaCha8Rng, u64)) {
    if !(p > 0.0) {
        return;
    }
    let geo = Geometric::new(p.min(1.0)).expect("probability in (0, 1]");
    let mut k = from;
    loop {
        let skip = geo.sample(rng);
        k = match k.checked_add(skip) {
            Some(k) if k < to => k,
            _ => return,
        };
        f(rng, k);
        k += 1;
    }
}

/// Poisson count conditioned on being at least one.
fn zero_truncated_poisson(rng: &mut ChaCha8Rng, lambda: f64, p_any: f64) -> u64 {
    if lambda > 30.0 {
        let pois = Poisson::new(lambda).expect("positive mean");
        loop {
            let n = pois.sample(rng) as u64;
            if n > 0 {
                return n;
            }
        }
    }
    let u: f64 = rng.random();
    let mut k = 1u64;
    let mut p = lambda * (-lambda).exp() / p_any;
    let mut cdf = p;
    while u > cdf && p > 0.0 {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
    }
    k
}

/// Homogeneous Poisson arrivals over `[t0, t1)` ps at `rate` per second.
fn poisson_process(rng: &mut ChaCha8Rng, rate: f64, t0: f64, t1: f64, mut f: impl FnMut(&mut ChaCha8Rng, f64)) {
    if !(rate > 0.0) {
        return;
    }
    let exp = Exp::new(rate * 1e-12).expect("positive rate");
    let mut t = t0;
    loop {
        t += exp.sample(rng);
        if t >= t1 {
            return;
        }
        f(rng, t);
    }
}

fn simulate_block(plan: &Plan, seed: u64, block: u64, from: u64, to: u64) -> BlockOut {
    let cfg = &plan.cfg;
    let mut out = BlockOut::default();

    let mut rng = component_rng(seed, PAIRS, block);
    bernoulli_pulses(&mut rng, plan.mu, from, to, |rng, k| {
        let t0 = plan.pulse_time(k);
        let (z1, z2) = (normal(rng), normal(rng));
        let tp = t0 + cfg.probe_delay + plan.mean[0] + plan.chol[0] * z1;
        let tr = t0 + cfg.reference_delay + plan.mean[1] + plan.chol[1] * z1 + plan.chol[2] * z2;
        let probe_ok = rng.random_bool(cfg.tau_p) && rng.random_bool(plan.probe.efficiency);
        let ref_ok = rng.random_bool(cfg.tau_r) && rng.random_bool(plan.reference.efficiency);
        let (jp, jr) = (plan.jitter[0] * normal(rng), plan.jitter[1] * normal(rng));
        if probe_ok {
            out.probe.push((to_timestamp(tp + jp), Truth::Pair(k)));
        }
        if ref_ok {
            out.reference.push((to_timestamp(tr + jr), Truth::Pair(k)));
        }
    });

    let mut rng = component_rng(seed, NOISE, block);
    match cfg.noise.mode {
        NoiseMode::Pulsed => {
            let lambda = plan.noise_lambda;
            let p_any = -(-lambda).exp_m1();
            bernoulli_pulses(&mut rng, p_any, from, to, |rng, k| {
                let n = zero_truncated_poisson(rng, lambda, p_any);
                let t0 = plan.pulse_time(k) + cfg.probe_delay + plan.noise_mean;
                for _ in 0..n {
                    let t = t0 + plan.noise_std * normal(rng);
                    if rng.random_bool(plan.probe.efficiency) {
                        let j = plan.jitter[0] * normal(rng);
                        out.probe.push((to_timestamp(t + j), Truth::Noise));
                    }
                }
            });
        }
        NoiseMode::Cw => {
            let (t0, t1) = (from as f64 * plan.period, to as f64 * plan.period);
            poisson_process(&mut rng, cfg.noise.rate, t0, t1, |rng, t| {
                if rng.random_bool(plan.probe.efficiency) {
                    let j = plan.jitter[0] * normal(rng);
                    out.probe.push((to_timestamp(t + j), Truth::Noise));
                }
            });
        }
    }

    let (t0, t1) = (from as f64 * plan.period, to as f64 * plan.period);
    let mut rng = component_rng(seed, DARK_PROBE, block);
    poisson_process(&mut rng, plan.probe.dark_rate, t0, t1, |_, t| {
        out.probe.push((to_timestamp(t), Truth::Dark));
    });
    let mut rng = component_rng(seed, DARK_REF, block);
    poisson_process(&mut rng, plan.reference.dark_rate, t0, t1, |_, t| {
        out.reference.push((to_timestamp(t), Truth::Dark));
    });
    out
}

/// Number of pulses in a run of `duration` seconds.
pub fn pulses_for(cfg: &RunConfig, duration: f64) -> Result<u64> {
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(param("duration", format!("must be finite and non-negative, got {duration}")));
    }
    let n = (duration * cfg.source.rep_rate).round();
    if n >= 2f64.powi(53) {
        return Err(Error::Overflow(format!("{n:e} pulses")));
    }
    Ok(n as u64)
}

/// Simulates `duration` seconds and returns the (probe, reference) streams.
pub fn simulate_run(cfg: &RunConfig, duration: f64, seed: u64) -> Result<(TagStream, TagStream)> {
    let n = pulses_for(cfg, duration)?;
    simulate_pulses(cfg, n, seed)
}

/// Simulates `n_pulses` source pulses; pulse `k` is emitted at `(k + 1)` periods.
pub fn simulate_pulses(cfg: &RunConfig, n_pulses: u64, seed: u64) -> Result<(TagStream, TagStream)> {
    let plan = Plan::new(cfg)?;
    let span = (n_pulses as f64 + 2.0) * plan.period
        + cfg.probe_delay.abs()
        + cfg.reference_delay.abs()
        + plan.noise_mean.abs()
        + 40.0 * plan.noise_std.max(plan.chol[0]);
    if span >= MAX_TIMESTAMP_PS {
        return Err(Error::Overflow(format!(
            "run spans {span:e} ps, beyond the {MAX_TIMESTAMP_PS:e} ps timestamp range"
        )));
    }
    let blocks = n_pulses.div_ceil(BLOCK_PULSES);
    let parts: Vec<BlockOut> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let from = b * BLOCK_PULSES;
            simulate_block(&plan, seed, b, from, (from + BLOCK_PULSES).min(n_pulses))
        })
        .collect();
    let (mut probe, mut reference) = (Vec::new(), Vec::new());
    for p in parts {
        probe.extend(p.probe);
        reference.extend(p.reference);
    }
    let probe = TagStream::from_unsorted(Channel::Probe, probe);
    let reference = TagStream::from_unsorted(Channel::Reference, reference);
    Ok((
        apply_dead_time(&probe, plan.probe.dead_time_ns),
        apply_dead_time(&reference, plan.reference.dead_time_ns),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.detectors.probe.dead_time_ns = 0.0;
        cfg.detectors.reference.dead_time_ns = 0.0;
        cfg
    }

    #[test]
    fn no_pairs_no_noise_is_empty() {
        let mut cfg = quiet();
        cfg.pair_rate = 0.0;
        let (p, r) = simulate_pulses(&cfg, 100_000, 1).unwrap();
        assert!(p.is_empty() && r.is_empty());
    }

    #[test]
    fn same_seed_same_streams() {
        let mut cfg = quiet();
        cfg.noise.rate = 1e6;
        let a = simulate_pulses(&cfg, 3 * BLOCK_PULSES / 2, 9).unwrap();
        let b = simulate_pulses(&cfg, 3 * BLOCK_PULSES / 2, 9).unwrap();
        let c = simulate_pulses(&cfg, 3 * BLOCK_PULSES / 2, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
        a.0.check_sorted().unwrap();
        a.1.check_sorted().unwrap();
    }

    #[test]
    fn pair_count_is_binomial() {
        let cfg = quiet();
        let n = 1_000_000u64;
        let (p, r) = simulate_pulses(&cfg, n, 3).unwrap();
        let mu = cfg.pair_probability();
        let mean = n as f64 * mu;
        let sd = (mean * (1.0 - mu)).sqrt();
        assert_eq!(p.len(), r.len());
        assert!((p.len() as f64 - mean).abs() < 5.0 * sd, "{} vs {mean}", p.len());
    }

    #[test]
    fn noise_only_count_is_poisson() {
        let mut cfg = quiet();
        cfg.pair_rate = 0.0;
        for mode in [NoiseMode::Pulsed, NoiseMode::Cw] {
            cfg.noise = NoiseModel {
                mode,
                rate: 3e7,
                wavepacket: None,
            };
            let duration = 0.01;
            let (p, r) = simulate_run(&cfg, duration, 5).unwrap();
            let expected = cfg.noise.rate * duration;
            assert!(r.is_empty());
            assert!((p.len() as f64 - expected).abs() < 5.0 * expected.sqrt(), "{mode:?}: {}", p.len());
            assert!(p.truth().iter().all(|t| *t == Truth::Noise));
        }
    }

    #[test]
    fn zero_truncated_poisson_mean() {
        let mut rng = component_rng(1, 0, 0);
        for lambda in [0.01f64, 1.0, 5.0, 50.0] {
            let p_any = -(-lambda).exp_m1();
            let n = 20_000;
            let sum: u64 = (0..n).map(|_| zero_truncated_poisson(&mut rng, lambda, p_any)).sum();
            let mean = sum as f64 / n as f64;
            let expect = lambda / p_any;
            let var = (lambda + lambda * lambda) / p_any - expect * expect;
            assert!((mean - expect).abs() < 5.0 * (var / n as f64).sqrt() + 1e-9, "{lambda}: {mean}");
        }
    }

    #[test]
    fn overflow_is_guarded() {
        let cfg = quiet();
        assert!(matches!(simulate_run(&cfg, 1e12, 1), Err(Error::Overflow(_))));
        assert!(simulate_run(&cfg, -1.0, 1).is_err());
    }
}
