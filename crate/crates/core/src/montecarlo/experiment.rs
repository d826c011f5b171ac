//! Target-present / target-absent SNR measurements and detector saturation scans.

use serde::{Deserialize, Serialize};

use super::{derive_seed, nonparalyzable_rate, simulate_run, NoiseModel, RunConfig};
use crate::detection::{NoiseMode, Scheme};
use crate::error::{param, Result};
use crate::scalar::to_db;
use crate::tagcount::count_in_window;

const DB_PER_NEPER: f64 = 10.0 / std::f64::consts::LN_10;

/// SNR of one scheme estimated from a pair of simulated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredSnr {
    pub scheme: Scheme,
    /// Counts with the target present (singles for CTD, windowed coincidences otherwise).
    pub present: u64,
    /// Counts with the target removed (`tau_p = 0`).
    pub absent: u64,
    pub snr: f64,
    pub snr_db: f64,
    /// One-sigma Poisson uncertainty of `snr_db`; NaN when undefined.
    pub err_db: f64,
    /// No background counts were recorded, so the SNR is unbounded.
    pub noise_floor_limited: bool,
}

impl MeasuredSnr {
    pub fn from_counts(scheme: Scheme, present: u64, absent: u64) -> Self {
        let (p, a) = (present as f64, absent as f64);
        if absent == 0 {
            return Self {
                scheme,
                present,
                absent,
                snr: f64::INFINITY,
                snr_db: f64::INFINITY,
                err_db: f64::NAN,
                noise_floor_limited: true,
            };
        }
        let snr = (p - a) / a;
        // var(S) = P/A² + P²/A³ for independent Poisson P and A
        let sd = (p / (a * a) + p * p / (a * a * a)).sqrt();
        let err_db = if snr > 0.0 { DB_PER_NEPER * sd / snr } else { f64::NAN };
        Self {
            scheme,
            present,
            absent,
            snr,
            snr_db: to_db(snr),
            err_db,
            noise_floor_limited: false,
        }
    }

    /// One-sigma uncertainty of the linear SNR.
    pub fn err_linear(&self) -> f64 {
        let (p, a) = (self.present as f64, self.absent as f64);
        (p / (a * a) + p * p / (a * a * a)).sqrt()
    }
}

fn counts(cfg: &RunConfig, scheme: Scheme, duration: f64, seed: u64) -> Result<u64> {
    let (probe, reference) = simulate_run(cfg, duration, seed)?;
    match scheme {
        Scheme::Ctd => Ok(probe.len() as u64),
        _ => count_in_window(&probe, &reference, cfg.window, cfg.window_offset),
    }
}

/// Target-present run followed by an independent target-absent run.
pub fn run_snr_experiment(cfg: &RunConfig, scheme: Scheme, duration: f64, seed: u64) -> Result<MeasuredSnr> {
    let present_cfg = cfg.for_scheme(scheme);
    let mut absent_cfg = present_cfg.clone();
    absent_cfg.tau_p = 0.0;
    let present = counts(&present_cfg, scheme, duration, seed)?;
    let absent = counts(&absent_cfg, scheme, duration, derive_seed(seed, 1))?;
    Ok(MeasuredSnr::from_counts(scheme, present, absent))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeMeasurements {
    pub ctd: MeasuredSnr,
    pub nctd: MeasuredSnr,
    pub dnctd: MeasuredSnr,
}

impl SchemeMeasurements {
    pub fn get(&self, scheme: Scheme) -> &MeasuredSnr {
        match scheme {
            Scheme::Ctd => &self.ctd,
            Scheme::Nctd => &self.nctd,
            Scheme::Dnctd => &self.dnctd,
        }
    }
}

/// Measures all three schemes. CTD and NCTD share the undispersed runs.
pub fn measure_schemes(cfg: &RunConfig, duration: f64, seed: u64) -> Result<SchemeMeasurements> {
    let plain = cfg.for_scheme(Scheme::Nctd);
    let mut plain_absent = plain.clone();
    plain_absent.tau_p = 0.0;
    let (pp, pr) = simulate_run(&plain, duration, seed)?;
    let (ap, ar) = simulate_run(&plain_absent, duration, derive_seed(seed, 1))?;
    let ctd = MeasuredSnr::from_counts(Scheme::Ctd, pp.len() as u64, ap.len() as u64);
    let nctd = MeasuredSnr::from_counts(
        Scheme::Nctd,
        count_in_window(&pp, &pr, cfg.window, cfg.window_offset)?,
        count_in_window(&ap, &ar, cfg.window, cfg.window_offset)?,
    );
    let dnctd = run_snr_experiment(cfg, Scheme::Dnctd, duration, derive_seed(seed, 2))?;
    Ok(SchemeMeasurements { ctd, nctd, dnctd })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationPoint {
    /// Click rate the detector would register without dead time, per second.
    pub offered_rate: f64,
    pub accepted_rate: f64,
    /// Closed-form non-paralyzable rate for Poisson input, for reference.
    pub poisson_model_rate: f64,
}

impl SaturationPoint {
    /// Accepted over offered rate in dB (≤ 0).
    pub fn compression_db(&self) -> f64 {
        to_db(self.accepted_rate / self.offered_rate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationTable {
    pub mode: NoiseMode,
    pub dead_time_ns: f64,
    pub points: Vec<SaturationPoint>,
    /// Offered rate at which the accepted rate is 3 dB below the linear extrapolation.
    pub onset_rate: Option<f64>,
}

/// Sweeps the noise intensity through the probe detector. `noise_rates` are
/// photon rates at the detector input, in increasing order.
pub fn saturation_scan(
    cfg: &RunConfig,
    mode: NoiseMode,
    noise_rates: &[f64],
    duration: f64,
    seed: u64,
) -> Result<SaturationTable> {
    if noise_rates.windows(2).any(|w| w[1] <= w[0]) {
        return Err(param("noise_levels", "must be strictly increasing"));
    }
    let det = cfg.detectors.probe;
    let mut points = Vec::with_capacity(noise_rates.len());
    for (i, &rate) in noise_rates.iter().enumerate() {
        let mut c = cfg.clone();
        c.pair_rate = 0.0;
        c.noise = NoiseModel {
            mode,
            rate,
            wavepacket: cfg.noise.wavepacket,
        };
        let (probe, _) = simulate_run(&c, duration, derive_seed(seed, 100 + i as u64))?;
        let offered = rate * det.efficiency + det.dark_rate;
        points.push(SaturationPoint {
            offered_rate: offered,
            accepted_rate: probe.len() as f64 / duration,
            poisson_model_rate: nonparalyzable_rate(offered, det.dead_time_ns),
        });
    }
    let onset_rate = find_onset(&points);
    Ok(SaturationTable {
        mode,
        dead_time_ns: det.dead_time_ns,
        points,
        onset_rate,
    })
}

/// First −3 dB crossing, interpolated linearly in log offered rate.
fn find_onset(points: &[SaturationPoint]) -> Option<f64> {
    let target = -3.0;
    let mut prev: Option<&SaturationPoint> = None;
    for p in points.iter().filter(|p| p.offered_rate > 0.0 && p.accepted_rate > 0.0) {
        let c = p.compression_db();
        if c <= target {
            return Some(match prev {
                None => p.offered_rate,
                Some(q) => {
                    let cq = q.compression_db();
                    let f = (target - cq) / (c - cq);
                    (q.offered_rate.ln() + f * (p.offered_rate.ln() - q.offered_rate.ln())).exp()
                }
            });
        }
        prev = Some(p);
    }
    None
}

/// Onsets for pulsed and cw noise with identical detectors.
pub fn saturation_compare(
    cfg: &RunConfig,
    noise_rates: &[f64],
    duration: f64,
    seed: u64,
) -> Result<(SaturationTable, SaturationTable)> {
    Ok((
        saturation_scan(cfg, NoiseMode::Pulsed, noise_rates, duration, seed)?,
        saturation_scan(cfg, NoiseMode::Cw, noise_rates, duration, derive_seed(seed, 7))?,
    ))
}
