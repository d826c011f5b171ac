//! Grid-based propagation of a Gaussian joint spectral amplitude through
//! quadratic spectral phase, used to cross-check the closed-form moment model.
//!
//! The amplitude is sampled on the rotated frequency grid
//! `Ω± = (ω_p ± ω_r)/2`, whose conjugate times are `T± = t_p ± t_r`.
//! Each axis gets its own resolution: the difference axis needs sub-ps
//! resolution while the sum axis must span the full dispersed support.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::chrono::fwhm_to_sigma;
use crate::error::{Error, Result};

/// Fraction of the total weight allowed in the outer band of any grid axis.
pub const EDGE_LEAK_THRESHOLD: f64 = 1e-6;

/// Width of the outer band, as a fraction of the axis length, checked for leakage.
const EDGE_BAND: f64 = 0.02;

const MAX_POINTS: usize = 60_000_000;

/// One sampled axis: `n` points with spacing `step` centred on zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub n: usize,
    pub step: f64,
}

impl Axis {
    fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.step
    }

    /// Conjugate time axis of a frequency axis.
    fn conjugate(&self) -> Axis {
        Axis {
            n: self.n,
            step: 2.0 * PI / (self.n as f64 * self.step),
        }
    }

    /// Sizes an axis so that `±k·σ` is covered in both the frequency and the
    /// conjugate time domain.
    fn covering(sigma_omega: f64, sigma_t: f64, k: f64) -> Axis {
        let range_t = 2.0 * k * sigma_t;
        let range_w = 2.0 * k * sigma_omega;
        let n = ((range_t * range_w / (2.0 * PI)).ceil() as usize).max(64);
        let n = n + n % 2;
        Axis {
            n,
            step: 2.0 * PI / range_t,
        }
    }
}

/// Discretised Gaussian joint spectral amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsaGrid {
    pub tau_minus_fwhm: f64,
    pub tau_plus_fwhm: f64,
    /// Frequency axis for `Ω+ = (ω_p + ω_r)/2`.
    pub omega_plus: Axis,
    /// Frequency axis for `Ω− = (ω_p − ω_r)/2`.
    pub omega_minus: Axis,
}

impl JsaGrid {
    /// Picks axes wide and fine enough for the given dispersion pair.
    /// `k` is the half-width of the covered region in standard deviations.
    pub fn auto(tau_minus_fwhm: f64, tau_plus_fwhm: f64, gdd_probe: f64, gdd_ref: f64, k: f64) -> Result<Self> {
        let sm = fwhm_to_sigma(tau_minus_fwhm)?;
        let sp = fwhm_to_sigma(tau_plus_fwhm)?;
        if sm <= 0.0 || sp <= 0.0 {
            return Err(Error::param("tau", "JSA widths must be positive"));
        }
        let (wm, wp) = (0.5 / sm, 0.5 / sp);
        let (gs, gd) = (gdd_probe + gdd_ref, gdd_probe - gdd_ref);
        // conservative support estimate: T− picks up gs·Ω− and gd·Ω+, T+ the converse
        let t_minus = (sm * sm + (gs * wm).powi(2) + (gd * wp).powi(2)).sqrt();
        let t_plus = (sp * sp + (gs * wp).powi(2) + (gd * wm).powi(2)).sqrt();
        Ok(Self {
            tau_minus_fwhm,
            tau_plus_fwhm,
            omega_plus: Axis::covering(wp, t_plus, k),
            omega_minus: Axis::covering(wm, t_minus, k),
        })
    }

    pub fn points(&self) -> usize {
        self.omega_plus.n * self.omega_minus.n
    }
}

/// Sampled joint arrival density on the `(T+, T−)` grid, normalised to unit sum.
#[derive(Debug, Clone)]
pub struct JointArrivalDensity {
    pub t_plus: Axis,
    pub t_minus: Axis,
    /// Row-major, `t_plus.n` rows of `t_minus.n` samples.
    pub weights: Vec<f64>,
}

/// First and second moments of the sampled density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledMoments {
    pub mean_plus: f64,
    pub mean_minus: f64,
    pub var_plus: f64,
    pub var_minus: f64,
    pub cov_plus_minus: f64,
}

impl SampledMoments {
    /// `Var(t_p − t_r)`
    pub fn var_difference(&self) -> f64 {
        self.var_minus
    }

    pub fn var_probe(&self) -> f64 {
        (self.var_plus + self.var_minus + 2.0 * self.cov_plus_minus) / 4.0
    }

    pub fn var_reference(&self) -> f64 {
        (self.var_plus + self.var_minus - 2.0 * self.cov_plus_minus) / 4.0
    }

    pub fn cov_probe_reference(&self) -> f64 {
        (self.var_plus - self.var_minus) / 4.0
    }
}

impl JointArrivalDensity {
    pub fn moments(&self) -> SampledMoments {
        let (np, nm) = (self.t_plus.n, self.t_minus.n);
        let mut m = [0.0f64; 2];
        for i in 0..np {
            let tp = self.t_plus.coord(i);
            let row = &self.weights[i * nm..(i + 1) * nm];
            for (j, &w) in row.iter().enumerate() {
                m[0] += w * tp;
                m[1] += w * self.t_minus.coord(j);
            }
        }
        let (mut vp, mut vm, mut c) = (0.0, 0.0, 0.0);
        for i in 0..np {
            let dp = self.t_plus.coord(i) - m[0];
            let row = &self.weights[i * nm..(i + 1) * nm];
            for (j, &w) in row.iter().enumerate() {
                let dm = self.t_minus.coord(j) - m[1];
                vp += w * dp * dp;
                vm += w * dm * dm;
                c += w * dp * dm;
            }
        }
        SampledMoments {
            mean_plus: m[0],
            mean_minus: m[1],
            var_plus: vp,
            var_minus: vm,
            cov_plus_minus: c,
        }
    }

    /// Weight at the `(T+, T−)` grid point.
    pub fn at(&self, i_plus: usize, i_minus: usize) -> f64 {
        self.weights[i_plus * self.t_minus.n + i_minus]
    }
}

fn edge_leak_2d(weights: &[f64], rows: usize, cols: usize) -> f64 {
    let total: f64 = weights.iter().sum();
    let br = ((rows as f64 * EDGE_BAND).ceil() as usize).max(1);
    let bc = ((cols as f64 * EDGE_BAND).ceil() as usize).max(1);
    let mut edge = 0.0;
    for i in 0..rows {
        let row_edge = i < br || i >= rows - br;
        for j in 0..cols {
            if row_edge || j < bc || j >= cols - bc {
                edge += weights[i * cols + j];
            }
        }
    }
    edge / total
}

fn fft_rows(data: &mut [Complex64], rows: usize, cols: usize, planner: &mut FftPlanner<f64>) {
    let fft = planner.plan_fft_forward(cols);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for r in 0..rows {
        fft.process_with_scratch(&mut data[r * cols..(r + 1) * cols], &mut scratch);
    }
}

fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    out[c * rows + r] = data[r * cols + c];
                }
            }
        }
    }
    out
}

/// Phase factor that centres a DFT on index `n/2` in the conjugate domain.
fn centring(k: usize, n: usize) -> Complex64 {
    let c = (n / 2) as f64;
    Complex64::from_polar(1.0, 2.0 * PI * c * k as f64 / n as f64)
}

/// Builds the discretised pure JSA, multiplies the per-photon quadratic phases
/// `exp(i·gdd·ω²/2)`, transforms to time and returns `|ψ(T+, T−)|²`.
pub fn numeric_propagate(grid: &JsaGrid, gdd_probe: f64, gdd_ref: f64) -> Result<JointArrivalDensity> {
    let sm = fwhm_to_sigma(grid.tau_minus_fwhm)?;
    let sp = fwhm_to_sigma(grid.tau_plus_fwhm)?;
    if sm <= 0.0 || sp <= 0.0 {
        return Err(Error::param("tau", "JSA widths must be positive"));
    }
    let (ap, am) = (grid.omega_plus, grid.omega_minus);
    let points = grid.points();
    if points > MAX_POINTS {
        return Err(Error::GridTooLarge {
            points,
            limit: MAX_POINTS,
        });
    }

    let mut spectral_weight = vec![0.0f64; points];
    let mut data = vec![Complex64::new(0.0, 0.0); points];
    for i in 0..ap.n {
        let wp = ap.coord(i);
        let ci = centring(i, ap.n);
        for j in 0..am.n {
            let wm = am.coord(j);
            let magnitude = (-(sp * wp).powi(2) - (sm * wm).powi(2)).exp();
            let (w_probe, w_ref) = (wp + wm, wp - wm);
            let phase = 0.5 * (gdd_probe * w_probe * w_probe + gdd_ref * w_ref * w_ref);
            spectral_weight[i * am.n + j] = magnitude * magnitude;
            data[i * am.n + j] = Complex64::from_polar(magnitude, phase) * ci * centring(j, am.n);
        }
    }
    let leak = edge_leak_2d(&spectral_weight, ap.n, am.n);
    if leak > EDGE_LEAK_THRESHOLD {
        return Err(Error::Aliasing { leak });
    }
    drop(spectral_weight);

    let mut planner = FftPlanner::new();
    fft_rows(&mut data, ap.n, am.n, &mut planner);
    let mut data = transpose(&data, ap.n, am.n);
    fft_rows(&mut data, am.n, ap.n, &mut planner);

    // data is now [T− row][T+ col]; store as [T+ row][T− col]
    let mut weights = vec![0.0f64; points];
    for r in 0..am.n {
        for c in 0..ap.n {
            weights[c * am.n + r] = data[r * ap.n + c].norm_sqr();
        }
    }
    drop(data);
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);

    let leak = edge_leak_2d(&weights, ap.n, am.n);
    if leak > EDGE_LEAK_THRESHOLD {
        return Err(Error::Aliasing { leak });
    }
    Ok(JointArrivalDensity {
        t_plus: ap.conjugate(),
        t_minus: am.conjugate(),
        weights,
    })
}

/// Sampled arrival density of a single transform-limited wavepacket after GDD.
#[derive(Debug, Clone)]
pub struct ArrivalSamples {
    pub t: Axis,
    pub weights: Vec<f64>,
}

impl ArrivalSamples {
    pub fn mean_var(&self) -> (f64, f64) {
        let mean: f64 = self.weights.iter().enumerate().map(|(i, w)| w * self.t.coord(i)).sum();
        let var = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * (self.t.coord(i) - mean).powi(2))
            .sum();
        (mean, var)
    }
}

/// 1-D analogue of [`numeric_propagate`] for a pure chirp-free wavepacket with
/// intensity FWHM `fwhm` in time.
pub fn numeric_propagate_single(fwhm: f64, gdd: f64, k: f64) -> Result<ArrivalSamples> {
    let sigma = fwhm_to_sigma(fwhm)?;
    if sigma <= 0.0 {
        return Err(Error::param("fwhm", "must be positive"));
    }
    let sw = 0.5 / sigma;
    let st = (sigma * sigma + (gdd * sw).powi(2)).sqrt();
    let axis = Axis::covering(sw, st, k);
    let spectral: Vec<f64> = (0..axis.n).map(|i| (-2.0 * (sigma * axis.coord(i)).powi(2)).exp()).collect();
    let edge = |v: &[f64]| {
        let b = ((v.len() as f64 * EDGE_BAND).ceil() as usize).max(1);
        let total: f64 = v.iter().sum();
        (v[..b].iter().sum::<f64>() + v[v.len() - b..].iter().sum::<f64>()) / total
    };
    let leak = edge(&spectral);
    if leak > EDGE_LEAK_THRESHOLD {
        return Err(Error::Aliasing { leak });
    }
    let mut data: Vec<Complex64> = (0..axis.n)
        .map(|i| {
            let w = axis.coord(i);
            Complex64::from_polar((-(sigma * w).powi(2)).exp(), 0.5 * gdd * w * w) * centring(i, axis.n)
        })
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(axis.n).process(&mut data);
    let mut weights: Vec<f64> = data.iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let leak = edge(&weights);
    if leak > EDGE_LEAK_THRESHOLD {
        return Err(Error::Aliasing { leak });
    }
    Ok(ArrivalSamples {
        t: axis.conjugate(),
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chrono::{ChronocyclicGaussian1, ChronocyclicGaussian2};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn undispersed_pair_matches_moment_model() {
        let grid = JsaGrid::auto(0.1, 17.7, 0.0, 0.0, 6.5).unwrap();
        let m = numeric_propagate(&grid, 0.0, 0.0).unwrap().moments();
        let s = ChronocyclicGaussian2::from_principal_fwhm(0.1, 17.7).unwrap();
        assert!(rel(m.var_difference(), s.difference_time_density().var) < 1e-6);
        assert!(m.mean_minus.abs() < 1e-9);
    }

    #[test]
    fn small_chirped_pair_matches_moment_model() {
        let (gp, gr) = (-3.0, 1.5);
        let grid = JsaGrid::auto(0.5, 4.0, gp, gr, 6.5).unwrap();
        let m = numeric_propagate(&grid, gp, gr).unwrap().moments();
        let s = ChronocyclicGaussian2::from_principal_fwhm(0.5, 4.0).unwrap().apply_gdd_pair(gp, gr);
        let (_, t) = s.arrival_times();
        assert!(rel(m.var_difference(), s.difference_time_density().var) < 1e-6);
        assert!(rel(m.var_probe(), t[0][0]) < 1e-6);
        assert!(rel(m.var_reference(), t[1][1]) < 1e-6);
        assert!(rel(m.cov_probe_reference(), t[0][1]) < 1e-6);
    }

    #[test]
    fn single_wavepacket_under_gdd() {
        let wp = ChronocyclicGaussian1::transform_limited(2.0).unwrap();
        for gdd in [0.0, 5.0, -40.0] {
            let (mean, var) = numeric_propagate_single(2.0, gdd, 6.5).unwrap().mean_var();
            assert!(mean.abs() < 1e-7 * var.sqrt(), "mean {mean}");
            assert!(rel(var, wp.apply_gdd(gdd).var_t()) < 1e-6, "gdd {gdd}");
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let mut grid = JsaGrid::auto(0.5, 4.0, -3.0, 1.5, 6.5).unwrap();
        grid.omega_minus.n /= 4;
        grid.omega_minus.step *= 4.0;
        // time range shrinks by 4x: dispersed support wraps
        assert!(matches!(numeric_propagate(&grid, -3.0, 1.5), Err(Error::Aliasing { .. })));
    }
}
