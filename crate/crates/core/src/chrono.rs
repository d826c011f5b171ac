//! Gaussian chronocyclic (time–frequency moment) model of photon pairs and
//! single wavepackets.
//!
//! Units are fixed across the crate: time in ps, angular frequency offsets in
//! rad/ps, group-delay dispersion in ps². A Gaussian state is completely
//! described by its mean vector and covariance, and quadratic spectral phase
//! (GDD) acts on it as a linear shear `t ← t + gdd·ω`.
//!
//! Coordinate ordering of the two-photon state is `(t_p, t_r, ω_p, ω_r)`:
//! slot 0 is always the probe photon and slot 1 the reference photon.

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{Scalar, SPEED_OF_LIGHT_NM_PER_PS};

/// `√(8 ln 2)`: ratio between the FWHM and the standard deviation of a Gaussian.
pub fn fwhm_per_sigma<T: Scalar>() -> T {
    (T::lit(8.0) * T::LN_2()).sqrt()
}

pub fn fwhm_to_sigma<T: Scalar>(fwhm: T) -> Result<T> {
    if !(fwhm >= T::zero()) || !fwhm.is_finite() {
        return Err(Error::param("fwhm", format!("must be finite and non-negative, got {fwhm}")));
    }
    Ok(fwhm / fwhm_per_sigma())
}

pub fn sigma_to_fwhm<T: Scalar>(sigma: T) -> T {
    sigma * fwhm_per_sigma()
}

/// Group-delay dispersion `β₂L = −D·L·λ²/(2πc)` in ps².
///
/// `dispersion` is the fiber dispersion parameter D in ps/(nm·km), `length` in km
/// and `wavelength` in nm. Positive D (anomalous) yields negative GDD.
pub fn gdd_from_dispersion<T: Scalar>(dispersion: T, length: T, wavelength: T) -> Result<T> {
    if !(wavelength > T::zero()) {
        return Err(Error::param("wavelength", format!("must be positive, got {wavelength}")));
    }
    if !(length >= T::zero()) {
        return Err(Error::param("length", format!("must be non-negative, got {length}")));
    }
    if !dispersion.is_finite() {
        return Err(Error::param("dispersion", "must be finite"));
    }
    let c = T::lit(SPEED_OF_LIGHT_NM_PER_PS);
    Ok(-dispersion * length * wavelength * wavelength / (T::lit(2.0) * T::PI() * c))
}

/// One-dimensional normal density over a time axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1D<T> {
    pub mean: T,
    pub var: T,
}

impl<T: Scalar> Gaussian1D<T> {
    pub fn new(mean: T, var: T) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::param("mean", "must be finite"));
        }
        if !(var >= T::zero()) || !var.is_finite() {
            return Err(Error::param("var", format!("must be finite and non-negative, got {var}")));
        }
        Ok(Self { mean, var })
    }

    pub fn std(&self) -> T {
        self.var.sqrt()
    }

    pub fn fwhm(&self) -> T {
        sigma_to_fwhm(self.std())
    }

    /// Cumulative probability `P(X ≤ x)`. A zero-variance density is a unit step at the mean.
    pub fn cdf(&self, x: T) -> T {
        if self.var == T::zero() {
            return if x >= self.mean { T::one() } else { T::zero() };
        }
        let z = (x - self.mean) / (self.std() * T::lit(2.0).sqrt());
        T::lit(0.5) * (T::one() + z.erf())
    }

    /// Sum of two independent variables.
    pub fn add_independent(&self, other: &Self) -> Self {
        Self {
            mean: self.mean + other.mean,
            var: self.var + other.var,
        }
    }
}

/// Which photon of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Photon {
    Probe,
    Reference,
}

impl Photon {
    fn slot(self) -> usize {
        match self {
            Photon::Probe => 0,
            Photon::Reference => 1,
        }
    }
}

/// A quadratic spectral phase element such as a length of fiber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionElement<T> {
    /// β₂L in ps², negative for anomalous dispersion.
    pub gdd: T,
}

impl<T: Scalar> DispersionElement<T> {
    pub fn from_gdd(gdd: T) -> Self {
        Self { gdd }
    }

    pub fn from_fiber(dispersion: T, length_km: T, wavelength_nm: T) -> Result<Self> {
        Ok(Self {
            gdd: gdd_from_dispersion(dispersion, length_km, wavelength_nm)?,
        })
    }

    pub fn is_anomalous(&self) -> bool {
        self.gdd < T::zero()
    }
}

/// Single (possibly mixed) Gaussian wavepacket over `(t, ω)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChronocyclicGaussian1<T> {
    pub mean_t: T,
    pub mean_w: T,
    /// `[[Var t, Cov(t,ω)], [Cov(t,ω), Var ω]]`
    cov: [[T; 2]; 2],
}

impl<T: Scalar> ChronocyclicGaussian1<T> {
    /// Validates symmetry, positive definiteness and the `det ≥ 1/4` uncertainty bound.
    pub fn new(mean_t: T, mean_w: T, cov: [[T; 2]; 2]) -> Result<Self> {
        if !mean_t.is_finite() || !mean_w.is_finite() {
            return Err(Error::param("mean", "must be finite"));
        }
        if !linalg::is_symmetric(&cov) || linalg::cholesky(&cov).is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        let det = linalg::determinant(&cov);
        let bound = T::lit(0.25);
        if det < bound * (T::one() - T::tolerance()) {
            return Err(Error::Uncertainty {
                det: det.to_f64().unwrap_or(f64::NAN),
                bound: 0.25,
            });
        }
        Ok(Self { mean_t, mean_w, cov })
    }

    /// Pure, chirp-free wavepacket with the given intensity FWHM in time.
    pub fn transform_limited(fwhm: T) -> Result<Self> {
        let sigma = fwhm_to_sigma(fwhm)?;
        if sigma == T::zero() {
            return Err(Error::param("fwhm", "must be positive"));
        }
        let var_t = sigma * sigma;
        Self::new(
            T::zero(),
            T::zero(),
            [[var_t, T::zero()], [T::zero(), T::lit(0.25) / var_t]],
        )
    }

    pub fn cov(&self) -> [[T; 2]; 2] {
        self.cov
    }

    pub fn var_t(&self) -> T {
        self.cov[0][0]
    }

    pub fn var_w(&self) -> T {
        self.cov[1][1]
    }

    pub fn cov_tw(&self) -> T {
        self.cov[0][1]
    }

    /// `Var(t)·Var(ω) − Cov(t,ω)²`; equals 1/4 for pure states.
    pub fn uncertainty_product(&self) -> T {
        linalg::determinant(&self.cov)
    }

    pub fn is_pure(&self) -> bool {
        let d = self.uncertainty_product();
        (d - T::lit(0.25)).abs() <= T::lit(0.25) * T::tolerance()
    }

    /// Marginal arrival-time density.
    pub fn arrival_density(&self) -> Gaussian1D<T> {
        Gaussian1D {
            mean: self.mean_t,
            var: self.var_t(),
        }
    }

    /// Shear `t ← t + gdd·ω`.
    pub fn apply_gdd(&self, gdd: T) -> Self {
        let s = [[T::one(), gdd], [T::zero(), T::one()]];
        let m = linalg::mat_vec(&s, &[self.mean_t, self.mean_w]);
        Self {
            mean_t: m[0],
            mean_w: m[1],
            cov: linalg::congruence(&s, &self.cov),
        }
    }

    /// Shifts the mean arrival time.
    pub fn delayed(&self, delay: T) -> Self {
        Self {
            mean_t: self.mean_t + delay,
            ..*self
        }
    }
}

/// Gaussian two-photon state over `(t_p, t_r, ω_p, ω_r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChronocyclicGaussian2<T> {
    mean: [T; 4],
    cov: [[T; 4]; 4],
}

const TP: usize = 0;
const TR: usize = 1;
const WP: usize = 2;
const WR: usize = 3;

impl<T: Scalar> ChronocyclicGaussian2<T> {
    /// Validates symmetry and positive definiteness, plus the necessary uncertainty
    /// conditions: each single-photon block has `det ≥ 1/4` and the full
    /// covariance has `det ≥ 1/16`.
    pub fn new(mean: [T; 4], cov: [[T; 4]; 4]) -> Result<Self> {
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::param("mean", "must be finite"));
        }
        if !linalg::is_symmetric(&cov) || linalg::cholesky(&cov).is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        let state = Self { mean, cov };
        for photon in [Photon::Probe, Photon::Reference] {
            let m = state.marginal_block(photon);
            let det = linalg::determinant(&m);
            if det < T::lit(0.25) * (T::one() - T::tolerance()) {
                return Err(Error::Uncertainty {
                    det: det.to_f64().unwrap_or(f64::NAN),
                    bound: 0.25,
                });
            }
        }
        let det = linalg::determinant(&cov);
        let bound = T::lit(1.0 / 16.0);
        if det < bound * (T::one() - T::lit(16.0) * T::tolerance()) {
            return Err(Error::Uncertainty {
                det: det.to_f64().unwrap_or(f64::NAN),
                bound: 1.0 / 16.0,
            });
        }
        Ok(state)
    }

    /// Pure, unchirped biphoton from the intensity FWHMs of the principal
    /// temporal axes: `tau_minus` along `t_p − t_r` (correlation time) and
    /// `tau_plus` along `t_p + t_r`.
    ///
    /// The conjugate of `t_p ± t_r` is `(ω_p ± ω_r)/2`, so purity fixes
    /// `Var(ω_p ± ω_r) = 1/σ_±²`. With `σ_+ ≫ σ_−` the frequencies are anti-correlated.
    pub fn from_principal_fwhm(tau_minus_fwhm: T, tau_plus_fwhm: T) -> Result<Self> {
        if !(tau_minus_fwhm > T::zero()) {
            return Err(Error::param("tau_minus_fwhm", "must be positive"));
        }
        if !(tau_plus_fwhm > T::zero()) {
            return Err(Error::param("tau_plus_fwhm", "must be positive"));
        }
        let sm = fwhm_to_sigma(tau_minus_fwhm)?;
        let sp = fwhm_to_sigma(tau_plus_fwhm)?;
        Self::from_principal_sigma(sm, sp)
    }

    pub fn from_principal_sigma(sigma_minus: T, sigma_plus: T) -> Result<Self> {
        let quarter = T::lit(0.25);
        let (vm, vp) = (sigma_minus * sigma_minus, sigma_plus * sigma_plus);
        let (wm, wp) = (T::one() / vm, T::one() / vp);
        let var_t = (vp + vm) * quarter;
        let cov_t = (vp - vm) * quarter;
        let var_w = (wp + wm) * quarter;
        let cov_w = (wp - wm) * quarter;
        let z = T::zero();
        let cov = [
            [var_t, cov_t, z, z],
            [cov_t, var_t, z, z],
            [z, z, var_w, cov_w],
            [z, z, cov_w, var_w],
        ];
        Self::new([z; 4], cov)
    }

    pub fn mean(&self) -> [T; 4] {
        self.mean
    }

    pub fn cov(&self) -> [[T; 4]; 4] {
        self.cov
    }

    /// Linear shear `t_p ← t_p + gdd_probe·ω_p`, `t_r ← t_r + gdd_ref·ω_r`.
    pub fn apply_gdd_pair(&self, gdd_probe: T, gdd_ref: T) -> Self {
        let (o, z) = (T::one(), T::zero());
        let s = [
            [o, z, gdd_probe, z],
            [z, o, z, gdd_ref],
            [z, z, o, z],
            [z, z, z, o],
        ];
        Self {
            mean: linalg::mat_vec(&s, &self.mean),
            cov: linalg::congruence(&s, &self.cov),
        }
    }

    /// Delays one photon's arrival time (free-space path length).
    pub fn delayed(&self, photon: Photon, delay: T) -> Self {
        let mut out = *self;
        out.mean[photon.slot()] = out.mean[photon.slot()] + delay;
        out
    }

    fn marginal_block(&self, photon: Photon) -> [[T; 2]; 2] {
        let (t, w) = match photon {
            Photon::Probe => (TP, WP),
            Photon::Reference => (TR, WR),
        };
        [
            [self.cov[t][t], self.cov[t][w]],
            [self.cov[w][t], self.cov[w][w]],
        ]
    }

    /// Reduced single-photon state; mixed for entangled inputs.
    pub fn marginal(&self, photon: Photon) -> ChronocyclicGaussian1<T> {
        let (t, w) = match photon {
            Photon::Probe => (TP, WP),
            Photon::Reference => (TR, WR),
        };
        ChronocyclicGaussian1 {
            mean_t: self.mean[t],
            mean_w: self.mean[w],
            cov: self.marginal_block(photon),
        }
    }

    /// Density of `t_p − t_r`: the true-coincidence peak before detector jitter.
    pub fn difference_time_density(&self) -> Gaussian1D<T> {
        let c = &self.cov;
        Gaussian1D {
            mean: self.mean[TP] - self.mean[TR],
            var: c[TP][TP] + c[TR][TR] - T::lit(2.0) * c[TP][TR],
        }
    }

    /// Mean and 2×2 covariance of the joint arrival times `(t_p, t_r)`.
    pub fn arrival_times(&self) -> ([T; 2], [[T; 2]; 2]) {
        (
            [self.mean[TP], self.mean[TR]],
            [
                [self.cov[TP][TP], self.cov[TP][TR]],
                [self.cov[TR][TP], self.cov[TR][TR]],
            ],
        )
    }

    pub fn determinant(&self) -> T {
        linalg::determinant(&self.cov)
    }
}

/// Density of `t_noise − t_ref` for two independent photons sharing the pulse clock.
pub fn false_difference_density<T: Scalar>(
    noise: &ChronocyclicGaussian1<T>,
    reference: &ChronocyclicGaussian1<T>,
) -> Gaussian1D<T> {
    Gaussian1D {
        mean: noise.mean_t - reference.mean_t,
        var: noise.var_t() + reference.var_t(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn nominal_state() -> ChronocyclicGaussian2<f64> {
        ChronocyclicGaussian2::from_principal_fwhm(0.1, 17.7).unwrap()
    }

    #[test]
    fn fwhm_conversion() {
        assert_relative_eq!(fwhm_to_sigma(83.3).unwrap(), 35.374253, epsilon = 1e-5);
        assert_eq!(fwhm_to_sigma(0.0).unwrap(), 0.0);
        assert_relative_eq!(fwhm_to_sigma(2.3548).unwrap(), 1.0, epsilon = 1e-4);
        assert!(fwhm_to_sigma(-1.0).is_err());
        assert_relative_eq!(fwhm_to_sigma(83.3f32).unwrap(), 35.374253, epsilon = 1e-4);
    }

    #[test]
    fn fiber_gdd() {
        // −18·5·1560²/(2π·299792.458) worked by hand
        let g: f64 = gdd_from_dispersion(18.0, 5.0, 1560.0).unwrap();
        assert!((g + 116.2).abs() < 0.5, "{g}");
        assert_relative_eq!(g, -116.276_281_56, epsilon = 1e-6);
        assert_eq!(gdd_from_dispersion(0.0, 5.0, 1560.0).unwrap(), 0.0);
        assert_eq!(gdd_from_dispersion(18.0, 0.0, 1560.0).unwrap(), 0.0);
        assert!(gdd_from_dispersion(18.0, 5.0, 0.0).is_err());
        assert!(gdd_from_dispersion(18.0, 5.0, -1.0).is_err());
        assert!(DispersionElement::from_fiber(18.0, 5.0, 1560.0).unwrap().is_anomalous());
        assert!(!DispersionElement::from_fiber(-18.0, 5.0, 1560.0).unwrap().is_anomalous());
    }

    #[test]
    fn biphoton_construction() {
        let s = nominal_state();
        let c = s.cov();
        assert_relative_eq!(c[0][0], 14.124886, epsilon = 1e-5);
        assert_relative_eq!(c[1][1], c[0][0]);
        assert!(c[2][3] < 0.0);
        for i in 0..2 {
            for j in 2..4 {
                assert_eq!(c[i][j], 0.0);
            }
        }
        // principal pairs: Var(t_p ± t_r)·Var((ω_p ± ω_r)/2) = 1/4
        let var_tm = c[0][0] + c[1][1] - 2.0 * c[0][1];
        let var_tp = c[0][0] + c[1][1] + 2.0 * c[0][1];
        let var_wm = (c[2][2] + c[3][3] - 2.0 * c[2][3]) / 4.0;
        let var_wp = (c[2][2] + c[3][3] + 2.0 * c[2][3]) / 4.0;
        assert_relative_eq!(var_tm * var_wm, 0.25, epsilon = 1e-9);
        assert_relative_eq!(var_tp * var_wp, 0.25, epsilon = 1e-9);
        assert_relative_eq!(s.determinant(), 1.0 / 16.0, max_relative = 1e-6);
    }

    #[test]
    fn symmetric_widths_give_product_state() {
        let s = ChronocyclicGaussian2::from_principal_fwhm(3.0, 3.0).unwrap();
        let c = s.cov();
        assert_eq!(c[0][1], 0.0);
        assert_eq!(c[2][3], 0.0);
        let m = s.marginal(Photon::Probe);
        assert!(m.is_pure());
        assert_relative_eq!(m.uncertainty_product(), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_widths() {
        assert!(ChronocyclicGaussian2::from_principal_fwhm(0.0, 1.0).is_err());
        assert!(ChronocyclicGaussian2::from_principal_fwhm(1.0, -1.0).is_err());
    }

    #[test]
    fn rejects_sub_uncertainty_covariance() {
        let err = ChronocyclicGaussian1::new(0.0, 0.0, [[1.0, 0.0], [0.0, 0.1]]).unwrap_err();
        assert!(matches!(err, Error::Uncertainty { .. }));
        let err = ChronocyclicGaussian1::new(0.0, 0.0, [[1.0, 2.0], [2.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite));
    }

    #[test]
    fn marginal_of_nominal_state() {
        let s = nominal_state();
        let p = s.marginal(Photon::Probe);
        let r = s.marginal(Photon::Reference);
        assert_relative_eq!(p.var_t(), 14.124886, epsilon = 1e-5);
        // (1/σ_+² + 1/σ_−²)/4 with σ_± from 17.7 ps / 0.1 ps FWHM
        assert_relative_eq!(p.var_w(), 138.633861, epsilon = 1e-4);
        assert!(p.uncertainty_product() > 1000.0);
        assert_eq!(p, r);
    }

    #[test]
    fn dispersion_cancellation_on_pair() {
        let s = nominal_state();
        let d0 = s.difference_time_density();
        let sm = fwhm_to_sigma(0.1).unwrap();
        assert_relative_eq!(d0.var, sm * sm, max_relative = 1e-9);

        let opposite = s.apply_gdd_pair(-116.2, 116.2).difference_time_density();
        assert_relative_eq!(opposite.var, 238.992597, epsilon = 1e-4);
        assert_relative_eq!(opposite.std(), 15.459385, epsilon = 1e-5);

        let same = s.apply_gdd_pair(-116.2, -116.2).difference_time_density();
        assert_relative_eq!(same.var, 7_487_342.575, max_relative = 1e-6);
        assert!(same.var > 1000.0 * opposite.var);

        assert_eq!(s.apply_gdd_pair(0.0, 0.0), s);
    }

    #[test]
    fn single_photon_dispersion() {
        let p = nominal_state().marginal(Photon::Probe);
        let d = p.apply_gdd(-116.2);
        assert_relative_eq!(d.var_t(), 1_871_909.516, max_relative = 1e-6);
        assert_relative_eq!(d.arrival_density().std(), 1368.177, epsilon = 1e-2);
        assert_eq!(p.apply_gdd(0.0), p);
        // chirp-free input: Var(t)' − Var(t) = gdd²·Var(ω)
        assert_relative_eq!(d.var_t() - p.var_t(), 116.2 * 116.2 * p.var_w(), max_relative = 1e-12);
        assert_relative_eq!(d.var_w(), p.var_w());
    }

    #[test]
    fn false_density_widths() {
        let s = nominal_state();
        let f0 = false_difference_density(&s.marginal(Photon::Probe), &s.marginal(Photon::Reference));
        assert_relative_eq!(f0.std(), 5.315051, epsilon = 1e-5);

        let sd = s.apply_gdd_pair(-116.2, 116.2);
        let noise = s.marginal(Photon::Probe).apply_gdd(-116.2);
        let f1 = false_difference_density(&noise, &sd.marginal(Photon::Reference));
        assert_relative_eq!(f1.std(), 1934.895, epsilon = 1e-2);

        let z = Gaussian1D::new(0.0, 0.0).unwrap();
        assert_eq!(z.add_independent(&z).var, 0.0);
    }

    #[test]
    fn f32_nominal_state() {
        let s = ChronocyclicGaussian2::<f32>::from_principal_fwhm(0.1, 17.7).unwrap();
        let d = s.apply_gdd_pair(-116.2, 116.2).difference_time_density();
        assert!((d.std() - 15.4594).abs() < 1e-2, "{}", d.std());
    }
}
