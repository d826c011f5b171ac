//! Raster-scan imaging of a reflectivity/depth scene.

mod font;

pub use font::{glyph, GLYPH_HEIGHT, GLYPH_WIDTH};

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::Scheme;
use crate::error::{param, Error, Result};
use crate::montecarlo::{derive_seed, simulate_run, RunConfig};
use crate::scalar::{from_db, SPEED_OF_LIGHT_CM_PER_PS};
use crate::tagcount::{histogram_between, Histogram};

pub const DEFAULT_IMAGE_SIZE: usize = 64;
pub const DEFAULT_DEPTH_CM: f64 = 100.0;

/// Round-trip delay for a target at `depth_cm`.
pub fn round_trip_ps(depth_cm: f64) -> f64 {
    2.0 * depth_cm / SPEED_OF_LIGHT_CM_PER_PS
}

pub fn depth_from_delay(delay_ps: f64) -> f64 {
    SPEED_OF_LIGHT_CM_PER_PS * delay_ps / 2.0
}

/// Row-major pixel grid. `mask` marks the letter pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub width: usize,
    pub height: usize,
    pub reflectivity: Vec<f64>,
    pub depth_cm: Vec<f64>,
    pub mask: Vec<bool>,
    /// Normalised noise power relative to a full-reflectivity return, dB.
    pub noise_db: f64,
}

impl Scene {
    pub fn uniform(width: usize, height: usize, depth_cm: f64) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            reflectivity: vec![1.0; n],
            depth_cm: vec![depth_cm; n],
            mask: vec![false; n],
            noise_db: 0.0,
        }
    }

    pub fn with_noise(mut self, noise_db: f64) -> Self {
        self.noise_db = noise_db;
        self
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if n == 0 {
            return Err(param("scene", "needs at least one pixel"));
        }
        if self.reflectivity.len() != n || self.depth_cm.len() != n || self.mask.len() != n {
            return Err(param("scene", "per-pixel arrays must match width × height"));
        }
        if let Some(r) = self.reflectivity.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(param("reflectivity", format!("{r} outside [0, 1]")));
        }
        if self.depth_cm.iter().any(|d| !d.is_finite()) {
            return Err(param("depth_cm", "depths must be finite"));
        }
        if !self.noise_db.is_finite() {
            return Err(param("noise_db", "must be finite"));
        }
        Ok(())
    }

    pub fn depth_range(&self) -> (f64, f64) {
        self.depth_cm
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| (lo.min(d), hi.max(d)))
    }
}

/// Letters at the default 64×64 size.
pub fn make_letter_scene(letters: &str, depths: &[f64], tilt: f64) -> Result<Scene> {
    make_letter_scene_sized(letters, depths, tilt, DEFAULT_IMAGE_SIZE, DEFAULT_IMAGE_SIZE)
}

/// Rasterises each letter as a reflectivity-0 mask centred in its own vertical
/// panel of a reflectivity-1 mirror. Panel `k` sits at `depths[k]` and `tilt`
/// adds `tilt` cm of depth per pixel column, measured from the letter's left edge.
pub fn make_letter_scene_sized(
    letters: &str,
    depths: &[f64],
    tilt: f64,
    width: usize,
    height: usize,
) -> Result<Scene> {
    if width == 0 || height == 0 {
        return Err(param("size", "width and height must be positive"));
    }
    if !tilt.is_finite() {
        return Err(param("tilt", "must be finite"));
    }
    let chars: Vec<char> = letters.chars().collect();
    if chars.is_empty() {
        return Ok(Scene::uniform(width, height, depths.first().copied().unwrap_or(DEFAULT_DEPTH_CM)));
    }
    if depths.len() != chars.len() {
        return Err(param(
            "depths",
            format!("{} letters but {} depths", chars.len(), depths.len()),
        ));
    }
    let glyphs = chars
        .iter()
        .map(|&c| glyph(c).ok_or_else(|| param("letters", format!("no glyph for {c:?}"))))
        .collect::<Result<Vec<_>>>()?;
    let panel = width / chars.len();
    let scale = ((panel.saturating_sub(2)) / GLYPH_WIDTH).min(height.saturating_sub(2) / GLYPH_HEIGHT);
    if scale == 0 {
        return Err(param("size", format!("{width}×{height} too small for {} letters", chars.len())));
    }
    let (gw, gh) = (GLYPH_WIDTH * scale, GLYPH_HEIGHT * scale);
    let y0 = (height - gh) / 2;
    let mut scene = Scene::uniform(width, height, depths[0]);
    for x in 0..width {
        let k = (x / panel).min(chars.len() - 1);
        let x0 = k * panel + (panel - gw) / 2;
        let depth = depths[k] + tilt * (x as f64 - x0 as f64);
        for y in 0..height {
            let i = scene.index(x, y);
            scene.depth_cm[i] = depth;
            let inside = x >= x0 && x < x0 + gw && y >= y0 && y < y0 + gh;
            if inside && font::inked(&glyphs[k], (x - x0) / scale, (y - y0) / scale) {
                scene.mask[i] = true;
                scene.reflectivity[i] = 0.0;
            }
        }
    }
    Ok(scene)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DepthOptions {
    /// Width of the sliding window used to locate the peak, ps.
    pub search_window_ps: f64,
    /// Half width of the region summed around the peak, ps.
    pub peak_half_width_ps: f64,
    /// Required net counts in units of the background standard deviation.
    pub min_significance: f64,
}

impl Default for DepthOptions {
    fn default() -> Self {
        Self {
            search_window_ps: 200.0,
            peak_half_width_ps: 200.0,
            min_significance: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthEstimate {
    pub delay_ps: f64,
    pub depth_cm: f64,
    pub uncertainty_cm: f64,
    /// RMS width of the background-subtracted peak, ps.
    pub sigma_ps: f64,
    pub net_counts: f64,
    pub background_per_bin: f64,
}

/// Background-subtracted centroid of the strongest coincidence peak.
pub fn estimate_depth(hist: &Histogram, opts: &DepthOptions) -> Result<DepthEstimate> {
    if hist.is_empty() || hist.total() == 0 {
        return Err(Error::NoSignificantPeak {
            net: 0.0,
            threshold: opts.min_significance,
        });
    }
    let (_, centre) = hist.max_window(opts.search_window_ps);
    let in_peak = |t: f64| (t - centre).abs() <= opts.peak_half_width_ps;
    let (mut off_sum, mut off_bins, mut peak_bins) = (0u64, 0usize, 0usize);
    for (t, &n) in hist.centers().zip(&hist.counts) {
        if in_peak(t) {
            peak_bins += 1;
        } else {
            off_sum += n;
            off_bins += 1;
        }
    }
    let background = if off_bins > 0 { off_sum as f64 / off_bins as f64 } else { 0.0 };
    let (mut net, mut first) = (0.0, 0.0);
    for (t, &n) in hist.centers().zip(&hist.counts) {
        if in_peak(t) {
            let w = n as f64 - background;
            net += w;
            first += w * t;
        }
    }
    let threshold = opts.min_significance * (background * peak_bins as f64).max(1.0).sqrt();
    if !(net > threshold) {
        return Err(Error::NoSignificantPeak { net, threshold });
    }
    let mean = first / net;
    let second: f64 = hist
        .centers()
        .zip(&hist.counts)
        .filter(|(t, _)| in_peak(*t))
        .map(|(t, &n)| (n as f64 - background) * (t - mean).powi(2))
        .sum();
    let sigma = (second / net).max(0.0).sqrt();
    Ok(DepthEstimate {
        delay_ps: mean,
        depth_cm: depth_from_delay(mean),
        uncertainty_cm: depth_from_delay(sigma / net.sqrt()),
        sigma_ps: sigma,
        net_counts: net,
        background_per_bin: background,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    /// Experiment at full reflectivity. Per pixel, `tau_p` is scaled by the
    /// reflectivity and the probe delayed by the round trip.
    pub run: RunConfig,
    /// Seconds per pixel.
    pub dwell: f64,
    pub bin_width_ps: u64,
    /// Extra range-gate margin on each side of the scene's delay span, ps.
    pub gate_margin_ps: f64,
    pub depth: DepthOptions,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let mut run = RunConfig {
            pair_rate: 7.6e4,
            tau_p: 0.05,
            tau_r: 0.9,
            ..RunConfig::default()
        };
        run.detectors.probe.dead_time_ns = 0.0;
        run.detectors.reference.dead_time_ns = 0.0;
        Self {
            run,
            dwell: 0.1,
            bin_width_ps: 1,
            gate_margin_ps: 1000.0,
            depth: DepthOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelResult {
    pub x: usize,
    pub y: usize,
    /// Probe singles (CTD) or the largest windowed coincidence count in the gate.
    pub intensity: f64,
    pub depth_cm: Option<f64>,
    pub depth_err_cm: Option<f64>,
    /// Background-subtracted coincidences in the peak, when a peak was found.
    pub net_counts: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageCube {
    pub width: usize,
    pub height: usize,
    pub scheme: Scheme,
    pub noise_db: f64,
    pub pixels: Vec<PixelResult>,
    pub warnings: Vec<String>,
}

impl ImageCube {
    pub fn intensities(&self) -> Vec<f64> {
        self.pixels.iter().map(|p| p.intensity).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,intensity,depth_cm,depth_err_cm")?;
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
        for p in &self.pixels {
            writeln!(w, "{},{},{},{},{}", p.x, p.y, p.intensity, opt(p.depth_cm), opt(p.depth_err_cm))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Expected full-reflectivity signal counts per pixel.
pub fn expected_signal_counts(cfg: &ScanConfig, scheme: Scheme) -> f64 {
    let r = &cfg.run;
    let singles = r.pair_rate * r.tau_p * r.detectors.probe.efficiency * cfg.dwell;
    if scheme.uses_coincidences() {
        singles * r.tau_r * r.detectors.reference.efficiency
    } else {
        singles
    }
}

/// Scans every pixel of `scene` with independent per-pixel seeds.
pub fn scan_scene(scene: &Scene, scheme: Scheme, cfg: &ScanConfig, seed: u64) -> Result<ImageCube> {
    scene.validate()?;
    if !(cfg.dwell > 0.0) || !cfg.dwell.is_finite() {
        return Err(param("dwell", format!("must be positive, got {}", cfg.dwell)));
    }
    let base = cfg.run.for_scheme(scheme);
    base.validate()?;
    let noise_rate = base.pair_rate * base.tau_p * from_db(scene.noise_db);
    let (dmin, dmax) = scene.depth_range();
    let gate_lo = (round_trip_ps(dmin) - cfg.gate_margin_ps).floor() as i64;
    let gate_hi = (round_trip_ps(dmax) + cfg.gate_margin_ps).ceil() as i64;

    let mut warnings = Vec::new();
    let expected = expected_signal_counts(cfg, scheme);
    if expected < 1.0 {
        warnings.push(format!(
            "dwell {} s gives {expected:.3} expected signal counts per pixel at full reflectivity",
            cfg.dwell
        ));
    }

    let pixels = (0..scene.len())
        .into_par_iter()
        .map(|i| {
            let mut run = base.clone();
            run.tau_p = base.tau_p * scene.reflectivity[i];
            run.probe_delay = base.probe_delay + round_trip_ps(scene.depth_cm[i]);
            run.noise.rate = noise_rate;
            let (probe, reference) = simulate_run(&run, cfg.dwell, derive_seed(seed, i as u64))?;
            let (x, y) = (i % scene.width, i / scene.width);
            if !scheme.uses_coincidences() {
                return Ok(PixelResult {
                    x,
                    y,
                    intensity: probe.len() as f64,
                    depth_cm: None,
                    depth_err_cm: None,
                    net_counts: None,
                });
            }
            let lag = (base.probe_delay - base.reference_delay).round() as i64;
            let hist = histogram_between(
                probe.timestamps(),
                reference.timestamps(),
                cfg.bin_width_ps,
                gate_lo + lag,
                gate_hi + lag,
            )?;
            let (count, _) = hist.max_window(base.window);
            let depth = match estimate_depth(&hist, &cfg.depth) {
                Ok(d) => Some(d),
                Err(Error::NoSignificantPeak { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(PixelResult {
                x,
                y,
                intensity: count as f64,
                depth_cm: depth.map(|d| d.depth_cm - depth_from_delay(lag as f64)),
                depth_err_cm: depth.map(|d| d.uncertainty_cm),
                net_counts: depth.map(|d| d.net_counts),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ImageCube {
        width: scene.width,
        height: scene.height,
        scheme,
        noise_db: scene.noise_db,
        pixels,
        warnings,
    })
}

/// Threshold maximising the between-class variance; class 0 is `value <= threshold`.
pub fn otsu_threshold(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let total: f64 = v.iter().sum();
    let (mut best, mut best_t) = (-1.0, v[v.len() - 1]);
    let mut sum0 = 0.0;
    for i in 0..v.len() - 1 {
        sum0 += v[i];
        if v[i] == v[i + 1] {
            continue;
        }
        let n0 = (i + 1) as f64;
        let n1 = n - n0;
        let m0 = sum0 / n0;
        let m1 = (total - sum0) / n1;
        let between = n0 * n1 * (m0 - m1).powi(2);
        if between > best {
            best = between;
            best_t = v[i];
        }
    }
    best_t
}

/// Fraction of pixels whose thresholded class matches `mask` (dim pixels are letters).
pub fn classification_accuracy(img: &ImageCube, mask: &[bool]) -> Result<f64> {
    if mask.len() != img.pixels.len() || mask.is_empty() {
        return Err(param("mask", format!("{} entries for {} pixels", mask.len(), img.pixels.len())));
    }
    let values = img.intensities();
    let t = otsu_threshold(&values);
    let hits = values.iter().zip(mask).filter(|(v, m)| (**v <= t) == **m).count();
    Ok(hits as f64 / mask.len() as f64)
}

/// Writes a mask as an ASCII graymap: letter pixels 0, background 255.
pub fn write_mask_pgm<W: Write>(mut w: W, width: usize, height: usize, mask: &[bool]) -> Result<()> {
    if mask.len() != width * height {
        return Err(param("mask", "size mismatch"));
    }
    writeln!(w, "P2\n{width} {height}\n255")?;
    for row in mask.chunks(width) {
        let line: Vec<&str> = row.iter().map(|&m| if m { "0" } else { "255" }).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Reads an ASCII graymap; pixels below half the maximum are letters.
pub fn read_mask_pgm<R: BufRead>(r: R) -> Result<(usize, usize, Vec<bool>)> {
    let mut tokens = Vec::new();
    for line in r.lines() {
        let line = line?;
        let data = line.split('#').next().unwrap_or("");
        tokens.extend(data.split_whitespace().map(str::to_owned));
    }
    let bad = |why: &str| param("pgm", why.to_string());
    if tokens.first().map(String::as_str) != Some("P2") {
        return Err(bad("missing P2 magic"));
    }
    let num = |i: usize| -> Result<usize> {
        tokens
            .get(i)
            .ok_or_else(|| bad("truncated header"))?
            .parse()
            .map_err(|_| bad("non-numeric header field"))
    };
    let (w, h, max) = (num(1)?, num(2)?, num(3)?);
    let body = &tokens[4..];
    if body.len() != w * h {
        return Err(bad(&format!("expected {} pixels, found {}", w * h, body.len())));
    }
    let mask = body
        .iter()
        .map(|t| t.parse::<usize>().map(|v| 2 * v < max).map_err(|_| bad("non-numeric pixel")))
        .collect::<Result<Vec<_>>>()?;
    Ok((w, h, mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn letter_scene_layout() {
        let s = make_letter_scene("UOT", &[100.0, 110.0, 120.0], 0.0).unwrap();
        assert_eq!((s.width, s.height), (64, 64));
        let letter_px = s.mask.iter().filter(|m| **m).count();
        assert!(letter_px > 300 && letter_px < 1500, "{letter_px}");
        for (i, &m) in s.mask.iter().enumerate() {
            assert_eq!(s.reflectivity[i], if m { 0.0 } else { 1.0 });
        }
        let panel_depth = |x: usize| s.depth_cm[s.index(x, 32)];
        assert_eq!((panel_depth(5), panel_depth(30), panel_depth(60)), (100.0, 110.0, 120.0));
    }

    #[test]
    fn empty_text_is_a_mirror() {
        let s = make_letter_scene("", &[], 0.3).unwrap();
        assert!(s.mask.iter().all(|m| !m));
        assert!(s.reflectivity.iter().all(|r| *r == 1.0));
        assert!(make_letter_scene("U?", &[1.0, 2.0], 0.0).is_err());
        assert!(make_letter_scene("UO", &[1.0], 0.0).is_err());
    }

    #[test]
    fn tilt_spans_letter() {
        let tilt = 0.02;
        let s = make_letter_scene("UOT", &[100.0, 110.0, 120.0], tilt).unwrap();
        let panel = 64 / 3;
        for k in 0..3 {
            let cols: Vec<usize> = (k * panel..(k + 1) * panel)
                .filter(|&x| (0..64).any(|y| s.mask[s.index(x, y)]))
                .collect();
            let width = (cols[cols.len() - 1] - cols[0]) as f64;
            let depths: Vec<f64> = (0..s.len()).filter(|&i| s.mask[i] && cols.contains(&(i % 64))).map(|i| s.depth_cm[i]).collect();
            let span = depths.iter().cloned().fold(f64::MIN, f64::max) - depths.iter().cloned().fold(f64::MAX, f64::min);
            assert!((span - tilt * width).abs() < 1e-9, "{span} vs {}", tilt * width);
        }
    }

    #[test]
    fn otsu_separates_two_levels() {
        let v = [1.0, 2.0, 1.5, 10.0, 11.0, 9.5];
        let t = otsu_threshold(&v);
        assert!((2.0..9.5).contains(&t));
        assert_eq!(otsu_threshold(&[3.0, 3.0]), 3.0);
    }

    #[test]
    fn pgm_round_trip() {
        let mask = vec![true, false, false, true, true, false];
        let mut buf = Vec::new();
        write_mask_pgm(&mut buf, 3, 2, &mask).unwrap();
        assert_eq!(read_mask_pgm(&buf[..]).unwrap(), (3, 2, mask));
    }

    #[test]
    fn depth_from_synthetic_histogram() {
        let mut h = histogram_between(&[], &[], 1, 6000, 7500).unwrap();
        let true_delay = round_trip_ps(100.0);
        for (i, c) in h.counts.iter_mut().enumerate() {
            let t = 6000.0 + i as f64;
            *c = 2 + (400.0 * (-(t - true_delay).powi(2) / (2.0 * 36.0 * 36.0)).exp()).round() as u64;
        }
        let d = estimate_depth(&h, &DepthOptions::default()).unwrap();
        assert!((d.depth_cm - 100.0).abs() < 0.01, "{}", d.depth_cm);
        assert!((d.sigma_ps - 36.0).abs() < 1.0);
        let flat = Histogram {
            counts: vec![3; h.len()],
            ..h
        };
        assert!(matches!(estimate_depth(&flat, &DepthOptions::default()), Err(Error::NoSignificantPeak { .. })));
    }
}
