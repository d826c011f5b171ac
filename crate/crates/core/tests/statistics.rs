//! Monte Carlo output checked against closed-form expectations at fixed seeds.

use std::collections::HashMap;

use dnctd::chrono::fwhm_to_sigma;
use dnctd::detection::{convolve_jitter, window_capture, NoiseMode, Scheme};
use dnctd::lidar::{
    classification_accuracy, make_letter_scene_sized, otsu_threshold, round_trip_ps, scan_scene, ScanConfig, Scene,
};
use dnctd::montecarlo::{
    nonparalyzable_rate, saturation_scan, simulate_pulses, simulate_run, RunConfig,
};
use dnctd::stream::{TagStream, Truth};
use dnctd::tagcount::{accidental_estimate, count_in_window, count_labelled};

fn quiet(mut cfg: RunConfig) -> RunConfig {
    cfg.detectors.probe.dead_time_ns = 0.0;
    cfg.detectors.reference.dead_time_ns = 0.0;
    cfg
}

/// `t_probe − t_ref` for every pair detected on both sides.
fn pair_differences(p: &TagStream, r: &TagStream) -> Vec<f64> {
    let refs: HashMap<u64, u64> = r
        .iter()
        .filter_map(|(t, truth)| match truth {
            Truth::Pair(id) => Some((id, t)),
            _ => None,
        })
        .collect();
    p.iter()
        .filter_map(|(t, truth)| match truth {
            Truth::Pair(id) => refs.get(&id).map(|&tr| t as f64 - tr as f64),
            _ => None,
        })
        .collect()
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Variance of the jittered difference time, including the integer-ps rounding of both stamps.
fn analytic_difference_var(cfg: &RunConfig) -> f64 {
    let d = cfg
        .biphoton()
        .unwrap()
        .apply_gdd_pair(cfg.gdd_probe, cfg.gdd_ref)
        .difference_time_density();
    convolve_jitter(&d, cfg.detectors.combined_jitter_fwhm()).unwrap().var + 1.0 / 6.0
}

#[test]
fn dead_time_limits_cw_rate() {
    let mut cfg = RunConfig {
        pair_rate: 0.0,
        ..RunConfig::default()
    };
    cfg.noise.mode = NoiseMode::Cw;
    for (rate, td) in [(2e6, 900.0), (5e5, 100.0), (1e7, 50.0)] {
        cfg.noise.rate = rate;
        cfg.detectors.probe.dead_time_ns = td;
        let t = 0.05;
        let (p, _) = simulate_run(&cfg, t, 11).unwrap();
        let expect = nonparalyzable_rate(rate, td) * t;
        let got = p.len() as f64;
        assert!(
            (got - expect).abs() < 3.0 * expect.sqrt(),
            "rate {rate} td {td}: {got} vs {expect}"
        );
    }
}

#[test]
fn difference_time_variance_matches_state() {
    for scheme in [Scheme::Nctd, Scheme::Dnctd] {
        let cfg = quiet(RunConfig::default().for_scheme(scheme));
        let (p, r) = simulate_pulses(&cfg, 1_000_000, 5).unwrap();
        let d = pair_differences(&p, &r);
        let n = d.len() as f64;
        assert!(n > 8_000.0, "{n}");
        let (m, v) = mean_var(&d);
        let want = analytic_difference_var(&cfg);
        assert!(m.abs() < 3.0 * (want / n).sqrt(), "{scheme}: mean {m}");
        let se = want * (2.0 / (n - 1.0)).sqrt();
        assert!((v - want).abs() < 3.0 * se, "{scheme}: var {v} vs {want} ± {se}");
    }
}

#[test]
fn difference_time_distribution_is_gaussian() {
    let cfg = quiet(RunConfig {
        pair_rate: 7.6e6,
        ..RunConfig::default()
    })
    .for_scheme(Scheme::Dnctd);
    let (p, r) = simulate_pulses(&cfg, 1_100_000, 17).unwrap();
    let mut d = pair_differences(&p, &r);
    d.sort_by(f64::total_cmp);
    let n = d.len();
    assert!(n >= 100_000, "{n}");
    let sd = analytic_difference_var(&cfg).sqrt();
    let (lo, hi) = (d[0] as i64, d[n - 1] as i64);
    let mut idx = 0;
    let mut ks: f64 = 0.0;
    for k in lo..=hi {
        while idx < n && d[idx] <= k as f64 {
            idx += 1;
        }
        let emp = idx as f64 / n as f64;
        ks = ks.max((emp - normal_cdf((k as f64 + 0.5) / sd)).abs());
    }
    assert!(ks < 1.95 / (n as f64).sqrt(), "KS {ks} over {n}");
}

#[test]
fn cw_accidentals_scale_with_rates_and_window() {
    let mut cfg = quiet(RunConfig {
        pair_rate: 0.0,
        ..RunConfig::default()
    });
    cfg.noise.mode = NoiseMode::Cw;
    cfg.noise.rate = 1e6;
    cfg.detectors.reference.dark_rate = 1e6;
    let (t, w) = (0.1, 10_000.0);
    let (p, r) = simulate_run(&cfg, t, 3).unwrap();
    let expect = p.len() as f64 * r.len() as f64 * w * 1e-12 / t;
    let got = count_in_window(&p, &r, w, 0.0).unwrap() as f64;
    assert!((got - expect).abs() < 3.0 * expect.sqrt(), "{got} vs {expect}");
}

#[test]
fn offset_windows_estimate_target_absent_background() {
    let mut cfg = quiet(RunConfig {
        tau_p: 0.05,
        tau_r: 0.9,
        ..RunConfig::default()
    })
    .for_scheme(Scheme::Dnctd);
    cfg.noise.rate = cfg.pair_rate * cfg.tau_p * 100.0;
    let t = 0.1;
    let offsets = [-400.0, -350.0, -300.0, 300.0, 350.0, 400.0];
    let (p, r) = simulate_run(&cfg, t, 21).unwrap();
    let est = accidental_estimate(&p, &r, cfg.window, &offsets).unwrap();

    let absent_cfg = RunConfig { tau_p: 0.0, ..cfg.clone() };
    let (pa, ra) = simulate_run(&absent_cfg, t, 22).unwrap();
    let absent = count_in_window(&pa, &ra, cfg.window, 0.0).unwrap() as f64;
    let sigma = (est.std_err.powi(2) + absent).sqrt();
    assert!((est.mean - absent).abs() < 3.0 * sigma, "{} vs {absent} ± {sigma}", est.mean);
}

#[test]
fn narrow_window_captures_expected_fraction() {
    let cfg = quiet(RunConfig {
        pair_rate: 7.6e6,
        ..RunConfig::default()
    })
    .for_scheme(Scheme::Nctd);
    let (p, r) = simulate_pulses(&cfg, 1_000_000, 8).unwrap();
    let pairs = pair_differences(&p, &r).len() as f64;
    let caught = count_labelled(&p, &r, 10.0, 0.0).unwrap().true_pairs as f64;
    let d = cfg.biphoton().unwrap().difference_time_density();
    let d = convolve_jitter(&d, cfg.detectors.combined_jitter_fwhm()).unwrap();
    let want = window_capture(&d, 10.0, 0.0).unwrap();
    // integer stamps: the closed 10 ps window holds the 11 integer delays −5..=5
    let want_int = window_capture(&d, 11.0, 0.0).unwrap();
    let sd = d.var.sqrt();
    assert!((want - libm::erf(5.0 / (std::f64::consts::SQRT_2 * sd))).abs() < 1e-12, "{want}");
    assert!((want - 0.1125).abs() < 0.001, "{want}");
    let frac = caught / pairs;
    let se = (want_int * (1.0 - want_int) / pairs).sqrt();
    assert!((frac - want_int).abs() < 3.0 * se, "{frac} vs {want_int} ± {se}");
}

#[test]
fn thinning_by_transmission_then_efficiency_composes() {
    let base = quiet(RunConfig::default().for_scheme(Scheme::Nctd));
    let mut split = base.clone();
    split.tau_p = 0.5;
    split.detectors.probe.efficiency = 0.4;
    let mut single = base.clone();
    single.tau_p = 0.2;
    let n = 2_000_000u64;
    let expect = n as f64 * base.pair_probability() * 0.2;
    let mut counts = Vec::new();
    for (i, c) in [&split, &single].into_iter().enumerate() {
        let (p, _) = simulate_pulses(c, n, 40 + i as u64).unwrap();
        let k = p.count_where(|t| matches!(t, Truth::Pair(_))) as f64;
        assert!((k - expect).abs() < 3.0 * expect.sqrt(), "{k} vs {expect}");
        counts.push(k);
    }
    // two-sample chi-square with one degree of freedom, 99.9 % point
    let chi2 = (counts[0] - counts[1]).powi(2) / (counts[0] + counts[1]);
    assert!(chi2 < 10.83, "{chi2}");
}

#[test]
fn zero_dead_time_never_saturates() {
    let mut cfg = RunConfig::default();
    cfg.detectors.probe.dead_time_ns = 0.0;
    let rates = [1e5, 1e6, 1e7, 1e8];
    for mode in [NoiseMode::Pulsed, NoiseMode::Cw] {
        let t = saturation_scan(&cfg, mode, &rates, 0.002, 9).unwrap();
        assert_eq!(t.onset_rate, None, "{mode:?}");
    }
}

#[test]
fn heavy_cw_noise_saturates_at_inverse_dead_time() {
    let cfg = RunConfig::default();
    let t = saturation_scan(&cfg, NoiseMode::Cw, &[1e10], 0.002, 4).unwrap();
    let limit = 1e9 / cfg.detectors.probe.dead_time_ns;
    let got = t.points[0].accepted_rate;
    assert!((got / limit - 1.0).abs() < 0.01, "{got} vs {limit}");
}

fn lidar_cfg(dwell: f64) -> ScanConfig {
    ScanConfig {
        dwell,
        ..ScanConfig::default()
    }
}

#[test]
fn depth_is_linear_in_round_trip() {
    let cfg = lidar_cfg(0.05);
    let depths = [50.0, 80.0, 120.0, 160.0, 200.0];
    let mut delays = Vec::new();
    for (i, &d) in depths.iter().enumerate() {
        let img = scan_scene(&Scene::uniform(1, 1, d), Scheme::Dnctd, &cfg, 60 + i as u64).unwrap();
        let est = img.pixels[0].depth_cm.expect("peak");
        assert!((est - d).abs() < 5.0 * img.pixels[0].depth_err_cm.unwrap() + 1e-3, "{est} vs {d}");
        delays.push(round_trip_ps(est));
    }
    let n = depths.len() as f64;
    let mx = depths.iter().sum::<f64>() / n;
    let my = delays.iter().sum::<f64>() / n;
    let sxy: f64 = depths.iter().zip(&delays).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = depths.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let want = round_trip_ps(1.0);
    assert!((slope / want - 1.0).abs() < 0.01, "{slope} ps/cm vs {want}");
}

#[test]
fn resolves_two_millimetre_steps() {
    let cfg = lidar_cfg(0.2);
    let mut scene = Scene::uniform(2, 1, 100.0);
    scene.depth_cm[1] = 100.18;
    let img = scan_scene(&scene, Scheme::Dnctd, &cfg, 70).unwrap();
    let (a, b) = (&img.pixels[0], &img.pixels[1]);
    let diff = b.depth_cm.unwrap() - a.depth_cm.unwrap();
    let err = (a.depth_err_cm.unwrap().powi(2) + b.depth_err_cm.unwrap().powi(2)).sqrt();
    assert!(diff > 3.0 * err, "step {diff} ± {err}");
    assert!((diff - 0.18).abs() < 3.0 * err, "step {diff} ± {err}");
}

#[test]
fn noiseless_depth_is_unbiased() {
    let cfg = lidar_cfg(0.01);
    let scene = Scene::uniform(16, 16, 123.4);
    let img = scan_scene(&scene, Scheme::Nctd, &cfg, 80).unwrap();
    let pulls: Vec<f64> = img
        .pixels
        .iter()
        .filter_map(|p| Some((p.depth_cm? - 123.4) / p.depth_err_cm?))
        .collect();
    assert!(pulls.len() > 240);
    let (m, v) = mean_var(&pulls);
    assert!(m.abs() < 3.0 / (pulls.len() as f64).sqrt(), "mean pull {m}");
    assert!(v > 0.6 && v < 1.6, "pull variance {v}");
}

#[test]
fn ctd_degrades_with_noise() {
    let cfg = lidar_cfg(0.01);
    let mut acc = Vec::new();
    for db in [0.0, 10.0, 20.0, 30.0] {
        let scene = make_letter_scene_sized("UOT", &[100.0, 110.0, 120.0], 0.0, 64, 64)
            .unwrap()
            .with_noise(db);
        let img = scan_scene(&scene, Scheme::Ctd, &cfg, 90).unwrap();
        acc.push(classification_accuracy(&img, &scene.mask).unwrap());
    }
    assert!(acc[0] > 0.9, "{acc:?}");
    assert!(acc.windows(2).all(|w| w[1] <= w[0] + 0.03), "{acc:?}");
    assert!(acc[3] < 0.75, "{acc:?}");
}

#[test]
fn scans_are_reproducible() {
    let cfg = lidar_cfg(0.002);
    let scene = make_letter_scene_sized("A", &[100.0], 0.01, 16, 16).unwrap().with_noise(10.0);
    let a = scan_scene(&scene, Scheme::Dnctd, &cfg, 5).unwrap();
    let b = scan_scene(&scene, Scheme::Dnctd, &cfg, 5).unwrap();
    assert_eq!(a, b);
    let c = scan_scene(&scene, Scheme::Dnctd, &cfg, 6).unwrap();
    assert_ne!(a, c);
}

#[test]
fn otsu_splits_bimodal_values() {
    let mut v: Vec<f64> = (0..100).map(|i| 10.0 + (i % 7) as f64).collect();
    v.extend((0..50).map(|i| 100.0 + (i % 5) as f64));
    let t = otsu_threshold(&v);
    assert!((16.0..100.0).contains(&t), "{t}");
}

#[test]
fn jitter_only_width_matches_fwhm() {
    let sigma: f64 = fwhm_to_sigma(83.3).unwrap();
    assert!((sigma - 35.374).abs() < 0.01, "{sigma}");
}
