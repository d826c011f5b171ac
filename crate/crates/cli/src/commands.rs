use std::path::PathBuf;

use anyhow::{bail, Result};
use serde_json::json;

use dnctd::detection::{coincidence_densities, noise_rate_for, scheme_snr, NoiseMode, Scheme};
use dnctd::lidar::{classification_accuracy, make_letter_scene_sized, scan_scene, write_mask_pgm};
use dnctd::montecarlo::{derive_seed, measure_schemes, saturation_compare, simulate_run, RunConfig};
use dnctd::stream::TagStream;
use dnctd::tagcount::{
    accidental_estimate, coincidence_histogram, count_in_window, decode_tagfile, encode_tagfile, labelled_histograms,
    merge_streams, read_csv, split_records, write_csv, Histogram, TagRecord,
};
use dnctd::{Biphoton, Density};

use crate::config::{ConfigError, ConfigFile};
use crate::output::Output;

pub struct Ctx {
    pub cfg: ConfigFile,
    pub out: Output,
    pub mc_off: bool,
    pub duration: f64,
}

fn gaussian_pdf(d: &Density, t: f64) -> f64 {
    (-(t - d.mean).powi(2) / (2.0 * d.var)).exp() / (2.0 * std::f64::consts::PI * d.var).sqrt()
}

/// Ordinary least-squares slope and its standard error.
pub fn fit_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| a.is_finite() && b.is_finite()).map(|(a, b)| (*a, *b)).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    if pts.len() < 3 {
        return (slope, f64::NAN);
    }
    let rss: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    (slope, (rss / (n - 2.0) / sxx).sqrt())
}

/// Mean over the finite entries; noise-floor limited points are skipped.
fn mean(v: &[f64]) -> f64 {
    let f: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    f.iter().sum::<f64>() / f.len() as f64
}

fn hist_std(h: &Histogram) -> f64 {
    let n = h.total() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let m = h.centers().zip(&h.counts).map(|(t, c)| t * *c as f64).sum::<f64>() / n;
    (h.centers().zip(&h.counts).map(|(t, c)| (t - m).powi(2) * *c as f64).sum::<f64>() / n).sqrt()
}

pub fn histograms(ctx: &mut Ctx) -> Result<()> {
    let run = ctx.cfg.run_config()?;
    let state = run.biphoton()?;
    let (tu, fu) = coincidence_densities(&run.scheme_config(Scheme::Nctd), &run.detectors, &state)?;
    let (td, fd) = coincidence_densities(&run.scheme_config(Scheme::Dnctd), &run.detectors, &state)?;
    let (bin, range) = (ctx.cfg.histogram.bin_width_ps, ctx.cfg.histogram.range_ps as i64);
    let rows: Vec<Vec<f64>> = (-range / bin as i64..=range / bin as i64)
        .map(|k| {
            let t = (k * bin as i64) as f64;
            vec![t, gaussian_pdf(&tu, t), gaussian_pdf(&td, t), gaussian_pdf(&fu, t), gaussian_pdf(&fd, t)]
        })
        .collect();
    let cols = ["t_ps", "true_undispersed", "true_dispersed", "false_undispersed", "false_dispersed"];
    ctx.out.table("analytic_densities", &cols, &rows)?;

    let mut summary = json!({
        "fwhm_ps": {
            "true_undispersed": tu.fwhm(), "true_dispersed": td.fwhm(),
            "false_undispersed": fu.fwhm(), "false_dispersed": fd.fwhm(),
        },
        "true_broadening": td.std() / tu.std(),
        "false_broadening": fd.std() / fu.std(),
        "gdd_ps2": { "probe": run.gdd_probe, "reference": run.gdd_ref },
    });

    if !ctx.mc_off {
        let mc_bin = ctx.cfg.histogram.mc_bin_width_ps;
        let seed = ctx.cfg.seed;
        let mut hists = Vec::new();
        for (i, scheme) in [Scheme::Nctd, Scheme::Dnctd].into_iter().enumerate() {
            let (p, r) = simulate_run(&run.for_scheme(scheme), ctx.duration, derive_seed(seed, i as u64))?;
            hists.push(labelled_histograms(&p, &r, mc_bin, range as u64)?);
        }
        let (h_tu, h_fu) = &hists[0];
        let (h_td, h_fd) = &hists[1];
        let rows: Vec<Vec<f64>> = (0..h_tu.len())
            .map(|i| {
                vec![
                    h_tu.center(i),
                    h_tu.counts[i] as f64,
                    h_td.counts[i] as f64,
                    h_fu.counts[i] as f64,
                    h_fd.counts[i] as f64,
                ]
            })
            .collect();
        ctx.out.table("mc_histograms", &cols, &rows)?;
        summary["mc_std_ps"] = json!({
            "true_undispersed": hist_std(h_tu), "true_dispersed": hist_std(h_td),
            "false_undispersed": hist_std(h_fu), "false_dispersed": hist_std(h_fd),
        });
        summary["mc_counts"] = json!({
            "true_undispersed": h_tu.total(), "true_dispersed": h_td.total(),
            "false_undispersed": h_fu.total(), "false_dispersed": h_fd.total(),
        });
    }
    ctx.out.json("histograms_summary", summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepKind {
    Noise,
    Probe,
    Window,
    Pairrate,
}

impl SweepKind {
    fn name(self) -> &'static str {
        match self {
            SweepKind::Noise => "noise",
            SweepKind::Probe => "probe",
            SweepKind::Window => "window",
            SweepKind::Pairrate => "pairrate",
        }
    }
}

/// Configured sweep points as (x, run config, slope abscissa).
fn sweep_points(cfg: &ConfigFile, kind: SweepKind) -> Result<Vec<(f64, RunConfig, f64)>> {
    let base = cfg.run_config()?;
    let n = base.noise.rate;
    let mut out = Vec::new();
    match kind {
        SweepKind::Noise => {
            for x in cfg.sweep.noise_db.points() {
                let mut r = base.clone();
                r.noise.rate = noise_rate_for(x, r.pair_rate, r.tau_p);
                out.push((x, r, x));
            }
        }
        SweepKind::Probe => {
            for x in cfg.sweep.probe_db.points() {
                let mut r = base.clone();
                r.tau_p = n * 10f64.powf(x / 10.0) / r.pair_rate;
                if r.tau_p > 1.0 {
                    return Err(ConfigError {
                        path: "sweep.probe_db".into(),
                        reason: format!("{x} dB needs tau_p = {:.3} > 1 at the configured noise", r.tau_p),
                    }
                    .into());
                }
                out.push((x, r, x));
            }
        }
        SweepKind::Window => {
            for x in cfg.sweep.window_ps.points() {
                let mut r = base.clone();
                r.window = x;
                out.push((x, r, x));
            }
        }
        SweepKind::Pairrate => {
            for lx in cfg.sweep.log10_pair_rate.points() {
                let mut r = base.clone();
                r.pair_rate = 10f64.powf(lx);
                out.push((r.pair_rate, r, 10.0 * lx));
            }
        }
    }
    Ok(out)
}

pub fn sweep(ctx: &mut Ctx, kind: SweepKind) -> Result<()> {
    let points = sweep_points(&ctx.cfg, kind)?;
    let state: Biphoton = ctx.cfg.run_config()?.biphoton()?;
    let mut cols = vec!["x", "snr_ctd_db", "snr_nctd_db", "snr_dnctd_db"];
    if !ctx.mc_off {
        cols.extend([
            "mc_ctd_db",
            "mc_ctd_err_db",
            "mc_nctd_db",
            "mc_nctd_err_db",
            "mc_dnctd_db",
            "mc_dnctd_err_db",
        ]);
    }
    let mut rows = Vec::new();
    let mut slope_x = Vec::new();
    let mut analytic: [Vec<f64>; 3] = Default::default();
    let mut mc: [Vec<f64>; 3] = Default::default();
    let mut flags = Vec::new();
    for (i, (x, run, sx)) in points.iter().enumerate() {
        let mut row = vec![*x];
        for (k, s) in Scheme::ALL.into_iter().enumerate() {
            let a = scheme_snr(&run.scheme_config(s), &run.source, &run.detectors, &state)?;
            analytic[k].push(a.snr_db);
            row.push(a.snr_db);
        }
        if !ctx.mc_off {
            let m = measure_schemes(run, ctx.duration, derive_seed(ctx.cfg.seed, i as u64))?;
            for (k, s) in Scheme::ALL.into_iter().enumerate() {
                let r = m.get(s);
                mc[k].push(r.snr_db);
                row.extend([r.snr_db, r.err_db]);
                if r.noise_floor_limited {
                    flags.push(json!({"x": x, "scheme": s.name(), "flag": "noise-floor limited"}));
                }
            }
        }
        slope_x.push(*sx);
        rows.push(row);
    }
    let stem = format!("sweep_{}", kind.name());
    ctx.out.table(&stem, &cols, &rows)?;

    let slopes = |series: &[Vec<f64>; 3]| {
        let mut o = serde_json::Map::new();
        for (k, s) in Scheme::ALL.into_iter().enumerate() {
            let (m, e) = fit_slope(&slope_x, &series[k]);
            o.insert(s.name().into(), json!({"slope": m, "stderr": e}));
        }
        o
    };
    let improvements = |series: &[Vec<f64>; 3]| {
        let d = |a: usize, b: usize| mean(&series[a].iter().zip(&series[b]).map(|(x, y)| x - y).collect::<Vec<_>>());
        json!({"nctd_over_ctd_db": d(1, 0), "dnctd_over_nctd_db": d(2, 1), "dnctd_over_ctd_db": d(2, 0)})
    };
    let slope_unit = match kind {
        SweepKind::Noise | SweepKind::Probe => "dB per dB",
        SweepKind::Window => "dB per ps",
        SweepKind::Pairrate => "dB per dB of pair rate",
    };
    let mut summary = json!({
        "kind": kind.name(),
        "slope_unit": slope_unit,
        "analytic": {"slopes": slopes(&analytic), "mean_improvements": improvements(&analytic)},
    });
    if kind == SweepKind::Window && rows.len() >= 2 {
        let adv: Vec<f64> = analytic[2].iter().zip(&analytic[1]).map(|(d, n)| d - n).collect();
        let (imin, imax) = extreme_indices(&points.iter().map(|p| p.0).collect::<Vec<_>>());
        summary["analytic"]["advantage_delta_db"] = json!(adv[imin] - adv[imax]);
    }
    if !ctx.mc_off {
        summary["monte_carlo"] = json!({
            "duration_s": ctx.duration,
            "slopes": slopes(&mc),
            "mean_improvements": improvements(&mc),
            "flags": flags,
        });
    }
    ctx.out.json(&format!("{stem}_summary"), summary)
}

fn extreme_indices(x: &[f64]) -> (usize, usize) {
    let imin = (0..x.len()).min_by(|a, b| x[*a].total_cmp(&x[*b])).unwrap();
    let imax = (0..x.len()).max_by(|a, b| x[*a].total_cmp(&x[*b])).unwrap();
    (imin, imax)
}

fn db_label(db: f64) -> String {
    format!("{db}").replace('.', "p").replace('-', "m")
}

pub fn scan(ctx: &mut Ctx) -> Result<()> {
    let s = ctx.cfg.scan.clone();
    let mut scan_cfg = ctx.cfg.scan_config()?;
    scan_cfg.dwell = ctx.duration;
    let scene = make_letter_scene_sized(&s.letters, &s.depths_cm, s.tilt_cm_per_px, s.width, s.height)?;
    let mut mask = Vec::new();
    write_mask_pgm(&mut mask, scene.width, scene.height, &scene.mask)?;
    ctx.out.raw("mask.pgm", &mask)?;
    let mut results = Vec::new();
    for (i, &db) in s.noise_db.iter().enumerate() {
        for (j, &scheme) in s.schemes.iter().enumerate() {
            let seed = derive_seed(ctx.cfg.seed, (i * 16 + j) as u64);
            let img = scan_scene(&scene.clone().with_noise(db), scheme, &scan_cfg, seed)?;
            let acc = classification_accuracy(&img, &scene.mask)?;
            let stem = format!("image_{}_{}dB", scheme.name(), db_label(db));
            match ctx.out.format {
                crate::output::Format::Csv => {
                    let mut buf = Vec::new();
                    img.write_csv(&mut buf)?;
                    ctx.out.csv_text(&format!("{stem}.csv"), std::str::from_utf8(&buf)?)?;
                }
                crate::output::Format::Json => ctx.out.json(&stem, serde_json::to_value(&img)?)?,
            }
            let errs: Vec<f64> = img.pixels.iter().filter_map(|p| p.depth_err_cm).collect();
            results.push(json!({
                "scheme": scheme.name(),
                "noise_db": db,
                "accuracy": acc,
                "depth_defined_pixels": errs.len(),
                "median_depth_err_cm": median(&errs),
                "warnings": img.warnings,
                "file": stem,
            }));
        }
    }
    ctx.out.json("scan_summary", json!({"dwell_s": scan_cfg.dwell, "results": results}))
}

fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    Some(s[s.len() / 2])
}

fn load_records(path: &PathBuf) -> Result<Vec<TagRecord>> {
    let bytes = std::fs::read(path).map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    Ok(if is_csv { read_csv(&bytes[..])? } else { decode_tagfile(&bytes)? })
}

pub struct CountArgs {
    pub files: Vec<PathBuf>,
    pub window: Option<f64>,
    pub offset: Option<f64>,
}

pub fn count(ctx: &mut Ctx, args: &CountArgs) -> Result<()> {
    if args.files.is_empty() || args.files.len() > 2 {
        bail!("count takes one or two tag files");
    }
    let mut records = Vec::new();
    for f in &args.files {
        records.extend(load_records(f)?);
    }
    records.sort_by_key(|r| r.timestamp);
    let (probe, reference) = split_records(&records);
    let (width, offset) = (
        args.window.unwrap_or(ctx.cfg.window.width_ps),
        args.offset.unwrap_or(ctx.cfg.window.offset_ps),
    );
    let h = coincidence_histogram(&probe, &reference, ctx.cfg.histogram.bin_width_ps, ctx.cfg.histogram.range_ps)?;
    let rows: Vec<Vec<f64>> = h.centers().zip(&h.counts).map(|(t, c)| vec![t, *c as f64]).collect();
    ctx.out.table("count_histogram", &["dt_ps", "count"], &rows)?;
    let coincidences = count_in_window(&probe, &reference, width, offset)?;
    let half_period = (ctx.cfg.source.period_ps() / 2.0).round();
    let offsets = [offset - half_period, offset + half_period];
    let acc = accidental_estimate(&probe, &reference, width, &offsets)?;
    ctx.out.json(
        "count_summary",
        json!({
            "files": args.files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "probe_clicks": probe.len(),
            "reference_clicks": reference.len(),
            "window_ps": width,
            "offset_ps": offset,
            "coincidences": coincidences,
            "histogram_total": h.total(),
            "accidentals": acc,
        }),
    )
}

pub fn simulate(ctx: &mut Ctx, scheme: Scheme, truth: bool) -> Result<()> {
    let run = ctx.cfg.run_config()?.for_scheme(scheme);
    let (probe, reference): (TagStream, TagStream) = simulate_run(&run, ctx.duration, ctx.cfg.seed)?;
    let records = merge_streams(&probe, &reference);
    ctx.out.raw("tags.qtag", &encode_tagfile(&records))?;
    if ctx.out.format == crate::output::Format::Csv || truth {
        let mut buf = Vec::new();
        write_csv(&mut buf, &records, truth)?;
        ctx.out.raw("tags.csv", &buf)?;
    }
    let coincidences = count_in_window(&probe, &reference, run.window, run.window_offset)?;
    ctx.out.json(
        "simulate_summary",
        json!({
            "scheme": scheme.name(),
            "duration_s": ctx.duration,
            "probe_clicks": probe.len(),
            "reference_clicks": reference.len(),
            "window_ps": run.window,
            "offset_ps": run.window_offset,
            "coincidences": coincidences,
            "noise_rate": run.noise.rate,
            "pair_probability": run.pair_probability(),
        }),
    )
}

pub fn saturation(ctx: &mut Ctx) -> Result<()> {
    let run = ctx.cfg.run_config()?;
    let rates: Vec<f64> = ctx.cfg.saturation.log10_rate.points().iter().map(|x| 10f64.powf(*x)).collect();
    let (pulsed, cw) = saturation_compare(&run, &rates, ctx.duration, ctx.cfg.seed)?;
    let rows: Vec<Vec<f64>> = pulsed
        .points
        .iter()
        .zip(&cw.points)
        .map(|(p, c)| vec![p.offered_rate, p.accepted_rate, c.accepted_rate, p.poisson_model_rate])
        .collect();
    ctx.out.table("saturation", &["offered_rate", "pulsed_accepted", "cw_accepted", "poisson_model"], &rows)?;
    let ratio = match (pulsed.onset_rate, cw.onset_rate) {
        (Some(p), Some(c)) => Some(p / c),
        _ => None,
    };
    ctx.out.json(
        "saturation_summary",
        json!({
            "dead_time_ns": pulsed.dead_time_ns,
            "onset_rate": {"pulsed": pulsed.onset_rate, "cw": cw.onset_rate},
            "pulsed_over_cw": ratio,
            "modes": [NoiseMode::Pulsed, NoiseMode::Cw],
        }),
    )
}

