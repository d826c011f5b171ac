use dnctd::chrono::Photon;
use dnctd::detection::{window_capture, Scheme};
use dnctd::montecarlo::{apply_dead_time, simulate_pulses, RunConfig};
use dnctd::stream::{Channel, TagStream, Truth};
use dnctd::tagcount::{
    bin_index, coincidence_histogram, coincidence_histogram_parallel, count_in_window, decode_tagfile,
    encode_tagfile, histogram_between, merge_streams, split_records,
};
use dnctd::{Biphoton, Density};
use proptest::prelude::*;

fn sorted(mut v: Vec<u64>) -> Vec<u64> {
    v.sort_unstable();
    v
}

fn stream(ch: Channel, v: Vec<u64>) -> TagStream {
    TagStream::from_timestamps(ch, v).unwrap()
}

fn clicks(max_len: usize, span: u64) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0..span, 0..max_len).prop_map(sorted)
}

/// Exhaustive pairing.
fn brute_counts(a: &[u64], b: &[u64], bin: u64, lo: i64, hi: i64) -> std::collections::BTreeMap<i64, u64> {
    let mut m = std::collections::BTreeMap::new();
    for &x in a {
        for &y in b {
            let dt = x as i64 - y as i64;
            if dt >= lo && dt <= hi {
                *m.entry(bin_index(dt, bin)).or_insert(0) += 1;
            }
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn histogram_equals_exhaustive_pairing(a in clicks(300, 20_000), b in clicks(300, 20_000),
                                           bin in 1u64..40, lo in -3000i64..500, width in 0i64..3000) {
        let hi = lo + width;
        let h = histogram_between(&a, &b, bin, lo, hi).unwrap();
        let brute = brute_counts(&a, &b, bin, lo, hi);
        for (i, &c) in h.counts.iter().enumerate() {
            let k = h.first_bin + i as i64;
            prop_assert_eq!(c, brute.get(&k).copied().unwrap_or(0), "bin {}", k);
        }
        prop_assert_eq!(h.total(), brute.values().sum::<u64>());
    }

    #[test]
    fn swapping_inputs_mirrors_histogram(a in clicks(200, 10_000), b in clicks(200, 10_000),
                                         bin in 1u64..30, range in 1u64..4000) {
        let (sa, sb) = (stream(Channel::Probe, a), stream(Channel::Reference, b));
        let ab = coincidence_histogram(&sa, &sb, bin, range).unwrap();
        let ba = coincidence_histogram(&sb, &sa, bin, range).unwrap();
        prop_assert_eq!(ab.mirrored(), ba);
    }

    #[test]
    fn parallel_histogram_is_bit_identical(a in clicks(400, 50_000), b in clicks(400, 50_000),
                                           range in 1u64..5000, blocks in 1usize..9) {
        let (sa, sb) = (stream(Channel::Probe, a), stream(Channel::Reference, b));
        prop_assert_eq!(
            coincidence_histogram(&sa, &sb, 3, range).unwrap(),
            coincidence_histogram_parallel(&sa, &sb, 3, range, blocks).unwrap()
        );
    }

    #[test]
    fn window_count_integrates_histogram(a in clicks(200, 10_000), b in clicks(200, 10_000),
                                         half_bin in 0u64..10, half_bins in 0u64..30, centre_bin in -40i64..40) {
        // odd bin widths keep every integer delay strictly inside one bin
        let bin = 2 * half_bin + 1;
        let w = (2 * half_bins + 1) * bin;
        let offset = (centre_bin * bin as i64) as f64;
        let (sa, sb) = (stream(Channel::Probe, a), stream(Channel::Reference, b));
        let n = count_in_window(&sa, &sb, w as f64 - 1e-9, offset).unwrap();
        let h = coincidence_histogram(&sa, &sb, bin, w + 1000).unwrap();
        let centre = offset;
        let lo_c = centre - (half_bins * bin) as f64;
        let hi_c = centre + (half_bins * bin) as f64;
        prop_assert_eq!(n, h.sum_between(lo_c, hi_c));
    }

    #[test]
    fn tagfile_round_trip(a in clicks(200, 1 << 40), b in clicks(200, 1 << 40)) {
        let (sa, sb) = (stream(Channel::Probe, a), stream(Channel::Reference, b));
        let recs = merge_streams(&sa, &sb);
        let back = decode_tagfile(&encode_tagfile(&recs)).unwrap();
        let (pa, pb) = split_records(&back);
        prop_assert_eq!(pa.timestamps(), sa.timestamps());
        prop_assert_eq!(pb.timestamps(), sb.timestamps());
    }

    #[test]
    fn dead_time_output_respects_gap(a in clicks(500, 1_000_000), dead in 0.0f64..50.0) {
        let s = stream(Channel::Probe, a);
        let out = apply_dead_time(&s, dead);
        let gap = (dead * 1e3).round() as u64;
        prop_assert!(out.timestamps().windows(2).all(|w| w[1] - w[0] >= gap));
        prop_assert!(out.len() <= s.len());
        prop_assert_eq!(apply_dead_time(&out, dead), out.clone());
        if !s.is_empty() {
            prop_assert_eq!(out.timestamps()[0], s.timestamps()[0]);
        }
    }

    #[test]
    fn gdd_composes_additively(a in -300.0f64..300.0, b in -300.0f64..300.0, c in -300.0f64..300.0, d in -300.0f64..300.0) {
        let s = Biphoton::from_principal_fwhm(0.1, 17.7).unwrap();
        let once = s.apply_gdd_pair(a + c, b + d);
        let twice = s.apply_gdd_pair(a, b).apply_gdd_pair(c, d);
        let (x, y) = (once.cov(), twice.cov());
        for i in 0..4 {
            for j in 0..4 {
                let scale = x[i][i].abs().max(x[j][j].abs()).max(1.0);
                prop_assert!((x[i][j] - y[i][j]).abs() <= 1e-9 * scale);
            }
        }
        // shear preserves the phase-space volume; a mildly squeezed state keeps the
        // 4x4 determinant well conditioned
        let m = Biphoton::from_principal_fwhm(5.0, 17.7).unwrap();
        let (d0, d1) = (m.determinant(), m.apply_gdd_pair(a + c, b + d).determinant());
        prop_assert!((d1 / d0 - 1.0).abs() < 1e-6);
        let m0 = s.marginal(Photon::Probe).uncertainty_product();
        let m1 = s.apply_gdd_pair(a, b).marginal(Photon::Probe).uncertainty_product();
        prop_assert!((m1 / m0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn capture_is_monotone_in_window(mean in -100.0f64..100.0, sd in 0.5f64..500.0, w1 in 1.0f64..1000.0, dw in 0.0f64..1000.0) {
        let d = Density::new(mean, sd * sd).unwrap();
        let c1 = window_capture(&d, w1, 0.0).unwrap();
        let c2 = window_capture(&d, w1 + dw, 0.0).unwrap();
        prop_assert!((0.0..=1.0).contains(&c1));
        prop_assert!(c2 + 1e-15 >= c1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn runs_are_deterministic_sorted_and_labelled(seed in any::<u64>(), noise in 0.0f64..5e7, pulses in 1u64..400_000) {
        let mut cfg = RunConfig::default().for_scheme(Scheme::Dnctd);
        cfg.noise.rate = noise;
        cfg.detectors.probe.dark_rate = 1e5;
        cfg.detectors.reference.dark_rate = 1e5;
        let (p, r) = simulate_pulses(&cfg, pulses, seed).unwrap();
        prop_assert_eq!((p.clone(), r.clone()), simulate_pulses(&cfg, pulses, seed).unwrap());
        p.check_sorted().unwrap();
        r.check_sorted().unwrap();
        for s in [&p, &r] {
            let pairs = s.count_where(|t| matches!(t, Truth::Pair(_)));
            let noise = s.count_where(|t| t == Truth::Noise);
            let dark = s.count_where(|t| t == Truth::Dark);
            prop_assert_eq!(pairs + noise + dark, s.len());
        }
        prop_assert_eq!(r.count_where(|t| t == Truth::Noise), 0);
    }
}
