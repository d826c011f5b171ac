//! Coincidence counting on time-tag streams.
//!
//! All counters pair every click of `a` with every click of `b` whose difference
//! `t_a - t_b` lies inside the requested interval. Both inputs must be sorted.

mod tagfile;

pub use tagfile::{
    decode_tagfile, encode_tagfile, merge_streams, read_csv, read_tagfile, split_records,
    write_csv, write_tagfile, TagRecord, TAGFILE_MAGIC, TAGFILE_VERSION,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::stream::{check_sorted, TagStream, Truth};

pub const DEFAULT_BIN_WIDTH_PS: u64 = 1;
pub const DEFAULT_RANGE_PS: u64 = 5_000;

/// Histogram of `t_a - t_b`. Bin `k` is centred on `k * bin_width` and holds the
/// differences that round to it, with halves rounded away from zero so that
/// swapping the inputs mirrors the histogram exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: u64,
    /// Inclusive range of accepted differences in ps.
    pub lo: i64,
    pub hi: i64,
    /// Index of the first bin (`counts[0]` is centred on `first_bin * bin_width`).
    pub first_bin: i64,
    pub counts: Vec<u64>,
    /// Number of click pairs examined, `len(a) * len(b)`.
    pub total_pairs: u128,
}

impl Histogram {
    fn empty(bin_width: u64, lo: i64, hi: i64, total_pairs: u128) -> Self {
        let first = bin_index(lo, bin_width);
        let last = bin_index(hi, bin_width);
        Self {
            bin_width,
            lo,
            hi,
            first_bin: first,
            counts: vec![0; (last - first + 1) as usize],
            total_pairs,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Centre of bin `i` (index into `counts`) in ps.
    pub fn center(&self, i: usize) -> f64 {
        ((self.first_bin + i as i64) * self.bin_width as i64) as f64
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.center(i))
    }

    /// Mirror image about zero; equals the histogram with the inputs swapped.
    pub fn mirrored(&self) -> Self {
        let mut counts = self.counts.clone();
        counts.reverse();
        Self {
            bin_width: self.bin_width,
            lo: -self.hi,
            hi: -self.lo,
            first_bin: -(self.first_bin + self.counts.len() as i64 - 1),
            counts,
            total_pairs: self.total_pairs,
        }
    }

    /// Sum of the bins whose centres fall inside `[lo, hi]`.
    pub fn sum_between(&self, lo: f64, hi: f64) -> u64 {
        self.centers()
            .zip(&self.counts)
            .filter(|(c, _)| *c >= lo && *c <= hi)
            .map(|(_, n)| *n)
            .sum()
    }

    /// Largest count inside any window of `width` ps and the centre of that window.
    pub fn max_window(&self, width: f64) -> (u64, f64) {
        let bins = ((width / self.bin_width as f64).round() as usize).clamp(1, self.len().max(1));
        if self.is_empty() {
            return (0, 0.0);
        }
        let mut sum: u64 = self.counts[..bins].iter().sum();
        let mut best = (sum, 0usize);
        for start in 1..=self.len() - bins {
            sum = sum + self.counts[start + bins - 1] - self.counts[start - 1];
            if sum > best.0 {
                best = (sum, start);
            }
        }
        let centre = 0.5 * (self.center(best.1) + self.center(best.1 + bins - 1));
        (best.0, centre)
    }
}

/// Bin holding difference `dt`, rounding half-way cases away from zero.
pub fn bin_index(dt: i64, bin_width: u64) -> i64 {
    let b = bin_width as i64;
    (dt.abs() + b / 2) / b * dt.signum()
}

fn validate_inputs(a: &[u64], b: &[u64]) -> Result<()> {
    check_sorted(a)?;
    check_sorted(b)?;
    Ok(())
}

fn window_bounds(width: f64, offset: f64) -> Result<(i64, i64)> {
    if !(width >= 0.0) || !width.is_finite() || !offset.is_finite() {
        return Err(param("window", format!("width {width} ps / offset {offset} ps")));
    }
    Ok(((offset - width / 2.0).ceil() as i64, (offset + width / 2.0).floor() as i64))
}

/// Histogram of `t_a - t_b` over `|t_a - t_b| <= range` ps.
pub fn coincidence_histogram(a: &TagStream, b: &TagStream, bin: u64, range: u64) -> Result<Histogram> {
    histogram_between(a.timestamps(), b.timestamps(), bin, -(range as i64), range as i64)
}

/// Histogram of `t_a - t_b` over the inclusive interval `[lo, hi]` ps.
pub fn histogram_between(a: &[u64], b: &[u64], bin: u64, lo: i64, hi: i64) -> Result<Histogram> {
    check_histogram_args(bin, lo, hi)?;
    validate_inputs(a, b)?;
    let mut h = Histogram::empty(bin, lo, hi, a.len() as u128 * b.len() as u128);
    accumulate(a, b, &mut h);
    Ok(h)
}

fn check_histogram_args(bin: u64, lo: i64, hi: i64) -> Result<()> {
    if bin == 0 {
        return Err(param("bin_width", "must be positive"));
    }
    if lo > hi {
        return Err(param("range", format!("empty interval [{lo}, {hi}]")));
    }
    Ok(())
}

/// Two-cursor pass: for each `t_a` the admissible `t_b` form a contiguous run
/// `[t_a - hi, t_a - lo]` whose start only moves forward.
fn accumulate(a: &[u64], b: &[u64], h: &mut Histogram) {
    let mut start = 0usize;
    for &ta in a {
        let ta = ta as i64;
        while start < b.len() && ta - (b[start] as i64) > h.hi {
            start += 1;
        }
        let mut j = start;
        while j < b.len() {
            let dt = ta - b[j] as i64;
            if dt < h.lo {
                break;
            }
            let k = bin_index(dt, h.bin_width) - h.first_bin;
            h.counts[k as usize] += 1;
            j += 1;
        }
    }
}

/// Same result as [`coincidence_histogram`], computed over time blocks in parallel.
pub fn coincidence_histogram_parallel(
    a: &TagStream,
    b: &TagStream,
    bin: u64,
    range: u64,
    blocks: usize,
) -> Result<Histogram> {
    let (lo, hi) = (-(range as i64), range as i64);
    check_histogram_args(bin, lo, hi)?;
    let (ta, tb) = (a.timestamps(), b.timestamps());
    validate_inputs(ta, tb)?;
    let blocks = blocks.max(1).min(ta.len().max(1));
    let chunk = ta.len().div_ceil(blocks).max(1);
    let template = Histogram::empty(bin, lo, hi, ta.len() as u128 * tb.len() as u128);
    let partials: Vec<Vec<u64>> = ta
        .par_chunks(chunk)
        .map(|part| {
            // Halo: only the b clicks that can pair with this block.
            let first = part[0] as i64 - hi;
            let last = part[part.len() - 1] as i64 - lo;
            let from = tb.partition_point(|&t| (t as i64) < first);
            let to = tb.partition_point(|&t| (t as i64) <= last);
            let mut h = template.clone();
            accumulate(part, &tb[from..to], &mut h);
            h.counts
        })
        .collect();
    let mut out = template;
    for p in partials {
        for (c, n) in out.counts.iter_mut().zip(p) {
            *c += n;
        }
    }
    Ok(out)
}

/// Number of pairs with `t_a - t_b` in `[offset - w/2, offset + w/2]`.
pub fn count_in_window(a: &TagStream, b: &TagStream, width: f64, offset: f64) -> Result<u64> {
    count_in_window_raw(a.timestamps(), b.timestamps(), width, offset)
}

pub fn count_in_window_raw(a: &[u64], b: &[u64], width: f64, offset: f64) -> Result<u64> {
    validate_inputs(a, b)?;
    let (lo, hi) = window_bounds(width, offset)?;
    if lo > hi {
        return Ok(0);
    }
    // Both cursor ends are monotone in t_a, so the pass is linear.
    let (mut start, mut end) = (0usize, 0usize);
    let mut total = 0u64;
    for &ta in a {
        let ta = ta as i64;
        while start < b.len() && ta - (b[start] as i64) > hi {
            start += 1;
        }
        end = end.max(start);
        while end < b.len() && ta - (b[end] as i64) >= lo {
            end += 1;
        }
        total += (end - start) as u64;
    }
    Ok(total)
}

/// Windowed coincidences split by ground truth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelledCounts {
    /// Both clicks come from the same pair.
    pub true_pairs: u64,
    pub false_pairs: u64,
}

impl LabelledCounts {
    pub fn total(&self) -> u64 {
        self.true_pairs + self.false_pairs
    }
}

/// Like [`count_in_window`], additionally using the simulator's truth labels.
pub fn count_labelled(a: &TagStream, b: &TagStream, width: f64, offset: f64) -> Result<LabelledCounts> {
    let (ta, tb) = (a.timestamps(), b.timestamps());
    validate_inputs(ta, tb)?;
    let (lo, hi) = window_bounds(width, offset)?;
    let (la, lb) = (a.truth(), b.truth());
    let mut out = LabelledCounts::default();
    if lo > hi {
        return Ok(out);
    }
    let mut start = 0usize;
    for (i, &t) in ta.iter().enumerate() {
        let t = t as i64;
        while start < tb.len() && t - (tb[start] as i64) > hi {
            start += 1;
        }
        let mut j = start;
        while j < tb.len() && t - (tb[j] as i64) >= lo {
            match (la[i], lb[j]) {
                (Truth::Pair(x), Truth::Pair(y)) if x == y => out.true_pairs += 1,
                _ => out.false_pairs += 1,
            }
            j += 1;
        }
    }
    Ok(out)
}

/// Histograms of true (same pair) and false coincidences, using the simulator's truth labels.
pub fn labelled_histograms(a: &TagStream, b: &TagStream, bin: u64, range: u64) -> Result<(Histogram, Histogram)> {
    let (lo, hi) = (-(range as i64), range as i64);
    check_histogram_args(bin, lo, hi)?;
    let (ta, tb) = (a.timestamps(), b.timestamps());
    validate_inputs(ta, tb)?;
    let total = ta.len() as u128 * tb.len() as u128;
    let mut hist_true = Histogram::empty(bin, lo, hi, total);
    let mut hist_false = hist_true.clone();
    let (la, lb) = (a.truth(), b.truth());
    let mut start = 0usize;
    for (i, &t) in ta.iter().enumerate() {
        let t = t as i64;
        while start < tb.len() && t - (tb[start] as i64) > hi {
            start += 1;
        }
        let mut j = start;
        while j < tb.len() && t - (tb[j] as i64) >= lo {
            let dt = t - tb[j] as i64;
            let same = matches!((la[i], lb[j]), (Truth::Pair(x), Truth::Pair(y)) if x == y);
            let h = if same { &mut hist_true } else { &mut hist_false };
            let k = bin_index(dt, bin) - h.first_bin;
            h.counts[k as usize] += 1;
            j += 1;
        }
    }
    Ok((hist_true, hist_false))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccidentalEstimate {
    /// Mean count per window of width `w`.
    pub mean: f64,
    /// Standard error of the mean from Poisson statistics.
    pub std_err: f64,
    pub per_offset: Vec<u64>,
}

/// Mean windowed count over `offsets`, which should lie well away from the true peak.
pub fn accidental_estimate(a: &TagStream, b: &TagStream, width: f64, offsets: &[f64]) -> Result<AccidentalEstimate> {
    if offsets.is_empty() {
        return Err(param("offsets", "need at least one offset"));
    }
    let per_offset = offsets
        .iter()
        .map(|&o| count_in_window(a, b, width, o))
        .collect::<Result<Vec<_>>>()?;
    let n = per_offset.len() as f64;
    let sum: u64 = per_offset.iter().sum();
    let mean = sum as f64 / n;
    Ok(AccidentalEstimate {
        mean,
        std_err: (sum as f64).sqrt() / n,
        per_offset,
    })
}
