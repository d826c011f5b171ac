use crate::stream::TagStream;

/// Non-paralyzable dead time: a click is lost when it arrives less than
/// `dead_time_ns` after the last accepted click.
pub fn apply_dead_time(s: &TagStream, dead_time_ns: f64) -> TagStream {
    if !(dead_time_ns > 0.0) {
        return s.clone();
    }
    let dead = (dead_time_ns * 1e3).round() as u64;
    let ts = s.timestamps();
    let mut last: Option<u64> = None;
    let mut keep = vec![false; ts.len()];
    for (i, &t) in ts.iter().enumerate() {
        if last.is_none_or(|l| t - l >= dead) {
            keep[i] = true;
            last = Some(t);
        }
    }
    s.retain_indices(|i| keep[i])
}

/// Accepted rate for Poisson input at `rate` per second.
pub fn nonparalyzable_rate(rate: f64, dead_time_ns: f64) -> f64 {
    rate / (1.0 + rate * dead_time_ns * 1e-9)
}
