//! Detector click streams shared by the Monte Carlo generator and the counters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Probe,
    Reference,
}

impl Channel {
    pub fn code(self) -> u32 {
        match self {
            Channel::Probe => 0,
            Channel::Reference => 1,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Channel::Probe),
            1 => Some(Channel::Reference),
            _ => None,
        }
    }
}

/// Ground-truth origin of a click. Only the simulator knows it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Truth {
    Pair(u64),
    Noise,
    Dark,
    /// Loaded from an external file.
    Unknown,
}

impl std::fmt::Display for Truth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Truth::Pair(id) => write!(f, "pair:{id}"),
            Truth::Noise => f.write_str("noise"),
            Truth::Dark => f.write_str("dark"),
            Truth::Unknown => f.write_str("unknown"),
        }
    }
}

/// Time-ordered clicks of one detector channel. Timestamps are in ps since run start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagStream {
    channel: Channel,
    timestamps: Vec<u64>,
    truth: Vec<Truth>,
}

impl TagStream {
    pub fn new(channel: Channel) -> Self {
        Self {
            channel,
            timestamps: Vec::new(),
            truth: Vec::new(),
        }
    }

    /// Builds a stream from already sorted timestamps with unknown truth.
    pub fn from_timestamps(channel: Channel, timestamps: Vec<u64>) -> Result<Self> {
        check_sorted(&timestamps)?;
        let truth = vec![Truth::Unknown; timestamps.len()];
        Ok(Self {
            channel,
            timestamps,
            truth,
        })
    }

    /// Sorts arbitrary clicks by timestamp. Equal timestamps keep their input order.
    pub fn from_unsorted(channel: Channel, mut clicks: Vec<(u64, Truth)>) -> Self {
        clicks.sort_by_key(|c| c.0);
        let (timestamps, truth) = clicks.into_iter().unzip();
        Self {
            channel,
            timestamps,
            truth,
        }
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn timestamps(&self) -> &[u64] {
        &self.timestamps
    }

    pub fn truth(&self) -> &[Truth] {
        &self.truth
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, Truth)> + '_ {
        self.timestamps.iter().copied().zip(self.truth.iter().copied())
    }

    /// Keeps the clicks for which `keep(index)` is true.
    pub fn retain_indices(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        let mut out = TagStream::new(self.channel);
        for (i, (t, tr)) in self.iter().enumerate() {
            if keep(i) {
                out.timestamps.push(t);
                out.truth.push(tr);
            }
        }
        out
    }

    pub fn count_where(&self, pred: impl Fn(Truth) -> bool) -> usize {
        self.truth.iter().filter(|t| pred(**t)).count()
    }

    /// Drops truth labels, as any externally exchanged stream would.
    pub fn without_truth(&self) -> Self {
        Self {
            channel: self.channel,
            timestamps: self.timestamps.clone(),
            truth: vec![Truth::Unknown; self.len()],
        }
    }

    pub fn check_sorted(&self) -> Result<()> {
        check_sorted(&self.timestamps)
    }
}

pub(crate) fn check_sorted(ts: &[u64]) -> Result<()> {
    match ts.windows(2).position(|w| w[1] < w[0]) {
        Some(i) => Err(Error::Unsorted { index: i + 1 }),
        None => Ok(()),
    }
}
