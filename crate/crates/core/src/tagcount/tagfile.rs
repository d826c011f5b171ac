//! Binary and CSV interchange formats for time tags.
//!
//! Binary layout, little-endian: `"QTAG"`, version `u32 = 1`, record count `u64`,
//! then 16-byte records of timestamp `u64` (ps), channel `u32`, reserved `u32 = 0`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::stream::{Channel, TagStream, Truth};

pub const TAGFILE_MAGIC: [u8; 4] = *b"QTAG";
pub const TAGFILE_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;
const RECORD_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TagRecord {
    pub timestamp: u64,
    pub channel: Channel,
    pub truth: Truth,
}

/// Interleaves two streams into one timestamp-ordered record list (probe first on ties).
pub fn merge_streams(probe: &TagStream, reference: &TagStream) -> Vec<TagRecord> {
    let mut out = Vec::with_capacity(probe.len() + reference.len());
    let to_rec = |s: &TagStream, (timestamp, truth): (u64, Truth)| TagRecord {
        timestamp,
        channel: s.channel(),
        truth,
    };
    let mut pi = probe.iter().peekable();
    let mut ri = reference.iter().peekable();
    loop {
        let take_probe = match (pi.peek(), ri.peek()) {
            (Some(p), Some(r)) => p.0 <= r.0,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        if take_probe {
            out.push(to_rec(probe, pi.next().unwrap()));
        } else {
            out.push(to_rec(reference, ri.next().unwrap()));
        }
    }
    out
}

/// Splits records into (probe, reference) streams.
pub fn split_records(records: &[TagRecord]) -> (TagStream, TagStream) {
    let pick = |ch: Channel| {
        let clicks = records
            .iter()
            .filter(|r| r.channel == ch)
            .map(|r| (r.timestamp, r.truth))
            .collect();
        TagStream::from_unsorted(ch, clicks)
    };
    (pick(Channel::Probe), pick(Channel::Reference))
}

pub fn encode_tagfile(records: &[TagRecord]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + RECORD_LEN * records.len());
    buf.extend_from_slice(&TAGFILE_MAGIC);
    buf.extend_from_slice(&TAGFILE_VERSION.to_le_bytes());
    buf.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for r in records {
        buf.extend_from_slice(&r.timestamp.to_le_bytes());
        buf.extend_from_slice(&r.channel.code().to_le_bytes());
        buf.extend_from_slice(&0u32.to_le_bytes());
    }
    buf
}

fn parse_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        offset: offset as u64,
        reason: reason.into(),
    }
}

fn le_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn le_u64(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

pub fn decode_tagfile(bytes: &[u8]) -> Result<Vec<TagRecord>> {
    if bytes.len() < HEADER_LEN {
        return Err(parse_err(bytes.len(), "truncated header"));
    }
    if bytes[..4] != TAGFILE_MAGIC {
        return Err(parse_err(0, "bad magic, expected \"QTAG\""));
    }
    let version = le_u32(bytes, 4);
    if version != TAGFILE_VERSION {
        return Err(parse_err(4, format!("unsupported version {version}")));
    }
    let count = le_u64(bytes, 8);
    let body = bytes.len() - HEADER_LEN;
    let expected = count.checked_mul(RECORD_LEN as u64);
    match expected {
        Some(n) if n == body as u64 => {}
        Some(n) if n > body as u64 => {
            let whole = body / RECORD_LEN;
            return Err(parse_err(
                HEADER_LEN + whole * RECORD_LEN,
                format!("truncated: header declares {count} records, found {whole}"),
            ));
        }
        Some(n) => {
            return Err(parse_err(HEADER_LEN + n as usize, "trailing bytes after last record"));
        }
        None => return Err(parse_err(8, format!("record count {count} overflows"))),
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut prev = 0u64;
    for i in 0..count as usize {
        let at = HEADER_LEN + i * RECORD_LEN;
        let timestamp = le_u64(bytes, at);
        let code = le_u32(bytes, at + 8);
        let channel = Channel::from_code(code).ok_or_else(|| parse_err(at + 8, format!("invalid channel {code}")))?;
        if le_u32(bytes, at + 12) != 0 {
            return Err(parse_err(at + 12, "reserved field must be zero"));
        }
        if timestamp < prev {
            return Err(parse_err(at, format!("timestamp {timestamp} out of order (previous {prev})")));
        }
        prev = timestamp;
        out.push(TagRecord {
            timestamp,
            channel,
            truth: Truth::Unknown,
        });
    }
    Ok(out)
}

pub fn write_tagfile(path: &Path, records: &[TagRecord]) -> Result<()> {
    std::fs::write(path, encode_tagfile(records))?;
    Ok(())
}

pub fn read_tagfile(path: &Path) -> Result<Vec<TagRecord>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_tagfile(&bytes)
}

/// Writes `timestamp_ps,channel` rows, optionally with a `truth` column.
pub fn write_csv<W: Write>(mut w: W, records: &[TagRecord], with_truth: bool) -> Result<()> {
    if with_truth {
        writeln!(w, "timestamp_ps,channel,truth")?;
    } else {
        writeln!(w, "timestamp_ps,channel")?;
    }
    for r in records {
        if with_truth {
            writeln!(w, "{},{},{}", r.timestamp, r.channel.code(), r.truth)?;
        } else {
            writeln!(w, "{},{}", r.timestamp, r.channel.code())?;
        }
    }
    Ok(())
}

/// Reads the CSV form. Errors carry the byte offset of the offending line.
pub fn read_csv<R: Read>(r: R) -> Result<Vec<TagRecord>> {
    let mut reader = BufReader::new(r);
    let mut line = String::new();
    let mut offset = 0usize;
    let n = reader.read_line(&mut line)?;
    let header = line.trim_end_matches(['\r', '\n']);
    if header != "timestamp_ps,channel" && header != "timestamp_ps,channel,truth" {
        return Err(parse_err(0, format!("unexpected header {header:?}")));
    }
    offset += n;
    let mut out = Vec::new();
    let mut prev = 0u64;
    loop {
        line.clear();
        let n = reader.read_line(&mut line)?;
        if n == 0 {
            break;
        }
        let row = line.trim_end_matches(['\r', '\n']);
        if !row.is_empty() {
            let mut fields = row.split(',');
            let ts = fields.next().unwrap_or("");
            let ch = fields.next().unwrap_or("");
            let timestamp: u64 = ts
                .trim()
                .parse()
                .map_err(|_| parse_err(offset, format!("bad timestamp {ts:?}")))?;
            let code: u32 = ch
                .trim()
                .parse()
                .map_err(|_| parse_err(offset, format!("bad channel {ch:?}")))?;
            let channel = Channel::from_code(code).ok_or_else(|| parse_err(offset, format!("invalid channel {code}")))?;
            if timestamp < prev {
                return Err(parse_err(offset, format!("timestamp {timestamp} out of order")));
            }
            prev = timestamp;
            out.push(TagRecord {
                timestamp,
                channel,
                truth: Truth::Unknown,
            });
        }
        offset += n;
    }
    Ok(out)
}
