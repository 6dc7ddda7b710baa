//! Bucketing, log-returns, percentile jump detection and event streams.
//!
//! All series live on a [`BucketGrid`] of half-open intervals
//! `[start + i*width, start + (i+1)*width)`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::TickRecord;

/// Fifteen minutes.
pub const DEFAULT_BUCKET_WIDTH: i64 = 900;

#[derive(Debug, Error)]
pub enum EventsError {
    #[error("grid start {start} is not aligned to bucket width {width}")]
    Unaligned { start: i64, width: i64 },
    #[error("grid needs positive width and at least 2 buckets (width {width}, buckets {n_buckets})")]
    BadGrid { width: i64, n_buckets: usize },
    #[error("timestamp {0} lies outside the bucket grid")]
    OutOfRange(i64),
    #[error("no tick at or before the end of the first bucket")]
    NoInitialPrice,
    #[error("nonpositive price {value} at bucket {bucket}")]
    NonPositivePrice { bucket: usize, value: f64 },
    #[error("jump detection needs at least 10 returns, got {0}")]
    TooFewReturns(usize),
    #[error("percentile must lie in (0, 1), got {0}")]
    BadPercentile(f64),
    #[error("event index {index} out of range for stream {label} ({n_buckets} buckets)")]
    IndexOutOfRange {
        label: String,
        index: usize,
        n_buckets: usize,
    },
    #[error("event indices of stream {0} are not strictly increasing")]
    Unsorted(String),
    #[error("duplicate stream label {0}")]
    DuplicateLabel(String),
    #[error("overlap fraction is undefined without events")]
    NoEvents,
    #[error("event CSV: {0}")]
    Csv(String),
}

/// An aligned grid of equal-width time buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketGrid {
    start: i64,
    bucket_width: i64,
    n_buckets: usize,
}

impl BucketGrid {
    pub fn new(start: i64, bucket_width: i64, n_buckets: usize) -> Result<Self, EventsError> {
        if bucket_width <= 0 || n_buckets < 2 {
            return Err(EventsError::BadGrid {
                width: bucket_width,
                n_buckets,
            });
        }
        if start.rem_euclid(bucket_width) != 0 {
            return Err(EventsError::Unaligned {
                start,
                width: bucket_width,
            });
        }
        Ok(Self {
            start,
            bucket_width,
            n_buckets,
        })
    }

    /// Smallest aligned grid containing every timestamp in `[first, last]`.
    pub fn covering(first: i64, last: i64, bucket_width: i64) -> Result<Self, EventsError> {
        if bucket_width <= 0 {
            return Err(EventsError::BadGrid {
                width: bucket_width,
                n_buckets: 0,
            });
        }
        let start = first.div_euclid(bucket_width) * bucket_width;
        let n = ((last - start).div_euclid(bucket_width) + 1).max(2) as usize;
        Self::new(start, bucket_width, n)
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn bucket_width(&self) -> i64 {
        self.bucket_width
    }

    pub fn n_buckets(&self) -> usize {
        self.n_buckets
    }

    /// Exclusive end of the grid.
    pub fn end(&self) -> i64 {
        self.start + self.bucket_width * self.n_buckets as i64
    }

    pub fn bucket_start(&self, idx: usize) -> i64 {
        self.start + self.bucket_width * idx as i64
    }

    pub fn bucket_of(&self, ts: i64) -> Option<usize> {
        if ts < self.start || ts >= self.end() {
            return None;
        }
        Some(((ts - self.start) / self.bucket_width) as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Count,
    Price,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketSeries {
    pub grid: BucketGrid,
    pub values: Vec<f64>,
    pub kind: SeriesKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub grid: BucketGrid,
    /// `returns[i]` is the log-return from bucket `i` to bucket `i + 1`.
    pub returns: Vec<f64>,
}

pub fn bucketize_counts(timestamps: &[i64], grid: BucketGrid) -> Result<BucketSeries, EventsError> {
    let mut values = vec![0.0; grid.n_buckets()];
    for &ts in timestamps {
        let b = grid.bucket_of(ts).ok_or(EventsError::OutOfRange(ts))?;
        values[b] += 1.0;
    }
    Ok(BucketSeries {
        grid,
        values,
        kind: SeriesKind::Count,
    })
}

/// Last traded price per bucket, forward-filled through empty buckets.
///
/// Ticks before the grid start seed the first bucket; ticks after the grid
/// end are ignored.
pub fn bucketize_prices(ticks: &[TickRecord], grid: BucketGrid) -> Result<BucketSeries, EventsError> {
    let mut sorted: Vec<&TickRecord> = ticks.iter().collect();
    sorted.sort_by_key(|t| t.timestamp_ms);

    let width_ms = grid.bucket_width() * 1000;
    let start_ms = grid.start() * 1000;
    let mut last: Vec<Option<f64>> = vec![None; grid.n_buckets()];
    let mut seed = None;
    for t in sorted {
        if t.timestamp_ms < start_ms {
            seed = Some(t.price);
            continue;
        }
        let b = ((t.timestamp_ms - start_ms) / width_ms) as usize;
        if b >= grid.n_buckets() {
            break;
        }
        last[b] = Some(t.price);
    }

    let mut current = last[0].or(seed).ok_or(EventsError::NoInitialPrice)?;
    let values = last
        .into_iter()
        .map(|p| {
            if let Some(p) = p {
                current = p;
            }
            current
        })
        .collect();
    Ok(BucketSeries {
        grid,
        values,
        kind: SeriesKind::Price,
    })
}

/// Log-returns between consecutive buckets. Count series are smoothed by
/// adding `count_smoothing` to both sides of every ratio.
pub fn log_returns(series: &BucketSeries, count_smoothing: f64) -> Result<ReturnSeries, EventsError> {
    let shift = match series.kind {
        SeriesKind::Price => {
            if let Some((bucket, &value)) = series
                .values
                .iter()
                .enumerate()
                .find(|(_, &v)| !(v > 0.0))
            {
                return Err(EventsError::NonPositivePrice { bucket, value });
            }
            0.0
        }
        SeriesKind::Count => count_smoothing,
    };
    let returns = series
        .values
        .windows(2)
        .map(|w| ((w[1] + shift) / (w[0] + shift)).ln())
        .collect();
    Ok(ReturnSeries {
        grid: series.grid,
        returns,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

/// Nearest-rank percentile: the smallest sample value with at least
/// `percentile * n` samples at or below it.
pub fn nearest_rank(values: &[f64], percentile: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // Guard against 0.99 * 10000 evaluating to 9900.000000000002.
    let rank = ((percentile * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    sorted[rank - 1]
}

fn check_jump_input(returns: &ReturnSeries, percentile: f64) -> Result<(), EventsError> {
    if !(percentile > 0.0 && percentile < 1.0) {
        return Err(EventsError::BadPercentile(percentile));
    }
    if returns.returns.len() < 10 {
        return Err(EventsError::TooFewReturns(returns.returns.len()));
    }
    Ok(())
}

/// The signed returns a threshold for `direction` is computed from.
pub fn directed(returns: &[f64], direction: Direction) -> Vec<f64> {
    match direction {
        Direction::Up => returns.to_vec(),
        Direction::Down => returns.iter().map(|r| -r).collect(),
    }
}

/// Jump threshold for one series in one direction.
pub fn jump_threshold(
    returns: &ReturnSeries,
    percentile: f64,
    direction: Direction,
) -> Result<f64, EventsError> {
    check_jump_input(returns, percentile)?;
    Ok(nearest_rank(&directed(&returns.returns, direction), percentile))
}

/// Events where the directed return strictly exceeds `threshold` and has the
/// right sign. Events sit at the destination bucket of the return.
pub fn jumps_above(
    label: impl Into<String>,
    returns: &ReturnSeries,
    threshold: f64,
    direction: Direction,
) -> EventStream {
    let event_buckets = directed(&returns.returns, direction)
        .into_iter()
        .enumerate()
        .filter(|&(_, r)| r > threshold && r > 0.0)
        .map(|(i, _)| i + 1)
        .collect();
    EventStream {
        label: label.into(),
        event_buckets,
    }
}

/// Percentile jump events for one series.
pub fn detect_jumps(
    label: impl Into<String>,
    returns: &ReturnSeries,
    percentile: f64,
    direction: Direction,
) -> Result<EventStream, EventsError> {
    let threshold = jump_threshold(returns, percentile, direction)?;
    Ok(jumps_above(label, returns, threshold, direction))
}

/// Bucket indices of one process's events.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventStream {
    pub label: String,
    pub event_buckets: Vec<usize>,
}

impl EventStream {
    pub fn new(label: impl Into<String>, event_buckets: Vec<usize>) -> Self {
        Self {
            label: label.into(),
            event_buckets,
        }
    }

    pub fn len(&self) -> usize {
        self.event_buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_buckets.is_empty()
    }
}

/// Event streams sharing one grid, with unique labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSet {
    grid: BucketGrid,
    streams: Vec<EventStream>,
}

impl ProcessSet {
    pub fn new(grid: BucketGrid, streams: Vec<EventStream>) -> Result<Self, EventsError> {
        let mut seen = HashSet::new();
        for s in &streams {
            if !seen.insert(s.label.as_str()) {
                return Err(EventsError::DuplicateLabel(s.label.clone()));
            }
            if s.event_buckets.windows(2).any(|w| w[0] >= w[1]) {
                return Err(EventsError::Unsorted(s.label.clone()));
            }
            if let Some(&last) = s.event_buckets.last() {
                if last >= grid.n_buckets() {
                    return Err(EventsError::IndexOutOfRange {
                        label: s.label.clone(),
                        index: last,
                        n_buckets: grid.n_buckets(),
                    });
                }
            }
        }
        Ok(Self { grid, streams })
    }

    pub fn grid(&self) -> BucketGrid {
        self.grid
    }

    pub fn n_buckets(&self) -> usize {
        self.grid.n_buckets()
    }

    pub fn streams(&self) -> &[EventStream] {
        &self.streams
    }

    pub fn n_processes(&self) -> usize {
        self.streams.len()
    }

    pub fn labels(&self) -> Vec<String> {
        self.streams.iter().map(|s| s.label.clone()).collect()
    }

    pub fn total_events(&self) -> usize {
        self.streams.iter().map(EventStream::len).sum()
    }
}

/// Fraction of events that are alone in their bucket across all streams.
pub fn overlap_fraction(set: &ProcessSet) -> Result<f64, EventsError> {
    let mut occupancy: HashMap<usize, usize> = HashMap::new();
    for s in set.streams() {
        for &b in &s.event_buckets {
            *occupancy.entry(b).or_default() += 1;
        }
    }
    let total: usize = occupancy.values().sum();
    if total == 0 {
        return Err(EventsError::NoEvents);
    }
    let alone = occupancy.values().filter(|&&c| c == 1).count();
    Ok(alone as f64 / total as f64)
}

/// Sidecar describing the grid and stream order of an event CSV, which
/// itself carries neither the bucket count nor empty streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub start: i64,
    pub bucket_width: i64,
    pub n_buckets: usize,
    pub labels: Vec<String>,
}

impl GridSidecar {
    pub fn of(set: &ProcessSet) -> Self {
        Self {
            start: set.grid.start(),
            bucket_width: set.grid.bucket_width(),
            n_buckets: set.grid.n_buckets(),
            labels: set.labels(),
        }
    }
}

/// Writes `label,bucket_index,bucket_start_unix` rows sorted by label then
/// bucket index.
pub fn write_event_csv<W: Write>(set: &ProcessSet, out: W) -> Result<(), EventsError> {
    let csv_err = |e: csv::Error| EventsError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "bucket_index", "bucket_start_unix"])
        .map_err(csv_err)?;
    let mut streams: Vec<&EventStream> = set.streams().iter().collect();
    streams.sort_by(|a, b| a.label.cmp(&b.label));
    for s in streams {
        for &b in &s.event_buckets {
            w.write_record([
                s.label.clone(),
                b.to_string(),
                set.grid.bucket_start(b).to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| EventsError::Csv(e.to_string()))
}

#[derive(Deserialize)]
struct EventRow {
    label: String,
    bucket_index: usize,
    bucket_start_unix: i64,
}

/// Reads an event CSV back into a process set, with stream order and grid
/// taken from the sidecar.
pub fn read_event_csv<R: Read>(input: R, sidecar: &GridSidecar) -> Result<ProcessSet, EventsError> {
    let grid = BucketGrid::new(sidecar.start, sidecar.bucket_width, sidecar.n_buckets)?;
    let mut by_label: BTreeMap<String, Vec<usize>> = sidecar
        .labels
        .iter()
        .map(|l| (l.clone(), Vec::new()))
        .collect();
    let mut reader = csv::Reader::from_reader(input);
    for row in reader.deserialize::<EventRow>() {
        let row = row.map_err(|e| EventsError::Csv(e.to_string()))?;
        if grid.bucket_start(row.bucket_index) != row.bucket_start_unix {
            return Err(EventsError::Csv(format!(
                "bucket {} of {} starts at {}, file says {}",
                row.bucket_index,
                row.label,
                grid.bucket_start(row.bucket_index),
                row.bucket_start_unix
            )));
        }
        by_label
            .get_mut(&row.label)
            .ok_or_else(|| EventsError::Csv(format!("label {} missing from sidecar", row.label)))?
            .push(row.bucket_index);
    }
    let streams = sidecar
        .labels
        .iter()
        .map(|l| {
            let mut buckets = by_label.remove(l).unwrap_or_default();
            buckets.sort_unstable();
            buckets.dedup();
            EventStream::new(l.clone(), buckets)
        })
        .collect();
    ProcessSet::new(grid, streams)
}
