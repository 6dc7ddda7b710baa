//! Readers for submission dumps (JSON Lines) and exchange tick files (CSV).
//!
//! Both readers return records sorted by timestamp. Sorting is stable, so
//! records sharing a timestamp keep their file order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// One social-media submission. `text` is the title and body joined by a space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSubmission {
    pub id: String,
    pub created_utc: i64,
    pub source: String,
    pub text: String,
}

/// One exchange trade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRecord {
    pub timestamp_ms: i64,
    pub price: f64,
    pub amount: f64,
}

/// Records plus the number of lines skipped in lenient mode.
#[derive(Debug, Clone)]
pub struct ReadReport<T> {
    pub records: Vec<T>,
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ReadMode {
    /// First bad line aborts the read.
    #[default]
    Strict,
    /// Bad lines are skipped and counted.
    Lenient,
}

#[derive(Deserialize, Serialize)]
struct SubmissionLine {
    id: String,
    created_utc: i64,
    subreddit: String,
    title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    selftext: Option<String>,
}

impl SubmissionLine {
    fn into_record(self) -> Result<RawSubmission, String> {
        if self.created_utc <= 0 {
            return Err(format!("created_utc must be positive, got {}", self.created_utc));
        }
        if self.subreddit.is_empty() {
            return Err("subreddit is empty".to_string());
        }
        let text = match self.selftext.as_deref() {
            Some(body) if !body.is_empty() => format!("{} {}", self.title, body),
            _ => self.title,
        };
        Ok(RawSubmission {
            id: self.id,
            created_utc: self.created_utc,
            source: self.subreddit,
            text,
        })
    }
}

fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path).map(BufReader::new).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a JSON Lines submission dump.
pub fn read_submissions(
    path: impl AsRef<Path>,
    mode: ReadMode,
) -> Result<ReadReport<RawSubmission>, IngestError> {
    let path = path.as_ref();
    let reader = open(path)?;
    let mut records = Vec::new();
    let mut skipped = 0;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let parsed = serde_json::from_str::<SubmissionLine>(&line)
            .map_err(|e| e.to_string())
            .and_then(SubmissionLine::into_record);
        match parsed {
            Ok(rec) => records.push(rec),
            Err(_) if mode == ReadMode::Lenient => skipped += 1,
            Err(message) => {
                return Err(IngestError::Malformed {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message,
                })
            }
        }
    }
    records.sort_by_key(|r| r.created_utc);
    Ok(ReadReport { records, skipped })
}

/// Writes submissions in the dump format read by [`read_submissions`].
///
/// The whole text goes into `title`, so a read after write reproduces each
/// record exactly.
pub fn write_submissions(
    path: impl AsRef<Path>,
    records: &[RawSubmission],
) -> Result<(), IngestError> {
    let path = path.as_ref();
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for rec in records {
        let line = SubmissionLine {
            id: rec.id.clone(),
            created_utc: rec.created_utc,
            subreddit: rec.source.clone(),
            title: rec.text.clone(),
            selftext: None,
        };
        let json = serde_json::to_string(&line).expect("submission serializes");
        writeln!(out, "{json}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

fn parse_tick(record: &csv::StringRecord) -> Result<TickRecord, String> {
    if record.len() != 3 {
        return Err(format!("expected 3 columns, found {}", record.len()));
    }
    let field = |i: usize| record.get(i).unwrap_or("").trim();
    let timestamp_ms = field(0)
        .parse::<i64>()
        .map_err(|e| format!("bad timestamp_ms {:?}: {e}", field(0)))?;
    let price = field(1)
        .parse::<f64>()
        .map_err(|e| format!("bad price {:?}: {e}", field(1)))?;
    let amount = field(2)
        .parse::<f64>()
        .map_err(|e| format!("bad amount {:?}: {e}", field(2)))?;
    if !(price > 0.0) || !price.is_finite() {
        return Err(format!("price must be positive, got {price}"));
    }
    if !(amount >= 0.0) || !amount.is_finite() {
        return Err(format!("amount must be nonnegative, got {amount}"));
    }
    Ok(TickRecord {
        timestamp_ms,
        price,
        amount,
    })
}

/// Reads a headerless `timestamp_ms,price,amount` tick file.
pub fn read_ticks(
    path: impl AsRef<Path>,
    mode: ReadMode,
) -> Result<ReadReport<TickRecord>, IngestError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(open(path)?);
    let mut records = Vec::new();
    let mut skipped = 0;
    for (idx, row) in reader.records().enumerate() {
        let parsed = match row {
            Ok(row) => parse_tick(&row),
            Err(e) => match e.kind() {
                csv::ErrorKind::Io(_) => {
                    return Err(IngestError::Io {
                        path: path.to_path_buf(),
                        source: std::io::Error::other(e.to_string()),
                    })
                }
                _ => Err(e.to_string()),
            },
        };
        match parsed {
            Ok(tick) => records.push(tick),
            Err(_) if mode == ReadMode::Lenient => skipped += 1,
            Err(message) => {
                return Err(IngestError::Malformed {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message,
                })
            }
        }
    }
    records.sort_by_key(|t| t.timestamp_ms);
    Ok(ReadReport { records, skipped })
}

pub fn write_ticks(path: impl AsRef<Path>, ticks: &[TickRecord]) -> Result<(), IngestError> {
    let path = path.as_ref();
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for t in ticks {
        writeln!(out, "{},{},{}", t.timestamp_ms, t.price, t.amount).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn line(id: &str, ts: i64) -> String {
        format!(r#"{{"id":"{id}","created_utc":{ts},"subreddit":"Bitcoin","title":"t{id}","selftext":"body"}}"#)
    }

    #[test]
    fn submissions_sorted_by_time() {
        let f = write_tmp(&[line("a", 30), line("b", 10), line("c", 20)].join("\n"));
        let rep = read_submissions(f.path(), ReadMode::Strict).unwrap();
        let ts: Vec<i64> = rep.records.iter().map(|r| r.created_utc).collect();
        assert_eq!(ts, vec![10, 20, 30]);
        assert_eq!(rep.records[0].text, "tb body");
    }

    #[test]
    fn ties_keep_file_order() {
        let f = write_tmp(&[line("x", 5), line("y", 5), line("z", 1)].join("\n"));
        let rep = read_submissions(f.path(), ReadMode::Strict).unwrap();
        let ids: Vec<&str> = rep.records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, vec!["z", "x", "y"]);
    }

    #[test]
    fn empty_file_is_empty() {
        let f = write_tmp("");
        let rep = read_submissions(f.path(), ReadMode::Strict).unwrap();
        assert!(rep.records.is_empty());
        assert_eq!(rep.skipped, 0);
    }

    #[test]
    fn missing_body_is_empty() {
        let f = write_tmp(r#"{"id":"1","created_utc":7,"subreddit":"EthTrader","title":"just a title"}"#);
        let rep = read_submissions(f.path(), ReadMode::Strict).unwrap();
        assert_eq!(rep.records[0].text, "just a title");
        assert_eq!(rep.records[0].source, "EthTrader");
    }

    #[test]
    fn lenient_skips_and_counts() {
        let content = [line("a", 1), "{not json".to_string(), line("b", 2)].join("\n");
        let f = write_tmp(&content);
        let rep = read_submissions(f.path(), ReadMode::Lenient).unwrap();
        assert_eq!(rep.records.len(), 2);
        assert_eq!(rep.skipped, 1);
    }

    #[test]
    fn strict_reports_line_number() {
        let content = [line("a", 1), line("b", 2), r#"{"id":"c"}"#.to_string()].join("\n");
        let f = write_tmp(&content);
        match read_submissions(f.path(), ReadMode::Strict) {
            Err(IngestError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonpositive_created_utc_rejected() {
        let f = write_tmp(r#"{"id":"1","created_utc":0,"subreddit":"Bitcoin","title":"x"}"#);
        assert!(read_submissions(f.path(), ReadMode::Strict).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_submissions("/nonexistent/dump.jsonl", ReadMode::Strict).unwrap_err();
        assert!(matches!(err, IngestError::Io { .. }));
    }

    #[test]
    fn ticks_sorted() {
        let f = write_tmp("1000,100.0,1.0\n500,99.0,2.0\n");
        let rep = read_ticks(f.path(), ReadMode::Strict).unwrap();
        assert_eq!(rep.records[0].timestamp_ms, 500);
        assert_eq!(rep.records[1].price, 100.0);
    }

    #[test]
    fn zero_price_rejected_with_line() {
        let f = write_tmp("1000,100.0,1.0\n2000,0,1.0\n");
        match read_ticks(f.path(), ReadMode::Strict) {
            Err(IngestError::Malformed { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("price"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let rep = read_ticks(f.path(), ReadMode::Lenient).unwrap();
        assert_eq!((rep.records.len(), rep.skipped), (1, 1));
    }

    #[test]
    fn malformed_tick_row() {
        let f = write_tmp("1000,100.0\n");
        assert!(matches!(
            read_ticks(f.path(), ReadMode::Strict),
            Err(IngestError::Malformed { line: 1, .. })
        ));
    }
}
