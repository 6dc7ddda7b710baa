use std::io::{Read, Write};

use super::dynamic::DynamicTopicModel;
use super::lda::{top_words, DocTopicMix};
use super::TopicsError;
use crate::corpus::Vocabulary;

/// Terms listed per topic in the text report.
pub const REPORT_WORDS: usize = 10;

/// Writes one `slice <t> topic <k>:` block per (slice, topic), each followed
/// by `n` terms with their probabilities, most probable first.
pub fn write_topic_report<W: Write>(
    mut out: W,
    model: &DynamicTopicModel,
    vocab: &Vocabulary,
    n: usize,
) -> Result<(), TopicsError> {
    for slice in &model.slices {
        for k in 0..slice.n_topics() {
            writeln!(out, "slice {} topic {}:", slice.slice_index, k)?;
            for (term, p) in top_words(slice, k, n, vocab)? {
                writeln!(out, "  {term} {p:.6}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Writes `doc_id,timestamp,source,theta_0..theta_{K-1}` rows.
pub fn write_theta_csv<W: Write>(out: W, mixes: &[DocTopicMix]) -> Result<(), TopicsError> {
    let csv_err = |e: csv::Error| TopicsError::Csv(e.to_string());
    let k = mixes.iter().map(|m| m.theta.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["doc_id".to_string(), "timestamp".into(), "source".into()];
    header.extend((0..k).map(|i| format!("theta_{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for m in mixes {
        let mut row = vec![m.doc_id.clone(), m.timestamp.to_string(), m.source.clone()];
        row.extend(m.theta.iter().map(|t| t.to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_theta_csv<R: Read>(input: R) -> Result<Vec<DocTopicMix>, TopicsError> {
    let csv_err = |e: csv::Error| TopicsError::Csv(e.to_string());
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.len() < 3 || &headers[0] != "doc_id" || &headers[1] != "timestamp" || &headers[2] != "source" {
        return Err(TopicsError::Csv("header must start with doc_id,timestamp,source".into()));
    }
    let mut mixes = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let bad = |what: &str| TopicsError::Csv(format!("row {}: bad {what}", i + 2));
        let timestamp = row[1].parse().map_err(|_| bad("timestamp"))?;
        let theta = (3..row.len())
            .map(|c| row[c].parse::<f64>().map_err(|_| bad("theta")))
            .collect::<Result<_, _>>()?;
        mixes.push(DocTopicMix {
            doc_id: row[0].to_string(),
            timestamp,
            source: row[2].to_string(),
            theta,
        });
    }
    Ok(mixes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topics::{LdaConfig, TopicModelSlice};
    use ndarray::array;

    #[test]
    fn report_layout() {
        let model = DynamicTopicModel {
            slices: vec![TopicModelSlice {
                slice_index: 0,
                beta: array![[0.5, 0.3, 0.2], [0.1, 0.1, 0.8]],
            }],
            origin: 0,
            slice_duration: 10,
            kappa: 0.0,
            vocab_size: 3,
            config: LdaConfig::with_topics(2),
        };
        let vocab = Vocabulary::from_terms(["ath", "moon", "whale"]);
        let mut buf = Vec::new();
        write_topic_report(&mut buf, &model, &vocab, 2).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "slice 0 topic 0:\n  ath 0.500000\n  moon 0.300000\n\nslice 0 topic 1:\n  whale 0.800000\n  ath 0.100000\n\n"
        );
    }

    #[test]
    fn theta_csv_roundtrip() {
        let mixes = vec![DocTopicMix {
            doc_id: "abc".into(),
            timestamp: 1_500_000_000,
            source: "Bitcoin".into(),
            theta: vec![0.1 + 0.2, 0.7 - 1e-17],
        }];
        let mut buf = Vec::new();
        write_theta_csv(&mut buf, &mixes).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("doc_id,timestamp,source,theta_0,theta_1\n"));
        assert_eq!(read_theta_csv(buf.as_slice()).unwrap(), mixes);
    }
}
