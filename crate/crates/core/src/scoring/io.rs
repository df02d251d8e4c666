use std::io::Read;

use super::{ImageScore, PresentationOutcome, ScoringError};

pub const SCORE_CSV_HEADER: [&str; 5] = [
    "image_id",
    "category",
    "icmscore",
    "icmscore_no_penalty",
    "n_responses",
];

/// Renders scores as CSV. Reals use the shortest round-trip representation,
/// so identical scores always produce identical bytes.
pub fn write_scores_csv(scores: &[ImageScore]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(SCORE_CSV_HEADER)
        .expect("in-memory write");
    for s in scores {
        writer
            .write_record([
                s.image_id.as_str(),
                s.category.as_str(),
                &s.icmscore.to_string(),
                &s.icmscore_no_penalty.to_string(),
                &s.n_responses.to_string(),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn read_scores_csv(reader: impl Read) -> Result<Vec<ImageScore>, ScoringError> {
    let bad = |e: String| ScoringError::MalformedScores(e);
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(SCORE_CSV_HEADER) {
        return Err(bad(format!("unexpected header {:?}", header)));
    }
    let mut scores = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let real = |i: usize| -> Result<f64, ScoringError> {
            let v: f64 = record[i]
                .parse()
                .map_err(|e| bad(format!("row {}: {e}", line + 1)))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(format!("row {}: non-finite score", line + 1)))
            }
        };
        scores.push(ImageScore {
            image_id: record[0].into(),
            category: record[1].to_owned(),
            icmscore: real(2)?,
            icmscore_no_penalty: real(3)?,
            n_responses: record[4]
                .parse()
                .map_err(|e| bad(format!("row {}: {e}", line + 1)))?,
        });
    }
    Ok(scores)
}

/// One outcome per line.
pub fn write_outcomes_jsonl<'a>(
    outcomes: impl IntoIterator<Item = &'a PresentationOutcome>,
) -> String {
    let mut out = String::new();
    for o in outcomes {
        out.push_str(&serde_json::to_string(o).expect("outcome serialises"));
        out.push('\n');
    }
    out
}
