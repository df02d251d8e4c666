use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{pearson, AnalyticsError, Correlation};
use crate::ids::ImageId;
use crate::scoring::ImageScore;

/// Group key used when categories are pooled.
pub const POOLED_CATEGORY: &str = "all";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub image_id: ImageId,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSet {
    pub dimension: usize,
    pub records: Vec<EmbeddingRecord>,
}

/// Parses `d=<dimension>` followed by `image_id,v1,...,vd` lines.
pub fn parse_embeddings(text: &str) -> Result<EmbeddingSet, AnalyticsError> {
    let bad = |line: usize, msg: String| {
        AnalyticsError::MalformedEmbeddings(format!("line {line}: {msg}"))
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (n, header) = lines
        .next()
        .ok_or_else(|| AnalyticsError::MalformedEmbeddings("empty file".into()))?;
    let dimension: usize = header
        .strip_prefix("d=")
        .and_then(|d| d.trim().parse().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| bad(n, format!("expected header d=<dimension>, got {header:?}")))?;

    let mut records = Vec::new();
    for (n, line) in lines {
        let mut fields = line.split(',');
        let id = fields.next().unwrap_or_default().trim();
        if id.is_empty() {
            return Err(bad(n, "missing image id".into()));
        }
        let vector = fields
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| bad(n, e.to_string()))
                    .and_then(|v| {
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(bad(n, "non-finite component".into()))
                        }
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if vector.len() != dimension {
            return Err(bad(
                n,
                format!("{} components, expected {dimension}", vector.len()),
            ));
        }
        records.push(EmbeddingRecord {
            image_id: id.into(),
            vector,
        });
    }
    Ok(EmbeddingSet { dimension, records })
}

/// Pearson correlation between each image's Euclidean distance to its
/// group centroid and its ICMscore. Groups are categories, or a single
/// pooled group keyed [`POOLED_CATEGORY`]. The centroid is the mean of the
/// scored members' vectors.
pub fn centroid_distance_correlation(
    embeddings: &[EmbeddingRecord],
    scores: &[ImageScore],
    group_by_category: bool,
) -> Result<BTreeMap<String, Result<Correlation, AnalyticsError>>, AnalyticsError> {
    let by_id: HashMap<&ImageId, &EmbeddingRecord> =
        embeddings.iter().map(|e| (&e.image_id, e)).collect();

    let mut groups: BTreeMap<&str, Vec<(&ImageScore, &[f64])>> = BTreeMap::new();
    for score in scores {
        let embedding = by_id
            .get(&score.image_id)
            .ok_or_else(|| AnalyticsError::MissingEmbedding(score.image_id.clone()))?;
        let key = if group_by_category {
            score.category.as_str()
        } else {
            POOLED_CATEGORY
        };
        groups
            .entry(key)
            .or_default()
            .push((score, &embedding.vector));
    }

    let mut out = BTreeMap::new();
    for (category, members) in groups {
        out.insert(category.to_owned(), correlate_group(&members));
    }
    Ok(out)
}

fn correlate_group(members: &[(&ImageScore, &[f64])]) -> Result<Correlation, AnalyticsError> {
    let dimension = members[0].1.len();
    if members.iter().any(|(_, v)| v.len() != dimension) {
        return Err(AnalyticsError::MalformedEmbeddings(
            "mixed dimensions".into(),
        ));
    }
    let mut centroid = vec![0.0; dimension];
    for (_, v) in members {
        for (c, x) in centroid.iter_mut().zip(v.iter()) {
            *c += x;
        }
    }
    let n = members.len() as f64;
    centroid.iter_mut().for_each(|c| *c /= n);

    let distances: Vec<f64> = members
        .iter()
        .map(|(_, v)| {
            v.iter()
                .zip(&centroid)
                .map(|(x, c)| (x - c) * (x - c))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let icm: Vec<f64> = members.iter().map(|(s, _)| s.icmscore).collect();
    pearson(&distances, &icm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scored(id: &str, category: &str, icm: f64) -> ImageScore {
        ImageScore {
            image_id: id.into(),
            category: category.into(),
            icmscore: icm,
            icmscore_no_penalty: 0.0,
            n_responses: 1,
        }
    }

    #[test]
    fn parse_file() {
        let set = parse_embeddings("d=2\na,1.0,2\nb,-0.5,3e-2\n\n").unwrap();
        assert_eq!(set.dimension, 2);
        assert_eq!(set.records[1].vector, vec![-0.5, 0.03]);
        assert!(parse_embeddings("a,1,2\n").is_err());
        assert!(parse_embeddings("d=2\na,1\n").is_err());
        assert!(parse_embeddings("d=2\na,1,NaN\n").is_err());
        assert!(parse_embeddings("d=2\na,1,x\n").is_err());
        assert!(parse_embeddings("d=0\n").is_err());
    }

    #[test]
    fn equal_distances_are_degenerate() {
        let emb = vec![
            EmbeddingRecord {
                image_id: "a".into(),
                vector: vec![1.0, 0.0],
            },
            EmbeddingRecord {
                image_id: "b".into(),
                vector: vec![-1.0, 0.0],
            },
            EmbeddingRecord {
                image_id: "c".into(),
                vector: vec![0.0, 0.0],
            },
        ];
        // a and b are equidistant from the centroid, c sits on it
        let scores = vec![
            scored("a", "x", 0.1),
            scored("b", "x", 0.2),
            scored("c", "x", 0.3),
        ];
        let out = centroid_distance_correlation(&emb, &scores, true).unwrap();
        assert!(out["x"].is_ok());

        let emb = vec![
            EmbeddingRecord {
                image_id: "a".into(),
                vector: vec![1.0],
            },
            EmbeddingRecord {
                image_id: "b".into(),
                vector: vec![1.0],
            },
            EmbeddingRecord {
                image_id: "c".into(),
                vector: vec![1.0],
            },
        ];
        let out = centroid_distance_correlation(&emb, &scores, true).unwrap();
        assert!(matches!(out["x"], Err(AnalyticsError::DegenerateInput(_))));
    }

    #[test]
    fn missing_embedding() {
        let scores = vec![scored("a", "x", 0.1)];
        assert_eq!(
            centroid_distance_correlation(&[], &scores, true),
            Err(AnalyticsError::MissingEmbedding("a".into()))
        );
    }

    #[test]
    fn pooled_group() {
        let emb: Vec<_> = (0..6)
            .map(|i| EmbeddingRecord {
                image_id: format!("i{i}").into(),
                vector: vec![i as f64],
            })
            .collect();
        let scores: Vec<_> = (0..6)
            .map(|i| {
                scored(
                    &format!("i{i}"),
                    if i % 2 == 0 { "x" } else { "y" },
                    i as f64 / 10.0,
                )
            })
            .collect();
        let out = centroid_distance_correlation(&emb, &scores, false).unwrap();
        assert_eq!(out.keys().collect::<Vec<_>>(), vec![POOLED_CATEGORY]);
        assert_eq!(out[POOLED_CATEGORY].as_ref().unwrap().n, 6);
        let out = centroid_distance_correlation(&emb, &scores, true).unwrap();
        assert_eq!(out.len(), 2);
    }
}
