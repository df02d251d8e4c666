use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::ids::ImageId;
use crate::scoring::ImageScore;

/// High, low and mixed memorability subsets of one category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratifiedSplit {
    pub category: String,
    pub k: usize,
    /// Highest scores first.
    pub hm: Vec<ImageId>,
    /// Lowest scores last.
    pub lm: Vec<ImageId>,
    /// Sorted by id.
    pub mm: Vec<ImageId>,
    pub seed: u64,
}

/// Ranks by descending score with ascending id as tie-break, takes the top
/// `k` as HM and the bottom `k` as LM, then samples `k` MM images uniformly
/// without replacement from their union.
pub fn stratify(
    scores: &[ImageScore],
    k: usize,
    seed: u64,
) -> Result<StratifiedSplit, AnalyticsError> {
    if k == 0 {
        return Err(AnalyticsError::InvalidK);
    }
    if scores.len() < 2 * k {
        return Err(AnalyticsError::InsufficientImages {
            needed: 2 * k,
            available: scores.len(),
        });
    }
    let category = scores[0].category.clone();
    if let Some(other) = scores.iter().find(|s| s.category != category) {
        return Err(AnalyticsError::MixedCategories(
            category,
            other.category.clone(),
        ));
    }

    let mut ranked: Vec<&ImageScore> = scores.iter().collect();
    ranked.sort_by(|a, b| {
        b.icmscore
            .total_cmp(&a.icmscore)
            .then_with(|| a.image_id.cmp(&b.image_id))
    });
    let hm: Vec<ImageId> = ranked[..k].iter().map(|s| s.image_id.clone()).collect();
    let lm: Vec<ImageId> = ranked[ranked.len() - k..]
        .iter()
        .map(|s| s.image_id.clone())
        .collect();

    let union: Vec<&ImageId> = hm.iter().chain(&lm).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mm: Vec<ImageId> = index::sample(&mut rng, union.len(), k)
        .into_iter()
        .map(|i| union[i].clone())
        .collect();
    mm.sort();

    Ok(StratifiedSplit {
        category,
        k,
        hm,
        lm,
        mm,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn scored(id: &str, icm: f64) -> ImageScore {
        ImageScore {
            image_id: id.into(),
            category: "flower".into(),
            icmscore: icm,
            icmscore_no_penalty: 0.5,
            n_responses: 10,
        }
    }

    #[test]
    fn two_images() {
        let split = stratify(&[scored("a", 0.1), scored("b", 0.4)], 1, 0).unwrap();
        assert_eq!(split.hm, vec![ImageId::from("b")]);
        assert_eq!(split.lm, vec![ImageId::from("a")]);
        assert_eq!(split.mm.len(), 1);
    }

    #[test]
    fn ties_break_by_id() {
        let split = stratify(&[scored("y", 0.3), scored("x", 0.3)], 1, 0).unwrap();
        assert_eq!(split.hm, vec![ImageId::from("x")]);
        assert_eq!(split.lm, vec![ImageId::from("y")]);
    }

    #[test]
    fn errors() {
        assert_eq!(
            stratify(&[scored("a", 0.1)], 1, 0),
            Err(AnalyticsError::InsufficientImages {
                needed: 2,
                available: 1
            })
        );
        assert_eq!(
            stratify(&[scored("a", 0.1)], 0, 0),
            Err(AnalyticsError::InvalidK)
        );
        let mut other = scored("b", 0.2);
        other.category = "phone".into();
        assert!(matches!(
            stratify(&[scored("a", 0.1), other], 1, 0),
            Err(AnalyticsError::MixedCategories(_, _))
        ));
    }

    proptest! {
        #[test]
        fn partition_invariants(raw in proptest::collection::vec(-0.75f64..1.0, 2..80), k in 1usize..40, seed in any::<u64>()) {
            let k = k.min(raw.len() / 2);
            let scores: Vec<_> = raw.iter().enumerate().map(|(i, &v)| scored(&format!("img{i:03}"), v)).collect();
            let split = stratify(&scores, k, seed).unwrap();
            prop_assert_eq!(split.hm.len(), k);
            prop_assert_eq!(split.lm.len(), k);
            prop_assert_eq!(split.mm.len(), k);
            let hm: HashSet<_> = split.hm.iter().collect();
            let lm: HashSet<_> = split.lm.iter().collect();
            prop_assert!(hm.is_disjoint(&lm));
            prop_assert!(split.mm.iter().all(|id| hm.contains(id) || lm.contains(id)));
            let mm: HashSet<_> = split.mm.iter().collect();
            prop_assert_eq!(mm.len(), k);
            let lowest_hm = split.hm.iter().map(|id| raw[id.as_str()[3..].parse::<usize>().unwrap()]).fold(f64::INFINITY, f64::min);
            let highest_lm = split.lm.iter().map(|id| raw[id.as_str()[3..].parse::<usize>().unwrap()]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lowest_hm >= highest_lm);
            prop_assert_eq!(stratify(&scores, k, seed).unwrap(), split);
        }
    }
}
