use std::collections::BTreeSet;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::AnnotationKind;
use crate::seed::rng_from_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoarseMixSpec {
    #[serde(default = "default_total")]
    pub total_samples: usize,
    pub coarse_fraction: f64,
    pub seed: u64,
}

fn default_total() -> usize {
    2975
}

impl CoarseMixSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.coarse_fraction) {
            return Err(Error::InvalidConfig(format!(
                "coarse fraction {} outside [0, 1]",
                self.coarse_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixSample {
    pub sample_id: String,
    pub kind: AnnotationKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoarseMix {
    pub spec: CoarseMixSpec,
    pub samples: Vec<MixSample>,
}

impl CoarseMix {
    pub fn coarse_samples(&self) -> usize {
        self.samples
            .iter()
            .filter(|s| s.kind == AnnotationKind::Coarse)
            .count()
    }
}

/// `total * fraction` rounded half up. The product is snapped to 1e-6 first
/// so that binary noise cannot move an exact half.
pub fn coarse_count(spec: &CoarseMixSpec) -> usize {
    let x = spec.total_samples as f64 * spec.coarse_fraction;
    let snapped = (x * 1e6).round() / 1e6;
    ((snapped + 0.5).floor() as usize).min(spec.total_samples)
}

/// Samples the coarse share from `coarse_pool` and the rest from
/// `fine_pool`, without replacement. An id drawn as coarse is not drawn
/// again as fine. Pools are deduplicated and sorted, so the result depends
/// only on their contents and the seed.
pub fn coarse_mix_plan(
    fine_pool: &[String],
    coarse_pool: &[String],
    spec: &CoarseMixSpec,
) -> Result<CoarseMix> {
    spec.validate()?;
    let n_coarse = coarse_count(spec);
    let n_fine = spec.total_samples - n_coarse;
    let coarse_pool: Vec<&String> = coarse_pool
        .iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if coarse_pool.len() < n_coarse {
        return Err(Error::PoolTooSmall {
            kind: "coarse",
            needed: n_coarse,
            available: coarse_pool.len(),
        });
    }
    let mut rng = rng_from_seed(spec.seed);
    let coarse: Vec<&String> = index::sample(&mut rng, coarse_pool.len(), n_coarse)
        .into_iter()
        .map(|i| coarse_pool[i])
        .collect();
    let taken: BTreeSet<&String> = coarse.iter().copied().collect();
    let fine_pool: Vec<&String> = fine_pool
        .iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter(|id| !taken.contains(id))
        .collect();
    if fine_pool.len() < n_fine {
        return Err(Error::PoolTooSmall {
            kind: "fine",
            needed: n_fine,
            available: fine_pool.len(),
        });
    }
    let fine = index::sample(&mut rng, fine_pool.len(), n_fine)
        .into_iter()
        .map(|i| fine_pool[i]);
    let samples = coarse
        .into_iter()
        .map(|id| (id, AnnotationKind::Coarse))
        .chain(fine.map(|id| (id, AnnotationKind::Fine)))
        .map(|(id, kind)| MixSample {
            sample_id: id.clone(),
            kind,
        })
        .collect();
    Ok(CoarseMix {
        spec: spec.clone(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn spec(fraction: f64) -> CoarseMixSpec {
        CoarseMixSpec {
            total_samples: 2975,
            coarse_fraction: fraction,
            seed: 11,
        }
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(coarse_count(&spec(0.0)), 0);
        assert_eq!(coarse_count(&spec(0.5)), 1488);
        assert_eq!(coarse_count(&spec(1.0)), 2975);
        assert_eq!(coarse_count(&spec(0.1)), 298);
        assert_eq!(coarse_count(&spec(0.3)), 893);
    }

    #[test]
    fn extremes_are_pure() {
        let fine = ids("f", 2975);
        let coarse = ids("k", 2975);
        let all_fine = coarse_mix_plan(&fine, &coarse, &spec(0.0)).unwrap();
        assert!(all_fine
            .samples
            .iter()
            .all(|s| s.kind == AnnotationKind::Fine));
        let all_coarse = coarse_mix_plan(&fine, &coarse, &spec(1.0)).unwrap();
        assert_eq!(all_coarse.coarse_samples(), 2975);
        let half = coarse_mix_plan(&fine, &coarse, &spec(0.5)).unwrap();
        assert_eq!(half.coarse_samples(), 1488);
        assert_eq!(half.samples.len(), 2975);
    }

    #[test]
    fn pool_too_small() {
        let err = coarse_mix_plan(&ids("f", 10), &ids("k", 3000), &spec(0.5)).unwrap_err();
        assert!(matches!(
            err,
            Error::PoolTooSmall {
                kind: "fine",
                needed: 1487,
                available: 10
            }
        ));
        let err = coarse_mix_plan(&ids("f", 3000), &ids("k", 5), &spec(0.5)).unwrap_err();
        assert!(matches!(err, Error::PoolTooSmall { kind: "coarse", .. }));
    }

    #[test]
    fn bad_fraction() {
        assert!(coarse_mix_plan(&[], &[], &spec(1.5)).is_err());
        assert!(coarse_mix_plan(&[], &[], &spec(f64::NAN)).is_err());
    }

    #[test]
    fn overlapping_pools_never_repeat_ids() {
        let pool = ids("x", 20);
        let s = CoarseMixSpec {
            total_samples: 20,
            coarse_fraction: 0.5,
            seed: 2,
        };
        let mix = coarse_mix_plan(&pool, &pool, &s).unwrap();
        let distinct: BTreeSet<&String> = mix.samples.iter().map(|s| &s.sample_id).collect();
        assert_eq!(distinct.len(), 20);
    }

    proptest! {
        #[test]
        fn reproducible_per_seed(seed in any::<u64>(), f in 0.0f64..=1.0) {
            let fine = ids("f", 60);
            let coarse = ids("k", 60);
            let s = CoarseMixSpec { total_samples: 50, coarse_fraction: f, seed };
            let a = coarse_mix_plan(&fine, &coarse, &s).unwrap();
            let mut rev = coarse.clone();
            rev.reverse();
            let b = coarse_mix_plan(&fine, &rev, &s).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
