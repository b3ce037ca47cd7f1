use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::manifest::DatasetManifest;
use crate::error::{Error, Result};

/// Cross-validation assignment of record ids to folds in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    pub mapping: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.mapping.get(id).copied()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.mapping.values() {
            sizes[f] += 1;
        }
        sizes
    }

    /// Ids in fold `fold`, in manifest order.
    pub fn members<'a>(&'a self, manifest: &'a DatasetManifest, fold: usize) -> Vec<&'a str> {
        manifest
            .records
            .iter()
            .filter(|r| self.fold_of(&r.id) == Some(fold))
            .map(|r| r.id.as_str())
            .collect()
    }
}

/// Utterance-level random fold assignment (speaker-dependent: speakers may
/// appear in several folds). Fold sizes differ by at most one and larger
/// folds come first.
pub fn make_folds(manifest: &DatasetManifest, k: usize, seed: u64) -> Result<FoldAssignment> {
    let n = manifest.records.len();
    if k < 2 || k > n {
        return Err(Error::InvalidFolds { k, records: n });
    }
    let mut ids: Vec<&str> = manifest.records.iter().map(|r| r.id.as_str()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let mapping = ids
        .into_iter()
        .enumerate()
        .map(|(i, id)| (id.to_string(), i % k))
        .collect();
    Ok(FoldAssignment { k, seed, mapping })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::manifest::{LabelScheme, Split, SplitName, Task, UtteranceRecord};
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn manifest(n: usize) -> DatasetManifest {
        let records = (0..n)
            .map(|i| UtteranceRecord {
                id: format!("utt{i:03}"),
                audio_path: format!("{i}.wav").into(),
                sample_rate: 16000,
                duration: 1.0,
                speaker: Some(format!("spk{}", i % 3)),
                label: Some((i % 2) as f64),
                split: Split::Named(SplitName::Train),
                language: "en".into(),
            })
            .collect();
        DatasetManifest::new("m", Task::Sarcasm, LabelScheme::Binary, records).unwrap()
    }

    #[test]
    fn equal_partition() {
        let folds = make_folds(&manifest(100), 5, 0).unwrap();
        assert_eq!(folds.fold_sizes(), vec![20; 5]);
    }

    #[test]
    fn balanced_remainder() {
        let folds = make_folds(&manifest(7), 5, 11).unwrap();
        assert_eq!(folds.fold_sizes(), vec![2, 2, 1, 1, 1]);
    }

    #[test]
    fn deterministic_given_seed() {
        let m = manifest(40);
        assert_eq!(make_folds(&m, 5, 3).unwrap(), make_folds(&m, 5, 3).unwrap());
        assert_ne!(make_folds(&m, 5, 3).unwrap(), make_folds(&m, 5, 4).unwrap());
    }

    #[test]
    fn rejects_too_many_folds() {
        assert!(matches!(
            make_folds(&manifest(3), 5, 0),
            Err(Error::InvalidFolds { k: 5, records: 3 })
        ));
        assert!(make_folds(&manifest(3), 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_ids(n in 2usize..60, k in 2usize..8, seed in 0u64..1000) {
            prop_assume!(k <= n);
            let m = manifest(n);
            let folds = make_folds(&m, k, seed).unwrap();
            let mut all = HashSet::new();
            for f in 0..k {
                for id in folds.members(&m, f) {
                    prop_assert!(all.insert(id.to_string()));
                }
            }
            prop_assert_eq!(all.len(), n);
            let sizes = folds.fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}
