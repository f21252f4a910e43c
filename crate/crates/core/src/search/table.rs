use std::collections::BTreeMap;

use crate::design::{canonical_key, DesignGraph, DesignKey};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub score: f64,
    /// First design seen under this key.
    pub design: DesignGraph,
    /// Update counter value when the key was first inserted.
    pub inserted_at: u64,
}

/// Best score seen per effective key, over complete designs and their
/// construction prefixes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LookupTable {
    entries: BTreeMap<DesignKey, TableEntry>,
    updates: u64,
}

impl LookupTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of max-updates applied.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn get(&self, key: &DesignKey) -> Option<&TableEntry> {
        self.entries.get(key)
    }

    pub fn score(&self, design: &DesignGraph) -> Result<Option<f64>> {
        Ok(self.entries.get(&canonical_key(design)?).map(|e| e.score))
    }

    /// Entries in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&DesignKey, &TableEntry)> {
        self.entries.iter()
    }

    /// `T(key) <- max(T(key), score)`; returns the key.
    pub fn max_update(&mut self, design: &DesignGraph, score: f64) -> Result<DesignKey> {
        if !score.is_finite() {
            return Err(Error::OutOfRange(format!("non-finite score {score}")));
        }
        let key = canonical_key(design)?;
        let stamp = self.updates;
        self.updates += 1;
        self.entries
            .entry(key.clone())
            .and_modify(|e| e.score = e.score.max(score))
            .or_insert_with(|| TableEntry { score, design: design.clone(), inserted_at: stamp });
        Ok(key)
    }

    /// Highest-scoring complete design; ties go to the earliest insertion.
    pub fn best_complete(&self) -> Option<(&DesignGraph, f64)> {
        self.entries
            .values()
            .filter(|e| e.design.is_complete())
            .max_by(|a, b| a.score.total_cmp(&b.score).then(b.inserted_at.cmp(&a.inserted_at)))
            .map(|e| (&e.design, e.score))
    }
}

/// Construction prefixes of a design built finger by finger in slot order:
/// all fingers open, then fingers `0..k` final for `k` in `1..f`.
pub fn construction_ancestors(design: &DesignGraph) -> Vec<DesignGraph> {
    (0..design.finger_count()).map(|k| design.prefix(k)).collect()
}

/// Max-updates the design and every ancestor; returns the number of
/// ancestor keys touched.
pub fn update_lookup(
    table: &mut LookupTable,
    design: &DesignGraph,
    ancestors: &[DesignGraph],
    score: f64,
) -> Result<usize> {
    table.max_update(design, score)?;
    for a in ancestors {
        table.max_update(a, score)?;
    }
    Ok(ancestors.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::test_support::symmetric;
    use crate::design::FingertipType::*;
    use crate::grammar::{generate_hand, GenParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn max_update_keeps_larger() {
        let d = symmetric(&[(3, 1, 2, Standard); 3]);
        let mut t = LookupTable::new();
        t.max_update(&d, 0.5).unwrap();
        t.max_update(&d, 0.3).unwrap();
        assert_eq!(t.score(&d).unwrap(), Some(0.5));
        let mut t = LookupTable::new();
        t.max_update(&d, 0.3).unwrap();
        t.max_update(&d, 0.5).unwrap();
        assert_eq!(t.score(&d).unwrap(), Some(0.5));
        assert_eq!(t.len(), 1);
        assert_eq!(t.updates(), 2);
        assert!(t.max_update(&d, f64::NAN).is_err());
    }

    #[test]
    fn three_fingers_touch_three_ancestors() {
        let d = symmetric(&[(3, 1, 2, Standard), (2, 4, 4, Thin), (3, 9, 1, Rounded)]);
        let anc = construction_ancestors(&d);
        assert_eq!(anc.len(), 3);
        assert!(anc[0].fingers.iter().all(|f| f.is_open()));
        assert_eq!(anc[2].fingers.iter().filter(|f| f.terminal).count(), 2);
        let mut t = LookupTable::new();
        assert_eq!(update_lookup(&mut t, &d, &anc, 0.7).unwrap(), 3);
        assert_eq!(t.len(), 4);
        for a in &anc {
            assert_eq!(t.score(a).unwrap(), Some(0.7));
        }
        assert_eq!(t.best_complete().unwrap().1, 0.7);
    }

    #[test]
    fn interleaved_updates_never_decrease() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let designs: Vec<_> = (0..10).map(|_| generate_hand(&GenParams::default(), &mut rng).unwrap()).collect();
        let mut t = LookupTable::new();
        let mut seen = std::collections::BTreeMap::new();
        for _ in 0..500 {
            let d = &designs[rng.random_range(0..designs.len())];
            let s: f64 = rng.random_range(-1.0..1.0);
            let anc = construction_ancestors(d);
            update_lookup(&mut t, d, &anc, s).unwrap();
            for (k, e) in t.iter() {
                let prev = seen.insert(k.clone(), e.score).unwrap_or(f64::NEG_INFINITY);
                assert!(e.score >= prev);
            }
        }
    }
}
