use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Running statistics of one sample's loss differences.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AdlpEntry {
    pub mean: f64,
    pub count: u32,
}

/// Per-sample running mean of `|L_x(w + ε) − L_x(w)|`, updated each time
/// the sample is selected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AdlpTable {
    entries: BTreeMap<usize, AdlpEntry>,
}

/// Bytes per serialized record: id (u64), mean (f64), count (u32).
pub const ADLP_RECORD_LEN: usize = 20;

impl AdlpTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: usize, dlp: f64) -> Result<()> {
        if !(dlp.is_finite() && dlp >= 0.0) {
            return Err(Error::InvalidDlp(dlp));
        }
        let e = self.entries.entry(id).or_default();
        e.count += 1;
        e.mean += (dlp - e.mean) / e.count as f64;
        Ok(())
    }

    pub fn get(&self, id: usize) -> Option<AdlpEntry> {
        self.entries.get(&id).copied()
    }

    /// Mean over every DLP ever pushed, or `None` for an empty table.
    /// Rebuilt from the entries (in id order) so a reloaded table gives the
    /// same value bit for bit.
    pub fn global_mean(&self) -> Option<f64> {
        let (mut sum, mut count) = (0.0, 0u64);
        for e in self.entries.values() {
            sum += e.mean * e.count as f64;
            count += e.count as u64;
        }
        (count > 0).then(|| sum / count as f64)
    }

    /// Raw score for `id`: its own mean when seen, otherwise the global
    /// mean, otherwise `None`.
    pub fn score(&self, id: usize) -> Option<f64> {
        match self.entries.get(&id) {
            Some(e) if e.count > 0 => Some(e.mean),
            _ => self.global_mean(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, AdlpEntry)> + '_ {
        self.entries.iter().map(|(&id, &e)| (id, e))
    }

    /// Records sorted by id, `ADLP_RECORD_LEN` little-endian bytes each.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.entries.len() * ADLP_RECORD_LEN);
        for (&id, e) in &self.entries {
            out.extend_from_slice(&(id as u64).to_le_bytes());
            out.extend_from_slice(&e.mean.to_le_bytes());
            out.extend_from_slice(&e.count.to_le_bytes());
        }
        out
    }

    /// Inverse of [`to_bytes`](Self::to_bytes).
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if !bytes.len().is_multiple_of(ADLP_RECORD_LEN) {
            return Err(Error::Format {
                what: "adlp table",
                message: format!("{} bytes is not a whole number of records", bytes.len()),
            });
        }
        let mut table = AdlpTable::new();
        for rec in bytes.chunks_exact(ADLP_RECORD_LEN) {
            let id = u64::from_le_bytes(rec[0..8].try_into().unwrap()) as usize;
            let mean = f64::from_le_bytes(rec[8..16].try_into().unwrap());
            let count = u32::from_le_bytes(rec[16..20].try_into().unwrap());
            if !(mean.is_finite() && mean >= 0.0) {
                return Err(Error::Format {
                    what: "adlp table",
                    message: format!("record for id {id} has mean {mean}"),
                });
            }
            if table.entries.insert(id, AdlpEntry { mean, count }).is_some() {
                return Err(Error::Format {
                    what: "adlp table",
                    message: format!("duplicate id {id}"),
                });
            }
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_pushes() {
        let mut t = AdlpTable::new();
        t.push(3, 1.0).unwrap();
        t.push(3, 3.0).unwrap();
        assert_eq!(t.get(3), Some(AdlpEntry { mean: 2.0, count: 2 }));
    }

    #[test]
    fn single_zero_push() {
        let mut t = AdlpTable::new();
        t.push(0, 0.0).unwrap();
        assert_eq!(t.get(0).unwrap().mean, 0.0);
    }

    #[test]
    fn rejects_negative_and_nan() {
        let mut t = AdlpTable::new();
        assert!(t.push(0, -1e-9).is_err());
        assert!(t.push(0, f64::NAN).is_err());
        assert!(t.push(0, f64::INFINITY).is_err());
        assert!(t.is_empty());
    }

    #[test]
    fn running_mean_matches_naive_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut t = AdlpTable::new();
        let values: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        for &v in &values {
            t.push(9, v).unwrap();
        }
        let naive = values.iter().sum::<f64>() / values.len() as f64;
        let e = t.get(9).unwrap();
        assert_eq!(e.count, 1000);
        assert!((e.mean - naive).abs() < 1e-12);
    }

    #[test]
    fn unseen_ids_score_at_global_mean() {
        let mut t = AdlpTable::new();
        assert_eq!(t.score(0), None);
        t.push(0, 1.0).unwrap();
        t.push(1, 2.0).unwrap();
        t.push(1, 6.0).unwrap();
        assert_eq!(t.score(1), Some(4.0));
        assert_eq!(t.score(7), Some(3.0));
    }

    proptest! {
        #[test]
        fn bytes_round_trip(pushes in proptest::collection::vec((0usize..20, 0.0f64..10.0), 0..60)) {
            let mut t = AdlpTable::new();
            for (id, v) in pushes {
                t.push(id, v).unwrap();
            }
            let back = AdlpTable::from_bytes(&t.to_bytes()).unwrap();
            prop_assert_eq!(&back, &t);
            prop_assert_eq!(
                back.global_mean().map(f64::to_bits),
                t.global_mean().map(f64::to_bits)
            );
        }
    }
}
