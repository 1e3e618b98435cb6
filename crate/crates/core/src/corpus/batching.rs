use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::captions::CaptionRecord;
use super::vocab::PAD;

/// Indices into the record list plus padded token rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub indices: Vec<usize>,
    /// `batch x T_max`, padded with `<pad>`.
    pub tokens: Vec<Vec<usize>>,
    /// Same shape as `tokens`; false on padding.
    pub mask: Vec<Vec<bool>>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.tokens.first().map_or(0, Vec::len)
    }
}

/// Shuffles record order with `seed`, then chunks. The last batch may be short.
///
/// # Panics
/// If `batch_size` is zero.
pub fn make_batches(records: &[CaptionRecord], batch_size: usize, seed: u64) -> Vec<Batch> {
    assert!(batch_size >= 1, "batch_size must be at least 1");
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
        .chunks(batch_size)
        .map(|chunk| {
            let t_max = chunk.iter().map(|&i| records[i].tokens.len()).max().unwrap_or(0);
            let mut tokens = Vec::with_capacity(chunk.len());
            let mut mask = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let t = &records[i].tokens;
                let mut row = t.clone();
                row.resize(t_max, PAD);
                tokens.push(row);
                mask.push((0..t_max).map(|j| j < t.len()).collect());
            }
            Batch {
                indices: chunk.to_vec(),
                tokens,
                mask,
            }
        })
        .collect()
}
