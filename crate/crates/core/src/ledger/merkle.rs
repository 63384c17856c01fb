use crate::crypto::{hash, hash_parts};
use crate::types::Digest;

use super::LedgerError;

/// Binary Merkle root over transaction ids.
///
/// A single leaf commits as `hash(id)`. Otherwise leaves are the ids
/// themselves, an odd level duplicates its last node and each parent is
/// `hash(left || right)`.
pub fn merkle_root(leaves: &[Digest]) -> Result<Digest, LedgerError> {
    match leaves {
        [] => Err(LedgerError::EmptyBlock),
        [only] => Ok(hash(&only.0)),
        _ => {
            let mut level: Vec<Digest> = leaves.to_vec();
            while level.len() > 1 {
                if level.len() % 2 == 1 {
                    let last = *level.last().unwrap();
                    level.push(last);
                }
                level = level.chunks_exact(2).map(|p| hash_parts(&[&p[0].0, &p[1].0])).collect();
            }
            Ok(level[0])
        }
    }
}
