use sha2::{Digest, Sha256};

use ankge_core::TripleStore;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of a store's vocabularies and id triples, independent of the
/// text files it was parsed from.
pub fn store_digest(store: &TripleStore) -> String {
    let mut h = Sha256::new();
    for (tag, names) in [("entities", store.entities.names()), ("relations", store.relations.names())] {
        h.update(tag.as_bytes());
        h.update((names.len() as u64).to_le_bytes());
        for n in names {
            h.update((n.len() as u64).to_le_bytes());
            h.update(n.as_bytes());
        }
    }
    h.update([store.is_augmented() as u8]);
    for (tag, split) in [("train", &store.train), ("valid", &store.valid), ("test", &store.test)] {
        h.update(tag.as_bytes());
        h.update((split.len() as u64).to_le_bytes());
        for t in split {
            h.update(t.head.to_le_bytes());
            h.update(t.relation.to_le_bytes());
            h.update(t.tail.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Digest of `f64` tables by their exact bit patterns.
pub fn tables_digest(tables: &[&[f64]]) -> String {
    let mut h = Sha256::new();
    for t in tables {
        h.update((t.len() as u64).to_le_bytes());
        for v in *t {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}
