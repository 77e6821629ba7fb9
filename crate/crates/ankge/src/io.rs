use std::path::{Path, PathBuf};

use ankge_core::{store::parse_triples, RawTriple, TripleStore};

use crate::container::write_atomic;
use crate::error::{Error, Result};

pub const TRAIN_FILE: &str = "train.txt";
pub const VALID_FILE: &str = "valid.txt";
pub const TEST_FILE: &str = "test.txt";

pub fn load_triples(path: &Path) -> Result<Vec<RawTriple>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_triples(&text).map_err(|source| Error::Data { path: path.to_path_buf(), source })
}

/// Paths of the three split files inside a dataset directory.
pub fn split_paths(dir: &Path) -> [PathBuf; 3] {
    [dir.join(TRAIN_FILE), dir.join(VALID_FILE), dir.join(TEST_FILE)]
}

/// Loads `train.txt`, `valid.txt` and `test.txt` from `dir`. A missing or
/// blank `valid.txt` yields an empty validation split.
pub fn load_store(dir: &Path, reverse: bool) -> Result<TripleStore> {
    let [train, valid, test] = split_paths(dir);
    let train = load_triples(&train)?;
    let valid = if valid.exists() && !std::fs::read_to_string(&valid).map_err(|e| Error::io(&valid, e))?.trim().is_empty() {
        load_triples(&valid)?
    } else {
        Vec::new()
    };
    let test = load_triples(&test)?;
    let mut store = TripleStore::build(&train, &valid, &test);
    if reverse {
        store.augment_reverse().map_err(|source| Error::Data { path: dir.to_path_buf(), source })?;
    }
    Ok(store)
}

/// Writes `entities.tsv` and `relations.tsv` (`id<TAB>name`) into `dir`.
pub fn write_vocab(dir: &Path, store: &TripleStore) -> Result<()> {
    for (name, names) in [("entities.tsv", store.entities.names()), ("relations.tsv", store.relations.names())] {
        let mut text = String::new();
        for (i, n) in names.iter().enumerate() {
            text.push_str(&format!("{i}\t{n}\n"));
        }
        write_atomic(&dir.join(name), text.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_train_file_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_store(dir.path(), true).unwrap_err().to_string();
        assert!(err.contains("train.txt"), "{err}");
    }

    #[test]
    fn malformed_line_reports_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("train.txt"), "a\tr\tb\nbroken line\n").unwrap();
        std::fs::write(dir.path().join("test.txt"), "a\tr\tb\n").unwrap();
        let err = load_store(dir.path(), false).unwrap_err().to_string();
        assert!(err.contains("train.txt") && err.contains("line 2"), "{err}");
    }

    #[test]
    fn valid_split_is_optional() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("train.txt"), "a\tr\tb\n").unwrap();
        std::fs::write(dir.path().join("test.txt"), "b\tr\ta\n").unwrap();
        let store = load_store(dir.path(), true).unwrap();
        assert!(store.valid.is_empty());
        assert_eq!(store.train.len(), 2);
        assert_eq!(store.num_relations(), 2);
    }
}
