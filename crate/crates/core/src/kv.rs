//! Flat `key = value` configuration text. Blank lines and lines starting
//! with `#` are ignored; keys may be namespaced with dots (`nav.guard_radius`).

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KvError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
}

/// Parsed key/value pairs, consumed by typed config loaders.
#[derive(Debug, Default, Clone)]
pub struct KvDoc {
    entries: BTreeMap<String, String>,
}

impl KvDoc {
    pub fn parse(text: &str) -> Result<KvDoc, KvError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(KvError::Syntax { line: i + 1 })?;
            let key = k.trim();
            let value = v.trim().trim_matches('"');
            if key.is_empty() {
                return Err(KvError::Syntax { line: i + 1 });
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(KvError::Duplicate {
                    line: i + 1,
                    key: key.to_string(),
                });
            }
        }
        Ok(KvDoc { entries })
    }

    /// Remove and parse `key` if present.
    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, KvError> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(value) => value.parse::<T>().map(Some).map_err(|_| KvError::BadValue {
                key: key.to_string(),
                value,
            }),
        }
    }

    /// Overwrite `slot` with the parsed value when `key` is present.
    pub fn take_into<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<(), KvError> {
        if let Some(v) = self.take(key)? {
            *slot = v;
        }
        Ok(())
    }

    /// Fails on the first key nobody consumed.
    pub fn finish(self) -> Result<(), KvError> {
        match self.entries.into_keys().next() {
            Some(k) => Err(KvError::UnknownKey(k)),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_consumes() {
        let mut doc = KvDoc::parse("# comment\n a = 3\nnav.b=0.5\n\nname = \"x\"\n").unwrap();
        assert_eq!(doc.take::<i32>("a").unwrap(), Some(3));
        assert_eq!(doc.take::<f64>("nav.b").unwrap(), Some(0.5));
        assert_eq!(doc.take::<i32>("missing").unwrap(), None);
        assert_eq!(doc.clone().finish(), Err(KvError::UnknownKey("name".into())));
        assert_eq!(doc.take::<String>("name").unwrap().as_deref(), Some("x"));
        doc.finish().unwrap();
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!(KvDoc::parse("a 3").unwrap_err(), KvError::Syntax { line: 1 });
        assert!(matches!(
            KvDoc::parse("a=1\na=2").unwrap_err(),
            KvError::Duplicate { line: 2, .. }
        ));
        let mut doc = KvDoc::parse("a = x").unwrap();
        assert!(matches!(doc.take::<i32>("a"), Err(KvError::BadValue { .. })));
    }
}
