//! Plain-text `key = value` configuration, one entry per line. `#` starts a
//! comment; blank lines are ignored; later entries override earlier ones.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, (usize, String)>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: i + 1,
                    reason: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    reason: "empty key".into(),
                });
            }
            entries.insert(key.to_string(), (i + 1, value.trim().to_string()));
        }
        Ok(Self { entries })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn get<V: FromStr>(&self, key: &str) -> Result<Option<V>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| Error::Parse {
                line: *line,
                reason: format!("cannot parse value `{v}` of `{key}`"),
            }),
        }
    }

    /// Comma or whitespace separated list.
    pub fn get_list<V: FromStr>(&self, key: &str) -> Result<Option<Vec<V>>> {
        let Some((line, v)) = self.entries.get(key) else {
            return Ok(None);
        };
        v.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse().map_err(|_| Error::Parse {
                    line: *line,
                    reason: format!("cannot parse list item `{t}` of `{key}`"),
                })
            })
            .collect::<Result<Vec<V>>>()
            .map(Some)
    }

    /// Fixed-length list, e.g. the diagonal of a 3×3 weight.
    pub fn get_array<V: FromStr + Copy, const K: usize>(&self, key: &str) -> Result<Option<[V; K]>> {
        match self.get_list::<V>(key)? {
            None => Ok(None),
            Some(v) => {
                let line = self.entries[key].0;
                v.try_into().map(Some).map_err(|v: Vec<V>| Error::Parse {
                    line,
                    reason: format!("`{key}` needs {K} values, got {}", v.len()),
                })
            }
        }
    }
}
