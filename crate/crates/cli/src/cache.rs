//! On-disk cache of expansions: `<dir>/<schema>/<form-id>.json`, written
//! through a temporary file and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use e8jacobi::generators::{Engine, SakaiForms, NAMES};
use e8jacobi::jacobi::{ExpansionRecord, JacobiExpansion};
use e8jacobi::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub schema: u32,
    pub id: String,
    /// Name or canonical polynomial text the entry was computed from.
    pub source: String,
    pub weight: i32,
    pub index: u32,
    pub truncation: usize,
    pub payload: ExpansionRecord,
}

impl CacheEntry {
    pub fn new(source: &str, e: &JacobiExpansion) -> Self {
        CacheEntry {
            schema: SCHEMA,
            id: form_id(source, e.truncation()),
            source: source.into(),
            weight: e.weight,
            index: e.index,
            truncation: e.truncation(),
            payload: ExpansionRecord::from(e),
        }
    }

    pub fn expansion(&self) -> Result<JacobiExpansion> {
        JacobiExpansion::try_from(&self.payload)
    }
}

/// Generator names are used verbatim; anything else is hashed.
pub fn form_id(source: &str, truncation: usize) -> String {
    let stem = if source.chars().all(|c| c.is_ascii_alphanumeric()) && source.len() <= 16 {
        source.to_string()
    } else {
        let digest = Sha256::digest(source.as_bytes());
        let hex: String = digest[..12].iter().map(|b| format!("{b:02x}")).collect();
        format!("poly-{hex}")
    };
    format!("{stem}.n{truncation}")
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(root: &Path) -> Self {
        Cache {
            dir: root.join(format!("v{SCHEMA}")),
        }
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    /// `Ok(None)` on a miss; entries with another schema or source are misses.
    pub fn load(&self, source: &str, truncation: usize) -> Result<Option<JacobiExpansion>> {
        let path = self.path(&form_id(source, truncation));
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let entry: CacheEntry = serde_json::from_str(&text)
            .map_err(|e| Error::Cache(format!("{}: {e}", path.display())))?;
        if entry.schema != SCHEMA || entry.source != source || entry.truncation != truncation {
            return Ok(None);
        }
        entry.expansion().map(Some)
    }

    pub fn store(&self, source: &str, e: &JacobiExpansion) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let entry = CacheEntry::new(source, e);
        let text = serde_json::to_string(&entry).map_err(|e| Error::Cache(e.to_string()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(text.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.path(&entry.id))
            .map_err(|e| Error::Io(e.error))?;
        Ok(())
    }

    /// The generator engine at `levels` levels, from cache when complete.
    pub fn engine(&self, levels: usize) -> Result<Engine> {
        let names: Vec<&str> = NAMES.iter().copied().chain(["B5hat"]).collect();
        let mut found = Vec::new();
        for name in &names {
            match self.load(name, levels)? {
                Some(e) => found.push(e),
                None => break,
            }
        }
        if found.len() == names.len() {
            let b5_hat = found.pop().expect("nonempty");
            return Engine::new(SakaiForms {
                truncation: levels,
                forms: found,
                b5_hat,
            });
        }
        let engine = Engine::build(levels)?;
        for name in &names {
            let f = engine.sakai().by_name(name).expect("known generator");
            self.store(name, f)?;
        }
        Ok(engine)
    }
}
