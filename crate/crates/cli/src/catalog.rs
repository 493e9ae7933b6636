//! A directory of named artifacts in canonical text form, indexed by
//! `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use katetov_core::finite::FiniteStructure;
use katetov_core::formula::{infer_signature, parse, Signature};
use katetov_core::text;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Space,
    Structure,
    Formula,
    Gspace,
    Instance,
    Anchored,
    Enumeration,
}

impl Kind {
    pub fn from_extension(path: &Path) -> Option<Kind> {
        let ext = path.extension()?.to_str()?;
        Kind::from_str(ext, true).ok()
    }

    fn extension(self) -> &'static str {
        match self {
            Kind::Space => "space",
            Kind::Structure => "structure",
            Kind::Formula => "formula",
            Kind::Gspace => "gspace",
            Kind::Instance => "instance",
            Kind::Anchored => "anchored",
            Kind::Enumeration => "enumeration",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub name: String,
    pub kind: Kind,
    pub file: String,
    /// Structure an enumeration refers to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub against: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<Entry>,
    /// The tuple enumeration `delta-seq` uses by default.
    pub enumeration: Option<String>,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog already has an entry named `{0}`")]
    Collision(String),
    #[error("no catalog entry named `{0}`")]
    NotFound(String),
    #[error("invalid entry name `{0}` (use letters, digits, `-`, `_`, `.`)")]
    BadName(String),
    #[error("an enumeration needs --against <structure entry>")]
    MissingAgainst,
    #[error("`{name}` is a {found:?}, expected {expected:?}")]
    WrongKind { name: String, expected: Kind, found: Kind },
    #[error("{0}: {1}")]
    Parse(String, String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corrupt manifest: {0}")]
    Manifest(String),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CatalogError + '_ {
    move |source| CatalogError::Io { path: path.to_path_buf(), source }
}

pub struct Catalog {
    dir: PathBuf,
    manifest: Manifest,
}

/// Canonical text of an artifact of the given kind.
pub fn canonical(
    kind: Kind,
    label: &str,
    text: &str,
    against: Option<&FiniteStructure>,
) -> Result<String, CatalogError> {
    let bad = |e: &dyn std::fmt::Display| CatalogError::Parse(label.to_string(), e.to_string());
    Ok(match kind {
        Kind::Space => text::write_space(&text::parse_space(text).map_err(|e| bad(&e))?),
        Kind::Structure => text::write_structure(&text::parse_structure(text).map_err(|e| bad(&e))?),
        Kind::Gspace => text::write_gspace(&text::parse_gspace(text).map_err(|e| bad(&e))?),
        Kind::Instance => text::write_instance(&text::parse_instance(text).map_err(|e| bad(&e))?),
        Kind::Anchored => text::write_anchored(&text::parse_anchored(text).map_err(|e| bad(&e))?),
        Kind::Formula => {
            let sig = infer_signature(text.trim(), &Signature::new()).map_err(|e| bad(&e))?;
            format!("{}\n", parse(text.trim(), &sig).map_err(|e| bad(&e))?)
        }
        Kind::Enumeration => {
            let m = against.ok_or(CatalogError::MissingAgainst)?;
            let e = text::parse_enumeration(text, m).map_err(|e| bad(&e))?;
            text::write_enumeration(&e, m.space())
        }
    })
}

impl Catalog {
    /// Opens `dir`, treating a missing directory as an empty catalog.
    pub fn open(dir: &Path) -> Result<Self, CatalogError> {
        let path = dir.join("manifest.json");
        let manifest = if path.exists() {
            let text = fs::read_to_string(&path).map_err(io(&path))?;
            serde_json::from_str(&text).map_err(|e| CatalogError::Manifest(e.to_string()))?
        } else {
            Manifest::default()
        };
        Ok(Catalog { dir: dir.to_path_buf(), manifest })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn entry(&self, name: &str) -> Result<&Entry, CatalogError> {
        self.manifest.entries.iter().find(|e| e.name == name).ok_or_else(|| CatalogError::NotFound(name.to_string()))
    }

    pub fn get(&self, name: &str) -> Result<(Entry, String), CatalogError> {
        let entry = self.entry(name)?.clone();
        let path = self.dir.join(&entry.file);
        let text = fs::read_to_string(&path).map_err(io(&path))?;
        Ok((entry, text))
    }

    /// Stores the canonical form of `text`; enumerations become the
    /// default enumeration of the catalog.
    pub fn put(&mut self, name: &str, kind: Kind, text: &str, against: Option<&str>) -> Result<Entry, CatalogError> {
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(CatalogError::BadName(name.to_string()));
        }
        if self.entry(name).is_ok() {
            return Err(CatalogError::Collision(name.to_string()));
        }
        let structure = match (kind, against) {
            (Kind::Enumeration, None) => return Err(CatalogError::MissingAgainst),
            (Kind::Enumeration, Some(s)) => {
                let (entry, text) = self.get(s)?;
                if entry.kind != Kind::Structure {
                    return Err(CatalogError::WrongKind {
                        name: s.into(),
                        expected: Kind::Structure,
                        found: entry.kind,
                    });
                }
                Some(text::parse_structure(&text).map_err(|e| CatalogError::Parse(s.into(), e.to_string()))?)
            }
            _ => None,
        };
        let body = canonical(kind, name, text, structure.as_ref())?;
        fs::create_dir_all(&self.dir).map_err(io(&self.dir))?;
        let file = format!("{name}.{}", kind.extension());
        let path = self.dir.join(&file);
        fs::write(&path, body).map_err(io(&path))?;
        let entry = Entry { name: name.into(), kind, file, against: against.map(str::to_string) };
        self.manifest.entries.push(entry.clone());
        if kind == Kind::Enumeration {
            self.manifest.enumeration = Some(name.into());
        }
        self.save()?;
        Ok(entry)
    }

    fn save(&self) -> Result<(), CatalogError> {
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(io(&path))
    }
}
