use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use multidx_core::modelstore::{self, LoadedModel, FILE_EXTENSION};
use multidx_core::Mode;

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("cannot read model directory {path}: {source}")]
    Dir { path: PathBuf, source: std::io::Error },
    #[error("cannot load {path}: {source}")]
    Load { path: PathBuf, source: multidx_core::Error },
    #[error("two artifacts serve mode {mode}: {first} and {second}")]
    Duplicate { mode: Mode, first: String, second: String },
}

/// Loaded artifacts keyed by mode. Read-only once built.
#[derive(Debug, Default, Clone)]
pub struct Registry {
    models: BTreeMap<Mode, Arc<LoadedModel>>,
    sources: BTreeMap<Mode, String>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads every `*.mdx` file directly inside `dir`, in name order.
    pub fn from_dir(dir: &Path) -> Result<Self, RegistryError> {
        let entries = std::fs::read_dir(dir).map_err(|source| RegistryError::Dir { path: dir.into(), source })?;
        let mut paths = Vec::new();
        for entry in entries {
            let path = entry.map_err(|source| RegistryError::Dir { path: dir.into(), source })?.path();
            let is_model = path.extension().is_some_and(|e| e.eq_ignore_ascii_case(FILE_EXTENSION));
            if is_model && path.is_file() {
                paths.push(path);
            }
        }
        paths.sort();
        let mut registry = Self::new();
        for path in paths {
            let model =
                modelstore::load_with_checksum(&path).map_err(|source| RegistryError::Load { path: path.clone(), source })?;
            registry.insert(model, path.display().to_string())?;
        }
        Ok(registry)
    }

    /// Adds a model; `source` names it in error messages.
    pub fn insert(&mut self, model: LoadedModel, source: impl Into<String>) -> Result<(), RegistryError> {
        let mode = model.artifact.mode;
        let source = source.into();
        if let Some(first) = self.sources.get(&mode) {
            return Err(RegistryError::Duplicate { mode, first: first.clone(), second: source });
        }
        self.models.insert(mode, Arc::new(model));
        self.sources.insert(mode, source);
        Ok(())
    }

    pub fn get(&self, mode: Mode) -> Option<&Arc<LoadedModel>> {
        self.models.get(&mode)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Mode, &Arc<LoadedModel>)> {
        self.models.iter().map(|(m, v)| (*m, v))
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}
