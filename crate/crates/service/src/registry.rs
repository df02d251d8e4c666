//! Image registry backed by a manifest CSV with the header
//! `image_id,category,role,path`, where `role` is `target` or `foil` and
//! `path` is relative to the manifest's directory.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use icm_core::scheduler::StimulusImage;
use icm_core::ImageId;
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

pub const MANIFEST_FILE: &str = "manifest.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Target,
    Foil,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub image_id: ImageId,
    pub category: String,
    pub role: Role,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Default)]
pub struct ImageRegistry {
    /// Per category, entries sorted by id.
    by_category: BTreeMap<String, Vec<RegistryEntry>>,
}

impl ImageRegistry {
    pub fn from_entries(
        entries: impl IntoIterator<Item = RegistryEntry>,
    ) -> Result<Self, ServiceError> {
        let mut seen = HashSet::new();
        let mut by_category: BTreeMap<String, Vec<RegistryEntry>> = BTreeMap::new();
        for e in entries {
            if !seen.insert(e.image_id.clone()) {
                return Err(ServiceError::Registry(format!(
                    "duplicate image id {}",
                    e.image_id
                )));
            }
            by_category.entry(e.category.clone()).or_default().push(e);
        }
        for list in by_category.values_mut() {
            list.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        }
        Ok(Self { by_category })
    }

    pub fn from_manifest_csv(text: &str, base: &Path) -> Result<Self, ServiceError> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| ServiceError::Registry(e.to_string()))?;
        if header.iter().ne(["image_id", "category", "role", "path"]) {
            return Err(ServiceError::Registry(format!(
                "unexpected manifest header {header:?}"
            )));
        }
        let entries = reader
            .deserialize::<RegistryEntry>()
            .map(|row| {
                row.map(|mut e| {
                    e.path = base.join(&e.path);
                    e
                })
                .map_err(|e| ServiceError::Registry(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_entries(entries)
    }

    /// Loads `manifest.csv` from `dir`, or the file itself if `path` is one.
    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let manifest = if path.is_dir() {
            path.join(MANIFEST_FILE)
        } else {
            path.to_owned()
        };
        let base = manifest.parent().unwrap_or(Path::new("."));
        Self::from_manifest_csv(&fs::read_to_string(&manifest)?, base)
    }

    /// Synthetic registry with `targets` and `foils` images per category.
    pub fn synthetic(categories: &[&str], targets: usize, foils: usize) -> Self {
        let entries = categories.iter().flat_map(|c| {
            let t = (0..targets).map(move |i| (format!("{c}-target-{i:04}"), *c, Role::Target));
            let f = (0..foils).map(move |i| (format!("{c}-foil-{i:04}"), *c, Role::Foil));
            t.chain(f).map(|(id, c, role)| RegistryEntry {
                path: PathBuf::from(format!("{id}.jpg")),
                image_id: id.into(),
                category: c.to_owned(),
                role,
            })
        });
        Self::from_entries(entries).expect("synthetic ids are unique")
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.by_category.keys().map(String::as_str)
    }

    pub fn contains_category(&self, category: &str) -> bool {
        self.by_category.contains_key(category)
    }

    pub fn images(&self, category: &str, role: Role) -> Vec<StimulusImage> {
        self.by_category
            .get(category)
            .into_iter()
            .flatten()
            .filter(|e| e.role == role)
            .map(|e| StimulusImage::new(e.image_id.clone(), e.category.clone()))
            .collect()
    }

    pub fn get(&self, id: &ImageId) -> Option<&RegistryEntry> {
        self.by_category
            .values()
            .flatten()
            .find(|e| &e.image_id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_parsing() {
        let text = "image_id,category,role,path\nb,teapot,foil,img/b.jpg\na,teapot,target,img/a.jpg\nc,phone,target,c.png\n";
        let r = ImageRegistry::from_manifest_csv(text, Path::new("/data")).unwrap();
        assert_eq!(r.categories().collect::<Vec<_>>(), vec!["phone", "teapot"]);
        assert_eq!(r.images("teapot", Role::Target)[0].id.as_str(), "a");
        assert_eq!(r.images("teapot", Role::Foil).len(), 1);
        assert_eq!(
            r.get(&"b".into()).unwrap().path,
            PathBuf::from("/data/img/b.jpg")
        );
        assert!(r.images("flower", Role::Target).is_empty());
    }

    #[test]
    fn manifest_errors() {
        assert!(ImageRegistry::from_manifest_csv("id,cat\n", Path::new(".")).is_err());
        let bad_role = "image_id,category,role,path\na,teapot,both,a.jpg\n";
        assert!(ImageRegistry::from_manifest_csv(bad_role, Path::new(".")).is_err());
        let dup = "image_id,category,role,path\na,teapot,foil,a.jpg\na,phone,foil,a.jpg\n";
        assert!(ImageRegistry::from_manifest_csv(dup, Path::new(".")).is_err());
    }
}
