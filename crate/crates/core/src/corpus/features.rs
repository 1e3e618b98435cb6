//! Binary spatial-feature files.
//!
//! ```text
//! magic     4 bytes "SAFT"
//! version   u32 (1)
//! n_images  u32
//! K         u32  regions per image
//! D         u32  feature width
//! per image:
//!   id_len  u16, UTF-8 image id
//!   K*D     f32 values, row-major (region-major)
//! ```
//!
//! Everything is little-endian. Values widen to `f64` on load.

use std::fs;
use std::path::Path;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::model::SpatialFeatures;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"SAFT";
pub const VERSION: u32 = 1;

/// Image id to feature grid. All grids share one `(K, D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStore {
    regions: usize,
    dim: usize,
    grids: IndexMap<String, SpatialFeatures>,
}

impl FeatureStore {
    pub fn new(regions: usize, dim: usize) -> Self {
        Self {
            regions,
            dim,
            grids: IndexMap::new(),
        }
    }

    pub fn regions(&self) -> usize {
        self.regions
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.grids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grids.is_empty()
    }

    pub fn insert(&mut self, features: SpatialFeatures) -> Result<()> {
        if features.grid.shape() != [self.regions, self.dim] {
            return Err(Error::data(format!(
                "features for `{}` have shape {:?}, store holds [{}, {}]",
                features.image_id,
                features.grid.shape(),
                self.regions,
                self.dim
            )));
        }
        if self.grids.contains_key(&features.image_id) {
            return Err(Error::data(format!("duplicate image id `{}`", features.image_id)));
        }
        self.grids.insert(features.image_id.clone(), features);
        Ok(())
    }

    /// Unknown ids are an error, never a default grid.
    pub fn get(&self, image_id: &str) -> Result<&SpatialFeatures> {
        self.grids
            .get(image_id)
            .ok_or_else(|| Error::data(format!("no features for image `{image_id}`")))
    }

    pub fn contains(&self, image_id: &str) -> bool {
        self.grids.contains_key(image_id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.grids.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &SpatialFeatures> {
        self.grids.values()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        for v in [VERSION, self.grids.len() as u32, self.regions as u32, self.dim as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for f in self.grids.values() {
            out.extend_from_slice(&(f.image_id.len() as u16).to_le_bytes());
            out.extend_from_slice(f.image_id.as_bytes());
            for &v in f.grid.data() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn from_bytes(bytes: &[u8], source: &str) -> Result<Self> {
        let mut pos = 0usize;
        let mut take = |n: usize, what: &str| -> Result<&[u8]> {
            if pos + n > bytes.len() {
                return Err(Error::parse(
                    source,
                    format!("offset {pos}: truncated while reading {what}"),
                ));
            }
            let s = &bytes[pos..pos + n];
            pos += n;
            Ok(s)
        };
        if take(4, "magic")? != MAGIC {
            return Err(Error::parse(source, "offset 0: bad magic, not a feature file"));
        }
        let mut header = [0u32; 4];
        for (slot, what) in header.iter_mut().zip(["version", "n_images", "K", "D"]) {
            *slot = u32::from_le_bytes(take(4, what)?.try_into().unwrap());
        }
        let [version, n_images, k, d] = header;
        if version != VERSION {
            return Err(Error::parse(source, format!("offset 4: unsupported version {version}")));
        }
        if k == 0 || d == 0 {
            return Err(Error::parse(source, "offset 12: K and D must be positive"));
        }
        let (k, d) = (k as usize, d as usize);
        let mut store = FeatureStore::new(k, d);
        for i in 0..n_images {
            let len = u16::from_le_bytes(take(2, "id length")?.try_into().unwrap()) as usize;
            let id = std::str::from_utf8(take(len, "image id")?)
                .map_err(|_| Error::parse(source, format!("image {i}: id is not UTF-8")))?
                .to_string();
            let raw = take(k * d * 4, "feature payload")?;
            let data: Vec<f64> = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect();
            if data.iter().any(|v| !v.is_finite()) {
                return Err(Error::parse(source, format!("image `{id}`: non-finite feature value")));
            }
            let grid = Tensor::matrix(k, d, data).expect("payload sized from header");
            store
                .insert(SpatialFeatures::new(id, grid)?)
                .map_err(|e| Error::parse(source, e.to_string()))?;
        }
        if pos != bytes.len() {
            return Err(Error::parse(
                source,
                format!(
                    "offset {pos}: {} trailing bytes; grids disagree with the header (K, D)",
                    bytes.len() - pos
                ),
            ));
        }
        Ok(store)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, &path.display().to_string())
    }
}
