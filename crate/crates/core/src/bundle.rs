//! On-disk storage of local bases, one JSON file per space.
//!
//! Vectors are stored against mesh edge ids rather than compact DOF indices, so a bundle
//! written for one geometry can be read back against another that keeps the same edges active.

use std::path::{Path, PathBuf};

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::decomposition::SpaceId;
use crate::mesh::ActiveDofs;
use crate::training::LocalBasis;
use crate::{c64, Error, Result};

pub const BUNDLE_FORMAT: &str = "edgerom-basis/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisBundle {
    pub format: String,
    pub space: SpaceId,
    pub content_hash: String,
    /// Mesh edge of every vector row.
    pub edges: Vec<usize>,
    pub errors: Vec<f64>,
    /// Columns as `[re, im]` pairs.
    pub vectors: Vec<Vec<[f64; 2]>>,
}

impl BasisBundle {
    pub fn from_basis(basis: &LocalBasis, dofs: &ActiveDofs) -> Self {
        let vectors = (0..basis.size())
            .map(|j| basis.vectors.col_as_slice(j).iter().map(|z| [z.re, z.im]).collect())
            .collect();
        Self {
            format: BUNDLE_FORMAT.into(),
            space: basis.space,
            content_hash: basis.content_hash.clone(),
            edges: basis.support.iter().map(|&d| dofs.dof_to_edge[d]).collect(),
            errors: basis.errors.clone(),
            vectors,
        }
    }

    /// Maps the bundle onto the DOFs of `dofs`. Fails if a stored edge is inactive there.
    pub fn to_basis(&self, dofs: &ActiveDofs) -> Result<LocalBasis> {
        if self.format != BUNDLE_FORMAT {
            return Err(Error::InvalidInput(format!("unsupported bundle format '{}'", self.format)));
        }
        let support = self
            .edges
            .iter()
            .map(|&e| {
                dofs.edge_to_dof
                    .get(e)
                    .copied()
                    .flatten()
                    .ok_or_else(|| Error::InvalidInput(format!("{}: edge {e} is not active", self.space)))
            })
            .collect::<Result<Vec<usize>>>()?;
        if self.vectors.iter().any(|v| v.len() != support.len()) || self.errors.len() != self.vectors.len() + 1 {
            return Err(Error::InvalidInput(format!("{}: inconsistent bundle", self.space)));
        }
        let vectors = Mat::from_fn(support.len(), self.vectors.len(), |r, c| {
            let [re, im] = self.vectors[c][r];
            c64::new(re, im)
        });
        Ok(LocalBasis { space: self.space, support, vectors, errors: self.errors.clone(), content_hash: self.content_hash.clone() })
    }

    pub fn path_in(dir: &Path, space: SpaceId) -> PathBuf {
        dir.join(format!("{}.json", space.file_stem()))
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = Self::path_in(dir, self.space);
        let text = serde_json::to_string(self).expect("bundle serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::io(path, e))
    }

    /// Loads the bundle of `space` from `dir`, if present.
    pub fn load_space(dir: &Path, space: SpaceId) -> Result<Option<Self>> {
        let path = Self::path_in(dir, space);
        if path.exists() {
            Self::load(&path).map(Some)
        } else {
            Ok(None)
        }
    }
}

/// Writes one bundle per basis into `dir`.
pub fn save_all(bases: &[LocalBasis], dofs: &ActiveDofs, dir: &Path) -> Result<Vec<PathBuf>> {
    crate::output::ensure_dir(dir)?;
    bases.iter().map(|b| BasisBundle::from_basis(b, dofs).save(dir)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{mask_dofs, GeometrySpec, StructuredMesh};

    #[test]
    fn bundles_round_trip_bit_for_bit() {
        let geo = GeometrySpec::unit_square();
        let mesh = StructuredMesh::new(3, 3, geo.domain).unwrap();
        let dofs = mask_dofs(&mesh, &geo).unwrap();
        let support = vec![1, 4, 7];
        let vectors = Mat::from_fn(3, 2, |r, c| c64::new(1.0 / (r + c + 3) as f64, -(0.1f64 + r as f64).sqrt()));
        let basis = LocalBasis { space: SpaceId::Interface(1, 2), support, vectors, errors: vec![1.0, 0.3, 1e-17], content_hash: "ab".into() };
        let dir = tempfile::tempdir().unwrap();
        save_all(std::slice::from_ref(&basis), &dofs, dir.path()).unwrap();
        let back = BasisBundle::load_space(dir.path(), basis.space).unwrap().unwrap().to_basis(&dofs).unwrap();
        assert_eq!(back, basis);
        assert!(BasisBundle::load_space(dir.path(), SpaceId::Volume(0)).unwrap().is_none());
    }
}
