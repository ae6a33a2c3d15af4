//! A discretized problem: geometry, mesh, active DOFs, subdomain grid and the assembled system.

use crate::fem::{AffineSystem, Excitation, MaterialParams};
use crate::mesh::{assign_subdomains, mask_dofs, ActiveDofs, GeometrySpec, StructuredMesh, SubdomainGrid};
use crate::Result;

/// Everything derived from one geometry at one resolution.
#[derive(Clone, Debug)]
pub struct Model {
    pub geometry: GeometrySpec,
    pub mesh: StructuredMesh,
    pub dofs: ActiveDofs,
    pub grid: SubdomainGrid,
    pub material: MaterialParams,
    pub excitation: Excitation,
    pub system: AffineSystem,
}

impl Model {
    pub fn build(
        geometry: &GeometrySpec,
        n: (usize, usize),
        subdomains: (usize, usize),
        material: MaterialParams,
        excitation: Excitation,
    ) -> Result<Self> {
        geometry.validate()?;
        material.validate()?;
        let mesh = StructuredMesh::new(n.0, n.1, geometry.domain)?;
        let dofs = mask_dofs(&mesh, geometry)?;
        let grid = assign_subdomains(&mesh, subdomains.0, subdomains.1)?;
        let system = AffineSystem::assemble(&mesh, &dofs, geometry, &material, &excitation)?;
        log::debug!(
            "model {}x{} / {}x{}: {} edges, {} active",
            n.0,
            n.1,
            subdomains.0,
            subdomains.1,
            mesh.n_edges(),
            dofs.n_active()
        );
        Ok(Self { geometry: geometry.clone(), mesh, dofs, grid, material, excitation, system })
    }

    /// Default vacuum material and Gaussian excitation.
    pub fn with_defaults(geometry: &GeometrySpec, n: usize, m: usize) -> Result<Self> {
        Self::build(geometry, (n, n), (m, m), MaterialParams::default(), Excitation::default())
    }

    pub fn n_active(&self) -> usize {
        self.dofs.n_active()
    }

    /// Triangles of subdomain `s`, in increasing index order.
    pub fn subdomain_triangles(&self, s: usize) -> Vec<usize> {
        self.grid.triangles(s, self.mesh.nx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subdomain_triangles_match_grid_map() {
        let m = Model::with_defaults(&GeometrySpec::unit_square(), 6, 3).unwrap();
        for s in 0..m.grid.n_subdomains() {
            let tris = m.subdomain_triangles(s);
            assert_eq!(tris.len(), 4 * 4);
            assert!(tris.iter().all(|&t| m.grid.triangle_subdomain[t] == s));
        }
    }
}
