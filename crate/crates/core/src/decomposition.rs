//! Direct decomposition of the discrete space into volume and interface spaces.
//!
//! Volume space `V_i` is spanned by the basis functions supported in the closure of subdomain
//! `i`. Interface space `V_ij` is spanned by the extensions of the functions whose support
//! touches both `i` and `j`: the seed coefficients are kept and the interior coefficients of
//! `i` and `j` solve the local problem with zero data at the extension frequency `omega'`.
//! Every vector splits uniquely into one component per space.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::fem::AffineSystem;
use crate::linalg::{factorize_with_context, Factorization};
use crate::mesh::{ActiveDofs, EdgeOwner, SubdomainGrid};
use crate::sparse::Csr;
use crate::{c64, Error, Result};

/// Default extension frequency: 505 MHz.
pub const DEFAULT_EXTENSION_FREQUENCY: f64 = 505e6;

/// A localized space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpaceId {
    Volume(usize),
    /// Axis-adjacent pair `(i, j)` with `i < j`.
    Interface(usize, usize),
}

impl SpaceId {
    pub fn subdomains(&self) -> Vec<usize> {
        match *self {
            SpaceId::Volume(i) => vec![i],
            SpaceId::Interface(i, j) => vec![i, j],
        }
    }

    pub fn is_volume(&self) -> bool {
        matches!(self, SpaceId::Volume(_))
    }

    /// Spaces whose functions can interact in the bilinear form.
    pub fn overlaps(&self, other: &SpaceId) -> bool {
        let theirs = other.subdomains();
        self.subdomains().iter().any(|s| theirs.contains(s))
    }

    /// Identifier of the random stream used to train this space.
    pub fn stream_id(&self) -> u64 {
        match *self {
            SpaceId::Volume(i) => (i as u64) << 1,
            SpaceId::Interface(i, j) => ((((i as u64) << 31) | j as u64) << 1) | 1,
        }
    }

    /// File-name friendly label, e.g. `volume_3` or `interface_3_4`.
    pub fn file_stem(&self) -> String {
        match *self {
            SpaceId::Volume(i) => format!("volume_{i}"),
            SpaceId::Interface(i, j) => format!("interface_{i}_{j}"),
        }
    }
}

impl fmt::Display for SpaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceId::Volume(i) => write!(f, "V{i}"),
            SpaceId::Interface(i, j) => write!(f, "I{i}-{j}"),
        }
    }
}

/// DOF sets of the decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    /// Active DOFs owned by each subdomain's interior, ascending.
    pub volume: Vec<Vec<usize>>,
    /// Axis-adjacent subdomain pairs, in [`SubdomainGrid::interfaces`] order.
    pub interfaces: Vec<(usize, usize)>,
    /// Seed DOFs of each interface, ascending.
    pub seeds: Vec<Vec<usize>>,
}

pub fn classify(grid: &SubdomainGrid, dofs: &ActiveDofs) -> Classification {
    let interfaces = grid.interfaces();
    let lookup: HashMap<(usize, usize), usize> = interfaces.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let mut volume = vec![Vec::new(); grid.n_subdomains()];
    let mut seeds = vec![Vec::new(); interfaces.len()];
    for (d, &e) in dofs.dof_to_edge.iter().enumerate() {
        match grid.edge_owner[e] {
            EdgeOwner::Interior(i) => volume[i].push(d),
            EdgeOwner::Interface(i, j) => seeds[lookup[&(i, j)]].push(d),
        }
    }
    Classification { volume, interfaces, seeds }
}

fn merge_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out.sort_unstable();
    out
}

fn positions(of: &[usize], within: &[usize]) -> Vec<usize> {
    of.iter().map(|x| within.binary_search(x).expect("subset")).collect()
}

/// Local extension problem of one interface.
pub struct ExtensionBlock {
    /// Interior DOFs of both subdomains, ascending.
    pub interior: Vec<usize>,
    /// Seeds together with `interior`, ascending.
    pub support: Vec<usize>,
    seed_pos: Vec<usize>,
    interior_pos: Vec<usize>,
    /// Positions of the first / second subdomain's interior DOFs inside `interior`.
    side_pos: [Vec<usize>; 2],
    coupling: Csr<c64>,
    fact: Option<Factorization>,
}

impl ExtensionBlock {
    /// Interior response `-A_JJ^-1 A_JS s` for each seed column.
    fn respond(&self, seeds: MatRef<'_, c64>) -> Mat<c64> {
        let k = seeds.ncols();
        let Some(fact) = &self.fact else {
            return Mat::zeros(0, k);
        };
        let mut rhs = Mat::<c64>::zeros(self.interior.len(), k);
        for c in 0..k {
            let s: Vec<c64> = (0..seeds.nrows()).map(|r| -seeds[(r, c)]).collect();
            let y = self.coupling.mul_vec(&s);
            rhs.col_as_slice_mut(c).copy_from_slice(&y);
        }
        fact.solve_many(rhs)
    }
}

/// Decomposition of the active DOFs of one assembled system.
pub struct SpaceDecomposition<'a> {
    pub sys: &'a AffineSystem,
    pub sets: Classification,
    /// Extension frequency `omega'` in rad/s.
    pub omega_ext: f64,
    interface_index: HashMap<(usize, usize), usize>,
    /// Interfaces containing each subdomain.
    touching: Vec<Vec<usize>>,
    a_ext: Csr<c64>,
    cache: Vec<OnceLock<Result<ExtensionBlock>>>,
}

impl<'a> SpaceDecomposition<'a> {
    pub fn new(sys: &'a AffineSystem, grid: &SubdomainGrid, dofs: &ActiveDofs, omega_ext: f64) -> Result<Self> {
        if !(omega_ext.is_finite() && omega_ext > 0.0) {
            return Err(Error::InvalidInput(format!("extension frequency must be positive, got {omega_ext}")));
        }
        if sys.dim() != dofs.n_active() {
            return Err(Error::InvalidInput("system and dof map disagree in size".into()));
        }
        let sets = classify(grid, dofs);
        let interface_index = sets.interfaces.iter().enumerate().map(|(k, &p)| (p, k)).collect();
        let mut touching = vec![Vec::new(); grid.n_subdomains()];
        for (k, &(i, j)) in sets.interfaces.iter().enumerate() {
            touching[i].push(k);
            touching[j].push(k);
        }
        let cache = (0..sets.interfaces.len()).map(|_| OnceLock::new()).collect();
        Ok(Self { sys, omega_ext, interface_index, touching, a_ext: sys.matrix_at(omega_ext), cache, sets })
    }

    pub fn n_dofs(&self) -> usize {
        self.sys.dim()
    }

    /// Volume spaces in subdomain order, then interface spaces in grid order.
    pub fn spaces(&self) -> Vec<SpaceId> {
        let vols = (0..self.sets.volume.len()).map(SpaceId::Volume);
        let ifs = self.sets.interfaces.iter().map(|&(i, j)| SpaceId::Interface(i, j));
        vols.chain(ifs).collect()
    }

    pub fn interface_index(&self, i: usize, j: usize) -> Option<usize> {
        self.interface_index.get(&(i.min(j), i.max(j))).copied()
    }

    fn interface_of(&self, space: SpaceId) -> Result<usize> {
        match space {
            SpaceId::Interface(i, j) => self
                .interface_index(i, j)
                .ok_or_else(|| Error::InvalidInput(format!("{space} is not an interface of the grid"))),
            SpaceId::Volume(_) => Err(Error::InvalidInput(format!("{space} is not an interface"))),
        }
    }

    fn check_space(&self, space: SpaceId) -> Result<()> {
        match space {
            SpaceId::Volume(i) if i < self.sets.volume.len() => Ok(()),
            SpaceId::Volume(_) => Err(Error::InvalidInput(format!("{space} does not exist"))),
            SpaceId::Interface(..) => self.interface_of(space).map(|_| ()),
        }
    }

    /// Extension problem of interface `k`, factorized on first use.
    pub fn extension_block(&self, k: usize) -> Result<&ExtensionBlock> {
        self.cache[k].get_or_init(|| self.build_block(k)).as_ref().map_err(Clone::clone)
    }

    fn build_block(&self, k: usize) -> Result<ExtensionBlock> {
        let (i, j) = self.sets.interfaces[k];
        let seeds = &self.sets.seeds[k];
        let interior = merge_sorted(&self.sets.volume[i], &self.sets.volume[j]);
        let support = merge_sorted(seeds, &interior);
        let side_pos = [positions(&self.sets.volume[i], &interior), positions(&self.sets.volume[j], &interior)];
        let fact = if interior.is_empty() {
            None
        } else {
            let block = self.a_ext.submatrix(&interior, &interior);
            let f = factorize_with_context(&block, "interface extension").map_err(|e| match e {
                Error::SingularFactorization { .. } => Error::SingularExtension { interface: (i, j), omega: self.omega_ext },
                other => other,
            })?;
            Some(f)
        };
        Ok(ExtensionBlock {
            coupling: self.a_ext.submatrix(&interior, seeds),
            seed_pos: positions(seeds, &support),
            interior_pos: positions(&interior, &support),
            interior,
            support,
            side_pos,
            fact,
        })
    }

    /// Global DOFs carrying the functions of `space`, ascending.
    pub fn support(&self, space: SpaceId) -> Result<Vec<usize>> {
        self.check_space(space)?;
        match space {
            SpaceId::Volume(i) => Ok(self.sets.volume[i].clone()),
            SpaceId::Interface(..) => Ok(self.extension_block(self.interface_of(space)?)?.support.clone()),
        }
    }

    /// Extension of seed coefficients of `interface` (ordered like its seed set), as a global vector.
    pub fn extend(&self, interface: SpaceId, seed: &[c64]) -> Result<Vec<c64>> {
        let k = self.interface_of(interface)?;
        if seed.len() != self.sets.seeds[k].len() {
            return Err(Error::InvalidInput(format!(
                "{interface} has {} seeds, got {} coefficients",
                self.sets.seeds[k].len(),
                seed.len()
            )));
        }
        let block = self.extension_block(k)?;
        let ext = block.respond(MatRef::from_column_major_slice(seed, seed.len(), 1));
        let mut out = vec![c64::new(0.0, 0.0); self.n_dofs()];
        for (&d, &v) in self.sets.seeds[k].iter().zip(seed) {
            out[d] = v;
        }
        for (r, &d) in block.interior.iter().enumerate() {
            out[d] = ext[(r, 0)];
        }
        Ok(out)
    }

    /// Extensions of the columns of `seeds`, in the interface's support ordering.
    pub fn extend_many(&self, interface: SpaceId, seeds: MatRef<'_, c64>) -> Result<Mat<c64>> {
        let k = self.interface_of(interface)?;
        let block = self.extension_block(k)?;
        assert_eq!(seeds.nrows(), self.sets.seeds[k].len());
        let ext = block.respond(seeds);
        let mut out = Mat::<c64>::zeros(block.support.len(), seeds.ncols());
        for c in 0..seeds.ncols() {
            for (r, &p) in block.seed_pos.iter().enumerate() {
                out[(p, c)] = seeds[(r, c)];
            }
            for (r, &p) in block.interior_pos.iter().enumerate() {
                out[(p, c)] = ext[(r, c)];
            }
        }
        Ok(out)
    }

    /// Components of `space` for every column of `vectors`, in [`Self::support`] ordering.
    ///
    /// Row `k` of `vectors` holds global DOF `rows[k]`; DOFs not listed count as zero. The
    /// rows must cover the space's support and the seeds of the interfaces around it.
    pub fn component_many(&self, space: SpaceId, rows: &[usize], vectors: MatRef<'_, c64>) -> Result<Mat<c64>> {
        self.check_space(space)?;
        assert_eq!(rows.len(), vectors.nrows());
        let mut lookup = vec![usize::MAX; self.n_dofs()];
        for (k, &d) in rows.iter().enumerate() {
            lookup[d] = k;
        }
        let ncols = vectors.ncols();
        let gather = |dofs: &[usize]| {
            Mat::from_fn(dofs.len(), ncols, |r, c| match lookup[dofs[r]] {
                usize::MAX => c64::new(0.0, 0.0),
                k => vectors[(k, c)],
            })
        };
        match space {
            SpaceId::Volume(i) => {
                let mut out = gather(&self.sets.volume[i]);
                for &k in &self.touching[i] {
                    let block = self.extension_block(k)?;
                    let ext = block.respond(gather(&self.sets.seeds[k]).as_ref());
                    if ext.nrows() == 0 {
                        continue;
                    }
                    let side = if self.sets.interfaces[k].0 == i { 0 } else { 1 };
                    for c in 0..ncols {
                        for (r, &p) in block.side_pos[side].iter().enumerate() {
                            out[(r, c)] -= ext[(p, c)];
                        }
                    }
                }
                Ok(out)
            }
            SpaceId::Interface(..) => {
                let k = self.interface_of(space)?;
                self.extend_many(space, gather(&self.sets.seeds[k]).as_ref())
            }
        }
    }

    /// Splits `phi` into its components, each returned as a global vector.
    pub fn project(&self, phi: &[c64]) -> Result<Vec<(SpaceId, Vec<c64>)>> {
        assert_eq!(phi.len(), self.n_dofs());
        let rows: Vec<usize> = (0..phi.len()).collect();
        let view = MatRef::from_column_major_slice(phi, phi.len(), 1);
        self.spaces()
            .into_iter()
            .map(|space| {
                let comp = self.component_many(space, &rows, view)?;
                let mut out = vec![c64::new(0.0, 0.0); phi.len()];
                for (r, &d) in self.support(space)?.iter().enumerate() {
                    out[d] = comp[(r, 0)];
                }
                Ok((space, out))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{GeometrySpec, Rect};
    use crate::model::Model;
    use crate::sparse::norm_inf;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn omega() -> f64 {
        2.0 * std::f64::consts::PI * DEFAULT_EXTENSION_FREQUENCY
    }

    fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<c64> {
        (0..n).map(|_| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
    }

    fn pec_geometry() -> GeometrySpec {
        let mut g = GeometrySpec::unit_square();
        g.pec.push(Rect::new(0.3, 0.3, 0.55, 0.45).unwrap());
        g
    }

    #[test]
    fn single_subdomain_owns_everything() {
        let m = Model::with_defaults(&GeometrySpec::unit_square(), 4, 1).unwrap();
        let c = classify(&m.grid, &m.dofs);
        assert_eq!(c.volume[0].len(), m.n_active());
        assert!(c.interfaces.is_empty());
    }

    #[test]
    fn two_subdomains_split_on_the_dividing_line() {
        let m = Model::build(&GeometrySpec::unit_square(), (4, 2), (2, 1), Default::default(), Default::default()).unwrap();
        let c = classify(&m.grid, &m.dofs);
        let expected: Vec<usize> = (0..m.mesh.n_edges())
            .filter(|&e| {
                let [a, b] = m.mesh.edges[e];
                m.mesh.vertices[a][0] == 0.5 && m.mesh.vertices[b][0] == 0.5
            })
            .filter_map(|e| m.dofs.edge_to_dof[e])
            .collect();
        assert_eq!(expected.len(), 2);
        assert_eq!(c.seeds, vec![expected]);
        let total: usize = c.volume.iter().map(Vec::len).sum::<usize>() + c.seeds.iter().map(Vec::len).sum::<usize>();
        assert_eq!(total, m.n_active());
    }

    #[test]
    fn extension_matches_dense_oracle_and_is_linear() {
        let m = Model::build(&pec_geometry(), (6, 4), (2, 1), Default::default(), Default::default()).unwrap();
        let dec = SpaceDecomposition::new(&m.system, &m.grid, &m.dofs, omega()).unwrap();
        let space = SpaceId::Interface(0, 1);
        let seeds = dec.sets.seeds[0].clone();
        let interior = dec.extension_block(0).unwrap().interior.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_vec(&mut rng, seeds.len());
        let y = random_vec(&mut rng, seeds.len());

        let a = m.system.matrix_at(omega()).to_dense();
        let ajj = Mat::from_fn(interior.len(), interior.len(), |r, c| a[(interior[r], interior[c])]);
        let rhs = Mat::from_fn(interior.len(), 1, |r, _| {
            -seeds.iter().zip(&x).map(|(&s, v)| a[(interior[r], s)] * v).sum::<c64>()
        });
        use faer::linalg::solvers::Solve;
        let oracle = ajj.partial_piv_lu().solve(&rhs);
        let ext = dec.extend(space, &x).unwrap();
        for (r, &d) in interior.iter().enumerate() {
            assert!((ext[d] - oracle[(r, 0)]).norm() < 1e-10 * norm_inf(&ext));
        }
        for (&d, v) in seeds.iter().zip(&x) {
            assert_eq!(ext[d], *v);
        }

        let (al, be) = (c64::new(0.3, -1.2), c64::new(-2.0, 0.5));
        let comb: Vec<c64> = x.iter().zip(&y).map(|(a, b)| al * a + be * b).collect();
        let lhs = dec.extend(space, &comb).unwrap();
        let ey = dec.extend(space, &y).unwrap();
        let diff: Vec<c64> = lhs.iter().zip(ext.iter().zip(&ey)).map(|(l, (a, b))| l - (al * a + be * b)).collect();
        assert!(norm_inf(&diff) < 1e-10 * norm_inf(&lhs));
        assert!(norm_inf(&dec.extend(space, &vec![c64::new(0.0, 0.0); seeds.len()]).unwrap()) == 0.0);
    }

    #[test]
    fn projection_reconstructs_and_is_idempotent() {
        let m = Model::with_defaults(&pec_geometry(), 8, 2).unwrap();
        let dec = SpaceDecomposition::new(&m.system, &m.grid, &m.dofs, omega()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let phi = random_vec(&mut rng, m.n_active());
        let parts = dec.project(&phi).unwrap();
        let mut sum = vec![c64::new(0.0, 0.0); phi.len()];
        for (_, p) in &parts {
            sum.iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        let diff: Vec<c64> = sum.iter().zip(&phi).map(|(a, b)| a - b).collect();
        assert!(norm_inf(&diff) < 1e-12 * norm_inf(&phi));

        for (space, part) in &parts {
            for (other, again) in dec.project(part).unwrap() {
                let target = if other == *space { part.clone() } else { vec![c64::new(0.0, 0.0); phi.len()] };
                let d: Vec<c64> = again.iter().zip(&target).map(|(a, b)| a - b).collect();
                assert!(norm_inf(&d) < 1e-11 * norm_inf(part).max(1e-300), "{space} -> {other}");
            }
        }
    }

    #[test]
    fn interior_vector_has_one_component() {
        let m = Model::with_defaults(&GeometrySpec::unit_square(), 4, 2).unwrap();
        let dec = SpaceDecomposition::new(&m.system, &m.grid, &m.dofs, omega()).unwrap();
        let mut phi = vec![c64::new(0.0, 0.0); m.n_active()];
        for &d in &dec.sets.volume[3] {
            phi[d] = c64::new(1.0, d as f64);
        }
        let nonzero: Vec<SpaceId> = dec
            .project(&phi)
            .unwrap()
            .into_iter()
            .filter(|(_, p)| norm_inf(p) > 0.0)
            .map(|(s, _)| s)
            .collect();
        assert_eq!(nonzero, vec![SpaceId::Volume(3)]);
    }

    #[test]
    fn space_ids_order_and_streams() {
        assert!(SpaceId::Volume(99) < SpaceId::Interface(0, 1));
        assert_ne!(SpaceId::Volume(1).stream_id(), SpaceId::Interface(0, 1).stream_id());
        assert!(SpaceId::Volume(1).overlaps(&SpaceId::Interface(1, 2)));
        assert!(!SpaceId::Volume(1).overlaps(&SpaceId::Volume(2)));
        assert_eq!(SpaceId::Interface(3, 4).to_string(), "I3-4");
    }
}
