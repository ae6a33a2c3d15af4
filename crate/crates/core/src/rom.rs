//! Block Galerkin reduced model on the direct sum of localized bases.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};
use rayon::prelude::*;

use crate::decomposition::{SpaceDecomposition, SpaceId};
use crate::fem::{AffineSystem, ParameterSet};
use crate::linalg::{extremal_singular_values_dense, factorize_with_context, m_orthonormalize, SingularPair};
use crate::sparse::Csr;
use crate::training::LocalBasis;
use crate::{c64, Error, Result};

/// Pivot ratio of the reduced LU below which the reduced system counts as singular.
pub const REDUCED_PIVOT_TOL: f64 = 1e-13;

/// Reduced affine blocks `B^H A B` of an aggregated basis `B = [B_1, ..., B_k]`.
#[derive(Clone, Debug)]
pub struct ReducedModel {
    pub blocks: Vec<LocalBasis>,
    /// Column offsets of the blocks, length `blocks.len() + 1`.
    pub offsets: Vec<usize>,
    pub curl: Mat<c64>,
    pub mass: Mat<c64>,
    pub robin: Mat<c64>,
    /// Reduced Gram matrix `B^H M B`.
    pub gram: Mat<c64>,
    /// `B^H f_j`.
    pub rhs: Vec<c64>,
    /// Number of block pairs actually assembled.
    pub assembled_pairs: usize,
    n_full: usize,
}

impl ReducedModel {
    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn matrix_at(&self, omega: f64) -> Mat<c64> {
        let (w2, iw) = (c64::new(omega * omega, 0.0), c64::new(0.0, omega));
        Mat::from_fn(self.dim(), self.dim(), |r, c| self.curl[(r, c)] - w2 * self.mass[(r, c)] + iw * self.robin[(r, c)])
    }

    pub fn rhs_at(&self, omega: f64) -> Vec<c64> {
        let s = c64::new(0.0, -omega);
        self.rhs.iter().map(|v| s * v).collect()
    }

    /// Global vector `sum_a B_a c_a`.
    pub fn reconstruct(&self, coeffs: &[c64]) -> Vec<c64> {
        assert_eq!(coeffs.len(), self.dim());
        let mut out = vec![c64::new(0.0, 0.0); self.n_full];
        for (a, block) in self.blocks.iter().enumerate() {
            let off = self.offsets[a];
            for j in 0..block.size() {
                let c = coeffs[off + j];
                if c == c64::new(0.0, 0.0) {
                    continue;
                }
                for (r, &d) in block.support.iter().enumerate() {
                    out[d] += block.vectors[(r, j)] * c;
                }
            }
        }
        out
    }

    /// `B^H x` for a global vector `x`.
    pub fn restrict(&self, x: &[c64]) -> Vec<c64> {
        let mut out = Vec::with_capacity(self.dim());
        for block in &self.blocks {
            for j in 0..block.size() {
                out.push(block.support.iter().enumerate().map(|(r, &d)| block.vectors[(r, j)].conj() * x[d]).sum());
            }
        }
        out
    }

    pub fn spaces(&self) -> Vec<SpaceId> {
        self.blocks.iter().map(|b| b.space).collect()
    }

    /// Inf-sup and continuity constants of the reduced system in the reduced Gram geometry.
    pub fn stability(&self, omega: f64) -> Result<SingularPair> {
        if self.dim() == 0 {
            return Err(Error::InvalidInput("reduced model is empty".into()));
        }
        extremal_singular_values_dense(self.matrix_at(omega).as_ref(), self.gram.as_ref())
    }
}

fn project_block(a: &Csr<f64>, left: &LocalBasis, right: &LocalBasis) -> Mat<c64> {
    let sub = a.submatrix(&left.support, &right.support);
    let mut x = Mat::<c64>::zeros(left.support.len(), right.size());
    for j in 0..right.size() {
        let y = sub.mul_vec(right.vectors.col_as_slice(j));
        x.col_as_slice_mut(j).copy_from_slice(&y);
    }
    left.vectors.adjoint() * &x
}

/// Galerkin projection of the affine system onto the direct sum of `bases`.
///
/// Only block pairs of spaces sharing a subdomain are computed; all others vanish because the
/// supports of their functions do not overlap.
pub fn assemble_rom(bases: &[LocalBasis], sys: &AffineSystem) -> Result<ReducedModel> {
    let mut offsets = vec![0];
    for b in bases {
        if b.vectors.nrows() != b.support.len() {
            return Err(Error::InvalidInput(format!("basis of {} has inconsistent support", b.space)));
        }
        offsets.push(offsets.last().unwrap() + b.size());
    }
    let n = *offsets.last().unwrap();
    let pairs: Vec<(usize, usize)> = (0..bases.len())
        .flat_map(|a| (0..bases.len()).map(move |b| (a, b)))
        .filter(|&(a, b)| bases[a].space.overlaps(&bases[b].space) && bases[a].size() > 0 && bases[b].size() > 0)
        .collect();
    let mats = [&sys.curl, &sys.mass, &sys.robin, &sys.gram];
    let computed: Vec<[Mat<c64>; 4]> = pairs
        .par_iter()
        .map(|&(a, b)| mats.map(|m| project_block(m, &bases[a], &bases[b])))
        .collect();
    let mut out: [Mat<c64>; 4] = std::array::from_fn(|_| Mat::zeros(n, n));
    for (&(a, b), blocks) in pairs.iter().zip(&computed) {
        for (dst, src) in out.iter_mut().zip(blocks) {
            dst.submatrix_mut(offsets[a], offsets[b], src.nrows(), src.ncols()).copy_from(src);
        }
    }
    let [curl, mass, robin, gram] = out;
    let mut rom = ReducedModel {
        blocks: bases.to_vec(),
        offsets,
        curl,
        mass,
        robin,
        gram,
        rhs: Vec::new(),
        assembled_pairs: pairs.len(),
        n_full: sys.dim(),
    };
    rom.rhs = rom.restrict(&sys.rhs);
    Ok(rom)
}

/// Solution of the reduced system at one frequency.
#[derive(Clone, Debug)]
pub struct RomSolution {
    pub coeffs: Vec<c64>,
    pub field: Vec<c64>,
    /// Smallest over largest pivot modulus of the reduced LU.
    pub pivot_ratio: f64,
}

pub fn solve_rom(rom: &ReducedModel, omega: f64) -> Result<RomSolution> {
    let n = rom.dim();
    if n == 0 {
        return Err(Error::InvalidInput("cannot solve an empty reduced model".into()));
    }
    let lu = rom.matrix_at(omega).partial_piv_lu();
    let u = lu.U();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for k in 0..n {
        let p = u[(k, k)].norm();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let pivot_ratio = lo / hi;
    if !(pivot_ratio > REDUCED_PIVOT_TOL) {
        return Err(Error::ReducedSingular { omega, pivot_ratio });
    }
    let b = rom.rhs_at(omega);
    let x = lu.solve(MatRef::from_column_major_slice(&b, n, 1));
    let coeffs = x.col_as_slice(0).to_vec();
    let field = rom.reconstruct(&coeffs);
    Ok(RomSolution { coeffs, field, pivot_ratio })
}

/// Full-order solutions for every frequency of `xi`.
pub fn full_solutions(sys: &AffineSystem, xi: &ParameterSet) -> Result<Vec<Vec<c64>>> {
    xi.omegas()
        .par_iter()
        .map(|&omega| {
            let (a, f) = sys.system_at(omega)?;
            Ok(factorize_with_context(&a, "full system")?.solve(&f))
        })
        .collect()
}

/// Per-frequency relative errors of a reduced model against full solutions.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorSweep {
    pub frequencies: Vec<f64>,
    /// `||u - u_rb||_V / ||u||_V`; infinite where the reduced system was singular.
    pub errors: Vec<f64>,
}

impl ErrorSweep {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn singular_count(&self) -> usize {
        self.errors.iter().filter(|e| e.is_infinite()).count()
    }
}

fn rel_error(sys: &AffineSystem, u: &[c64], v: &[c64]) -> f64 {
    let d: Vec<c64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    sys.energy_norm(&d) / sys.energy_norm(u)
}

/// Reduced errors over `xi`; `full` holds the full solutions in the same order.
pub fn rom_error_sweep(rom: &ReducedModel, sys: &AffineSystem, xi: &ParameterSet, full: &[Vec<c64>]) -> Result<ErrorSweep> {
    assert_eq!(full.len(), xi.len());
    let errors = xi
        .omegas()
        .par_iter()
        .zip(full)
        .map(|(&omega, u)| match solve_rom(rom, omega) {
            Ok(sol) => Ok(rel_error(sys, u, &sol.field)),
            Err(Error::ReducedSingular { pivot_ratio, .. }) => {
                log::warn!("reduced system singular at {:e} Hz (pivot ratio {pivot_ratio:e})", omega / (2.0 * std::f64::consts::PI));
                Ok(f64::INFINITY)
            }
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ErrorSweep { frequencies: xi.frequencies.clone(), errors })
}

/// Relative V-norm errors of the V-orthogonal projections of `full` onto the reduced space.
pub fn best_approximation_errors(rom: &ReducedModel, sys: &AffineSystem, full: &[Vec<c64>]) -> Result<Vec<f64>> {
    let n = rom.dim();
    if n == 0 {
        return Ok(vec![1.0; full.len()]);
    }
    let llt = rom
        .gram
        .llt(Side::Lower)
        .map_err(|e| Error::Dense(format!("reduced Gram matrix not positive definite: {e:?}")))?;
    full.par_iter()
        .map(|u| {
            let b = rom.restrict(&sys.gram.mul_vec(u));
            let c = llt.solve(MatRef::from_column_major_slice(&b, n, 1));
            let p = rom.reconstruct(c.col_as_slice(0));
            Ok(rel_error(sys, u, &p))
        })
        .collect()
}

/// Bases spanning the whole discrete space: every volume and interface space in full.
pub fn full_space_bases(dec: &SpaceDecomposition<'_>) -> Result<Vec<LocalBasis>> {
    dec.spaces()
        .into_iter()
        .map(|space| {
            let support = dec.support(space)?;
            let raw = match space {
                SpaceId::Volume(_) => Mat::<c64>::identity(support.len(), support.len()),
                SpaceId::Interface(i, j) => {
                    let k = dec.interface_index(i, j).expect("grid interface");
                    let s = dec.sets.seeds[k].len();
                    dec.extend_many(space, Mat::<c64>::identity(s, s).as_ref())?
                }
            };
            let gram = dec.sys.gram.submatrix(&support, &support);
            let vectors = m_orthonormalize(raw.as_ref(), &gram);
            // intermediate errors are not tracked; the full space is exact
            let mut errors = vec![1.0; vectors.ncols()];
            errors.push(0.0);
            Ok(LocalBasis { space, support, vectors, errors, content_hash: String::new() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::DEFAULT_EXTENSION_FREQUENCY;
    use crate::mesh::{GeometrySpec, Rect};
    use crate::model::Model;
    use std::f64::consts::PI;

    fn small_model() -> Model {
        let mut geo = GeometrySpec::unit_square();
        geo.pec.push(Rect::new(0.4, 0.55, 0.85, 0.7).unwrap());
        Model::with_defaults(&geo, 8, 2).unwrap()
    }

    fn global_basis(rom: &ReducedModel, n: usize) -> Mat<c64> {
        let mut b = Mat::<c64>::zeros(n, rom.dim());
        for (a, block) in rom.blocks.iter().enumerate() {
            for j in 0..block.size() {
                let v = block.global_vector(j, n);
                b.col_as_slice_mut(rom.offsets[a] + j).copy_from_slice(&v);
            }
        }
        b
    }

    #[test]
    fn empty_bases_give_empty_model() {
        let m = small_model();
        let rom = assemble_rom(&[], &m.system).unwrap();
        assert_eq!(rom.dim(), 0);
        assert!(solve_rom(&rom, 1e9).is_err());
    }

    #[test]
    fn full_space_reproduces_full_solution() {
        let m = small_model();
        let dec = SpaceDecomposition::new(&m.system, &m.grid, &m.dofs, 2.0 * PI * DEFAULT_EXTENSION_FREQUENCY).unwrap();
        let bases = full_space_bases(&dec).unwrap();
        let total: usize = bases.iter().map(LocalBasis::size).sum();
        assert_eq!(total, m.n_active());
        let rom = assemble_rom(&bases, &m.system).unwrap();
        let xi = ParameterSet::linspace(2e8, 8e8, 3).unwrap();
        let full = full_solutions(&m.system, &xi).unwrap();
        let sweep = rom_error_sweep(&rom, &m.system, &xi, &full).unwrap();
        assert!(sweep.max_error() < 1e-9, "{sweep:?}");
        let best = best_approximation_errors(&rom, &m.system, &full).unwrap();
        assert!(best.iter().all(|&e| e < 1e-9));
    }

    #[test]
    fn reduced_blocks_match_dense_projection() {
        let m = small_model();
        let dec = SpaceDecomposition::new(&m.system, &m.grid, &m.dofs, 2.0 * PI * DEFAULT_EXTENSION_FREQUENCY).unwrap();
        let bases: Vec<LocalBasis> = full_space_bases(&dec).unwrap().iter().map(|b| b.truncated(3)).collect();
        let rom = assemble_rom(&bases, &m.system).unwrap();
        assert!(rom.assembled_pairs < bases.len() * bases.len());
        let b = global_basis(&rom, m.n_active());
        let omega = 2.0 * PI * 7e8;
        let oracle = b.adjoint() * m.system.matrix_at(omega).to_dense() * &b;
        let reduced = rom.matrix_at(omega);
        let scale = (0..rom.dim()).flat_map(|i| (0..rom.dim()).map(move |j| (i, j))).map(|(i, j)| oracle[(i, j)].norm()).fold(0.0, f64::max);
        for i in 0..rom.dim() {
            for j in 0..rom.dim() {
                assert!((oracle[(i, j)] - reduced[(i, j)]).norm() <= 1e-12 * scale);
            }
        }
        let sol = solve_rom(&rom, omega).unwrap();
        // Galerkin orthogonality: B^H (f - A u_rb) = 0
        let (a, f) = m.system.system_at(omega).unwrap();
        let au = a.mul_vec(&sol.field);
        let res: Vec<c64> = f.iter().zip(&au).map(|(x, y)| x - y).collect();
        let proj = rom.restrict(&res);
        let fr = rom.rhs_at(omega);
        assert!(crate::sparse::norm2(&proj) < 1e-9 * crate::sparse::norm2(&fr));
        let gamma = rom.stability(omega).unwrap().max;
        assert!(gamma <= 1.0 + 1e-8);
    }
}
