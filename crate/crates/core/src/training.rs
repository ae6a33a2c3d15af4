//! Randomized local training of reduced localized spaces.
//!
//! Each space is trained on a small patch of subdomains around it. For every training
//! frequency the patch problem is solved once with the true source and zero boundary data
//! and `n_random` times without source and with random data on the patch's outer ring. The
//! solutions are split by the space decomposition, and the component belonging to the space
//! is compressed by a greedy procedure.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::decomposition::{SpaceDecomposition, SpaceId};
use crate::fem::{AffineSystem, ParameterSet};
use crate::linalg::{factorize_with_context, greedy_compress, Factorization};
use crate::mesh::{ActiveDofs, StructuredMesh, SubdomainGrid};
use crate::model::Model;
use crate::sparse::{combine_same_pattern, Csr};
use crate::{c64, Error, Result};

/// Distribution of the random boundary data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomDistribution {
    /// Real and imaginary parts i.i.d. standard normal.
    #[default]
    Gaussian,
    /// Real and imaginary parts i.i.d. uniform with unit variance.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    /// Random snapshots per frequency and space.
    pub n_random: usize,
    pub seed: u64,
    /// Greedy tolerance, relative to the M-norm of each projected component.
    pub tol_local: f64,
    pub max_local_size: usize,
    pub distribution: RandomDistribution,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self { n_random: 5, seed: 0, tol_local: 1e-4, max_local_size: 400, distribution: RandomDistribution::Gaussian }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_local > 0.0 && self.tol_local.is_finite()) {
            return Err(Error::Config(format!("tol_local must be positive, got {}", self.tol_local)));
        }
        Ok(())
    }
}

/// Patch of subdomains on which one space is trained.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingDomain {
    pub space: SpaceId,
    pub subdomains: Vec<usize>,
    /// Unknowns: active DOFs whose adjacent triangles all lie in the patch, ascending.
    pub interior: Vec<usize>,
    /// Active DOFs touching the patch and its outside, ascending. Random data lives here.
    pub ring: Vec<usize>,
}

impl TrainingDomain {
    /// Snapshot row layout: interior DOFs followed by ring DOFs.
    pub fn rows(&self) -> Vec<usize> {
        self.interior.iter().chain(&self.ring).copied().collect()
    }
}

/// Subdomain block of the patch around `space`: 3x3 for volumes, 2x3 or 3x2 for interfaces,
/// clipped at the grid.
pub fn training_block(space: SpaceId, grid: &SubdomainGrid) -> Vec<usize> {
    let c = |s: usize| {
        let (x, y) = grid.coords(s);
        (x as isize, y as isize)
    };
    match space {
        SpaceId::Volume(i) => {
            let (x, y) = c(i);
            grid.block(x - 1, x + 1, y - 1, y + 1)
        }
        SpaceId::Interface(i, j) => {
            let ((xi, yi), (xj, _)) = (c(i), c(j));
            if xj != xi {
                grid.block(xi, xi + 1, yi - 1, yi + 1)
            } else {
                grid.block(xi - 1, xi + 1, yi, yi + 1)
            }
        }
    }
}

pub fn build_training_domain(space: SpaceId, mesh: &StructuredMesh, dofs: &ActiveDofs, grid: &SubdomainGrid) -> TrainingDomain {
    let subdomains = training_block(space, grid);
    let mut in_block = vec![false; grid.n_subdomains()];
    subdomains.iter().for_each(|&s| in_block[s] = true);
    let mut seen = vec![false; mesh.n_edges()];
    let (mut interior, mut ring) = (Vec::new(), Vec::new());
    for &s in &subdomains {
        for t in grid.triangles(s, mesh.nx) {
            for &e in &mesh.triangle_edges[t] {
                if std::mem::replace(&mut seen[e], true) {
                    continue;
                }
                let Some(d) = dofs.edge_to_dof[e] else { continue };
                if mesh.adjacent_triangles(e).all(|t| in_block[grid.triangle_subdomain[t]]) {
                    interior.push(d);
                } else {
                    ring.push(d);
                }
            }
        }
    }
    interior.sort_unstable();
    ring.sort_unstable();
    TrainingDomain { space, subdomains, interior, ring }
}

/// Patch operators, cut out of the global affine blocks.
struct LocalProblem {
    ii: [Csr<f64>; 3],
    ir: [Csr<f64>; 3],
    rhs: Vec<c64>,
}

impl LocalProblem {
    fn new(td: &TrainingDomain, sys: &AffineSystem) -> Self {
        let cut = |rows: &[usize], cols: &[usize]| {
            [&sys.curl, &sys.mass, &sys.robin].map(|m| m.submatrix(rows, cols))
        };
        Self {
            ii: cut(&td.interior, &td.interior),
            ir: cut(&td.interior, &td.ring),
            rhs: td.interior.iter().map(|&d| sys.rhs[d]).collect(),
        }
    }

    fn at(parts: &[Csr<f64>; 3], omega: f64) -> Csr<c64> {
        combine_same_pattern(&[
            (&parts[0], c64::new(1.0, 0.0)),
            (&parts[1], c64::new(-omega * omega, 0.0)),
            (&parts[2], c64::new(0.0, omega)),
        ])
    }
}

/// Patch solutions in [`TrainingDomain::rows`] layout.
#[derive(Clone, Debug)]
pub struct SnapshotSet {
    pub rows: Vec<usize>,
    pub vectors: Mat<c64>,
    /// Frequencies (Hz) skipped because the patch matrix was singular.
    pub skipped: Vec<f64>,
    pub factorizations: usize,
}

#[derive(Clone, Copy)]
struct Kinds {
    particular: bool,
    random: bool,
}

fn draw(rng: &mut ChaCha8Rng, dist: RandomDistribution) -> c64 {
    match dist {
        RandomDistribution::Gaussian => c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)),
        RandomDistribution::Uniform => {
            let a = 3f64.sqrt();
            c64::new(rng.random_range(-a..a), rng.random_range(-a..a))
        }
    }
}

fn snapshots(td: &TrainingDomain, sys: &AffineSystem, xi: &ParameterSet, cfg: &TrainingConfig, kinds: Kinds) -> Result<SnapshotSet> {
    let local = LocalProblem::new(td, sys);
    let (ni, nr) = (td.interior.len(), td.ring.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(td.space.stream_id());
    let mut cols: Vec<Vec<c64>> = Vec::new();
    let mut skipped = Vec::new();
    let mut factorizations = 0;
    for (&f, omega) in xi.frequencies.iter().zip(xi.omegas()) {
        // draw first so that a skipped frequency does not shift later streams
        let ring_data: Vec<Vec<c64>> = if kinds.random {
            (0..cfg.n_random).map(|_| (0..nr).map(|_| draw(&mut rng, cfg.distribution)).collect()).collect()
        } else {
            Vec::new()
        };
        if ni == 0 {
            continue;
        }
        let fact: Factorization = match factorize_with_context(&LocalProblem::at(&local.ii, omega), "training patch") {
            Ok(fct) => fct,
            Err(Error::SingularFactorization { residual, .. }) => {
                log::warn!("{}: patch matrix singular at {f:e} Hz (residual {residual:e}), skipped", td.space);
                skipped.push(f);
                continue;
            }
            Err(e) => return Err(e),
        };
        factorizations += 1;
        if kinds.particular {
            let s = c64::new(0.0, -omega);
            let b: Vec<c64> = local.rhs.iter().map(|v| s * v).collect();
            let mut u = fact.solve(&b);
            u.resize(ni + nr, c64::new(0.0, 0.0));
            cols.push(u);
        }
        if !ring_data.is_empty() && nr > 0 {
            let a_ir = LocalProblem::at(&local.ir, omega);
            let mut rhs = Mat::<c64>::zeros(ni, ring_data.len());
            for (c, g) in ring_data.iter().enumerate() {
                let y = a_ir.mul_vec(g);
                rhs.col_as_slice_mut(c).iter_mut().zip(&y).for_each(|(r, v)| *r = -v);
            }
            let u = fact.solve_many(rhs);
            for (c, g) in ring_data.iter().enumerate() {
                let mut v = u.col_as_slice(c).to_vec();
                v.extend_from_slice(g);
                cols.push(v);
            }
        }
    }
    let vectors = Mat::from_fn(ni + nr, cols.len(), |r, c| cols[c][r]);
    Ok(SnapshotSet { rows: td.rows(), vectors, skipped, factorizations })
}

/// Patch solutions with the true source and zero ring data, one per frequency.
pub fn particular_snapshots(td: &TrainingDomain, sys: &AffineSystem, xi: &ParameterSet) -> Result<SnapshotSet> {
    let cfg = TrainingConfig { n_random: 0, ..TrainingConfig::default() };
    snapshots(td, sys, xi, &cfg, Kinds { particular: true, random: false })
}

/// Source-free patch solutions with random ring data, `n_random` per frequency.
pub fn random_snapshots(td: &TrainingDomain, sys: &AffineSystem, xi: &ParameterSet, cfg: &TrainingConfig) -> Result<SnapshotSet> {
    snapshots(td, sys, xi, cfg, Kinds { particular: false, random: true })
}

/// Reduced basis of one localized space.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalBasis {
    pub space: SpaceId,
    /// Global DOFs carrying the vectors (rows of `vectors`), ascending.
    pub support: Vec<usize>,
    /// M-orthonormal columns.
    pub vectors: Mat<c64>,
    /// Greedy error trajectory: `errors[k]` is the error with `k` vectors.
    pub errors: Vec<f64>,
    /// Digest of everything the training read; empty for bases not produced by training.
    pub content_hash: String,
}

impl LocalBasis {
    pub fn size(&self) -> usize {
        self.vectors.ncols()
    }

    /// The first `k` vectors.
    pub fn truncated(&self, k: usize) -> LocalBasis {
        let k = k.min(self.size());
        LocalBasis {
            space: self.space,
            support: self.support.clone(),
            vectors: self.vectors.subcols(0, k).to_owned(),
            errors: self.errors[..=k].to_vec(),
            content_hash: self.content_hash.clone(),
        }
    }

    /// Column `j` as a global vector of length `n`.
    pub fn global_vector(&self, j: usize, n: usize) -> Vec<c64> {
        let mut out = vec![c64::new(0.0, 0.0); n];
        for (r, &d) in self.support.iter().enumerate() {
            out[d] = self.vectors[(r, j)];
        }
        out
    }
}

/// Bookkeeping of one training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub space: SpaceId,
    pub interior_size: usize,
    pub ring_size: usize,
    pub snapshots: usize,
    pub factorizations: usize,
    pub skipped_frequencies: Vec<f64>,
    pub basis_size: usize,
    pub final_error: f64,
}

/// Digest of the patch data a training reads: operator rows of the patch interior, source,
/// material, frequencies, extension frequency, configuration and random stream.
pub fn content_hash(td: &TrainingDomain, model: &Model, omega_ext: f64, xi: &ParameterSet, cfg: &TrainingConfig) -> String {
    let sys = &model.system;
    let edge = |d: usize| model.dofs.dof_to_edge[d] as u64;
    let mut h = Sha256::new();
    h.update(b"edgerom-training-v1");
    h.update(td.space.stream_id().to_le_bytes());
    for v in [model.mesh.nx, model.mesh.ny, model.grid.mx, model.grid.my] {
        h.update((v as u64).to_le_bytes());
    }
    h.update(serde_json::to_vec(cfg).expect("config serializes"));
    h.update(serde_json::to_vec(&model.material).expect("material serializes"));
    h.update(omega_ext.to_le_bytes());
    for f in &xi.frequencies {
        h.update(f.to_le_bytes());
    }
    let mut in_rows = vec![false; sys.dim()];
    td.interior.iter().chain(&td.ring).for_each(|&d| in_rows[d] = true);
    h.update((td.ring.len() as u64).to_le_bytes());
    for &d in &td.ring {
        h.update(edge(d).to_le_bytes());
    }
    for &d in &td.interior {
        h.update(edge(d).to_le_bytes());
        h.update(sys.rhs[d].re.to_le_bytes());
        h.update(sys.rhs[d].im.to_le_bytes());
        for m in [&sys.curl, &sys.mass, &sys.robin] {
            for (c, v) in m.row(d).filter(|&(c, _)| in_rows[c]) {
                h.update(edge(c).to_le_bytes());
                h.update(v.to_le_bytes());
            }
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Trains one space (volume or interface) on its patch.
pub fn train_space(
    space: SpaceId,
    model: &Model,
    dec: &SpaceDecomposition<'_>,
    xi: &ParameterSet,
    cfg: &TrainingConfig,
) -> Result<(LocalBasis, TrainingReport)> {
    cfg.validate()?;
    let td = build_training_domain(space, &model.mesh, &model.dofs, &model.grid);
    let kinds = Kinds { particular: true, random: cfg.n_random > 0 };
    let snaps = snapshots(&td, &model.system, xi, cfg, kinds)?;
    let support = dec.support(space)?;
    let comps = dec.component_many(space, &snaps.rows, snaps.vectors.as_ref())?;
    let gram = model.system.gram.submatrix(&support, &support);
    let greedy = greedy_compress(comps.as_ref(), &gram, cfg.tol_local, cfg.max_local_size)?;
    let report = TrainingReport {
        space,
        interior_size: td.interior.len(),
        ring_size: td.ring.len(),
        snapshots: snaps.vectors.ncols(),
        factorizations: snaps.factorizations,
        skipped_frequencies: snaps.skipped.clone(),
        basis_size: greedy.size(),
        final_error: *greedy.errors.last().expect("trajectory is never empty"),
    };
    log::debug!("trained {space}: {} dofs, {} snapshots -> {} vectors", td.interior.len(), report.snapshots, report.basis_size);
    let basis = LocalBasis {
        space,
        support,
        vectors: greedy.basis,
        errors: greedy.errors,
        content_hash: content_hash(&td, model, dec.omega_ext, xi, cfg),
    };
    Ok((basis, report))
}

/// Trains `spaces` in parallel; results come back in input order.
pub fn train_spaces(
    spaces: &[SpaceId],
    model: &Model,
    dec: &SpaceDecomposition<'_>,
    xi: &ParameterSet,
    cfg: &TrainingConfig,
) -> Result<Vec<(LocalBasis, TrainingReport)>> {
    spaces.par_iter().map(|&s| train_space(s, model, dec, xi, cfg)).collect()
}
