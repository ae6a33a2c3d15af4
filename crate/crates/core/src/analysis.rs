//! Global diagnostics: stability constants, greedy n-width bound, localized reference bases
//! built from full solutions, and inf-sup tracking of reduced systems.

use faer::Mat;
use rayon::prelude::*;
use serde::Serialize;

use crate::decomposition::SpaceDecomposition;
use crate::fem::{AffineSystem, ParameterSet};
use crate::linalg::{extremal_singular_values_with, greedy_compress, greedy_compress_relative_to, GreedyResult, SvdMethod};
use crate::rom::{assemble_rom, full_solutions};
use crate::training::LocalBasis;
use crate::{c64, Result};

/// Inf-sup (`beta`) and continuity (`gamma`) constants at one frequency.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityPoint {
    pub frequency: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Set when the computation failed at this frequency; `beta`/`gamma` are NaN then.
    pub failure: Option<String>,
}

/// Stability constants of `A(omega)` in the V-norm over the sweep. Failures are recorded per
/// frequency and do not stop the sweep.
pub fn stability_sweep(sys: &AffineSystem, xi: &ParameterSet, method: SvdMethod) -> Vec<StabilityPoint> {
    xi.frequencies
        .par_iter()
        .zip(xi.omegas())
        .map(|(&frequency, omega)| match extremal_singular_values_with(&sys.matrix_at(omega), &sys.gram, method) {
            Ok(p) => StabilityPoint { frequency, beta: p.min, gamma: p.max, failure: None },
            Err(e) => {
                log::warn!("stability at {frequency:e} Hz failed: {e}");
                StabilityPoint { frequency, beta: f64::NAN, gamma: f64::NAN, failure: Some(e.to_string()) }
            }
        })
        .collect()
}

fn as_columns(vs: &[Vec<c64>]) -> Mat<c64> {
    let n = vs.first().map_or(0, Vec::len);
    Mat::from_fn(n, vs.len(), |r, c| vs[c][r])
}

/// Greedy compression of the full solution set; its error trajectory bounds the n-width from above.
pub fn global_greedy_nwidth(sys: &AffineSystem, xi: &ParameterSet, tol: f64, max_size: usize) -> Result<GreedyResult> {
    let full = full_solutions(sys, xi)?;
    nwidth_from_solutions(sys, &full, tol, max_size)
}

pub fn nwidth_from_solutions(sys: &AffineSystem, full: &[Vec<c64>], tol: f64, max_size: usize) -> Result<GreedyResult> {
    greedy_compress(as_columns(full).as_ref(), &sys.gram, tol, max_size)
}

/// Per-space greedy bases from the components of full solutions. Errors are relative to the
/// V-norm of the solution a component belongs to, as in training.
pub fn localized_reference_bases(
    dec: &SpaceDecomposition<'_>,
    full: &[Vec<c64>],
    tol: f64,
    max_size: usize,
) -> Result<Vec<LocalBasis>> {
    let sys = dec.sys;
    let snaps = as_columns(full);
    let rows: Vec<usize> = (0..sys.dim()).collect();
    let norms: Vec<f64> = full.iter().map(|u| sys.energy_norm(u)).collect();
    dec.spaces()
        .par_iter()
        .map(|&space| {
            let support = dec.support(space)?;
            let comps = dec.component_many(space, &rows, snaps.as_ref())?;
            let gram = sys.gram.submatrix(&support, &support);
            let g = greedy_compress_relative_to(comps.as_ref(), &norms, &gram, tol, max_size)?;
            Ok(LocalBasis { space, support, vectors: g.basis, errors: g.errors, content_hash: String::new() })
        })
        .collect()
}

/// Truncates every basis to the shortest prefix whose trajectory reaches `tol`.
pub fn truncate_to_tolerance(bases: &[LocalBasis], tol: f64) -> Vec<LocalBasis> {
    bases
        .iter()
        .map(|b| {
            let k = b.errors.iter().position(|&e| e <= tol).unwrap_or(b.size()).min(b.size());
            b.truncated(k)
        })
        .collect()
}

/// Distributes `total` vectors over the spaces by merging their greedy trajectories: each
/// step adds the next vector of the space whose current error is largest.
pub fn merge_to_budget(bases: &[LocalBasis], total: usize) -> Vec<LocalBasis> {
    let mut taken = vec![0usize; bases.len()];
    for _ in 0..total {
        let next = (0..bases.len())
            .filter(|&s| taken[s] < bases[s].size())
            .max_by(|&a, &b| bases[a].errors[taken[a]].total_cmp(&bases[b].errors[taken[b]]).then(b.cmp(&a)));
        match next {
            Some(s) => taken[s] += 1,
            None => break,
        }
    }
    bases.iter().zip(&taken).map(|(b, &k)| b.truncated(k)).collect()
}

pub fn total_size(bases: &[LocalBasis]) -> usize {
    bases.iter().map(LocalBasis::size).sum()
}

/// Reduced inf-sup constant for one basis size and frequency.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfSupPoint {
    pub size: usize,
    pub frequency: f64,
    pub beta_reduced: f64,
}

/// Reduced inf-sup constants for a nested sequence of aggregated bases at the given frequencies.
pub fn reduced_infsup_track(sequence: &[Vec<LocalBasis>], sys: &AffineSystem, frequencies: &[f64]) -> Result<Vec<InfSupPoint>> {
    let mut out = Vec::new();
    for bases in sequence {
        let rom = assemble_rom(bases, sys)?;
        if rom.dim() == 0 {
            continue;
        }
        let points: Vec<InfSupPoint> = frequencies
            .par_iter()
            .map(|&f| {
                let p = rom.stability(2.0 * std::f64::consts::PI * f)?;
                Ok(InfSupPoint { size: rom.dim(), frequency: f, beta_reduced: p.min })
            })
            .collect::<Result<_>>()?;
        out.extend(points);
    }
    Ok(out)
}
