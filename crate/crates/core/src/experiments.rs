//! Experiment driver, geometry-change planning and re-simulation with basis recycling.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    localized_reference_bases, merge_to_budget, nwidth_from_solutions, reduced_infsup_track, stability_sweep,
    total_size, truncate_to_tolerance,
};
use crate::bundle::{save_all, BasisBundle};
use crate::config::{Experiment, RunConfig};
use crate::decomposition::{SpaceDecomposition, SpaceId};
use crate::fem::{ParameterSet, WhitneyTriangle};
use crate::mesh::{ActiveDofs, DisableReason, GeometrySpec, SubdomainGrid};
use crate::model::Model;
use crate::output::{ensure_dir, Manifest, Table};
use crate::rom::{assemble_rom, full_solutions, rom_error_sweep, ErrorSweep};
use crate::training::{build_training_domain, content_hash, train_spaces, training_block, LocalBasis, TrainingReport};
use crate::{c64, Error, Result};

/// Model and sweep of one geometry under a run configuration.
pub struct Setup {
    pub cfg: RunConfig,
    pub model: Model,
    pub xi: ParameterSet,
}

impl Setup {
    pub fn new(cfg: &RunConfig, geometry: &GeometrySpec) -> Result<Self> {
        cfg.validate()?;
        let model = Model::build(
            geometry,
            (cfg.mesh[0], cfg.mesh[1]),
            (cfg.subdomains[0], cfg.subdomains[1]),
            cfg.material,
            cfg.excitation,
        )?;
        Ok(Self { cfg: cfg.clone(), model, xi: cfg.parameter_set()? })
    }

    pub fn decomposition(&self) -> Result<SpaceDecomposition<'_>> {
        SpaceDecomposition::new(&self.model.system, &self.model.grid, &self.model.dofs, self.cfg.omega_ext())
    }

    /// Trains every space of the decomposition.
    pub fn train_all(&self, dec: &SpaceDecomposition<'_>) -> Result<Vec<(LocalBasis, TrainingReport)>> {
        train_spaces(&dec.spaces(), &self.model, dec, &self.xi, &self.cfg.training)
    }
}

/// Files and non-fatal failures of a run.
#[derive(Clone, Debug, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub failures: Vec<String>,
}

/// Runs `experiment` and writes its tables plus `manifest.json` into `out`.
pub fn run_experiment(cfg: &RunConfig, experiment: Experiment, out: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    ensure_dir(out)?;
    let start = Instant::now();
    log::info!("running {experiment} on a {}x{} mesh into {}", cfg.mesh[0], cfg.mesh[1], out.display());
    let mut outcome = match experiment {
        Experiment::Stability => stability(cfg, out)?,
        Experiment::Nwidth => nwidth(cfg, out)?,
        Experiment::LocalizedReference => localized_reference(cfg, out)?,
        Experiment::InfsupTrack => infsup_track(cfg, out)?,
        Experiment::TrainingBenchmark => training_benchmark(cfg, out)?,
        Experiment::Training => training(cfg, out)?,
        Experiment::Geochange => geochange(cfg, out)?,
        Experiment::SolutionsExport => solutions_export(cfg, out)?,
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: experiment.to_string(),
        seed: cfg.training.seed,
        workers: rayon::current_num_threads(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        files: outcome.files.iter().map(|p| p.display().to_string()).collect(),
        failures: outcome.failures.clone(),
        config: serde_json::to_value(cfg).expect("config serializes"),
    };
    outcome.files.push(manifest.write(out)?);
    Ok(outcome)
}

fn sweep_failures(sweep: &ErrorSweep, what: &str) -> Vec<String> {
    sweep
        .frequencies
        .iter()
        .zip(&sweep.errors)
        .filter(|(_, e)| e.is_infinite())
        .map(|(f, _)| format!("{what}: reduced system singular at {f:e} Hz"))
        .collect()
}

fn stability(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let setup = Setup::new(cfg, &cfg.old_geometry()?)?;
    let points = stability_sweep(&setup.model.system, &setup.xi, cfg.analysis.svd.into());
    let mut t = Table::new("stability", &["frequency", "beta", "gamma"]);
    let mut failures = Vec::new();
    for p in &points {
        t.push(&[&p.frequency, &p.beta, &p.gamma]);
        if let Some(msg) = &p.failure {
            failures.push(format!("{:e} Hz: {msg}", p.frequency));
        }
    }
    Ok(RunOutcome { files: vec![t.write(out)?], failures })
}

fn nwidth(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let setup = Setup::new(cfg, &cfg.old_geometry()?)?;
    let full = full_solutions(&setup.model.system, &setup.xi)?;
    let g = nwidth_from_solutions(&setup.model.system, &full, cfg.analysis.nwidth_tol, cfg.analysis.nwidth_max)?;
    let mut t = Table::new("nwidth", &["size", "max_rel_error"]);
    for (k, e) in g.errors.iter().enumerate() {
        t.push(&[&k, e]);
    }
    Ok(RunOutcome { files: vec![t.write(out)?], failures: Vec::new() })
}

fn sorted_tolerances(cfg: &RunConfig) -> Vec<f64> {
    let mut tols = cfg.analysis.tolerances.clone();
    tols.sort_by(|a, b| b.total_cmp(a));
    tols.dedup();
    tols
}

fn localized_reference(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let setup = Setup::new(cfg, &cfg.old_geometry()?)?;
    let dec = setup.decomposition()?;
    let sys = &setup.model.system;
    let full = full_solutions(sys, &setup.xi)?;
    let refs = localized_reference_bases(&dec, &full, cfg.analysis.reference_tol, cfg.analysis.reference_max)?;
    let mut tols = sorted_tolerances(cfg);
    tols.push(cfg.analysis.reference_tol);
    let mut t = Table::new("localized_reference", &["tol_local", "size", "max_rel_error"]);
    let mut failures = Vec::new();
    for tol in tols {
        let bases = truncate_to_tolerance(&refs, tol);
        let sweep = rom_error_sweep(&assemble_rom(&bases, sys)?, sys, &setup.xi, &full)?;
        failures.extend(sweep_failures(&sweep, "reference ROM"));
        t.push(&[&tol, &total_size(&bases), &sweep.max_error()]);
    }
    let mut sizes = Table::new("reference_basis_sizes", &["space", "size"]);
    for b in &refs {
        sizes.push(&[&b.space.to_string(), &b.size()]);
    }
    Ok(RunOutcome { files: vec![t.write(out)?, sizes.write(out)?], failures })
}

fn infsup_track(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let setup = Setup::new(cfg, &cfg.old_geometry()?)?;
    let dec = setup.decomposition()?;
    let sys = &setup.model.system;
    let full = full_solutions(sys, &setup.xi)?;
    let refs = localized_reference_bases(&dec, &full, cfg.analysis.reference_tol, cfg.analysis.reference_max)?;
    let total = total_size(&refs);
    let sizes: Vec<usize> = if cfg.analysis.infsup_sizes.is_empty() {
        (1..=10).map(|k| (k * total).div_ceil(10)).collect()
    } else {
        cfg.analysis.infsup_sizes.clone()
    };
    let sequence: Vec<Vec<LocalBasis>> = sizes.iter().map(|&n| merge_to_budget(&refs, n)).collect();
    let track = reduced_infsup_track(&sequence, sys, &cfg.analysis.infsup_frequencies)?;
    let mut t = Table::new("infsup_track", &["size", "frequency", "beta_reduced"]);
    for p in &track {
        t.push(&[&p.size, &p.frequency, &p.beta_reduced]);
    }
    let mut errs = Table::new("infsup_errors", &["size", "frequency", "rel_error"]);
    let mut failures = Vec::new();
    for bases in &sequence {
        let sweep = rom_error_sweep(&assemble_rom(bases, sys)?, sys, &setup.xi, &full)?;
        failures.extend(sweep_failures(&sweep, "reference ROM"));
        for (f, e) in sweep.frequencies.iter().zip(&sweep.errors) {
            errs.push(&[&total_size(bases), f, e]);
        }
    }
    Ok(RunOutcome { files: vec![t.write(out)?, errs.write(out)?], failures })
}

fn training_benchmark(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let tols = sorted_tolerances(cfg);
    let tightest = *tols.last().ok_or_else(|| Error::Config("no tolerances given".into()))?;
    let mut run_cfg = cfg.clone();
    // a greedy run at a looser tolerance is a prefix of the tight run, so one training suffices
    run_cfg.training.tol_local = tightest;
    let setup = Setup::new(&run_cfg, &cfg.old_geometry()?)?;
    let dec = setup.decomposition()?;
    let sys = &setup.model.system;
    let trained: Vec<LocalBasis> = setup.train_all(&dec)?.into_iter().map(|(b, _)| b).collect();
    let full = full_solutions(sys, &setup.xi)?;
    let refs = localized_reference_bases(&dec, &full, cfg.analysis.reference_tol.min(tightest), cfg.analysis.reference_max)?;
    let mut t = Table::new("training_benchmark", &["method", "tol_local", "size", "max_rel_error"]);
    let mut failures = Vec::new();
    for tol in tols {
        let train = truncate_to_tolerance(&trained, tol);
        let n = total_size(&train);
        let s_train = rom_error_sweep(&assemble_rom(&train, sys)?, sys, &setup.xi, &full)?;
        let reference = merge_to_budget(&refs, n);
        let s_ref = rom_error_sweep(&assemble_rom(&reference, sys)?, sys, &setup.xi, &full)?;
        failures.extend(sweep_failures(&s_train, "training ROM"));
        failures.extend(sweep_failures(&s_ref, "reference ROM"));
        t.push(&[&"training", &tol, &n, &s_train.max_error()]);
        t.push(&[&"reference", &tol, &total_size(&reference), &s_ref.max_error()]);
    }
    Ok(RunOutcome { files: vec![t.write(out)?], failures })
}

fn training_tables(reports: &[TrainingReport]) -> Table {
    let mut t = Table::new("training", &["space", "interior_size", "snapshots", "factorizations", "basis_size", "final_error"]);
    for r in reports {
        t.push(&[&r.space.to_string(), &r.interior_size, &r.snapshots, &r.factorizations, &r.basis_size, &r.final_error]);
    }
    t
}

fn training(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let setup = Setup::new(cfg, &cfg.old_geometry()?)?;
    let dec = setup.decomposition()?;
    let sys = &setup.model.system;
    let (bases, reports): (Vec<LocalBasis>, Vec<TrainingReport>) = setup.train_all(&dec)?.into_iter().unzip();
    let mut files = save_all(&bases, &setup.model.dofs, &out.join("bases"))?;
    files.push(training_tables(&reports).write(out)?);
    let full = full_solutions(sys, &setup.xi)?;
    let sweep = rom_error_sweep(&assemble_rom(&bases, sys)?, sys, &setup.xi, &full)?;
    let mut t = Table::new("training_errors", &["frequency", "rel_error"]);
    for (f, e) in sweep.frequencies.iter().zip(&sweep.errors) {
        t.push(&[f, e]);
    }
    files.push(t.write(out)?);
    Ok(RunOutcome { files, failures: sweep_failures(&sweep, "training ROM") })
}

fn solutions_export(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let setup = Setup::new(cfg, &cfg.old_geometry()?)?;
    let xi = ParameterSet::new(cfg.analysis.export_frequencies.clone())?;
    let full = full_solutions(&setup.model.system, &xi)?;
    let mut t = Table::new("solutions", &["frequency", "x", "y", "abs_e"]);
    for (f, u) in xi.frequencies.iter().zip(&full) {
        for (p, e) in field_at_centroids(&setup.model, u)? {
            t.push(&[f, &p[0], &p[1], &e]);
        }
    }
    Ok(RunOutcome { files: vec![t.write(out)?], failures: Vec::new() })
}

/// Field magnitude `|E|` at every triangle centroid.
pub fn field_at_centroids(model: &Model, u: &[c64]) -> Result<Vec<([f64; 2], f64)>> {
    let mesh = &model.mesh;
    let third = [1.0 / 3.0; 3];
    (0..mesh.n_triangles())
        .map(|t| {
            let tri = WhitneyTriangle::new(mesh.triangle_coords(t))?;
            let mut e = [c64::new(0.0, 0.0); 2];
            for k in 0..3 {
                if let Some(d) = model.dofs.edge_to_dof[mesh.triangle_edges[t][k]] {
                    let w = tri.eval(k, third);
                    let c = u[d] * mesh.triangle_signs[t][k];
                    e[0] += c * w[0];
                    e[1] += c * w[1];
                }
            }
            Ok((tri.point(third), (e[0].norm_sqr() + e[1].norm_sqr()).sqrt()))
        })
        .collect()
}

/// Old and new geometry with the derived retrain/reuse split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangeSet {
    pub config: RunConfig,
    pub old_geometry: GeometrySpec,
    pub new_geometry: GeometrySpec,
    pub changed_subdomains: Vec<usize>,
    pub retrain: Vec<SpaceId>,
    pub reuse: Vec<SpaceId>,
}

impl ChangeSet {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("changeset serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cs: ChangeSet = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cs.config.validate()?;
        Ok(cs)
    }

    pub fn retrained_volumes(&self) -> usize {
        self.retrain.iter().filter(|s| s.is_volume()).count()
    }

    pub fn retrained_interfaces(&self) -> usize {
        self.retrain.len() - self.retrained_volumes()
    }
}

/// Digest of everything subdomain `s` contributes to the discrete operators: element
/// geometry, material, source, and state (activity, boundary condition) of its edges.
pub fn subdomain_digest(model: &Model, s: usize) -> [u8; 32] {
    let mesh = &model.mesh;
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&model.material).expect("material serializes"));
    h.update(serde_json::to_vec(&model.excitation).expect("excitation serializes"));
    for t in model.subdomain_triangles(s) {
        for p in mesh.triangle_coords(t) {
            h.update(p[0].to_le_bytes());
            h.update(p[1].to_le_bytes());
        }
        for (k, &e) in mesh.triangle_edges[t].iter().enumerate() {
            h.update((e as u64).to_le_bytes());
            h.update(mesh.triangle_signs[t][k].to_le_bytes());
            let state: u8 = match model.dofs.reason[e] {
                DisableReason::None => 0,
                DisableReason::Pec => 1,
                DisableReason::Dirichlet => 2,
            };
            let robin = mesh.boundary_side(e).is_some_and(|side| model.geometry.is_robin(side));
            h.update([state, robin as u8]);
        }
    }
    h.finalize().into()
}

/// Subdomains whose operator contributions differ between two models on the same mesh and grid.
pub fn changed_subdomains(old: &Model, new: &Model) -> Result<Vec<usize>> {
    if (old.mesh.nx, old.mesh.ny, old.grid.mx, old.grid.my) != (new.mesh.nx, new.mesh.ny, new.grid.mx, new.grid.my)
        || old.mesh.domain != new.mesh.domain
    {
        return Err(Error::InvalidInput("geometry change requires the same mesh and subdomain grid".into()));
    }
    Ok((0..old.grid.n_subdomains()).filter(|&s| subdomain_digest(old, s) != subdomain_digest(new, s)).collect())
}

/// Spaces whose training patch contains a changed subdomain.
pub fn spaces_to_retrain(spaces: &[SpaceId], grid: &SubdomainGrid, changed: &[usize]) -> Vec<SpaceId> {
    let changed: BTreeSet<usize> = changed.iter().copied().collect();
    spaces
        .iter()
        .copied()
        .filter(|&s| training_block(s, grid).iter().any(|b| changed.contains(b)))
        .collect()
}

pub fn plan_change(cfg: &RunConfig, old_geometry: &GeometrySpec, new_geometry: &GeometrySpec) -> Result<ChangeSet> {
    let old = Setup::new(cfg, old_geometry)?;
    let new = Setup::new(cfg, new_geometry)?;
    let changed = changed_subdomains(&old.model, &new.model)?;
    let spaces: Vec<SpaceId> = {
        let vols = (0..new.model.grid.n_subdomains()).map(SpaceId::Volume);
        vols.chain(new.model.grid.interfaces().into_iter().map(|(i, j)| SpaceId::Interface(i, j))).collect()
    };
    let retrain = spaces_to_retrain(&spaces, &new.model.grid, &changed);
    let reuse = spaces.iter().copied().filter(|s| !retrain.contains(s)).collect();
    Ok(ChangeSet {
        config: cfg.clone(),
        old_geometry: old_geometry.clone(),
        new_geometry: new_geometry.clone(),
        changed_subdomains: changed,
        retrain,
        reuse,
    })
}

/// Local and reduced factorizations performed by a re-simulation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FactorizationLedger {
    pub volume_trainings: usize,
    pub interface_trainings: usize,
    /// Patch factorizations over all retrained spaces (one per space and frequency).
    pub local_factorizations: usize,
    /// Largest patch problem among the retrained spaces.
    pub max_local_size: usize,
    pub reduced_dim: usize,
    /// One dense reduced factorization per frequency.
    pub reduced_factorizations: usize,
}

#[derive(Clone, Debug)]
pub struct RerunReport {
    pub reused: Vec<SpaceId>,
    pub retrained: Vec<SpaceId>,
    /// Spaces planned for reuse whose stored content hash did not match; they were retrained.
    pub hash_mismatches: Vec<SpaceId>,
    pub ledger: FactorizationLedger,
    pub reports: Vec<TrainingReport>,
    pub sweep: ErrorSweep,
    pub bases: Vec<LocalBasis>,
    /// DOF map of the new geometry, for storing `bases`.
    pub dofs: ActiveDofs,
}

/// Retrains the changed spaces, reuses stored bases for the rest, and evaluates the reduced
/// model of the new geometry against its full solutions.
pub fn rerun_after_change(cs: &ChangeSet, bases_dir: &Path) -> Result<RerunReport> {
    let setup = Setup::new(&cs.config, &cs.new_geometry)?;
    let dec = setup.decomposition()?;
    let model = &setup.model;
    let spaces = dec.spaces();
    let mut slots: Vec<Option<LocalBasis>> = vec![None; spaces.len()];
    let mut to_train = Vec::new();
    let (mut reused, mut mismatches) = (Vec::new(), Vec::new());
    for (k, &space) in spaces.iter().enumerate() {
        if !cs.reuse.contains(&space) {
            to_train.push(k);
            continue;
        }
        let td = build_training_domain(space, &model.mesh, &model.dofs, &model.grid);
        let expected = content_hash(&td, model, dec.omega_ext, &setup.xi, &cs.config.training);
        match BasisBundle::load_space(bases_dir, space)? {
            Some(bundle) if bundle.content_hash == expected => match bundle.to_basis(&model.dofs) {
                Ok(b) => {
                    slots[k] = Some(b);
                    reused.push(space);
                }
                Err(e) => {
                    log::warn!("{space}: stored basis unusable ({e}); retraining");
                    mismatches.push(space);
                    to_train.push(k);
                }
            },
            Some(_) => {
                log::warn!("{space}: content hash mismatch; retraining instead of reusing");
                mismatches.push(space);
                to_train.push(k);
            }
            None => {
                log::warn!("{space}: no stored basis; retraining");
                mismatches.push(space);
                to_train.push(k);
            }
        }
    }
    let train_ids: Vec<SpaceId> = to_train.iter().map(|&k| spaces[k]).collect();
    let trained = train_spaces(&train_ids, model, &dec, &setup.xi, &cs.config.training)?;
    let mut reports = Vec::new();
    for (&k, (basis, report)) in to_train.iter().zip(trained) {
        slots[k] = Some(basis);
        reports.push(report);
    }
    let bases: Vec<LocalBasis> = slots.into_iter().map(|b| b.expect("every space filled")).collect();
    let rom = assemble_rom(&bases, &model.system)?;
    let full = full_solutions(&model.system, &setup.xi)?;
    let sweep = rom_error_sweep(&rom, &model.system, &setup.xi, &full)?;
    let ledger = FactorizationLedger {
        volume_trainings: train_ids.iter().filter(|s| s.is_volume()).count(),
        interface_trainings: train_ids.iter().filter(|s| !s.is_volume()).count(),
        local_factorizations: reports.iter().map(|r| r.factorizations).sum(),
        max_local_size: reports.iter().map(|r| r.interior_size).max().unwrap_or(0),
        reduced_dim: rom.dim(),
        reduced_factorizations: setup.xi.len(),
    };
    Ok(RerunReport { reused, retrained: train_ids, hash_mismatches: mismatches, ledger, reports, sweep, bases, dofs: model.dofs.clone() })
}

/// Writes the outputs of a re-simulation into `out`.
pub fn write_rerun(report: &RerunReport, out: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out)?;
    let mut t = Table::new("rerun", &["frequency", "rel_error"]);
    for (f, e) in report.sweep.frequencies.iter().zip(&report.sweep.errors) {
        t.push(&[f, e]);
    }
    let ledger_path = out.join("ledger.json");
    let text = serde_json::to_string_pretty(&report.ledger).expect("ledger serializes");
    std::fs::write(&ledger_path, text).map_err(|e| Error::io(&ledger_path, e))?;
    let mut files = save_all(&report.bases, &report.dofs, &out.join("bases"))?;
    files.push(t.write(out)?);
    files.push(ledger_path);
    Ok(files)
}

fn geochange(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let old_geo = cfg.old_geometry()?;
    let new_geo = cfg.new_geometry()?;
    let old = Setup::new(cfg, &old_geo)?;
    let old_dec = old.decomposition()?;
    let old_bases: Vec<LocalBasis> = old.train_all(&old_dec)?.into_iter().map(|(b, _)| b).collect();
    let stored = out.join("bases_old");
    let mut files = save_all(&old_bases, &old.model.dofs, &stored)?;

    let cs = plan_change(cfg, &old_geo, &new_geo)?;
    let cs_path = out.join("changeset.json");
    cs.save(&cs_path)?;
    files.push(cs_path);
    let report = rerun_after_change(&cs, &stored)?;
    files.extend(write_rerun(&report, &out.join("rerun"))?);

    // reference: retrain everything on the new geometry
    let new = Setup::new(cfg, &new_geo)?;
    let new_dec = new.decomposition()?;
    let all: Vec<LocalBasis> = new.train_all(&new_dec)?.into_iter().map(|(b, _)| b).collect();
    let full = full_solutions(&new.model.system, &new.xi)?;
    let retrain = rom_error_sweep(&assemble_rom(&all, &new.model.system)?, &new.model.system, &new.xi, &full)?;

    let mut t = Table::new("geochange", &["frequency", "mixed_error", "retrain_error"]);
    for ((f, a), b) in report.sweep.frequencies.iter().zip(&report.sweep.errors).zip(&retrain.errors) {
        t.push(&[f, a, b]);
    }
    files.push(t.write(out)?);
    let mut s = Table::new("geochange_summary", &["quantity", "value"]);
    s.push(&[&"changed_subdomains", &cs.changed_subdomains.len()]);
    s.push(&[&"retrained_volume_spaces", &cs.retrained_volumes()]);
    s.push(&[&"retrained_interface_spaces", &cs.retrained_interfaces()]);
    s.push(&[&"reduced_dim", &report.ledger.reduced_dim]);
    s.push(&[&"mixed_max_error", &format!("{:e}", report.sweep.max_error())]);
    s.push(&[&"retrain_max_error", &format!("{:e}", retrain.max_error())]);
    files.push(s.write(out)?);
    let mut failures = sweep_failures(&report.sweep, "mixed ROM");
    failures.extend(sweep_failures(&retrain, "retrained ROM"));
    failures.extend(report.hash_mismatches.iter().map(|s| format!("{s}: stored basis not reusable")));
    Ok(RunOutcome { files, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;

    fn tiny_cfg() -> RunConfig {
        RunConfig {
            geometry: "preset:unit-square".into(),
            new_geometry: None,
            mesh: [10, 10],
            subdomains: [5, 5],
            sweep: crate::config::SweepConfig { f_min: 1e8, f_max: 1e9, count: 3 },
            ..RunConfig::default()
        }
    }

    #[test]
    fn identical_geometries_change_nothing() {
        let cfg = tiny_cfg();
        let g = GeometrySpec::preset_geometry1();
        let cs = plan_change(&cfg, &g, &g).unwrap();
        assert!(cs.changed_subdomains.is_empty() && cs.retrain.is_empty());
        assert_eq!(cs.reuse.len(), 25 + 40);
    }

    #[test]
    fn interior_change_retrains_the_neighbourhood() {
        let cfg = tiny_cfg();
        let old = GeometrySpec::unit_square();
        let mut new = old.clone();
        // inside subdomain (2, 2): x, y in [0.4, 0.6]
        new.pec.push(Rect::new(0.43, 0.43, 0.57, 0.55).unwrap());
        let cs = plan_change(&cfg, &old, &new).unwrap();
        assert_eq!(cs.changed_subdomains, vec![12]);
        assert_eq!(cs.retrained_volumes(), 9);
        assert_eq!(cs.retrained_interfaces(), 12);
    }

    #[test]
    fn centroid_field_of_zero_is_zero() {
        let m = Model::with_defaults(&GeometrySpec::unit_square(), 2, 1).unwrap();
        let f = field_at_centroids(&m, &vec![c64::new(0.0, 0.0); m.n_active()]).unwrap();
        assert_eq!(f.len(), 16);
        assert!(f.iter().all(|(_, e)| *e == 0.0));
    }
}
