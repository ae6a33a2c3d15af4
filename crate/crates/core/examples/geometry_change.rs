//! Trains bases for one geometry, stores them, changes the PEC layout and re-simulates,
//! retraining only the spaces whose training patches saw the change.

use edgerom::bundle::save_all;
use edgerom::config::RunConfig;
use edgerom::experiments::{plan_change, rerun_after_change, Setup};

fn main() -> edgerom::Result<()> {
    let cfg = RunConfig::default();
    let (old_geo, new_geo) = (cfg.old_geometry()?, cfg.new_geometry()?);

    let old = Setup::new(&cfg, &old_geo)?;
    let dec = old.decomposition()?;
    let bases: Vec<_> = old.train_all(&dec)?.into_iter().map(|(b, _)| b).collect();
    let store = std::env::temp_dir().join("edgerom-geometry-change");
    save_all(&bases, &old.model.dofs, &store)?;
    println!("stored {} bases in {}", bases.len(), store.display());

    let cs = plan_change(&cfg, &old_geo, &new_geo)?;
    println!(
        "changed subdomains {:?}: retrain {} volume + {} interface spaces, reuse {}",
        cs.changed_subdomains,
        cs.retrained_volumes(),
        cs.retrained_interfaces(),
        cs.reuse.len()
    );

    let report = rerun_after_change(&cs, &store)?;
    let l = &report.ledger;
    println!(
        "{} local factorizations (largest patch {}), reduced dimension {}, max error {:.2e}",
        l.local_factorizations,
        l.max_local_size,
        l.reduced_dim,
        report.sweep.max_error()
    );
    Ok(())
}
