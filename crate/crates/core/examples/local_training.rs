//! Trains the local basis of one volume space and one interface space on their patches.
//!
//! Each patch solve uses the true source plus random boundary data on the patch ring; the
//! resulting snapshots are projected onto the space and compressed greedily.

use edgerom::decomposition::{SpaceDecomposition, SpaceId};
use edgerom::fem::ParameterSet;
use edgerom::mesh::GeometrySpec;
use edgerom::model::Model;
use edgerom::training::{train_space, TrainingConfig};

fn main() -> edgerom::Result<()> {
    let model = Model::with_defaults(&GeometrySpec::preset_geometry1(), 20, 4)?;
    let dec = SpaceDecomposition::new(&model.system, &model.grid, &model.dofs, 2.0 * std::f64::consts::PI * 505e6)?;
    let xi = ParameterSet::linspace(1e7, 1e9, 10)?;
    let cfg = TrainingConfig { tol_local: 1e-4, ..TrainingConfig::default() };

    for space in [SpaceId::Volume(5), SpaceId::Interface(5, 6)] {
        let (basis, report) = train_space(space, &model, &dec, &xi, &cfg)?;
        println!(
            "{space}: patch {} + {} ring, {} snapshots, {} factorizations -> {} vectors",
            report.interior_size, report.ring_size, report.snapshots, report.factorizations, report.basis_size
        );
        let trail: Vec<String> = basis.errors.iter().step_by(3).map(|e| format!("{e:.1e}")).collect();
        println!("    error trail {}", trail.join(" "));
        println!("    content hash {}", &basis.content_hash[..16]);
    }
    Ok(())
}
