//! Splits a full solution into volume and interface components and puts it back together.

use edgerom::decomposition::{SpaceDecomposition, DEFAULT_EXTENSION_FREQUENCY};
use edgerom::linalg::factorize;
use edgerom::mesh::GeometrySpec;
use edgerom::model::Model;
use edgerom::sparse::norm2;
use edgerom::c64;

fn main() -> edgerom::Result<()> {
    let model = Model::with_defaults(&GeometrySpec::preset_geometry1(), 20, 4)?;
    let sys = &model.system;
    let omega_ext = 2.0 * std::f64::consts::PI * DEFAULT_EXTENSION_FREQUENCY;
    let dec = SpaceDecomposition::new(sys, &model.grid, &model.dofs, omega_ext)?;

    let omega = 2.0 * std::f64::consts::PI * 3e8;
    let (a, b) = sys.system_at(omega)?;
    let u = factorize(&a)?.solve(&b);

    let parts = dec.project(&u)?;
    let mut sum = vec![c64::new(0.0, 0.0); u.len()];
    for (space, part) in &parts {
        let share = sys.energy_norm(part) / sys.energy_norm(&u);
        if share > 0.25 {
            println!("{space:>6}: {share:.3} of the solution norm");
        }
        sum.iter_mut().zip(part).for_each(|(s, p)| *s += p);
    }
    let diff: Vec<c64> = sum.iter().zip(&u).map(|(s, x)| s - x).collect();
    println!("{} components, reconstruction error {:.2e}", parts.len(), norm2(&diff) / norm2(&u));
    Ok(())
}
