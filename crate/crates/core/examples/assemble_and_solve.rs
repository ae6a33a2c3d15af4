//! Assembles the affine Maxwell system once and solves it at a few frequencies.
//!
//! Re-assembly per frequency is a linear combination of three stored matrices, so the sweep
//! only pays for the factorizations.

use edgerom::fem::ParameterSet;
use edgerom::linalg::factorize;
use edgerom::mesh::GeometrySpec;
use edgerom::model::Model;
use edgerom::sparse::norm2;

fn main() -> edgerom::Result<()> {
    let model = Model::with_defaults(&GeometrySpec::preset_geometry1(), 30, 3)?;
    let sys = &model.system;
    println!("{} active edges, {} nonzeros in the curl matrix", sys.dim(), sys.curl.nnz());

    let xi = ParameterSet::new(vec![1e8, 5e8, 1e9])?;
    for (f, omega) in xi.frequencies.iter().zip(xi.omegas()) {
        let (a, b) = sys.system_at(omega)?;
        let u = factorize(&a)?.solve(&b);
        let r: Vec<_> = a.mul_vec(&u).iter().zip(&b).map(|(x, y)| x - y).collect();
        println!(
            "{f:>8.2e} Hz  |u|_M = {:.4e}  relative residual {:.1e}",
            sys.energy_norm(&u),
            norm2(&r) / norm2(&b)
        );
    }
    Ok(())
}
