//! Greedy compression of full solutions: an upper bound for how fast any global reduced basis
//! can converge on this sweep.

use edgerom::analysis::global_greedy_nwidth;
use edgerom::fem::ParameterSet;
use edgerom::mesh::GeometrySpec;
use edgerom::model::Model;

fn main() -> edgerom::Result<()> {
    let model = Model::with_defaults(&GeometrySpec::preset_geometry1(), 20, 4)?;
    let xi = ParameterSet::linspace(1e7, 1e9, 40)?;
    let greedy = global_greedy_nwidth(&model.system, &xi, 1e-6, 40)?;
    for (n, e) in greedy.errors.iter().enumerate() {
        println!("{n:>3} {e:.3e}");
    }
    println!("picked frequencies: {:?}", greedy.picked.iter().map(|&k| xi.frequencies[k]).collect::<Vec<_>>());
    Ok(())
}
