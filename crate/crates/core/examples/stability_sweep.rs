//! Inf-sup and continuity constants of the full problem over a frequency sweep.

use edgerom::analysis::stability_sweep;
use edgerom::fem::ParameterSet;
use edgerom::linalg::SvdMethod;
use edgerom::mesh::GeometrySpec;
use edgerom::model::Model;

fn main() -> edgerom::Result<()> {
    let model = Model::with_defaults(&GeometrySpec::preset_geometry1(), 12, 2)?;
    let xi = ParameterSet::linspace(1e7, 1e9, 12)?;
    println!("{:>10} {:>12} {:>12}", "f [Hz]", "beta", "gamma");
    for p in stability_sweep(&model.system, &xi, SvdMethod::Auto) {
        match p.failure {
            None => println!("{:>10.3e} {:>12.4e} {:>12.6}", p.frequency, p.beta, p.gamma),
            Some(why) => println!("{:>10.3e} failed: {why}", p.frequency),
        }
    }
    Ok(())
}
