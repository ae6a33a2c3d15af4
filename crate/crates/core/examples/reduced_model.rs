//! Trains every local space, assembles the block-sparse reduced model and checks it against
//! full solves across the sweep.

use edgerom::config::RunConfig;
use edgerom::experiments::Setup;
use edgerom::rom::{assemble_rom, full_solutions, rom_error_sweep, solve_rom};

fn main() -> edgerom::Result<()> {
    let cfg = RunConfig::default();
    let setup = Setup::new(&cfg, &cfg.old_geometry()?)?;
    let dec = setup.decomposition()?;
    let bases: Vec<_> = setup.train_all(&dec)?.into_iter().map(|(b, _)| b).collect();

    let sys = &setup.model.system;
    let rom = assemble_rom(&bases, sys)?;
    println!("reduced dimension {} (full {}), {} coupled block pairs", rom.dim(), sys.dim(), rom.assembled_pairs);

    let full = full_solutions(sys, &setup.xi)?;
    let sweep = rom_error_sweep(&rom, sys, &setup.xi, &full)?;
    for (f, e) in sweep.frequencies.iter().zip(&sweep.errors) {
        println!("{f:>8.2e} Hz  relative error {e:.2e}");
    }
    let sol = solve_rom(&rom, 2.0 * std::f64::consts::PI * 5e8)?;
    println!("pivot ratio at 500 MHz: {:.2e}", sol.pivot_ratio);
    Ok(())
}
