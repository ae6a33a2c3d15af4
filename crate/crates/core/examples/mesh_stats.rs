//! Builds the structured mesh of a geometry and reports edge, DOF and subdomain counts.
//!
//! ```text
//! cargo run --example mesh_stats -- 40 4
//! ```

use edgerom::decomposition::classify;
use edgerom::mesh::{assign_subdomains, mask_dofs, DisableReason, GeometrySpec, StructuredMesh};

fn main() -> edgerom::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(20, |s| s.parse().expect("mesh size"));
    let m: usize = args.next().map_or(4, |s| s.parse().expect("subdomain count"));

    let geo = GeometrySpec::preset_geometry1();
    let mesh = StructuredMesh::new(n, n, geo.domain)?;
    let dofs = mask_dofs(&mesh, &geo)?;
    let grid = assign_subdomains(&mesh, m, m)?;
    let cls = classify(&grid, &dofs);

    println!("mesh {n}x{n}: {} triangles, {} edges", mesh.n_triangles(), mesh.n_edges());
    println!(
        "active {} (dirichlet {}, pec {})",
        dofs.n_active(),
        dofs.count(DisableReason::Dirichlet),
        dofs.count(DisableReason::Pec)
    );
    println!("{} subdomains, {} interfaces", grid.n_subdomains(), grid.interfaces().len());
    let vol: usize = cls.volume.iter().map(Vec::len).sum();
    let seeds: usize = cls.seeds.iter().map(Vec::len).sum();
    println!("volume dofs {vol}, interface seeds {seeds}");
    Ok(())
}
