//! Build the two reference meshes, report their subdomain structure and
//! show how the per-subdomain affine maps deform the geometry.

use ocp_rom::mesh::{build_structured_mesh, subdomain_maps, CaseId};

fn main() -> Result<(), ocp_rom::Error> {
    for case in [CaseId::Graetz, CaseId::StokesCavity] {
        let (nx, ny) = match case {
            CaseId::Graetz => (20, 5),
            CaseId::StokesCavity => (8, 8),
        };
        let mesh = build_structured_mesh(case, nx, ny)?;
        println!("== {} reference mesh ==", case.name());
        println!("   {} vertices, {} triangles", mesh.n_vertices(), mesh.n_triangles());
        for id in mesh.subdomain_ids() {
            println!("   subdomain {id}: area {:.4}", mesh.subdomain_area(id));
        }

        // deform to an off-reference parameter and compare areas
        let mu = match case {
            CaseId::Graetz => vec![0.1, 2.0, 2.5],
            CaseId::StokesCavity => vec![0.05, 1.8],
        };
        let maps = subdomain_maps(case, &mu)?;
        let deformed = mesh.deformed(&maps);
        println!("   deformed at mu = {mu:?}: total area {:.4} (reference {:.4})",
            deformed.area(), mesh.area());
    }
    Ok(())
}
