//! Solve the coupled space-time optimality system of the Graetz problem at
//! one parameter and compare the optimal cost with the uncontrolled one.

use ocp_rom::cases::{CaseConfig, DiscreteCase};
use ocp_rom::mesh::CaseId;
use ocp_rom::spacetime::{assemble_kkt, solve_kkt};

fn main() -> Result<(), ocp_rom::Error> {
    let mut config = CaseConfig::desk(CaseId::Graetz);
    config.nx = 30;
    config.ny = 10;
    let case = DiscreteCase::build(&config)?;
    println!(
        "Graetz: {} state dofs, {} control dofs, {} steps, {} coupled unknowns",
        case.n_state,
        case.n_control,
        config.n_steps,
        case.kkt_unknowns()
    );

    // showcase parameter: strong advection, shifted target, stretched domain
    let mu = vec![1.0 / 12.0, 2.0, 2.5];
    let sol = case.solve_fom(&mu)?;
    let j_opt = case.cost(&mu, &sol)?;

    // uncontrolled reference: same dynamics with the control frozen at zero
    let blocks = case.blocks(&mu)?;
    let tracking = case.tracking.evaluate(&mu)?;
    let forcing = case.forcing.evaluate(&mu)?;
    let kkt = assemble_kkt(&blocks, &case.grid, 1e12, &tracking, &forcing)?;
    let frozen = solve_kkt(&kkt)?;
    let j_uncontrolled = case.cost(&mu, &frozen)?;

    println!("optimal cost      J = {j_opt:.6e}");
    println!("uncontrolled cost J = {j_uncontrolled:.6e}");
    println!("reduction factor    = {:.2}", j_uncontrolled / j_opt);
    Ok(())
}
