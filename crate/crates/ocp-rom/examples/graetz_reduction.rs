//! Full offline/online pipeline on the Graetz boundary-control problem:
//! snapshots, aggregated POD spaces, Galerkin projection and an
//! error-versus-basis-size table at unseen parameters.

use ocp_rom::cases::{CaseConfig, DiscreteCase};
use ocp_rom::mesh::CaseId;
use ocp_rom::rom::{collect_snapshots, prepare_test_set, speedup_study};

fn main() -> Result<(), ocp_rom::Error> {
    let mut config = CaseConfig::desk(CaseId::Graetz);
    config.nx = 30;
    config.ny = 10;
    config.n_train = 12;
    config.n_basis = 8;
    let case = DiscreteCase::build(&config)?;
    let train_mu = config.sample_parameters(config.n_train, config.seed);
    let test_mu = config.sample_parameters_random(8, config.seed + 2);

    println!("offline: {} full-order solves...", train_mu.len());
    let train = collect_snapshots(&case, &train_mu)?;

    println!("{:>3} {:>12} {:>12} {:>12} {:>12} {:>9}",
        "N", "state", "control", "adjoint", "output", "speedup");
    let test = prepare_test_set(&case, &test_mu)?;
    for row in speedup_study(&case, &train, &test, &[2, 4, 6, 8])? {
        println!(
            "{:>3} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e} {:>8.0}x",
            row.n,
            row.errors.state,
            row.errors.control,
            row.errors.adjoint,
            row.errors.output,
            row.speedup
        );
    }
    Ok(())
}
