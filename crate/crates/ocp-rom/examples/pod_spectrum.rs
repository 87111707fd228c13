//! Collect full-order training trajectories for the Graetz problem and
//! print the decay of the snapshot-correlation eigenvalues, which governs
//! how fast the reduced spaces converge.

use ocp_rom::cases::{CaseConfig, DiscreteCase};
use ocp_rom::mesh::CaseId;
use ocp_rom::pod::{compute_pod_basis, InnerProduct};
use ocp_rom::rom::collect_snapshots;

fn main() -> Result<(), ocp_rom::Error> {
    let mut config = CaseConfig::desk(CaseId::Graetz);
    config.nx = 20;
    config.ny = 5;
    config.n_train = 10;
    let case = DiscreteCase::build(&config)?;
    let params = config.sample_parameters(config.n_train, config.seed);
    println!("solving {} training systems...", params.len());
    let train = collect_snapshots(&case, &params)?;

    let gram = match &case.state_metric {
        ocp_rom::cases::StateMetric::Single(g) => g.clone(),
        _ => unreachable!("Graetz is parabolic"),
    };
    let ip = InnerProduct::new(gram, case.grid.dt())?;
    let pod = compute_pod_basis(&train.state, &ip, config.n_train)?;
    println!("state correlation spectrum (normalized):");
    let top = pod.eigenvalues[0];
    for (i, ev) in pod.eigenvalues.iter().enumerate() {
        println!("  lambda_{:<2} = {:.3e}", i + 1, ev / top);
    }
    println!("mean full-order solve: {:.3} s", train.mean_fom_seconds);
    Ok(())
}
