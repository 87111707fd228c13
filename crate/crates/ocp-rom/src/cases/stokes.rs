//! Lid-driven Stokes cavity with distributed control.
//!
//! Taylor-Hood (P2 velocity, P1 pressure) flow on a square cavity widened
//! horizontally by `mu[1]`, viscosity `mu[0]`. The lid drives the flow
//! through a pulsating inlet profile `(1 + cos(4 pi t - pi)/2, 0)`; the
//! control is a distributed body force over the whole domain, and the
//! target is the velocity of the uncontrolled cavity with a steady unit
//! lid at viscosity one. The pressure is fixed to zero mean through one
//! scalar multiplier per time step, so each per-step state vector is
//! `[velocity (free dofs); pressure; multiplier]`.

use super::{CaseConfig, CaseStructure, DiscreteCase, OutputData, StateMetric};
use crate::affine::{AffineOperator, AffineVector, TermData, Theta, TimeProfile};
use crate::error::Result;
use crate::fem::{
    assemble_divergence_component, assemble_functional, assemble_mass, assemble_stiffness,
    dirichlet_lifting, ElementOrder, FunctionSpace,
};
use crate::mesh::{build_structured_mesh, BoundaryTag, CaseId};
use crate::spacetime::{march_state, StepBlocks};
use crate::sparse::{SparseOperator, TripletBuilder};
use std::sync::Arc;

/// Time modulation of the lid velocity; equals 1/2 at t = 0.
pub fn lid_profile(t: f64) -> f64 {
    1.0 + 0.5 * (4.0 * std::f64::consts::PI * t - std::f64::consts::PI).cos()
}

fn gather(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| v[i]).collect()
}

fn embed_square(op: &SparseOperator, ro: usize, co: usize, n: usize) -> SparseOperator {
    let mut b = TripletBuilder::new();
    b.add_block(ro, co, 1.0, op);
    b.finish(n, n)
}

fn embed_vec(v: &[f64], offset: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    out[offset..offset + v.len()].copy_from_slice(v);
    out
}

pub fn build_stokes(config: &CaseConfig) -> Result<DiscreteCase> {
    let mesh = Arc::new(build_structured_mesh(CaseId::StokesCavity, config.nx, config.ny)?);
    let vel = FunctionSpace::new(mesh.clone(), ElementOrder::P2, 2);
    let pres = FunctionSpace::new(mesh.clone(), ElementOrder::P1, 1);
    let grid = config.grid();
    let dt = grid.dt();
    let n_vel_full = vel.n_dofs();
    let n_p = pres.n_dofs();

    let zero = |_: [f64; 2], _: usize| 0.0;
    let inlet = |_: [f64; 2], comp: usize| if comp == 0 { 1.0 } else { 0.0 };
    // homogeneous walls first: the lid corners stay sealed
    let (lift, free_v) =
        dirichlet_lifting(&vel, &[(BoundaryTag::GammaD, &zero), (BoundaryTag::GammaIn, &inlet)], true)?;
    let n_v = free_v.len();
    let n_state = n_v + n_p + 1;

    let ex = [[1.0, 0.0], [0.0, 0.0]];
    let ey = [[0.0, 0.0], [0.0, 1.0]];
    let mv = assemble_mass(&vel, None)?;
    let kx = assemble_stiffness(&vel, None, ex)?;
    let ky = assemble_stiffness(&vel, None, ey)?;
    let dx = assemble_divergence_component(&vel, &pres, 0)?;
    let dy = assemble_divergence_component(&vel, &pres, 1)?;
    let mp = assemble_mass(&pres, None)?;
    let w = assemble_functional(&pres, None, &|_, _| 1.0)?;

    let all_p: Vec<usize> = (0..n_p).collect();
    let mv_ff = mv.restrict(&free_v, &free_v);
    let kx_ff = kx.restrict(&free_v, &free_v);
    let ky_ff = ky.restrict(&free_v, &free_v);
    let dfx = dx.restrict(&all_p, &free_v);
    let dfy = dy.restrict(&all_p, &free_v);
    let w_block = {
        let mut b = TripletBuilder::new();
        for (i, &wi) in w.iter().enumerate() {
            b.push(n_v + i, n_v + n_p, wi);
            b.push(n_v + n_p, n_v + i, wi);
        }
        b.finish(n_state, n_state)
    };

    let th_mu2 = Theta::monomial(1.0, 1, 1);
    let diag = AffineOperator::new(vec![
        (th_mu2.clone(), embed_square(&mv_ff, 0, 0, n_state)),
        (Theta::product(dt, (0, 1), (1, -1)), embed_square(&kx_ff, 0, 0, n_state)),
        (Theta::product(dt, (0, 1), (1, 1)), embed_square(&ky_ff, 0, 0, n_state)),
        (Theta::constant(dt), embed_square(&dfx.transpose(), 0, n_v, n_state)),
        (Theta::monomial(dt, 1, 1), embed_square(&dfy.transpose(), 0, n_v, n_state)),
        (Theta::constant(1.0), embed_square(&dfx, n_v, 0, n_state)),
        (th_mu2.clone(), embed_square(&dfy, n_v, 0, n_state)),
        (th_mu2.clone(), w_block),
    ])?;
    let inertia =
        AffineOperator::new(vec![(th_mu2.clone(), embed_square(&mv_ff, 0, 0, n_state))])?;
    let obs = inertia.clone();
    let control_mass = AffineOperator::new(vec![(th_mu2.clone(), mv.clone())])?;
    let coupling = {
        let all_v: Vec<usize> = (0..n_vel_full).collect();
        let mut b = TripletBuilder::new();
        b.add_block(0, 0, 1.0, &mv.restrict(&free_v, &all_v));
        AffineOperator::new(vec![(th_mu2.clone(), b.finish(n_state, n_vel_full))])?
    };

    // lid modulation samples at the step times, and its increments with
    // tau(0) as the value carried by the initial state
    let tau: Vec<f64> = (1..=grid.n_steps).map(|k| lid_profile(grid.time(k))).collect();
    let mut dtau = tau.clone();
    for k in (1..dtau.len()).rev() {
        dtau[k] -= tau[k - 1];
    }
    dtau[0] -= lid_profile(0.0);

    let neg = |v: Vec<f64>| v.into_iter().map(|x| -x).collect::<Vec<f64>>();
    let mom = |op: &SparseOperator| embed_vec(&gather(&op.matvec(&lift), &free_v), 0, n_state);
    let cont = |op: &SparseOperator| embed_vec(&op.matvec(&lift), n_v, n_state);
    let forcing = AffineVector::new(
        n_state,
        grid.n_steps,
        vec![
            (
                th_mu2.clone(),
                TermData::Separable { profile: TimeProfile::Samples(dtau), vector: neg(mom(&mv)) },
            ),
            (
                Theta::product(dt, (0, 1), (1, -1)),
                TermData::Separable {
                    profile: TimeProfile::Samples(tau.clone()),
                    vector: neg(mom(&kx)),
                },
            ),
            (
                Theta::product(dt, (0, 1), (1, 1)),
                TermData::Separable {
                    profile: TimeProfile::Samples(tau.clone()),
                    vector: neg(mom(&ky)),
                },
            ),
            (
                Theta::constant(1.0),
                TermData::Separable {
                    profile: TimeProfile::Samples(tau.clone()),
                    vector: neg(cont(&dx)),
                },
            ),
            (
                th_mu2.clone(),
                TermData::Separable {
                    profile: TimeProfile::Samples(tau.clone()),
                    vector: neg(cont(&dy)),
                },
            ),
        ],
    )?;

    // target: uncontrolled cavity at viscosity one with a steady unit lid,
    // marched on the reference geometry
    let target_full = {
        let blocks0 = StepBlocks {
            diag: diag.evaluate(&[1.0, 1.0])?,
            inertia: inertia.evaluate(&[1.0, 1.0])?,
            obs: obs.evaluate(&[1.0, 1.0])?,
            control_mass: SparseOperator::identity(1),
            coupling: SparseOperator::zeros(n_state, 1),
        };
        let ksum = SparseOperator::linear_combination(&[(1.0, &kx), (1.0, &ky)])?;
        let dsum = SparseOperator::linear_combination(&[(1.0, &dx), (1.0, &dy)])?;
        let mut g_step = neg(mom(&ksum));
        for v in g_step.iter_mut() {
            *v *= dt;
        }
        let g_cont = neg(cont(&dsum));
        for (a, b) in g_step.iter_mut().zip(&g_cont) {
            *a += b;
        }
        let g = vec![g_step; grid.n_steps];
        let zero_u = vec![vec![0.0; 1]; grid.n_steps];
        let y0 = vec![0.0; n_state];
        let states = march_state(&blocks0, &grid, &y0, &g, &zero_u)?;
        states
            .iter()
            .map(|s| {
                let mut full = lift.clone();
                for (i, &dof) in free_v.iter().enumerate() {
                    full[dof] += s[i];
                }
                full
            })
            .collect::<Vec<_>>()
    };

    let mv_lift = mom(&mv);
    let tracking = AffineVector::new(
        n_state,
        grid.n_steps,
        vec![
            (
                Theta::monomial(dt, 1, 1),
                TermData::Trajectory(
                    target_full
                        .iter()
                        .map(|yd| embed_vec(&gather(&mv.matvec(yd), &free_v), 0, n_state))
                        .collect(),
                ),
            ),
            (
                Theta::monomial(-dt, 1, 1),
                TermData::Separable { profile: TimeProfile::Samples(tau.clone()), vector: mv_lift },
            ),
        ],
    )?;

    let h1_v = SparseOperator::linear_combination(&[(1.0, &mv_ff), (1.0, &kx_ff), (1.0, &ky_ff)])?;
    let state_metric = StateMetric::Split { velocity: h1_v, pressure: mp };
    let divergence = Some(AffineOperator::new(vec![
        (Theta::constant(1.0), dfx),
        (th_mu2.clone(), dfy),
    ])?);

    let output = OutputData {
        obs_full: AffineOperator::new(vec![(th_mu2, mv.clone())])?,
        target_full: AffineVector::new(
            n_vel_full,
            grid.n_steps,
            vec![(Theta::constant(1.0), TermData::Trajectory(target_full))],
        )?,
        lift,
        lift_profile: tau,
        free_map: free_v,
    };

    Ok(DiscreteCase {
        config: config.clone(),
        mesh,
        grid,
        structure: CaseStructure::Saddle { n_velocity: n_v, n_pressure: n_p },
        n_state,
        n_control: n_vel_full,
        diag,
        inertia,
        obs,
        control_mass,
        coupling,
        forcing,
        tracking,
        state_metric,
        control_metric: mv,
        divergence,
        output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_config() -> CaseConfig {
        CaseConfig {
            nx: 6,
            ny: 6,
            n_train: 4,
            n_basis: 2,
            n_test: 2,
            ..CaseConfig::desk(CaseId::StokesCavity)
        }
    }

    #[test]
    fn affine_matches_deformed_assembly() {
        let config = small_config();
        let case = build_stokes(&config).unwrap();
        let mu = [0.01, 1.5];
        let dt = case.grid.dt();
        let (n_v, n_p) = match case.structure {
            CaseStructure::Saddle { n_velocity, n_pressure } => (n_velocity, n_pressure),
            _ => unreachable!(),
        };

        let maps = crate::mesh::subdomain_maps(CaseId::StokesCavity, &mu).unwrap();
        let dmesh = Arc::new(case.mesh.deformed(&maps));
        let vel = FunctionSpace::new(dmesh.clone(), ElementOrder::P2, 2);
        let pres = FunctionSpace::new(dmesh, ElementOrder::P1, 1);
        let zero = |_: [f64; 2], _: usize| 0.0;
        let inlet = |_: [f64; 2], comp: usize| if comp == 0 { 1.0 } else { 0.0 };
        let (_, free_v) =
            dirichlet_lifting(&vel, &[(BoundaryTag::GammaD, &zero), (BoundaryTag::GammaIn, &inlet)], true)
                .unwrap();
        let eye = [[1.0, 0.0], [0.0, 1.0]];
        let all_p: Vec<usize> = (0..pres.n_dofs()).collect();
        let mv_d = assemble_mass(&vel, None).unwrap().restrict(&free_v, &free_v);
        let kv_d = assemble_stiffness(&vel, None, eye).unwrap().restrict(&free_v, &free_v);
        let dx_d = assemble_divergence_component(&vel, &pres, 0).unwrap();
        let dy_d = assemble_divergence_component(&vel, &pres, 1).unwrap();
        let d_d = SparseOperator::linear_combination(&[(1.0, &dx_d), (1.0, &dy_d)])
            .unwrap()
            .restrict(&all_p, &free_v);
        let w_d = assemble_functional(&pres, None, &|_, _| 1.0).unwrap();

        let n_state = case.n_state;
        let mut b = TripletBuilder::new();
        b.add_block(0, 0, 1.0, &mv_d);
        b.add_block(0, 0, dt * mu[0], &kv_d);
        b.add_block(0, n_v, dt, &d_d.transpose());
        b.add_block(n_v, 0, 1.0, &d_d);
        for (i, &wi) in w_d.iter().enumerate() {
            b.push(n_v + i, n_v + n_p, wi);
            b.push(n_v + n_p, n_v + i, wi);
        }
        let e_d = b.finish(n_state, n_state);
        let e_affine = case.diag.evaluate(&mu).unwrap();
        let diff = SparseOperator::linear_combination(&[(1.0, &e_affine), (-1.0, &e_d)]).unwrap();
        assert!(diff.norm_max() < 1e-11, "state operator mismatch {}", diff.norm_max());
    }

    #[test]
    fn target_is_divergence_free_with_unit_lid() {
        let config = small_config();
        let case = build_stokes(&config).unwrap();
        let vel = FunctionSpace::new(case.mesh.clone(), ElementOrder::P2, 2);
        let pres = FunctionSpace::new(case.mesh.clone(), ElementOrder::P1, 1);
        let dx = assemble_divergence_component(&vel, &pres, 0).unwrap();
        let dy = assemble_divergence_component(&vel, &pres, 1).unwrap();
        let d = SparseOperator::linear_combination(&[(1.0, &dx), (1.0, &dy)]).unwrap();
        let target = case.output.target_full.evaluate(&config.reference_mu).unwrap();
        let lid_interior: Vec<usize> = vel
            .boundary_nodes(BoundaryTag::GammaIn)
            .into_iter()
            .filter(|&nd| {
                let x = vel.node_coords[nd][0];
                x > 1e-12 && x < 1.0 - 1e-12
            })
            .collect();
        for vk in &target {
            // continuity holds weakly up to the mean constraint; project
            // out the multiplier contribution by checking the mean-free part
            let dv = d.matvec(vk);
            let w = assemble_functional(&pres, None, &|_, _| 1.0).unwrap();
            let lam = dv.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
                / w.iter().map(|b| b * b).sum::<f64>();
            for (i, v) in dv.iter().enumerate() {
                assert!((v - lam * w[i]).abs() < 1e-9, "divergence residual {v}");
            }
            for &nd in &lid_interior {
                assert_relative_eq!(vk[vel.dof(0, nd)], 1.0, epsilon = 1e-12);
                assert_relative_eq!(vk[vel.dof(1, nd)], 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn fom_pressure_means_vanish() {
        let config = small_config();
        let case = build_stokes(&config).unwrap();
        let mu = [0.02, 2.0];
        let sol = case.solve_fom(&mu).unwrap();
        let (n_v, n_p) = match case.structure {
            CaseStructure::Saddle { n_velocity, n_pressure } => (n_velocity, n_pressure),
            _ => unreachable!(),
        };
        let pres = FunctionSpace::new(case.mesh.clone(), ElementOrder::P1, 1);
        let w = assemble_functional(&pres, None, &|_, _| 1.0).unwrap();
        for k in 0..case.grid.n_steps {
            let p_mean: f64 = sol.state[k][n_v..n_v + n_p]
                .iter()
                .zip(&w)
                .map(|(p, wi)| p * wi)
                .sum();
            let xi_mean: f64 = sol.adjoint[k][n_v..n_v + n_p]
                .iter()
                .zip(&w)
                .map(|(p, wi)| p * wi)
                .sum();
            assert!(p_mean.abs() < 1e-9, "pressure mean {p_mean:.3e} at step {k}");
            assert!(xi_mean.abs() < 1e-9, "adjoint pressure mean {xi_mean:.3e} at step {k}");
        }
    }

    #[test]
    fn optimal_cost_below_uncontrolled() {
        let config = small_config();
        let case = build_stokes(&config).unwrap();
        let mu = [0.05, 0.8];
        let sol = case.solve_fom(&mu).unwrap();
        let j_opt = case.cost(&mu, &sol).unwrap();
        let blocks = case.blocks(&mu).unwrap();
        let zero_u = vec![vec![0.0; case.n_control]; case.grid.n_steps];
        let g = case.forcing.evaluate(&mu).unwrap();
        let y0 = vec![0.0; case.n_state];
        let state = march_state(&blocks, &case.grid, &y0, &g, &zero_u).unwrap();
        let uncontrolled = crate::spacetime::SpaceTimeSolution {
            state,
            control: zero_u,
            adjoint: vec![vec![0.0; case.n_state]; case.grid.n_steps],
        };
        let j_zero = case.cost(&mu, &uncontrolled).unwrap();
        assert!(j_opt < j_zero, "optimal {j_opt} vs uncontrolled {j_zero}");
    }
}
