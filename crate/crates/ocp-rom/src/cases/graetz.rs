//! Graetz flow with boundary control.
//!
//! Scalar advection-diffusion on a two-block channel: a unit inflow block
//! followed by a block stretched horizontally by `mu[2]`. The temperature
//! is fixed to one on the inflow boundary and the first-block walls,
//! controlled through Neumann boundary forcing on the stretched-block
//! walls, and observed on the outer strips of the stretched block, where
//! the desired value is the constant `mu[1]`. Diffusivity is `mu[0]`.
//!
//! The stretch is traced back to the reference mesh, which splits the
//! diffusion into per-axis terms with coefficients `mu[0]/mu[2]` and
//! `mu[0]*mu[2]`; the advection profile is invariant under the stretch, so
//! it contributes a single parameter-independent term.

use super::{CaseConfig, CaseStructure, DiscreteCase, OutputData, StateMetric};
use crate::affine::{AffineOperator, AffineVector, TermData, Theta, TimeProfile};
use crate::error::Result;
use crate::fem::{
    assemble_advection, assemble_boundary_mass, assemble_mass, assemble_stiffness,
    dirichlet_lifting, ElementOrder, FunctionSpace,
};
use crate::mesh::{build_structured_mesh, BoundaryTag, CaseId};
use crate::sparse::SparseOperator;
use std::sync::Arc;

/// Inflow velocity profile; depends on y only, so the horizontal stretch
/// leaves the pulled-back advection form unchanged.
pub fn velocity_profile(x: [f64; 2]) -> [f64; 2] {
    [x[1] * (1.0 - x[1]), 0.0]
}

fn gather(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| v[i]).collect()
}

pub fn build_graetz(config: &CaseConfig) -> Result<DiscreteCase> {
    let mesh = Arc::new(build_structured_mesh(CaseId::Graetz, config.nx, config.ny)?);
    let space = FunctionSpace::new(mesh.clone(), ElementOrder::P1, 1);
    let grid = config.grid();
    let dt = grid.dt();
    let n_full = space.n_dofs();
    let all: Vec<usize> = (0..n_full).collect();

    let one = |_: [f64; 2], _: usize| 1.0;
    let (lift, free) = dirichlet_lifting(&space, &[(BoundaryTag::GammaD, &one)], true)?;
    let control_nodes = space.boundary_nodes(BoundaryTag::GammaC);

    // parameter-independent building blocks on the reference mesh
    let sum = |a: &SparseOperator, b: &SparseOperator| {
        SparseOperator::linear_combination(&[(1.0, a), (1.0, b)])
    };
    let eye = [[1.0, 0.0], [0.0, 1.0]];
    let ex = [[1.0, 0.0], [0.0, 0.0]];
    let ey = [[0.0, 0.0], [0.0, 1.0]];
    let m1 = assemble_mass(&space, Some(1))?;
    let m23 = sum(&assemble_mass(&space, Some(2))?, &assemble_mass(&space, Some(3))?)?;
    let k1 = assemble_stiffness(&space, Some(1), eye)?;
    let kx23 = sum(
        &assemble_stiffness(&space, Some(2), ex)?,
        &assemble_stiffness(&space, Some(3), ex)?,
    )?;
    let ky23 = sum(
        &assemble_stiffness(&space, Some(2), ey)?,
        &assemble_stiffness(&space, Some(3), ey)?,
    )?;
    let adv = assemble_advection(&space, &velocity_profile, None)?;
    let mobs = assemble_mass(&space, Some(3))?;
    let mc = assemble_boundary_mass(&space, BoundaryTag::GammaC)?;

    let ff = |op: &SparseOperator| op.restrict(&free, &free);

    // state operator terms: diffusion (per-axis split on the stretched
    // blocks), advection, and the mass terms carrying the Jacobian
    let th_m23 = Theta::monomial(1.0, 2, 1);
    let state_terms = vec![
        (Theta::monomial(dt, 0, 1), &k1),
        (Theta::product(dt, (0, 1), (2, -1)), &kx23),
        (Theta::product(dt, (0, 1), (2, 1)), &ky23),
        (Theta::constant(dt), &adv),
    ];
    let mut diag_terms = vec![
        (Theta::constant(1.0), ff(&m1)),
        (th_m23.clone(), ff(&m23)),
    ];
    for (theta, op) in &state_terms {
        diag_terms.push((theta.clone(), ff(op)));
    }
    let diag = AffineOperator::new(diag_terms)?;
    let inertia = AffineOperator::new(vec![
        (Theta::constant(1.0), ff(&m1)),
        (th_m23.clone(), ff(&m23)),
    ])?;
    let obs = AffineOperator::new(vec![(th_m23.clone(), ff(&mobs))])?;
    let control_mass =
        AffineOperator::new(vec![(th_m23.clone(), mc.restrict(&control_nodes, &control_nodes))])?;
    let coupling =
        AffineOperator::new(vec![(th_m23.clone(), mc.restrict(&free, &control_nodes))])?;

    // the lift is constant in time, so the mass terms telescope away and
    // only the state operator contributes to the forcing
    let forcing_terms = state_terms
        .iter()
        .map(|(theta, op)| {
            let mut v = gather(&op.matvec(&lift), &free);
            for x in v.iter_mut() {
                *x = -*x;
            }
            (theta.clone(), TermData::Separable { profile: TimeProfile::Constant, vector: v })
        })
        .collect();
    let forcing = AffineVector::new(free.len(), grid.n_steps, forcing_terms)?;

    // tracking term dt*Obs*(mu2 - lift) restricted to free rows
    let ones = vec![1.0; n_full];
    let tracking = AffineVector::new(
        free.len(),
        grid.n_steps,
        vec![
            (
                Theta::product(dt, (1, 1), (2, 1)),
                TermData::Separable {
                    profile: TimeProfile::Constant,
                    vector: gather(&mobs.matvec(&ones), &free),
                },
            ),
            (
                Theta::monomial(-dt, 2, 1),
                TermData::Separable {
                    profile: TimeProfile::Constant,
                    vector: gather(&mobs.matvec(&lift), &free),
                },
            ),
        ],
    )?;

    // H1 gram at the reference geometry for compression and error norms
    let mass_ref = sum(&m1, &m23)?;
    let stiff_ref = sum(&sum(&k1, &kx23)?, &ky23)?;
    let state_metric = StateMetric::Single(ff(&sum(&mass_ref, &stiff_ref)?));
    let control_metric = mc.restrict(&control_nodes, &control_nodes);

    let output = OutputData {
        obs_full: AffineOperator::new(vec![(th_m23, mobs.restrict(&all, &all))])?,
        target_full: AffineVector::new(
            n_full,
            grid.n_steps,
            vec![(
                Theta::monomial(1.0, 1, 1),
                TermData::Separable { profile: TimeProfile::Constant, vector: ones },
            )],
        )?,
        lift,
        lift_profile: vec![1.0; grid.n_steps],
        free_map: free.clone(),
    };

    Ok(DiscreteCase {
        config: config.clone(),
        mesh,
        grid,
        structure: CaseStructure::Parabolic,
        n_state: free.len(),
        n_control: control_nodes.len(),
        diag,
        inertia,
        obs,
        control_mass,
        coupling,
        forcing,
        tracking,
        state_metric,
        control_metric,
        divergence: None,
        output,
    })
}
