//! Reduced-order pipeline: snapshot collection, aggregated space-time
//! bases, Galerkin projection of the all-at-once optimality system and the
//! online solver with its error and speedup studies.
//!
//! State and adjoint share one aggregated basis so the reduced
//! saddle-point system stays well posed; for the Stokes case the velocity
//! block is additionally enriched with pressure supremizers. All reduced
//! operators are precomputed per affine term, so an online solve touches
//! nothing whose size depends on the mesh or the step count.

use crate::affine::{TermData, Theta};
use crate::cases::{CaseStructure, DiscreteCase, StateMetric};
use crate::error::{Error, Result};
use crate::pod::{compute_pod_basis, orthonormalize, InnerProduct, SnapshotSet};
use crate::spacetime::SpaceTimeSolution;
use crate::sparse::{SparseLu, SparseOperator};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::time::Instant;

/// Full-order training solves and their wall time.
pub struct TrainingData {
    pub parameters: Vec<Vec<f64>>,
    pub state: SnapshotSet,
    pub adjoint: SnapshotSet,
    pub control: SnapshotSet,
    /// Mean wall seconds of one full-order solve.
    pub mean_fom_seconds: f64,
}

/// Solve the full-order system at every training parameter in parallel.
pub fn collect_snapshots(case: &DiscreteCase, params: &[Vec<f64>]) -> Result<TrainingData> {
    let k = case.grid.n_steps;
    let solves: Vec<(SpaceTimeSolution, f64)> = params
        .par_iter()
        .map(|mu| {
            let t0 = Instant::now();
            let sol = case.solve_fom(mu)?;
            Ok((sol, t0.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;
    let mut state = SnapshotSet::new(case.n_state, k);
    let mut adjoint = SnapshotSet::new(case.n_state, k);
    let mut control = SnapshotSet::new(case.n_control, k);
    let mut total = 0.0;
    for (mu, (sol, secs)) in params.iter().zip(&solves) {
        state.push_steps(mu, &sol.state)?;
        adjoint.push_steps(mu, &sol.adjoint)?;
        control.push_steps(mu, &sol.control)?;
        total += secs;
    }
    Ok(TrainingData {
        parameters: params.to_vec(),
        state,
        adjoint,
        control,
        mean_fom_seconds: total / params.len().max(1) as f64,
    })
}

/// Aggregated space-time bases over the state and control spaces.
pub struct ReducedBasis {
    pub n_basis: usize,
    /// Columns over the per-step state space, flattened step-major;
    /// aggregated state + adjoint (and supremizer/pressure blocks for the
    /// saddle case). Used for both the state and the adjoint variable.
    pub state_cols: Vec<Vec<f64>>,
    pub control_cols: Vec<Vec<f64>>,
    /// Saddle case only: the velocity and pressure sub-bases making up
    /// `state_cols`, kept for inf-sup diagnostics.
    pub velocity_block: Option<Vec<Vec<f64>>>,
    pub pressure_block: Option<Vec<Vec<f64>>>,
    /// Correlation eigenvalues of the primal state family (diagnostics).
    pub state_eigenvalues: Vec<f64>,
}

fn extract_rows(set: &SnapshotSet, offset: usize, count: usize) -> SnapshotSet {
    let mut out = SnapshotSet::new(count, set.n_steps);
    for (mu, snap) in set.parameters.iter().zip(&set.data) {
        let sub: Vec<f64> = (0..set.n_steps)
            .flat_map(|k| {
                let base = k * set.n_space + offset;
                snap[base..base + count].iter().copied()
            })
            .collect();
        out.push(mu, sub).expect("consistent sub-snapshot");
    }
    out
}

fn embed_cols(cols: &[Vec<f64>], offset: usize, count: usize, n_state: usize, k: usize) -> Vec<Vec<f64>> {
    cols.iter()
        .map(|col| {
            let mut out = vec![0.0; k * n_state];
            for step in 0..k {
                out[step * n_state + offset..step * n_state + offset + count]
                    .copy_from_slice(&col[step * count..(step + 1) * count]);
            }
            out
        })
        .collect()
}

/// Per-step supremizer solves `Xv t_k = D(mu)' q_k` for every pressure
/// trajectory of `set`.
fn supremizer_snapshots(
    case: &DiscreteCase,
    xv: &SparseLu,
    set: &SnapshotSet,
) -> Result<SnapshotSet> {
    let div = case.divergence.as_ref().expect("saddle case has a divergence family");
    let n_v = div.shape().1;
    let mut out = SnapshotSet::new(n_v, set.n_steps);
    for (mu, snap) in set.parameters.iter().zip(&set.data) {
        let dt_op = div.evaluate(mu)?.transpose();
        let mut traj = Vec::with_capacity(set.n_steps * n_v);
        for k in 0..set.n_steps {
            let q = &snap[k * set.n_space..(k + 1) * set.n_space];
            traj.extend(xv.solve(&dt_op.matvec(q)));
        }
        out.push(mu, traj)?;
    }
    Ok(out)
}

/// Build the aggregated bases. `enrich` adds supremizers to the velocity
/// block of saddle cases (required for a stable reduced system; switching
/// it off exists for diagnostics only).
/// Rescale every snapshot to unit space-time norm. This balances the POD
/// energy between large- and small-magnitude trajectories, so parameters
/// with weak forcing are represented as well as dominant ones.
fn unit_scaled(set: &SnapshotSet, ip: &InnerProduct) -> SnapshotSet {
    let mut out = set.clone();
    for snap in &mut out.data {
        let norm = ip.norm(snap);
        if norm > 0.0 {
            snap.iter_mut().for_each(|v| *v /= norm);
        }
    }
    out
}

pub fn build_reduced_basis(
    case: &DiscreteCase,
    train: &TrainingData,
    n: usize,
    enrich: bool,
) -> Result<ReducedBasis> {
    let dt = case.grid.dt();
    let k = case.grid.n_steps;
    let ip_u = InnerProduct::new(case.control_metric.clone(), dt)?;
    let pod_u = compute_pod_basis(&unit_scaled(&train.control, &ip_u), &ip_u, n)?;

    match (&case.structure, &case.state_metric) {
        (CaseStructure::Parabolic, StateMetric::Single(gram)) => {
            let ip = InnerProduct::new(gram.clone(), dt)?;
            let pod_y = compute_pod_basis(&unit_scaled(&train.state, &ip), &ip, n)?;
            let pod_p = compute_pod_basis(&unit_scaled(&train.adjoint, &ip), &ip, n)?;
            let mut agg = pod_y.columns.clone();
            agg.extend(pod_p.columns.clone());
            let state_cols = orthonormalize(&agg, &ip, 1e-10)?;
            Ok(ReducedBasis {
                n_basis: n,
                state_cols,
                control_cols: pod_u.columns,
                velocity_block: None,
                pressure_block: None,
                state_eigenvalues: pod_y.eigenvalues,
            })
        }
        (CaseStructure::Saddle { n_velocity, n_pressure }, StateMetric::Split { velocity, pressure }) => {
            let (n_v, n_p) = (*n_velocity, *n_pressure);
            let ip_v = InnerProduct::new(velocity.clone(), dt)?;
            let ip_p = InnerProduct::new(pressure.clone(), dt)?;

            let vel_y = extract_rows(&train.state, 0, n_v);
            let vel_p = extract_rows(&train.adjoint, 0, n_v);
            let pres_y = extract_rows(&train.state, n_v, n_p);
            let pres_p = extract_rows(&train.adjoint, n_v, n_p);

            let pod_vy = compute_pod_basis(&unit_scaled(&vel_y, &ip_v), &ip_v, n)?;
            let pod_vp = compute_pod_basis(&unit_scaled(&vel_p, &ip_v), &ip_v, n)?;
            let pod_py = compute_pod_basis(&unit_scaled(&pres_y, &ip_p), &ip_p, n)?;
            let pod_pp = compute_pod_basis(&unit_scaled(&pres_p, &ip_p), &ip_p, n)?;

            let mut vel_agg = pod_vy.columns.clone();
            vel_agg.extend(pod_vp.columns);
            if enrich {
                let xv = SparseLu::factor(velocity)?;
                let sup_y = supremizer_snapshots(case, &xv, &pres_y)?;
                let sup_p = supremizer_snapshots(case, &xv, &pres_p)?;
                let sup_y = compute_pod_basis(&unit_scaled(&sup_y, &ip_v), &ip_v, n)?;
                let sup_p = compute_pod_basis(&unit_scaled(&sup_p, &ip_v), &ip_v, n)?;
                vel_agg.extend(sup_y.columns);
                vel_agg.extend(sup_p.columns);
            }
            let velocity_block = orthonormalize(&vel_agg, &ip_v, 1e-10)?;
            let mut pres_agg = pod_py.columns.clone();
            pres_agg.extend(pod_pp.columns);
            let pressure_block = orthonormalize(&pres_agg, &ip_p, 1e-10)?;

            let mut state_cols = embed_cols(&velocity_block, 0, n_v, case.n_state, k);
            state_cols.extend(embed_cols(&pressure_block, n_v, n_p, case.n_state, k));
            Ok(ReducedBasis {
                n_basis: n,
                state_cols,
                control_cols: pod_u.columns,
                velocity_block: Some(velocity_block),
                pressure_block: Some(pressure_block),
                state_eigenvalues: pod_vy.eigenvalues,
            })
        }
        _ => Err(Error::ShapeMismatch("case structure and metric disagree".into())),
    }
}

/// Per-step dense views of a space-time basis.
fn step_matrices(cols: &[Vec<f64>], n_space: usize, k: usize) -> Vec<DMatrix<f64>> {
    (0..k)
        .map(|step| {
            let mut m = DMatrix::zeros(n_space, cols.len());
            for (j, col) in cols.iter().enumerate() {
                for i in 0..n_space {
                    m[(i, j)] = col[step * n_space + i];
                }
            }
            m
        })
        .collect()
}

/// All dense reduced operators, one per affine term.
pub struct ReducedModel {
    pub n_z: usize,
    pub n_u: usize,
    pub alpha: f64,
    /// `Z' blockdiag(dt obs_q) Z`
    pub obs: Vec<(Theta, DMatrix<f64>)>,
    /// `Z' Kst_q Z`: per-step diagonal terms plus subdiagonal inertia terms
    pub dynamics: Vec<(Theta, DMatrix<f64>)>,
    /// `Z' blockdiag(dt C_q) U`
    pub coupling: Vec<(Theta, DMatrix<f64>)>,
    /// `U' blockdiag(dt Mu_q) U` (control penalty applied at solve time)
    pub control: Vec<(Theta, DMatrix<f64>)>,
    pub tracking: Vec<(Theta, DVector<f64>)>,
    pub forcing: Vec<(Theta, DVector<f64>)>,
}

/// Project every affine family onto the reduced bases.
pub fn galerkin_project(case: &DiscreteCase, basis: &ReducedBasis) -> Result<ReducedModel> {
    let k = case.grid.n_steps;
    let dt = case.grid.dt();
    let z_steps = step_matrices(&basis.state_cols, case.n_state, k);
    let u_steps = step_matrices(&basis.control_cols, case.n_control, k);
    let n_z = basis.state_cols.len();
    let n_u = basis.control_cols.len();

    let project_blockdiag = |op: &SparseOperator, scale: f64| {
        let mut r = DMatrix::zeros(n_z, n_z);
        for zk in &z_steps {
            r += zk.transpose() * op.matmat(zk) * scale;
        }
        r
    };

    let obs = case
        .obs
        .terms
        .iter()
        .map(|(theta, op)| (theta.clone(), project_blockdiag(op, dt)))
        .collect();

    let mut dynamics: Vec<(Theta, DMatrix<f64>)> = case
        .diag
        .terms
        .iter()
        .map(|(theta, op)| (theta.clone(), project_blockdiag(op, 1.0)))
        .collect();
    for (theta, op) in &case.inertia.terms {
        let mut r = DMatrix::zeros(n_z, n_z);
        for step in 1..k {
            r -= z_steps[step].transpose() * op.matmat(&z_steps[step - 1]);
        }
        dynamics.push((theta.clone(), r));
    }

    let coupling = case
        .coupling
        .terms
        .iter()
        .map(|(theta, op)| {
            let mut r = DMatrix::zeros(n_z, n_u);
            for (zk, uk) in z_steps.iter().zip(&u_steps) {
                r += zk.transpose() * op.matmat(uk) * dt;
            }
            (theta.clone(), r)
        })
        .collect();

    let control = case
        .control_mass
        .terms
        .iter()
        .map(|(theta, op)| {
            let mut r = DMatrix::zeros(n_u, n_u);
            for uk in &u_steps {
                r += uk.transpose() * op.matmat(uk) * dt;
            }
            (theta.clone(), r)
        })
        .collect();

    let project_rhs = |terms: &[(Theta, TermData)], steps: &[DMatrix<f64>], dim: usize| {
        terms
            .iter()
            .map(|(theta, data)| {
                let mut r = DVector::zeros(dim);
                for (step, zk) in steps.iter().enumerate() {
                    let (b, w) = data.step(step);
                    if w != 0.0 {
                        r += zk.transpose() * DVector::from_column_slice(b) * w;
                    }
                }
                (theta.clone(), r)
            })
            .collect::<Vec<_>>()
    };
    let tracking = project_rhs(&case.tracking.terms, &z_steps, n_z);
    let forcing = project_rhs(&case.forcing.terms, &z_steps, n_z);

    Ok(ReducedModel {
        n_z,
        n_u,
        alpha: case.config.alpha,
        obs,
        dynamics,
        coupling,
        control,
        tracking,
        forcing,
    })
}

fn eval_terms_mat(terms: &[(Theta, DMatrix<f64>)], mu: &[f64]) -> Result<DMatrix<f64>> {
    let (r, c) = terms[0].1.shape();
    let mut out = DMatrix::zeros(r, c);
    for (theta, m) in terms {
        out += m * theta.eval(mu)?;
    }
    Ok(out)
}

fn eval_terms_vec(terms: &[(Theta, DVector<f64>)], mu: &[f64]) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(terms[0].1.len());
    for (theta, v) in terms {
        out += v * theta.eval(mu)?;
    }
    Ok(out)
}

/// Reduced trajectory coefficients.
pub struct ReducedSolution {
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
}

impl ReducedModel {
    /// Dense reduced saddle-point system at one parameter.
    pub fn assemble(&self, mu: &[f64]) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let (z, u) = (self.n_z, self.n_u);
        let total = 2 * z + u;
        let obs = eval_terms_mat(&self.obs, mu)?;
        let dyn_red = eval_terms_mat(&self.dynamics, mu)?;
        let coup = eval_terms_mat(&self.coupling, mu)?;
        let ctrl = eval_terms_mat(&self.control, mu)? * self.alpha;
        let mut kkt = DMatrix::zeros(total, total);
        kkt.view_mut((0, 0), (z, z)).copy_from(&obs);
        kkt.view_mut((z, z), (u, u)).copy_from(&ctrl);
        kkt.view_mut((0, z + u), (z, z)).copy_from(&dyn_red.transpose());
        kkt.view_mut((z + u, 0), (z, z)).copy_from(&dyn_red);
        kkt.view_mut((z, z + u), (u, z)).copy_from(&(-coup.transpose()));
        kkt.view_mut((z + u, z), (z, u)).copy_from(&(-coup));
        let mut rhs = DVector::zeros(total);
        rhs.rows_mut(0, z).copy_from(&eval_terms_vec(&self.tracking, mu)?);
        rhs.rows_mut(z + u, z).copy_from(&eval_terms_vec(&self.forcing, mu)?);
        Ok((kkt, rhs))
    }

    /// Dense solve with partial pivoting.
    pub fn solve_online(&self, mu: &[f64]) -> Result<ReducedSolution> {
        let (kkt, rhs) = self.assemble(mu)?;
        let x = kkt
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::SingularFactorization("reduced saddle-point system".into()))?;
        let (z, u) = (self.n_z, self.n_u);
        Ok(ReducedSolution {
            y: x.rows(0, z).iter().copied().collect(),
            u: x.rows(z, u).iter().copied().collect(),
            p: x.rows(z + u, z).iter().copied().collect(),
        })
    }
}

/// Expand reduced coefficients into per-step trajectories.
pub fn reconstruct(
    case: &DiscreteCase,
    basis: &ReducedBasis,
    red: &ReducedSolution,
) -> SpaceTimeSolution {
    let k = case.grid.n_steps;
    let expand = |cols: &[Vec<f64>], coeffs: &[f64], n: usize| -> Vec<Vec<f64>> {
        let mut steps = vec![vec![0.0; n]; k];
        for (col, &a) in cols.iter().zip(coeffs) {
            for (step, out) in steps.iter_mut().enumerate() {
                for (o, v) in out.iter_mut().zip(&col[step * n..(step + 1) * n]) {
                    *o += a * v;
                }
            }
        }
        steps
    };
    SpaceTimeSolution {
        state: expand(&basis.state_cols, &red.y, case.n_state),
        control: expand(&basis.control_cols, &red.u, case.n_control),
        adjoint: expand(&basis.state_cols, &red.p, case.n_state),
    }
}

/// Smallest singular value of the reduced divergence block at `mu`
/// (saddle cases). Positive values certify reduced inf-sup stability.
pub fn reduced_divergence_min_sv(
    case: &DiscreteCase,
    basis: &ReducedBasis,
    mu: &[f64],
) -> Result<f64> {
    let div = case
        .divergence
        .as_ref()
        .ok_or_else(|| Error::ShapeMismatch("divergence diagnostics need a saddle case".into()))?
        .evaluate(mu)?;
    let vel = basis.velocity_block.as_ref().expect("saddle basis");
    let pres = basis.pressure_block.as_ref().expect("saddle basis");
    let (n_p, n_v) = div.shape();
    let k = case.grid.n_steps;
    let v_steps = step_matrices(vel, n_v, k);
    let p_steps = step_matrices(pres, n_p, k);
    let mut b = DMatrix::zeros(pres.len(), vel.len());
    for (pk, vk) in p_steps.iter().zip(&v_steps) {
        b += pk.transpose() * div.matmat(vk);
    }
    let svd = b.svd(false, false);
    Ok(svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Errors of one reduced solve against the full order model. Field errors
/// are squared relative space-time norms (`‖e‖²_X / ‖x‖²_X`, H¹ in space
/// for state and adjoint, L² for control and pressure); the output error
/// is the plain relative gap of the cost functional.
#[derive(Debug, Clone, Copy)]
pub struct ErrorSample {
    /// Squared relative state error (velocity block for saddle problems).
    pub state: f64,
    /// Squared relative pressure error; equals `state` for single-field problems.
    pub pressure: f64,
    pub control: f64,
    pub adjoint: f64,
    pub output: f64,
}

fn spacetime_rel_err(
    ip: &InnerProduct,
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    offset: usize,
    count: usize,
) -> f64 {
    let flat = |steps: &[Vec<f64>]| -> Vec<f64> {
        steps.iter().flat_map(|s| s[offset..offset + count].to_vec()).collect()
    };
    let fa = flat(a);
    let fb = flat(b);
    let diff: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x - y).collect();
    let ratio = ip.norm(&diff) / ip.norm(&fa).max(1e-300);
    ratio * ratio
}

/// Full-order test solutions, computed once and reused across basis sizes.
pub struct TestSet {
    pub parameters: Vec<Vec<f64>>,
    pub solutions: Vec<SpaceTimeSolution>,
}

/// Solve the full-order problem at every test parameter in parallel.
pub fn prepare_test_set(case: &DiscreteCase, params: &[Vec<f64>]) -> Result<TestSet> {
    let solutions = params.par_iter().map(|mu| case.solve_fom(mu)).collect::<Result<_>>()?;
    Ok(TestSet { parameters: params.to_vec(), solutions })
}

/// Compare ROM and FOM at one parameter.
pub fn compare_at(
    case: &DiscreteCase,
    basis: &ReducedBasis,
    model: &ReducedModel,
    mu: &[f64],
) -> Result<ErrorSample> {
    let fom = case.solve_fom(mu)?;
    compare_against(case, basis, model, mu, &fom)
}

/// Compare ROM against a precomputed full-order solution.
pub fn compare_against(
    case: &DiscreteCase,
    basis: &ReducedBasis,
    model: &ReducedModel,
    mu: &[f64],
    fom: &SpaceTimeSolution,
) -> Result<ErrorSample> {
    let red = model.solve_online(mu)?;
    let rom = reconstruct(case, basis, &red);
    let dt = case.grid.dt();
    let ip_u = InnerProduct::new(case.control_metric.clone(), dt)?;
    let (state, pressure, adjoint) = match (&case.structure, &case.state_metric) {
        (CaseStructure::Parabolic, StateMetric::Single(gram)) => {
            let ip = InnerProduct::new(gram.clone(), dt)?;
            let state = spacetime_rel_err(&ip, &fom.state, &rom.state, 0, case.n_state);
            let adjoint = spacetime_rel_err(&ip, &fom.adjoint, &rom.adjoint, 0, case.n_state);
            (state, state, adjoint)
        }
        (
            CaseStructure::Saddle { n_velocity, n_pressure },
            StateMetric::Split { velocity, pressure },
        ) => {
            let ip_v = InnerProduct::new(velocity.clone(), dt)?;
            let ip_p = InnerProduct::new(pressure.clone(), dt)?;
            (
                spacetime_rel_err(&ip_v, &fom.state, &rom.state, 0, *n_velocity),
                spacetime_rel_err(&ip_p, &fom.state, &rom.state, *n_velocity, *n_pressure),
                spacetime_rel_err(&ip_v, &fom.adjoint, &rom.adjoint, 0, *n_velocity),
            )
        }
        _ => return Err(Error::ShapeMismatch("case structure and metric disagree".into())),
    };
    let control = spacetime_rel_err(&ip_u, &fom.control, &rom.control, 0, case.n_control);
    let j_fom = case.cost(mu, fom)?;
    let j_rom = case.cost(mu, &rom)?;
    let output = (j_fom - j_rom).abs() / j_fom.abs().max(1e-300);
    Ok(ErrorSample { state, pressure, control, adjoint, output })
}

/// Mean errors over a test set.
pub fn error_report(
    case: &DiscreteCase,
    basis: &ReducedBasis,
    model: &ReducedModel,
    test: &TestSet,
) -> Result<ErrorSample> {
    let samples: Vec<ErrorSample> = test
        .parameters
        .par_iter()
        .zip(&test.solutions)
        .map(|(mu, fom)| compare_against(case, basis, model, mu, fom))
        .collect::<Result<_>>()?;
    let n = samples.len().max(1) as f64;
    Ok(ErrorSample {
        state: samples.iter().map(|s| s.state).sum::<f64>() / n,
        pressure: samples.iter().map(|s| s.pressure).sum::<f64>() / n,
        control: samples.iter().map(|s| s.control).sum::<f64>() / n,
        adjoint: samples.iter().map(|s| s.adjoint).sum::<f64>() / n,
        output: samples.iter().map(|s| s.output).sum::<f64>() / n,
    })
}

/// One row of the convergence and speedup study.
#[derive(Debug, Clone, Copy)]
pub struct StudyRow {
    pub n: usize,
    pub errors: ErrorSample,
    pub fom_seconds: f64,
    pub rom_seconds: f64,
    pub speedup: f64,
}

/// Galerkin consistency check: assemble the full-order optimality system,
/// insert the reconstructed reduced solution and project the residual back
/// onto every basis vector. By construction the projection must vanish to
/// solver precision; the returned value is its largest absolute entry.
pub fn galerkin_residual(
    case: &DiscreteCase,
    basis: &ReducedBasis,
    model: &ReducedModel,
    mu: &[f64],
) -> Result<f64> {
    let blocks = case.blocks(mu)?;
    let tracking = case.tracking.evaluate(mu)?;
    let forcing = case.forcing.evaluate(mu)?;
    let kkt = crate::spacetime::assemble_kkt(
        &blocks,
        &case.grid,
        case.config.alpha,
        &tracking,
        &forcing,
    )?;
    let red = model.solve_online(mu)?;
    let rec = reconstruct(case, basis, &red);
    let mut x = rec.state.concat();
    x.extend(rec.control.concat());
    x.extend(rec.adjoint.concat());
    let residual: Vec<f64> = kkt
        .matrix
        .matvec(&x)
        .iter()
        .zip(&kkt.rhs)
        .map(|(a, b)| a - b)
        .collect();
    let ns = case.n_state * case.grid.n_steps;
    let nu = case.n_control * case.grid.n_steps;
    let dot = |col: &[f64], seg: &[f64]| col.iter().zip(seg).map(|(a, b)| a * b).sum::<f64>();
    let mut worst: f64 = 0.0;
    for col in &basis.state_cols {
        worst = worst.max(dot(col, &residual[..ns]).abs());
        worst = worst.max(dot(col, &residual[ns + nu..]).abs());
    }
    for col in &basis.control_cols {
        worst = worst.max(dot(col, &residual[ns..ns + nu]).abs());
    }
    Ok(worst)
}

/// Run the full offline/online study over a range of basis sizes.
pub fn speedup_study(
    case: &DiscreteCase,
    train: &TrainingData,
    test: &TestSet,
    n_values: &[usize],
) -> Result<Vec<StudyRow>> {
    let mut rows = Vec::new();
    for &n in n_values {
        let basis = build_reduced_basis(case, train, n, true)?;
        let model = galerkin_project(case, &basis)?;
        let errors = error_report(case, &basis, &model, test)?;
        // time the online phase alone over the test set
        let t0 = Instant::now();
        for mu in &test.parameters {
            let _ = model.solve_online(mu)?;
        }
        let rom_seconds = t0.elapsed().as_secs_f64() / test.parameters.len().max(1) as f64;
        let fom_seconds = train.mean_fom_seconds;
        rows.push(StudyRow {
            n,
            errors,
            fom_seconds,
            rom_seconds,
            speedup: fom_seconds / rom_seconds.max(1e-12),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::CaseConfig;
    use crate::mesh::CaseId;
    use std::sync::OnceLock;

    fn small_graetz() -> &'static (DiscreteCase, TrainingData) {
        static CELL: OnceLock<(DiscreteCase, TrainingData)> = OnceLock::new();
        CELL.get_or_init(|| {
            let mut cfg = CaseConfig::desk(CaseId::Graetz);
            cfg.nx = 20;
            cfg.ny = 5;
            cfg.n_train = 8;
            cfg.n_basis = 4;
            let case = DiscreteCase::build(&cfg).unwrap();
            let params = cfg.sample_parameters(cfg.n_train, cfg.seed);
            let train = collect_snapshots(&case, &params).unwrap();
            (case, train)
        })
    }

    fn small_stokes() -> &'static (DiscreteCase, TrainingData) {
        static CELL: OnceLock<(DiscreteCase, TrainingData)> = OnceLock::new();
        CELL.get_or_init(|| {
            let mut cfg = CaseConfig::desk(CaseId::StokesCavity);
            cfg.nx = 6;
            cfg.ny = 6;
            cfg.n_train = 8;
            cfg.n_basis = 4;
            let case = DiscreteCase::build(&cfg).unwrap();
            let params = cfg.sample_parameters(cfg.n_train, cfg.seed);
            let train = collect_snapshots(&case, &params).unwrap();
            (case, train)
        })
    }

    #[test]
    fn training_parameter_is_reproduced_at_full_basis() {
        let (case, train) = small_graetz();
        let n = train.parameters.len();
        let basis = build_reduced_basis(case, train, n, true).unwrap();
        let model = galerkin_project(case, &basis).unwrap();
        let err = compare_at(case, &basis, &model, &train.parameters[3]).unwrap();
        assert!(err.state < 1e-6, "state error {}", err.state);
        assert!(err.control < 1e-6, "control error {}", err.control);
        assert!(err.adjoint < 1e-6, "adjoint error {}", err.adjoint);
    }

    #[test]
    fn projected_residual_vanishes() {
        let (case, train) = small_graetz();
        let basis = build_reduced_basis(case, train, 4, true).unwrap();
        let model = galerkin_project(case, &basis).unwrap();
        let mu = vec![0.08, 1.5, 2.0];
        let r = galerkin_residual(case, &basis, &model, &mu).unwrap();
        assert!(r < 1e-8, "projected residual {r}");
    }

    #[test]
    fn reduced_system_is_symmetric_and_solvable() {
        let (case, train) = small_graetz();
        let basis = build_reduced_basis(case, train, 5, true).unwrap();
        let model = galerkin_project(case, &basis).unwrap();
        let mu = vec![0.1, 2.5, 1.2];
        let (kkt, _) = model.assemble(&mu).unwrap();
        let asym = (&kkt - kkt.transpose()).amax();
        assert!(asym < 1e-10 * kkt.amax(), "asymmetry {asym}");
        let min_sv = kkt
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        assert!(min_sv > 1e-12, "singular reduced system, min sv {min_sv}");
    }

    #[test]
    fn errors_decay_with_basis_size() {
        let (case, train) = small_graetz();
        let test = prepare_test_set(
            case,
            &[vec![0.07, 1.8, 1.7], vec![0.12, 2.6, 0.8]],
        )
        .unwrap();
        let mut errs = Vec::new();
        for n in [2, 6] {
            let basis = build_reduced_basis(case, train, n, true).unwrap();
            let model = galerkin_project(case, &basis).unwrap();
            errs.push(error_report(case, &basis, &model, &test).unwrap().state);
        }
        assert!(
            errs[1] < 0.5 * errs[0],
            "no decay: N=2 gives {}, N=6 gives {}",
            errs[0],
            errs[1]
        );
    }

    #[test]
    fn stokes_reduction_reproduces_training_solve() {
        let (case, train) = small_stokes();
        let n = train.parameters.len();
        let basis = build_reduced_basis(case, train, n, true).unwrap();
        let model = galerkin_project(case, &basis).unwrap();
        let err = compare_at(case, &basis, &model, &train.parameters[2]).unwrap();
        assert!(err.state < 1e-5, "state error {}", err.state);
        assert!(err.control < 1e-5, "control error {}", err.control);
    }

    #[test]
    fn supremizers_stabilize_the_divergence_block() {
        let (case, train) = small_stokes();
        let mu = vec![0.02, 1.4];
        let with = build_reduced_basis(case, train, 4, true).unwrap();
        let without = build_reduced_basis(case, train, 4, false).unwrap();
        let sv_with = reduced_divergence_min_sv(case, &with, &mu).unwrap();
        let sv_without = reduced_divergence_min_sv(case, &without, &mu).unwrap();
        assert!(sv_with > 1e-8, "enriched min sv {sv_with}");
        assert!(
            sv_with > 10.0 * sv_without.max(1e-16),
            "enrichment gain too small: {sv_with} vs {sv_without}"
        );
    }
}
