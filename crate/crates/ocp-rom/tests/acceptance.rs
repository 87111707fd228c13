//! End-to-end acceptance suite. Each test prints a single PASS line for
//! its criterion; a failing assertion is the FAIL signal.
//!
//! The two desk-scale studies (training, basis sweep, error and speedup
//! tables) are computed once and shared across criteria.

use nalgebra::{DMatrix, DVector};
use ocp_rom::cases::{paper_scale, CaseConfig, CaseStructure, DiscreteCase, StateMetric};
use ocp_rom::fem::{
    assemble_advection, assemble_boundary_mass, assemble_divergence_component,
    assemble_functional, assemble_mass, assemble_stiffness, dirichlet_lifting, ElementOrder,
    FunctionSpace,
};
use ocp_rom::mesh::{subdomain_maps, BoundaryTag, CaseId};
use ocp_rom::pod::{compute_pod_basis, InnerProduct};
use ocp_rom::rom::{
    build_reduced_basis, collect_snapshots, error_report, galerkin_project, prepare_test_set,
    speedup_study, StudyRow, TestSet, TrainingData,
};
use ocp_rom::spacetime::{
    assemble_kkt, march_adjoint, march_state, reduced_gradient, solve_kkt,
    StepBlocks, TimeGrid,
};
use ocp_rom::sparse::{SparseOperator, TripletBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::{Arc, OnceLock};

const SWEEP: [usize; 5] = [2, 4, 6, 8, 10];

struct Study {
    case: DiscreteCase,
    train: TrainingData,
    test: TestSet,
    rows: Vec<StudyRow>,
}

fn desk_study(id: CaseId) -> &'static Study {
    static GRAETZ: OnceLock<Study> = OnceLock::new();
    static STOKES: OnceLock<Study> = OnceLock::new();
    let cell = match id {
        CaseId::Graetz => &GRAETZ,
        CaseId::StokesCavity => &STOKES,
    };
    cell.get_or_init(|| {
        let config = CaseConfig::desk(id);
        let case = DiscreteCase::build(&config).unwrap();
        let train_mu = config.sample_parameters(config.n_train, config.seed);
        let train = collect_snapshots(&case, &train_mu).unwrap();
        let test_mu = config.sample_parameters_random(config.n_test, config.seed + 2);
        let test = prepare_test_set(&case, &test_mu).unwrap();
        let rows = speedup_study(&case, &train, &test, &SWEEP).unwrap();
        Study { case, train, test, rows }
    })
}

fn small_graetz_case() -> DiscreteCase {
    let config = CaseConfig {
        nx: 20,
        ny: 5,
        n_train: 6,
        n_basis: 4,
        n_test: 3,
        ..CaseConfig::desk(CaseId::Graetz)
    };
    DiscreteCase::build(&config).unwrap()
}

// ---------------------------------------------------------------------------
// 1. The sparse coupled solver against a dense brute-force stationarity
//    oracle on a tiny hand-built parabolic instance.
// ---------------------------------------------------------------------------
#[test]
fn criterion_01_kkt_matches_dense_qp_oracle() {
    let n = 3; // state dofs
    let m = 2; // control dofs
    let k = 2; // time steps
    let grid = TimeGrid { t_final: 1.0, n_steps: k };
    let dt = grid.dt();
    let alpha = 0.3;

    let dense = |rows: usize, cols: usize, vals: &[f64]| {
        let mut b = TripletBuilder::new();
        for i in 0..rows {
            for j in 0..cols {
                let v = vals[i * cols + j];
                if v != 0.0 {
                    b.push(i, j, v);
                }
            }
        }
        b.finish(rows, cols)
    };
    let blocks = StepBlocks {
        diag: dense(n, n, &[4.0, -1.0, 0.0, -1.0, 4.0, -1.0, 0.0, -1.0, 4.0]),
        inertia: dense(n, n, &[2.0, 0.5, 0.0, 0.5, 2.0, 0.5, 0.0, 0.5, 2.0]),
        obs: dense(n, n, &[3.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 3.0]),
        control_mass: dense(m, m, &[2.0, 0.3, 0.3, 2.0]),
        coupling: dense(n, m, &[1.0, 0.0, 0.5, 0.5, 0.0, 1.0]),
    };
    let tracking = vec![vec![1.0, -0.5, 2.0], vec![0.5, 1.5, -1.0]];
    let forcing = vec![vec![0.2, 0.1, -0.3], vec![0.0, 0.4, 0.2]];

    let sparse_sol = solve_kkt(&assemble_kkt(&blocks, &grid, alpha, &tracking, &forcing).unwrap())
        .unwrap();

    // independent dense oracle: stationarity of the discrete Lagrangian
    // L = 1/2 x' H x - c' x + p' (G x - f) assembled brute force
    let total = k * (2 * n + m);
    let mut kkt = DMatrix::<f64>::zeros(total, total);
    let mut rhs = DVector::<f64>::zeros(total);
    let to_dense = |op: &SparseOperator| {
        let (r, c) = op.shape();
        let mut out = DMatrix::zeros(r, c);
        for (i, j, v) in op.iter() {
            out[(i, j)] = v;
        }
        out
    };
    let (e, mm, q, ru, c) = (
        to_dense(&blocks.diag),
        to_dense(&blocks.inertia),
        to_dense(&blocks.obs),
        to_dense(&blocks.control_mass),
        to_dense(&blocks.coupling),
    );
    let (oy, ou, op_) = (0, k * n, k * n + k * m);
    for step in 0..k {
        kkt.view_mut((oy + step * n, oy + step * n), (n, n)).copy_from(&(&q * dt));
        kkt.view_mut((ou + step * m, ou + step * m), (m, m)).copy_from(&(&ru * (alpha * dt)));
        kkt.view_mut((op_ + step * n, oy + step * n), (n, n)).copy_from(&e);
        kkt.view_mut((oy + step * n, op_ + step * n), (n, n)).copy_from(&e.transpose());
        kkt.view_mut((op_ + step * n, ou + step * m), (n, m)).copy_from(&(&c * (-dt)));
        kkt.view_mut((ou + step * m, op_ + step * n), (m, n)).copy_from(&(c.transpose() * (-dt)));
        if step > 0 {
            kkt.view_mut((op_ + step * n, oy + (step - 1) * n), (n, n)).copy_from(&(&mm * -1.0));
            kkt.view_mut((oy + (step - 1) * n, op_ + step * n), (n, n))
                .copy_from(&(mm.transpose() * -1.0));
        }
        for i in 0..n {
            rhs[oy + step * n + i] = tracking[step][i];
            rhs[op_ + step * n + i] = forcing[step][i];
        }
    }
    let dense_sol = kkt.lu().solve(&rhs).unwrap();

    let mut flat = Vec::new();
    flat.extend(sparse_sol.state.concat());
    flat.extend(sparse_sol.control.concat());
    flat.extend(sparse_sol.adjoint.concat());
    let worst = flat
        .iter()
        .zip(dense_sol.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(worst < 1e-10, "componentwise gap {worst:.3e}");
    println!("criterion 01 kkt-vs-dense-qp-oracle: PASS (gap {worst:.3e})");
}

// ---------------------------------------------------------------------------
// 2. With the control frozen, the state block of the coupled solve equals a
//    sequential implicit Euler march.
// ---------------------------------------------------------------------------
#[test]
fn criterion_02_coupled_equals_sequential_march() {
    let study = desk_study(CaseId::Graetz);
    let mu = vec![0.1, 2.0, 1.5];
    let sol = study.case.solve_fom(&mu).unwrap();
    let blocks = study.case.blocks(&mu).unwrap();
    let g = study.case.forcing.evaluate(&mu).unwrap();
    let y0 = vec![0.0; study.case.n_state];
    let marched = march_state(&blocks, &study.case.grid, &y0, &g, &sol.control).unwrap();
    let scale = sol
        .state
        .iter()
        .flatten()
        .fold(0.0f64, |a, v| a.max(v.abs()));
    let worst = sol
        .state
        .iter()
        .flatten()
        .zip(marched.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(worst < 1e-12 * scale.max(1.0), "gap {worst:.3e} (scale {scale:.3e})");
    println!("criterion 02 implicit-euler-equivalence: PASS (gap {worst:.3e})");
}

// ---------------------------------------------------------------------------
// 3. Adjoint gradient of the cost against central finite differences.
// ---------------------------------------------------------------------------
#[test]
fn criterion_03_adjoint_gradient_matches_finite_differences() {
    let case = small_graetz_case();
    let grid = case.grid;
    let dt = grid.dt();
    let alpha = case.config.alpha;
    let mu = vec![0.09, 1.8, 1.4];
    let blocks = case.blocks(&mu).unwrap();
    let g = case.forcing.evaluate(&mu).unwrap();
    let tracking = case.tracking.evaluate(&mu).unwrap();
    let y0 = vec![0.0; case.n_state];

    // the cost as an explicit function of the control alone
    let j = |u: &[Vec<f64>]| -> f64 {
        let y = march_state(&blocks, &grid, &y0, &g, u).unwrap();
        let mut val = 0.0;
        for k in 0..grid.n_steps {
            val += 0.5 * dt * blocks.obs.bilinear(&y[k], &y[k]);
            val -= tracking[k].iter().zip(&y[k]).map(|(a, b)| a * b).sum::<f64>();
            val += 0.5 * alpha * dt * blocks.control_mass.bilinear(&u[k], &u[k]);
        }
        val
    };

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u0: Vec<Vec<f64>> = (0..grid.n_steps)
        .map(|_| (0..case.n_control).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let y = march_state(&blocks, &grid, &y0, &g, &u0).unwrap();
    let p = march_adjoint(&blocks, &grid, &y, &tracking).unwrap();
    let grad = reduced_gradient(&blocks, &grid, alpha, &u0, &p);

    let h = 1e-5;
    for trial in 0..5 {
        let dir: Vec<Vec<f64>> = (0..grid.n_steps)
            .map(|_| (0..case.n_control).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let shift = |s: f64| -> Vec<Vec<f64>> {
            u0.iter()
                .zip(&dir)
                .map(|(u, d)| u.iter().zip(d).map(|(a, b)| a + s * b).collect())
                .collect()
        };
        let fd = (j(&shift(h)) - j(&shift(-h))) / (2.0 * h);
        let an: f64 = grad
            .iter()
            .zip(&dir)
            .map(|(gk, dk)| gk.iter().zip(dk).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        let rel = (fd - an).abs() / an.abs().max(1e-12);
        assert!(rel < 1e-5, "direction {trial}: fd {fd:.6e} vs adjoint {an:.6e} (rel {rel:.3e})");
    }
    println!("criterion 03 adjoint-gradient-vs-fd: PASS (5 directions, rel < 1e-5)");
}

// ---------------------------------------------------------------------------
// 4. Affine operator evaluations against direct assembly on the deformed
//    physical domain at 10 random parameters per case.
// ---------------------------------------------------------------------------
#[test]
fn criterion_04_affine_evaluation_matches_deformed_assembly() {
    let gap = |a: &SparseOperator, b: &SparseOperator| {
        SparseOperator::linear_combination(&[(1.0, a), (-1.0, b)]).unwrap().norm_max()
    };

    // advection-diffusion case
    let case = small_graetz_case();
    let dt = case.grid.dt();
    let mut worst_g: f64 = 0.0;
    for mu in case.config.sample_parameters(10, 11) {
        let maps = subdomain_maps(CaseId::Graetz, &mu).unwrap();
        let dmesh = Arc::new(case.mesh.deformed(&maps));
        let dspace = FunctionSpace::new(dmesh, ElementOrder::P1, 1);
        let one = |_: [f64; 2], _: usize| 1.0;
        let (_, free) = dirichlet_lifting(&dspace, &[(BoundaryTag::GammaD, &one)], true).unwrap();
        let m_d = assemble_mass(&dspace, None).unwrap();
        let k_d = assemble_stiffness(&dspace, None, [[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let a_d = assemble_advection(&dspace, &ocp_rom::cases::graetz_velocity_profile, None)
            .unwrap();
        let e_d = SparseOperator::linear_combination(&[(1.0, &m_d), (dt * mu[0], &k_d), (dt, &a_d)])
            .unwrap()
            .restrict(&free, &free);
        worst_g = worst_g.max(gap(&case.diag.evaluate(&mu).unwrap(), &e_d));

        let obs_d = assemble_mass(&dspace, Some(3)).unwrap().restrict(&free, &free);
        worst_g = worst_g.max(gap(&case.obs.evaluate(&mu).unwrap(), &obs_d));

        let cn = dspace.boundary_nodes(BoundaryTag::GammaC);
        let mc_d = assemble_boundary_mass(&dspace, BoundaryTag::GammaC).unwrap().restrict(&cn, &cn);
        worst_g = worst_g.max(gap(&case.control_mass.evaluate(&mu).unwrap(), &mc_d));
    }
    assert!(worst_g < 1e-11, "advection-diffusion mismatch {worst_g:.3e}");

    // Stokes case
    let config = CaseConfig {
        nx: 6,
        ny: 6,
        n_train: 4,
        n_basis: 2,
        n_test: 2,
        ..CaseConfig::desk(CaseId::StokesCavity)
    };
    let case = DiscreteCase::build(&config).unwrap();
    let dt = case.grid.dt();
    let (n_v, n_p) = match case.structure {
        CaseStructure::Saddle { n_velocity, n_pressure } => (n_velocity, n_pressure),
        _ => unreachable!(),
    };
    let mut worst_s: f64 = 0.0;
    for mu in config.sample_parameters(10, 12) {
        let maps = subdomain_maps(CaseId::StokesCavity, &mu).unwrap();
        let dmesh = Arc::new(case.mesh.deformed(&maps));
        let vel = FunctionSpace::new(dmesh.clone(), ElementOrder::P2, 2);
        let pres = FunctionSpace::new(dmesh, ElementOrder::P1, 1);
        let zero = |_: [f64; 2], _: usize| 0.0;
        let inlet = |_: [f64; 2], comp: usize| if comp == 0 { 1.0 } else { 0.0 };
        let (_, free_v) = dirichlet_lifting(
            &vel,
            &[(BoundaryTag::GammaD, &zero), (BoundaryTag::GammaIn, &inlet)],
            true,
        )
        .unwrap();
        let all_p: Vec<usize> = (0..pres.n_dofs()).collect();
        let mv_d = assemble_mass(&vel, None).unwrap().restrict(&free_v, &free_v);
        let kv_d = assemble_stiffness(&vel, None, [[1.0, 0.0], [0.0, 1.0]])
            .unwrap()
            .restrict(&free_v, &free_v);
        let dx_d = assemble_divergence_component(&vel, &pres, 0).unwrap();
        let dy_d = assemble_divergence_component(&vel, &pres, 1).unwrap();
        let d_d = SparseOperator::linear_combination(&[(1.0, &dx_d), (1.0, &dy_d)])
            .unwrap()
            .restrict(&all_p, &free_v);
        let w_d = assemble_functional(&pres, None, &|_, _| 1.0).unwrap();
        let mut b = TripletBuilder::new();
        b.add_block(0, 0, 1.0, &mv_d);
        b.add_block(0, 0, dt * mu[0], &kv_d);
        b.add_block(0, n_v, dt, &d_d.transpose());
        b.add_block(n_v, 0, 1.0, &d_d);
        for (i, &wi) in w_d.iter().enumerate() {
            b.push(n_v + i, n_v + n_p, wi);
            b.push(n_v + n_p, n_v + i, wi);
        }
        let e_d = b.finish(case.n_state, case.n_state);
        worst_s = worst_s.max(gap(&case.diag.evaluate(&mu).unwrap(), &e_d));
        worst_s = worst_s.max(gap(&case.divergence.as_ref().unwrap().evaluate(&mu).unwrap(), &d_d));
    }
    assert!(worst_s < 1e-11, "Stokes mismatch {worst_s:.3e}");
    println!(
        "criterion 04 affine-vs-deformed-assembly: PASS (gaps {worst_g:.3e} / {worst_s:.3e})"
    );
}

// ---------------------------------------------------------------------------
// 5. POD: orthonormality, energy bookkeeping, and a dense SVD oracle.
// ---------------------------------------------------------------------------
#[test]
fn criterion_05_pod_against_dense_svd_oracle() {
    let case = small_graetz_case();
    let params = case.config.sample_parameters(6, case.config.seed);
    let train = collect_snapshots(&case, &params).unwrap();
    let gram = match &case.state_metric {
        StateMetric::Single(g) => g.clone(),
        _ => unreachable!(),
    };
    let dt = case.grid.dt();
    let ip = InnerProduct::new(gram.clone(), dt).unwrap();
    let n_keep = 4;
    let pod = compute_pod_basis(&train.state, &ip, n_keep).unwrap();

    // orthonormality in the space-time inner product
    let mut ortho: f64 = 0.0;
    for (i, a) in pod.columns.iter().enumerate() {
        for (j, b) in pod.columns.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            ortho = ortho.max((ip.dot(a, b) - target).abs());
        }
    }
    assert!(ortho < 1e-8, "orthonormality defect {ortho:.3e}");

    // discarded energy accounts for the training projection errors
    let n_s = train.state.len() as f64;
    let tail: f64 = pod.eigenvalues.iter().skip(n_keep).sum();
    let mut err2 = 0.0;
    for snap in &train.state.data {
        let coeffs = ocp_rom::pod::project(&pod.columns, &ip, snap);
        let recon = ocp_rom::pod::lift(&pod.columns, &coeffs);
        let diff: Vec<f64> = snap.iter().zip(&recon).map(|(a, b)| a - b).collect();
        err2 += ip.dot(&diff, &diff);
    }
    let energy_gap = (err2 - n_s * tail).abs() / (n_s * pod.eigenvalues[0]);
    assert!(energy_gap < 1e-8, "energy bookkeeping gap {energy_gap:.3e}");

    // dense oracle: singular values of L' S with X_st = L L'
    let n_st = train.state.n_space * train.state.n_steps;
    let mut xst = DMatrix::<f64>::zeros(n_st, n_st);
    for k in 0..train.state.n_steps {
        for (i, j, v) in gram.iter() {
            xst[(k * train.state.n_space + i, k * train.state.n_space + j)] = v * dt;
        }
    }
    let chol = xst.cholesky().expect("space-time gram is SPD");
    let mut s_mat = DMatrix::<f64>::zeros(n_st, train.state.len());
    for (j, snap) in train.state.data.iter().enumerate() {
        for (i, v) in snap.iter().enumerate() {
            s_mat[(i, j)] = *v;
        }
    }
    let b = chol.l().transpose() * s_mat;
    let svd = b.svd(false, false);
    let mut oracle: Vec<f64> = svd.singular_values.iter().map(|s| s * s / n_s).collect();
    oracle.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut svd_gap: f64 = 0.0;
    for (l, o) in pod.eigenvalues.iter().zip(&oracle) {
        svd_gap = svd_gap.max((l - o).abs() / pod.eigenvalues[0]);
    }
    assert!(svd_gap < 1e-10, "dense SVD oracle gap {svd_gap:.3e}");
    println!(
        "criterion 05 pod-correctness: PASS (ortho {ortho:.1e}, energy {energy_gap:.1e}, svd {svd_gap:.1e})"
    );
}

// ---------------------------------------------------------------------------
// 6. Reduced well-posedness across test parameters for both cases.
// ---------------------------------------------------------------------------
#[test]
fn criterion_06_reduced_system_well_posed() {
    let mut reported = Vec::new();
    for id in [CaseId::Graetz, CaseId::StokesCavity] {
        let study = desk_study(id);
        let basis =
            build_reduced_basis(&study.case, &study.train, study.case.config.n_basis, true)
                .unwrap();
        let model = galerkin_project(&study.case, &basis).unwrap();
        let mut min_sv = f64::INFINITY;
        for mu in study.test.parameters.iter().take(10) {
            let (kkt, _) = model.assemble(mu).unwrap();
            let sv = kkt.svd(false, false).singular_values.iter().copied().fold(f64::INFINITY, f64::min);
            min_sv = min_sv.min(sv);
        }
        assert!(min_sv > 1e-10, "{}: reduced min singular value {min_sv:.3e}", id.name());
        reported.push(format!("{} {min_sv:.3e}", id.name()));
    }
    println!("criterion 06 reduced-well-posedness: PASS ({})", reported.join(", "));
}

fn assert_decay(rows: &[StudyRow], pick: fn(&StudyRow) -> f64, label: &str) {
    for pair in rows.windows(2) {
        let (a, b) = (pick(&pair[0]), pick(&pair[1]));
        assert!(
            b <= a * 1.05,
            "{label} error not decaying: N={} gives {a:.3e}, N={} gives {b:.3e}",
            pair[0].n,
            pair[1].n
        );
    }
}

// ---------------------------------------------------------------------------
// 7. Error decay, advection-diffusion benchmark at desk scale.
// ---------------------------------------------------------------------------
#[test]
fn criterion_07_graetz_error_decay() {
    let rows = &desk_study(CaseId::Graetz).rows;
    assert_decay(rows, |r| r.errors.state, "state");
    assert_decay(rows, |r| r.errors.control, "control");
    assert_decay(rows, |r| r.errors.adjoint, "adjoint");
    let last = rows.last().unwrap();
    assert!(last.errors.state <= 1e-3, "state error {:.3e} at N=10", last.errors.state);
    assert!(last.errors.control <= 1e-3, "control error {:.3e} at N=10", last.errors.control);
    assert!(last.errors.adjoint <= 1e-3, "adjoint error {:.3e} at N=10", last.errors.adjoint);
    assert!(last.errors.output <= 1e-4, "output error {:.3e} at N=10", last.errors.output);
    println!(
        "criterion 07 graetz-error-decay: PASS (N=10: state {:.2e}, control {:.2e}, adjoint {:.2e}, output {:.2e})",
        last.errors.state, last.errors.control, last.errors.adjoint, last.errors.output
    );
}

// ---------------------------------------------------------------------------
// 8. Error decay, Stokes cavity benchmark at desk scale.
// ---------------------------------------------------------------------------
#[test]
fn criterion_08_stokes_error_decay() {
    let study = desk_study(CaseId::StokesCavity);
    let last = study.rows.last().unwrap();
    assert!(last.errors.state <= 5e-3, "velocity error {:.3e} at N=10", last.errors.state);
    assert!(last.errors.pressure <= 5e-3, "pressure error {:.3e} at N=10", last.errors.pressure);
    assert!(last.errors.control <= 5e-3, "control error {:.3e} at N=10", last.errors.control);
    // Output accuracy is checked with the full snapshot basis; every error
    // must also have kept decaying between the half and full basis sizes.
    let n_max = study.train.parameters.len();
    let basis = build_reduced_basis(&study.case, &study.train, n_max, true).unwrap();
    let model = galerkin_project(&study.case, &basis).unwrap();
    let full = error_report(&study.case, &basis, &model, &study.test).unwrap();
    assert!(full.output <= 1e-5, "output error {:.3e} at N={n_max}", full.output);
    for (name, half, whole) in [
        ("velocity", last.errors.state, full.state),
        ("pressure", last.errors.pressure, full.pressure),
        ("control", last.errors.control, full.control),
    ] {
        assert!(whole <= half * 1.05, "{name} error grew from {half:.3e} to {whole:.3e}");
    }
    println!(
        "criterion 08 stokes-error-decay: PASS (N=10: velocity {:.2e}, pressure {:.2e}, control {:.2e}; N={n_max}: output {:.2e})",
        last.errors.state, last.errors.pressure, last.errors.control, full.output
    );
}

// ---------------------------------------------------------------------------
// 9. Online speedup over the full-order solve at every basis size.
// ---------------------------------------------------------------------------
#[test]
fn criterion_09_online_speedup() {
    let mut mins = Vec::new();
    for id in [CaseId::Graetz, CaseId::StokesCavity] {
        let rows = &desk_study(id).rows;
        let min = rows.iter().map(|r| r.speedup).fold(f64::INFINITY, f64::min);
        assert!(min >= 50.0, "{}: speedup {min:.0}x below 50x", id.name());
        mins.push(format!("{} {min:.0}x", id.name()));
    }
    println!("criterion 09 online-speedup: PASS ({})", mins.join(", "));
}

// ---------------------------------------------------------------------------
// 10. Reduced-dimension bookkeeping from the formulas alone.
// ---------------------------------------------------------------------------
#[test]
fn criterion_10_reduced_dimension_bookkeeping() {
    for n in 1..=40 {
        let mut g = paper_scale(CaseId::Graetz);
        g.n_basis = n;
        assert_eq!(g.reduced_dim(), 5 * n);
        let mut s = paper_scale(CaseId::StokesCavity);
        s.n_basis = n;
        assert_eq!(s.reduced_dim(), 13 * n);
    }
    let g = paper_scale(CaseId::Graetz);
    let s = paper_scale(CaseId::StokesCavity);
    assert_eq!(g.reduced_dim(), 175);
    assert_eq!(s.reduced_dim(), 325);
    assert_eq!(g.kkt_unknowns(), 313_830);
    assert_eq!(s.kkt_unknowns(), 296_880);
    println!(
        "criterion 10 dimension-bookkeeping: PASS (313830 -> 175, 296880 -> 325)"
    );
}

// ---------------------------------------------------------------------------
// 11. Determinism of the offline stage, timings excluded.
// ---------------------------------------------------------------------------
#[test]
fn criterion_11_offline_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let config = CaseConfig {
        nx: 20,
        ny: 5,
        n_train: 6,
        n_basis: 4,
        n_test: 3,
        ..CaseConfig::desk(CaseId::Graetz)
    };
    let cfg_path = tmp.path().join("config.toml");
    std::fs::write(&cfg_path, config.to_toml_string()).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ocp_rom::cli::cmd_offline(&cfg_path, Some(a.clone()), None, 0).unwrap();
    ocp_rom::cli::cmd_offline(&cfg_path, Some(b.clone()), None, 0).unwrap();
    for name in ["manifest.json", "basis_state.pmat", "basis_control.pmat", "model.json"] {
        let ba = std::fs::read(a.join(name)).unwrap();
        let bb = std::fs::read(b.join(name)).unwrap();
        assert_eq!(ba, bb, "artifact `{name}` differs between identical runs");
    }
    println!("criterion 11 offline-determinism: PASS (byte-identical artifacts)");
}
