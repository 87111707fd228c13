//! All-at-once space-time optimality systems.
//!
//! A parabolic optimal control problem discretized with backward Euler in
//! time is posed as one saddle-point system over the trajectories
//! `(y_1..y_K, u_1..u_K, p_1..p_K)`:
//!
//! ```text
//! [ dt*Obs      0        Kᵀ ] [y]   [ dt*Obs*y_d ]
//! [   0     a*dt*Mu   -dt*Cᵀ] [u] = [     0      ]
//! [   K     -dt*C        0  ] [p]   [     f      ]
//! ```
//!
//! where `K` is block lower bidiagonal with the per-step operator on the
//! diagonal and minus the inertia on the subdiagonal. Solving the system at
//! once yields state, control and adjoint simultaneously; its transpose
//! block `Kᵀ` is exactly the adjoint time-stepping scheme, so the same data
//! also drives the sequential marches used for cross-checking.

use crate::error::{Error, Result};
use crate::sparse::{SparseLu, SparseOperator, TripletBuilder};

/// Uniform time grid on (0, T] with `n_steps` backward Euler steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_final: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, n_steps: usize) -> Self {
        assert!(t_final > 0.0 && n_steps > 0);
        Self { t_final, n_steps }
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    /// Time level of step `k` in 1..=n_steps.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }
}

/// Time-independent per-step operators of one optimality system.
///
/// `diag` is the full per-step state operator (for a heat-type problem
/// `M + dt*D`; for a saddle step it also carries coupling rows), `inertia`
/// the mass that links consecutive steps, `obs` the observation gram
/// weighting the tracking term, `control_mass` the control-space gram and
/// `coupling` the control-to-state operator entering the dynamics as
/// `-dt * coupling * u_k`.
#[derive(Debug, Clone)]
pub struct StepBlocks {
    pub diag: SparseOperator,
    pub inertia: SparseOperator,
    pub obs: SparseOperator,
    pub control_mass: SparseOperator,
    pub coupling: SparseOperator,
}

impl StepBlocks {
    pub fn n_state(&self) -> usize {
        self.diag.rows()
    }

    pub fn n_control(&self) -> usize {
        self.control_mass.rows()
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_state();
        let m = self.n_control();
        for (name, op, shape) in [
            ("diag", &self.diag, (n, n)),
            ("inertia", &self.inertia, (n, n)),
            ("obs", &self.obs, (n, n)),
            ("control_mass", &self.control_mass, (m, m)),
            ("coupling", &self.coupling, (n, m)),
        ] {
            if op.shape() != shape {
                return Err(Error::ShapeMismatch(format!(
                    "step block {name} has shape {:?}, expected {:?}",
                    op.shape(),
                    shape
                )));
            }
        }
        Ok(())
    }
}

/// Block lower bidiagonal space-time operator with `diag` on the diagonal
/// and `-sub` on the subdiagonal, repeated `k` times.
pub fn spacetime_bidiagonal(diag: &SparseOperator, sub: &SparseOperator, k: usize) -> SparseOperator {
    let n = diag.rows();
    let mut b = TripletBuilder::new();
    for step in 0..k {
        b.add_block(step * n, step * n, 1.0, diag);
        if step > 0 {
            b.add_block(step * n, (step - 1) * n, -1.0, sub);
        }
    }
    b.finish(k * n, k * n)
}

/// Block diagonal repetition of one operator.
pub fn spacetime_blockdiag(block: &SparseOperator, k: usize) -> SparseOperator {
    let (r, c) = block.shape();
    let mut b = TripletBuilder::new();
    for step in 0..k {
        b.add_block(step * r, step * c, 1.0, block);
    }
    b.finish(k * r, k * c)
}

/// The space-time dynamics operator `K` (backward Euler over all steps).
pub fn build_state_spacetime(blocks: &StepBlocks, grid: &TimeGrid) -> SparseOperator {
    spacetime_bidiagonal(&blocks.diag, &blocks.inertia, grid.n_steps)
}

/// The space-time control coupling `dt * blockdiag(C)`.
pub fn build_control_coupling(blocks: &StepBlocks, grid: &TimeGrid) -> SparseOperator {
    spacetime_blockdiag(&blocks.coupling, grid.n_steps).scale(grid.dt())
}

/// Assembled all-at-once optimality system.
#[derive(Debug, Clone)]
pub struct KktSystem {
    pub matrix: SparseOperator,
    pub rhs: Vec<f64>,
    pub n_state: usize,
    pub n_control: usize,
    pub n_steps: usize,
}

impl KktSystem {
    pub fn n_unknowns(&self) -> usize {
        (2 * self.n_state + self.n_control) * self.n_steps
    }
}

/// Trajectories recovered from the monolithic solution vector.
#[derive(Debug, Clone)]
pub struct SpaceTimeSolution {
    pub state: Vec<Vec<f64>>,
    pub control: Vec<Vec<f64>>,
    pub adjoint: Vec<Vec<f64>>,
}

/// Constraint right-hand side per step: `f_k = g_k`, with the initial
/// condition folded into the first step as `f_1 += inertia * y0`.
pub fn constraint_rhs(blocks: &StepBlocks, y0: &[f64], g: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut f: Vec<Vec<f64>> = g.to_vec();
    blocks.inertia.matvec_acc(y0, 1.0, &mut f[0]);
    f
}

/// First-block right-hand side `dt * Obs * yd_k` from an explicit target
/// trajectory. Problems with lifted Dirichlet data build this vector
/// directly instead, to keep the coupling of constrained dofs.
pub fn tracking_from_target(
    blocks: &StepBlocks,
    grid: &TimeGrid,
    target: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let dt = grid.dt();
    target
        .iter()
        .map(|yd| {
            let mut v = blocks.obs.matvec(yd);
            for x in v.iter_mut() {
                *x *= dt;
            }
            v
        })
        .collect()
}

/// Assemble the full saddle-point system. `tracking` is the first block
/// right-hand side per step (see [`tracking_from_target`]) and `forcing`
/// the constraint right-hand side (see [`constraint_rhs`]).
pub fn assemble_kkt(
    blocks: &StepBlocks,
    grid: &TimeGrid,
    alpha: f64,
    tracking: &[Vec<f64>],
    forcing: &[Vec<f64>],
) -> Result<KktSystem> {
    blocks.validate()?;
    if alpha <= 0.0 {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    let k = grid.n_steps;
    if tracking.len() != k || forcing.len() != k {
        return Err(Error::ShapeMismatch(format!(
            "expected {k} tracking and forcing steps, got {} and {}",
            tracking.len(),
            forcing.len()
        )));
    }
    let n = blocks.n_state();
    let m = blocks.n_control();
    let dt = grid.dt();
    let (ny, nu) = (k * n, k * m);
    let (off_u, off_p) = (ny, ny + nu);
    let total = 2 * ny + nu;

    let dynamics = build_state_spacetime(blocks, grid);
    let coupling = build_control_coupling(blocks, grid);

    let mut b = TripletBuilder::new();
    for step in 0..k {
        b.add_block(step * n, step * n, dt, &blocks.obs);
        b.add_block(off_u + step * m, off_u + step * m, alpha * dt, &blocks.control_mass);
    }
    for (r, c, v) in dynamics.iter() {
        b.push(off_p + r, c, v); // K
        b.push(c, off_p + r, v); // Kᵀ
    }
    for (r, c, v) in coupling.iter() {
        b.push(off_p + r, off_u + c, -v); // -dt C
        b.push(off_u + c, off_p + r, -v); // -dt Cᵀ
    }
    let matrix = b.finish(total, total);

    let mut rhs = vec![0.0; total];
    for step in 0..k {
        if tracking[step].len() != n || forcing[step].len() != n {
            return Err(Error::ShapeMismatch("step vector length mismatch".into()));
        }
        rhs[step * n..(step + 1) * n].copy_from_slice(&tracking[step]);
        rhs[off_p + step * n..off_p + (step + 1) * n].copy_from_slice(&forcing[step]);
    }
    Ok(KktSystem { matrix, rhs, n_state: n, n_control: m, n_steps: k })
}

fn split_trajectory(flat: &[f64], n: usize, k: usize) -> Vec<Vec<f64>> {
    (0..k).map(|s| flat[s * n..(s + 1) * n].to_vec()).collect()
}

/// Factor and solve the monolithic system, verifying the residual.
pub fn solve_kkt(system: &KktSystem) -> Result<SpaceTimeSolution> {
    let lu = SparseLu::factor(&system.matrix)?;
    let x = lu.solve(&system.rhs);
    let mut residual = system.matrix.matvec(&x);
    for (r, b) in residual.iter_mut().zip(&system.rhs) {
        *r -= b;
    }
    let rnorm = residual.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let bnorm = system.rhs.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    if !rnorm.is_finite() || rnorm > 1e-10 * bnorm {
        return Err(Error::Numerical(format!(
            "saddle-point residual {rnorm:.3e} exceeds tolerance"
        )));
    }
    let (n, m, k) = (system.n_state, system.n_control, system.n_steps);
    Ok(SpaceTimeSolution {
        state: split_trajectory(&x[..k * n], n, k),
        control: split_trajectory(&x[k * n..k * (n + m)], m, k),
        adjoint: split_trajectory(&x[k * (n + m)..], n, k),
    })
}

/// Quadratic cost
/// `J = 1/2 sum_k dt (y_k - yd_k)' Obs (y_k - yd_k) + a/2 sum_k dt u_k' Mu u_k`.
pub fn objective_value(
    blocks: &StepBlocks,
    grid: &TimeGrid,
    alpha: f64,
    target: &[Vec<f64>],
    state: &[Vec<f64>],
    control: &[Vec<f64>],
) -> f64 {
    let dt = grid.dt();
    let mut j = 0.0;
    for k in 0..grid.n_steps {
        let diff: Vec<f64> = state[k].iter().zip(&target[k]).map(|(y, d)| y - d).collect();
        j += 0.5 * dt * blocks.obs.bilinear(&diff, &diff);
        j += 0.5 * alpha * dt * blocks.control_mass.bilinear(&control[k], &control[k]);
    }
    j
}

/// Sequential backward Euler march of the state equation:
/// `diag y_k = inertia y_{k-1} + g_k + dt * coupling * u_k`.
pub fn march_state(
    blocks: &StepBlocks,
    grid: &TimeGrid,
    y0: &[f64],
    g: &[Vec<f64>],
    control: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let lu = SparseLu::factor(&blocks.diag)?;
    let dt = grid.dt();
    let mut state = Vec::with_capacity(grid.n_steps);
    let mut prev = y0.to_vec();
    for k in 0..grid.n_steps {
        let mut rhs = g[k].clone();
        blocks.inertia.matvec_acc(&prev, 1.0, &mut rhs);
        blocks.coupling.matvec_acc(&control[k], dt, &mut rhs);
        prev = lu.solve(&rhs);
        state.push(prev.clone());
    }
    Ok(state)
}

/// Sequential adjoint march, backwards in time:
/// `diagᵀ p_k = inertiaᵀ p_{k+1} + tracking_k - dt * Obs y_k`, `p_{K+1} = 0`.
pub fn march_adjoint(
    blocks: &StepBlocks,
    grid: &TimeGrid,
    state: &[Vec<f64>],
    tracking: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let lu = SparseLu::factor(&blocks.diag.transpose())?;
    let inertia_t = blocks.inertia.transpose();
    let dt = grid.dt();
    let n = blocks.n_state();
    let mut adjoint = vec![Vec::new(); grid.n_steps];
    let mut next = vec![0.0; n];
    for k in (0..grid.n_steps).rev() {
        let mut rhs = tracking[k].clone();
        blocks.obs.matvec_acc(&state[k], -dt, &mut rhs);
        inertia_t.matvec_acc(&next, 1.0, &mut rhs);
        next = lu.solve(&rhs);
        adjoint[k] = next.clone();
    }
    Ok(adjoint)
}

/// Reduced gradient of the cost with respect to the control trajectory:
/// `grad_k = a dt Mu u_k - dt Cᵀ p_k`.
pub fn reduced_gradient(
    blocks: &StepBlocks,
    grid: &TimeGrid,
    alpha: f64,
    control: &[Vec<f64>],
    adjoint: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let dt = grid.dt();
    (0..grid.n_steps)
        .map(|k| {
            let mut g = blocks.control_mass.matvec(&control[k]);
            for v in g.iter_mut() {
                *v *= alpha * dt;
            }
            let ct_p = blocks.coupling.matvec_transpose(&adjoint[k]);
            for (gi, ci) in g.iter_mut().zip(&ct_p) {
                *gi -= dt * ci;
            }
            g
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    /// Small heat-like blocks: 1D Laplacian chain with a two-dof control
    /// acting on the first dofs.
    fn test_blocks(n: usize) -> StepBlocks {
        let dt = 0.1;
        let mut mass = Vec::new();
        let mut lap = Vec::new();
        for i in 0..n {
            mass.push((i, i, 1.0 + 0.1 * i as f64));
            lap.push((i, i, 2.0));
            if i + 1 < n {
                lap.push((i, i + 1, -1.0));
                lap.push((i + 1, i, -1.0));
            }
        }
        let mass = SparseOperator::from_triplets(n, n, &mass);
        let lap = SparseOperator::from_triplets(n, n, &lap);
        let diag = SparseOperator::linear_combination(&[(1.0, &mass), (dt, &lap)]).unwrap();
        let m = 2;
        let coupling = SparseOperator::from_triplets(n, m, &[(0, 0, 1.0), (1, 1, 0.8), (2, 0, 0.3)]);
        let control_mass =
            SparseOperator::from_triplets(m, m, &[(0, 0, 1.0), (1, 1, 2.0), (0, 1, 0.2), (1, 0, 0.2)]);
        StepBlocks { diag, inertia: mass.clone(), obs: mass, control_mass, coupling }
    }

    fn test_grid() -> TimeGrid {
        TimeGrid::new(0.3, 3)
    }

    fn test_problem(n: usize) -> (StepBlocks, TimeGrid, Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>) {
        let blocks = test_blocks(n);
        let grid = test_grid();
        let target: Vec<Vec<f64>> = (0..grid.n_steps)
            .map(|k| (0..n).map(|i| ((k + i) as f64 * 0.7).sin()).collect())
            .collect();
        let y0: Vec<f64> = (0..n).map(|i| 0.1 * i as f64).collect();
        let g: Vec<Vec<f64>> = (0..grid.n_steps)
            .map(|k| (0..n).map(|i| 0.05 * ((k * n + i) as f64).cos()).collect())
            .collect();
        (blocks, grid, target, y0, g)
    }

    #[test]
    fn bidiagonal_structure() {
        let d = SparseOperator::identity(2).scale(3.0);
        let s = SparseOperator::identity(2);
        let b = spacetime_bidiagonal(&d, &s, 3).to_dense();
        assert_eq!(b.nrows(), 6);
        assert_relative_eq!(b[(0, 0)], 3.0);
        assert_relative_eq!(b[(2, 0)], -1.0);
        assert_relative_eq!(b[(4, 2)], -1.0);
        assert_relative_eq!(b[(0, 2)], 0.0);
    }

    #[test]
    fn kkt_matches_dense_oracle() {
        let n = 4;
        let (blocks, grid, target, y0, g) = test_problem(n);
        let alpha = 0.05;
        let f = constraint_rhs(&blocks, &y0, &g);
        let tr = tracking_from_target(&blocks, &grid, &target);
        let kkt = assemble_kkt(&blocks, &grid, alpha, &tr, &f).unwrap();
        assert!(kkt.matrix.is_symmetric(1e-13));
        let sol = solve_kkt(&kkt).unwrap();

        // independent dense solve of the same system
        let dense = kkt.matrix.to_dense();
        let rhs = DVector::from_column_slice(&kkt.rhs);
        let x = dense.lu().solve(&rhs).unwrap();
        for k in 0..grid.n_steps {
            for i in 0..n {
                assert_relative_eq!(sol.state[k][i], x[k * n + i], epsilon = 1e-10);
            }
        }

        // optimality: the reduced gradient at the computed control vanishes
        let grad = reduced_gradient(&blocks, &grid, alpha, &sol.control, &sol.adjoint);
        for gk in &grad {
            for v in gk {
                assert!(v.abs() < 1e-11);
            }
        }
    }

    #[test]
    fn kkt_state_equals_sequential_march() {
        let n = 5;
        let (blocks, grid, target, y0, g) = test_problem(n);
        let alpha = 0.1;
        let f = constraint_rhs(&blocks, &y0, &g);
        let tr = tracking_from_target(&blocks, &grid, &target);
        let kkt = assemble_kkt(&blocks, &grid, alpha, &tr, &f).unwrap();
        let sol = solve_kkt(&kkt).unwrap();
        let marched = march_state(&blocks, &grid, &y0, &g, &sol.control).unwrap();
        for k in 0..grid.n_steps {
            for i in 0..n {
                assert_relative_eq!(sol.state[k][i], marched[k][i], epsilon = 1e-11);
            }
        }
        let adj = march_adjoint(&blocks, &grid, &sol.state, &tr).unwrap();
        for k in 0..grid.n_steps {
            for i in 0..n {
                assert_relative_eq!(sol.adjoint[k][i], adj[k][i], epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn reduced_gradient_matches_finite_differences() {
        let n = 3;
        let (blocks, grid, target, y0, g) = test_problem(n);
        let alpha = 0.2;
        let m = blocks.n_control();
        let control: Vec<Vec<f64>> = (0..grid.n_steps)
            .map(|k| (0..m).map(|i| 0.3 * (k as f64 - i as f64)).collect())
            .collect();
        let j_of = |u: &[Vec<f64>]| {
            let state = march_state(&blocks, &grid, &y0, &g, u).unwrap();
            objective_value(&blocks, &grid, alpha, &target, &state, u)
        };
        let state = march_state(&blocks, &grid, &y0, &g, &control).unwrap();
        let tr = tracking_from_target(&blocks, &grid, &target);
        let adjoint = march_adjoint(&blocks, &grid, &state, &tr).unwrap();
        let grad = reduced_gradient(&blocks, &grid, alpha, &control, &adjoint);
        let h = 1e-6;
        for k in 0..grid.n_steps {
            for i in 0..m {
                let mut up = control.clone();
                up[k][i] += h;
                let mut dn = control.clone();
                dn[k][i] -= h;
                let fd = (j_of(&up) - j_of(&dn)) / (2.0 * h);
                assert_relative_eq!(grad[k][i], fd, epsilon = 1e-7, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn optimal_control_beats_zero_control() {
        let n = 4;
        let (blocks, grid, target, y0, g) = test_problem(n);
        let alpha = 0.05;
        let f = constraint_rhs(&blocks, &y0, &g);
        let tr = tracking_from_target(&blocks, &grid, &target);
        let kkt = assemble_kkt(&blocks, &grid, alpha, &tr, &f).unwrap();
        let sol = solve_kkt(&kkt).unwrap();
        let j_opt = objective_value(&blocks, &grid, alpha, &target, &sol.state, &sol.control);
        let zero = vec![vec![0.0; blocks.n_control()]; grid.n_steps];
        let y_zero = march_state(&blocks, &grid, &y0, &g, &zero).unwrap();
        let j_zero = objective_value(&blocks, &grid, alpha, &target, &y_zero, &zero);
        assert!(j_opt < j_zero);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (blocks, grid, target, y0, g) = test_problem(3);
        let f = constraint_rhs(&blocks, &y0, &g);
        let tr = tracking_from_target(&blocks, &grid, &target);
        assert!(assemble_kkt(&blocks, &grid, 0.0, &tr, &f).is_err());
        assert!(assemble_kkt(&blocks, &grid, 0.1, &tr[..2], &f).is_err());
        let _ = DMatrix::<f64>::zeros(1, 1); // keep the import exercised
    }
}
