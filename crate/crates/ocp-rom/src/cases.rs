//! Benchmark problem definitions.
//!
//! Each case builds, once per configuration, the reference mesh, the
//! Dirichlet lifting and every parameter-affine operator and right-hand
//! side of its space-time optimality system. Two benchmarks are provided:
//! a Graetz convection-diffusion flow with boundary control on a stretched
//! channel, and a lid-driven Stokes cavity with distributed control on a
//! widened square.

mod graetz;
mod stokes;

use crate::affine::{AffineOperator, AffineVector};
use crate::error::{Error, Result};
use crate::mesh::{CaseId, Mesh};
use crate::spacetime::{
    assemble_kkt, solve_kkt, SpaceTimeSolution, StepBlocks, TimeGrid,
};
use crate::sparse::SparseOperator;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub use graetz::build_graetz;
pub use graetz::velocity_profile as graetz_velocity_profile;
pub use stokes::build_stokes;

/// Complete description of one study: discretization, regularization and
/// sampling sizes. Serializes to TOML for config files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CaseConfig {
    pub case: CaseId,
    /// Grid cells along x and y of the reference mesh.
    pub nx: usize,
    pub ny: usize,
    pub t_final: f64,
    pub n_steps: usize,
    /// Control penalty; must be positive.
    pub alpha: f64,
    /// Snapshot count of the training set.
    pub n_train: usize,
    /// Retained basis functions per variable.
    pub n_basis: usize,
    pub n_test: usize,
    pub seed: u64,
    /// Parameter at which the reference geometry is recovered.
    pub reference_mu: Vec<f64>,
}

impl CaseConfig {
    /// Small preset that runs in seconds on a laptop.
    pub fn desk(case: CaseId) -> Self {
        match case {
            CaseId::Graetz => Self {
                case,
                nx: 60,
                ny: 15,
                t_final: 5.0,
                n_steps: 10,
                alpha: 1e-2,
                n_train: 20,
                n_basis: 10,
                n_test: 20,
                seed: 42,
                reference_mu: vec![0.1, 2.0, 1.0],
            },
            CaseId::StokesCavity => Self {
                case,
                nx: 10,
                ny: 10,
                t_final: 1.0,
                n_steps: 10,
                alpha: 1e-2,
                n_train: 20,
                n_basis: 10,
                n_test: 10,
                seed: 42,
                reference_mu: vec![0.05, 1.0],
            },
        }
    }

    /// Full-scale preset matching the published studies. Only the metadata
    /// is meant to be inspected at this scale; solving it needs a workstation.
    pub fn paper(case: CaseId) -> Self {
        match case {
            CaseId::Graetz => Self {
                nx: 70,
                ny: 25,
                t_final: 5.0,
                n_steps: 30,
                n_train: 70,
                n_basis: 35,
                n_test: 50,
                ..Self::desk(case)
            },
            CaseId::StokesCavity => Self {
                nx: 24,
                ny: 24,
                t_final: 1.0,
                n_steps: 20,
                n_train: 70,
                n_basis: 25,
                n_test: 35,
                ..Self::desk(case)
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha <= 0.0 {
            return Err(Error::NonPositiveAlpha(self.alpha));
        }
        if self.n_basis > self.n_train {
            return Err(Error::Config(format!(
                "n_basis {} exceeds n_train {}",
                self.n_basis, self.n_train
            )));
        }
        self.case.check_parameter(&self.reference_mu)
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid::new(self.t_final, self.n_steps)
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Uniform independent samples from the parameter box.
    /// Draw a uniform Latin-hypercube sample of the parameter box. The
    /// stratification guarantees every axis-aligned slice of width
    /// `(hi-lo)/count` contains exactly one point, which keeps sparse
    /// regions of the box covered even for small sample counts.
    pub fn sample_parameters(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let bx = self.case.parameter_box();
        let mut coords: Vec<Vec<f64>> = Vec::with_capacity(bx.len());
        for &(lo, hi) in &bx {
            let mut strata: Vec<usize> = (0..count).collect();
            for i in (1..count).rev() {
                let j = rng.gen_range(0..=i);
                strata.swap(i, j);
            }
            let width = (hi - lo) / count.max(1) as f64;
            coords.push(
                strata
                    .iter()
                    .map(|&s| lo + width * (s as f64 + rng.gen_range(0.0..1.0)))
                    .collect(),
            );
        }
        (0..count).map(|i| coords.iter().map(|c| c[i]).collect()).collect()
    }

    /// Draw an independent uniform sample of the parameter box, used for
    /// validation sets so they are not tied to the training stratification.
    pub fn sample_parameters_random(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let bx = self.case.parameter_box();
        (0..count)
            .map(|_| bx.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect())
            .collect()
    }
}

/// How the per-step state vector is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseStructure {
    /// One scalar field per step.
    Parabolic,
    /// `[velocity; pressure; mean multiplier]` per step. The trailing
    /// scalar enforces a zero pressure mean.
    Saddle { n_velocity: usize, n_pressure: usize },
}

/// Inner products used for snapshot compression and error norms.
#[derive(Debug, Clone)]
pub enum StateMetric {
    /// One gram matrix for the whole state (H1 for parabolic problems).
    Single(SparseOperator),
    /// Separate velocity (H1) and pressure (L2) grams.
    Split { velocity: SparseOperator, pressure: SparseOperator },
}

/// Data needed to evaluate the cost functional in physical coordinates.
#[derive(Debug, Clone)]
pub struct OutputData {
    /// Observation gram over all dofs of the observed field.
    pub obs_full: AffineOperator,
    /// Desired trajectory over all dofs of the observed field.
    pub target_full: AffineVector,
    /// Spatial Dirichlet lift over all dofs of the observed field.
    pub lift: Vec<f64>,
    /// Per-step scaling of the lift.
    pub lift_profile: Vec<f64>,
    /// Free index (leading part of the state vector) to full dof.
    pub free_map: Vec<usize>,
}

/// A fully discretized benchmark: affine optimality system plus metadata.
pub struct DiscreteCase {
    pub config: CaseConfig,
    pub mesh: Arc<Mesh>,
    pub grid: TimeGrid,
    pub structure: CaseStructure,
    pub n_state: usize,
    pub n_control: usize,
    pub diag: AffineOperator,
    pub inertia: AffineOperator,
    pub obs: AffineOperator,
    pub control_mass: AffineOperator,
    pub coupling: AffineOperator,
    /// Constraint right-hand side; the lifted initial state is zero, so
    /// this already is the full forcing of the dynamics block.
    pub forcing: AffineVector,
    /// First-block right-hand side (tracking term, Dirichlet-corrected).
    pub tracking: AffineVector,
    pub state_metric: StateMetric,
    pub control_metric: SparseOperator,
    /// Pressure-velocity coupling on free velocity dofs, for supremizer
    /// enrichment (saddle cases only).
    pub divergence: Option<AffineOperator>,
    pub output: OutputData,
}

impl DiscreteCase {
    pub fn build(config: &CaseConfig) -> Result<Self> {
        config.validate()?;
        match config.case {
            CaseId::Graetz => build_graetz(config),
            CaseId::StokesCavity => build_stokes(config),
        }
    }

    /// Evaluate every operator at one parameter.
    pub fn blocks(&self, mu: &[f64]) -> Result<StepBlocks> {
        self.config.case.check_parameter(mu)?;
        Ok(StepBlocks {
            diag: self.diag.evaluate(mu)?,
            inertia: self.inertia.evaluate(mu)?,
            obs: self.obs.evaluate(mu)?,
            control_mass: self.control_mass.evaluate(mu)?,
            coupling: self.coupling.evaluate(mu)?,
        })
    }

    /// Solve the full-order all-at-once system at one parameter.
    pub fn solve_fom(&self, mu: &[f64]) -> Result<SpaceTimeSolution> {
        let blocks = self.blocks(mu)?;
        let tracking = self.tracking.evaluate(mu)?;
        let forcing = self.forcing.evaluate(mu)?;
        let kkt = assemble_kkt(&blocks, &self.grid, self.config.alpha, &tracking, &forcing)?;
        solve_kkt(&kkt)
    }

    /// Number of unknowns of the monolithic full-order system.
    pub fn kkt_unknowns(&self) -> usize {
        (2 * self.n_state + self.n_control) * self.grid.n_steps
    }

    /// Lift the free observed-field part of a step vector back to all dofs
    /// of the observed field at time step `k` (0-based).
    pub fn observed_full(&self, state_k: &[f64], k: usize) -> Vec<f64> {
        let tau = self.output.lift_profile[k];
        let mut full: Vec<f64> = self.output.lift.iter().map(|v| tau * v).collect();
        for (i, &dof) in self.output.free_map.iter().enumerate() {
            full[dof] += state_k[i];
        }
        full
    }

    /// Cost functional in physical coordinates:
    /// `J = 1/2 sum_k dt |y_k - yd_k|^2_obs + a/2 sum_k dt |u_k|^2_u`.
    pub fn cost(&self, mu: &[f64], sol: &SpaceTimeSolution) -> Result<f64> {
        let obs = self.output.obs_full.evaluate(mu)?;
        let target = self.output.target_full.evaluate(mu)?;
        let mu_gram = self.control_mass.evaluate(mu)?;
        let dt = self.grid.dt();
        let mut j = 0.0;
        for k in 0..self.grid.n_steps {
            let y = self.observed_full(&sol.state[k], k);
            let diff: Vec<f64> = y.iter().zip(&target[k]).map(|(a, b)| a - b).collect();
            j += 0.5 * dt * obs.bilinear(&diff, &diff);
            j += 0.5 * self.config.alpha * dt * mu_gram.bilinear(&sol.control[k], &sol.control[k]);
        }
        Ok(j)
    }
}

/// Published full-scale dimensions, used for bookkeeping without solving.
#[derive(Debug, Clone, Copy)]
pub struct ScaleSummary {
    pub structure_is_saddle: bool,
    pub n_state_dofs: usize,
    pub n_pressure_dofs: usize,
    pub n_control_dofs: usize,
    pub n_steps: usize,
    pub n_basis: usize,
}

impl ScaleSummary {
    /// Unknowns of the monolithic full-order system.
    pub fn kkt_unknowns(&self) -> usize {
        if self.structure_is_saddle {
            self.n_steps
                * (2 * (self.n_state_dofs + self.n_pressure_dofs) + self.n_control_dofs)
        } else {
            3 * self.n_steps * self.n_state_dofs
        }
    }

    /// Total reduced dimension with aggregated spaces (and supremizers for
    /// the saddle case): 5N parabolic, 13N saddle.
    pub fn reduced_dim(&self) -> usize {
        if self.structure_is_saddle {
            13 * self.n_basis
        } else {
            5 * self.n_basis
        }
    }
}

/// Full-scale study dimensions of each benchmark.
pub fn paper_scale(case: CaseId) -> ScaleSummary {
    match case {
        CaseId::Graetz => ScaleSummary {
            structure_is_saddle: false,
            n_state_dofs: 3487,
            n_pressure_dofs: 0,
            n_control_dofs: 3487,
            n_steps: 30,
            n_basis: 35,
        },
        CaseId::StokesCavity => ScaleSummary {
            structure_is_saddle: true,
            n_state_dofs: 4554,
            n_pressure_dofs: 591,
            n_control_dofs: 4554,
            n_steps: 20,
            n_basis: 25,
        },
    }
}
