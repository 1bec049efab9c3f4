//! Decoupled, linearized time stepping.
//!
//! Level `n` carries `(P^n, U^n, C^n, W^n)`. The pressure pair at level `n`
//! uses `mu(C^n)` and the pressure source at `t_n`; the concentration pair at
//! level `n + 1` uses `D(U^n)` and sources at `t_{n+1}`. A transition
//! `n -> n + 1` is therefore a concentration solve followed by a pressure
//! solve, and initialization performs the level-0 pressure solve. `W^0` is
//! never used and is stored as zeros.

use crate::assembly::{assemble_concentration_system, assemble_pressure_system, AssemblyOptions, Sources};
use crate::coefficients::MediumModel;
use crate::error::{Error, Result};
use crate::solver::{SaddleSolver, SolveReport};
use crate::spaces::{lagrange_interpolate, FieldCoefficients, ScalarFn, SpacePair};

/// Uniform partition of `[0, T]` into `N` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub final_time: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(final_time: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter("number of time steps must be at least 1".into()));
        }
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::InvalidParameter(format!("final time must be positive, got {final_time}")));
        }
        Ok(Self { final_time, steps })
    }

    /// Grid with step `tau`; `T / tau` must be an integer up to rounding.
    pub fn from_step(final_time: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {tau}")));
        }
        let n = (final_time / tau).round();
        if n < 1.0 || ((final_time / tau) - n).abs() > 1e-9 * n {
            return Err(Error::InvalidParameter(format!(
                "final time {final_time} is not a multiple of the step {tau}"
            )));
        }
        Self::new(final_time, n as usize)
    }

    pub fn tau(&self) -> f64 {
        self.final_time / self.steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        if n == self.steps {
            self.final_time
        } else {
            n as f64 * self.tau()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteState {
    pub n: usize,
    pub time: f64,
    pub pressure: FieldCoefficients,
    pub velocity: FieldCoefficients,
    pub concentration: FieldCoefficients,
    pub flux: FieldCoefficients,
}

/// Per-level checks of the pressure solve plus solver reports.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub n: usize,
    pub time: f64,
    /// `max_i |(div U^n, phi_i) - (q^n, phi_i)|`.
    pub divergence_residual: f64,
    /// `∫ P^n`.
    pub pressure_mean: f64,
    /// `‖P^n‖_{L²}`.
    pub pressure_norm: f64,
    pub pressure_solve: SolveReport,
    pub concentration_solve: Option<SolveReport>,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub spaces: SpacePair,
    pub model: MediumModel,
    pub sources: Sources,
    pub assembly: AssemblyOptions,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_state: DiscreteState,
    pub diagnostics: Vec<StepDiagnostics>,
    pub snapshots: Vec<DiscreteState>,
}

#[derive(Debug)]
pub struct Scheme {
    problem: Problem,
    grid: TimeGrid,
    pressure_solver: SaddleSolver,
    concentration_solver: SaddleSolver,
}

impl Scheme {
    pub fn new(problem: Problem, grid: TimeGrid) -> Result<Self> {
        problem.model.validate()?;
        Ok(Self {
            problem,
            grid,
            pressure_solver: SaddleSolver::new(),
            concentration_solver: SaddleSolver::new(),
        })
    }

    /// Replaces both solvers with ones using `tolerance`.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.pressure_solver = SaddleSolver::with_tolerance(tolerance);
        self.concentration_solver = SaddleSolver::with_tolerance(tolerance);
        self
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Pressure/velocity solve at level `n` from `C^n`.
    pub fn pressure_update(
        &self,
        n: usize,
        concentration: &FieldCoefficients,
    ) -> Result<(FieldCoefficients, FieldCoefficients, StepDiagnostics)> {
        let p = &self.problem;
        let t = self.grid.time(n);
        let system = assemble_pressure_system(&p.spaces, &p.model, concentration, &p.sources, t, &p.assembly)
            .map_err(|e| e.annotate(format!("pressure assembly at level {n}")))?;
        let (x, report) = self
            .pressure_solver
            .solve(&system)
            .map_err(|e| e.annotate(format!("pressure solve at level {n}")))?;
        let (velocity, pressure, _) = system.split(&x);
        let divergence_residual = system
            .divergence
            .mul_vec(&velocity.values)
            .iter()
            .zip(&system.rhs_scalar)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scalar = &p.spaces.scalar;
        let quad = crate::quadrature::build_quadrature(2 * scalar.degree() + 2)?;
        let diag = StepDiagnostics {
            n,
            time: t,
            divergence_residual,
            pressure_mean: scalar.integral(&pressure),
            pressure_norm: scalar.l2_norm(&pressure, &quad),
            pressure_solve: report,
            concentration_solve: None,
        };
        log::debug!(
            "level {n}: divergence residual {:.2e}, pressure mean {:.2e}, solve residual {:.2e}",
            diag.divergence_residual,
            diag.pressure_mean,
            report.residual
        );
        Ok((pressure, velocity, diag))
    }

    /// Concentration/flux solve for level `state.n + 1`. Depends on the state
    /// only through `C^n` and `U^n`.
    pub fn concentration_update(
        &self,
        state: &DiscreteState,
    ) -> Result<(FieldCoefficients, FieldCoefficients, SolveReport)> {
        let p = &self.problem;
        let n = state.n + 1;
        let system = assemble_concentration_system(
            &p.spaces,
            &p.model,
            &state.velocity,
            &state.concentration,
            self.grid.tau(),
            &p.sources,
            self.grid.time(n),
            &p.assembly,
        )
        .map_err(|e| e.annotate(format!("concentration assembly at level {n}")))?;
        let (x, report) = self
            .concentration_solver
            .solve(&system)
            .map_err(|e| e.annotate(format!("concentration solve at level {n}")))?;
        let (flux, concentration, _) = system.split(&x);
        Ok((concentration, flux, report))
    }

    /// Level-0 state from the Lagrange interpolant of `c0`.
    pub fn initialize(&self, c0: &impl ScalarFn) -> Result<(DiscreteState, StepDiagnostics)> {
        let spaces = &self.problem.spaces;
        let concentration = lagrange_interpolate(&spaces.scalar, c0);
        self.initialize_from(concentration)
    }

    pub fn initialize_from(&self, concentration: FieldCoefficients) -> Result<(DiscreteState, StepDiagnostics)> {
        let spaces = &self.problem.spaces;
        let (pressure, velocity, diag) = self.pressure_update(0, &concentration)?;
        Ok((
            DiscreteState {
                n: 0,
                time: 0.0,
                pressure,
                velocity,
                concentration,
                flux: FieldCoefficients::zeros(spaces.flux.ndofs()),
            },
            diag,
        ))
    }

    pub fn step(&self, state: &DiscreteState) -> Result<(DiscreteState, StepDiagnostics)> {
        if state.n >= self.grid.steps {
            return Err(Error::InvalidInput(format!(
                "state is already at the final level {}",
                self.grid.steps
            )));
        }
        let (concentration, flux, creport) = self.concentration_update(state)?;
        let n = state.n + 1;
        let (pressure, velocity, mut diag) = self.pressure_update(n, &concentration)?;
        diag.concentration_solve = Some(creport);
        Ok((
            DiscreteState {
                n,
                time: self.grid.time(n),
                pressure,
                velocity,
                concentration,
                flux,
            },
            diag,
        ))
    }

    /// Runs all steps from `c0`. `snapshot_every = Some(k)` keeps every
    /// `k`-th level including level 0; `observer` sees each level.
    pub fn run(
        &self,
        c0: &impl ScalarFn,
        snapshot_every: Option<usize>,
        mut observer: impl FnMut(&DiscreteState, &StepDiagnostics),
    ) -> Result<RunOutput> {
        let (mut state, diag) = self.initialize(c0)?;
        observer(&state, &diag);
        let keep = |n: usize| snapshot_every.is_some_and(|k| k > 0 && n % k == 0);
        let mut snapshots = Vec::new();
        if keep(0) {
            snapshots.push(state.clone());
        }
        let mut diagnostics = vec![diag];
        for _ in 0..self.grid.steps {
            let (next, diag) = self.step(&state)?;
            observer(&next, &diag);
            if keep(next.n) {
                snapshots.push(next.clone());
            }
            diagnostics.push(diag);
            state = next;
        }
        Ok(RunOutput {
            final_state: state,
            diagnostics,
            snapshots,
        })
    }
}
