//! Time loop coupling the heat, director and Stokes steps.
//!
//! Each step runs the three solves in a fixed order: temperature first with
//! sources at the old level, then the director, then velocity and pressure
//! with the new temperature in the viscosity. In Picard mode the three solves
//! are repeated inside the step, re-evaluating every explicit term at the
//! newest iterate, until successive iterates stop moving.

use std::fmt::{Debug, Display};

use ndarray::{Array2, Zip};
use thiserror::Error;

use crate::director::{elastic_energy, elastic_stress_rhs, DirectorSolver, DirectorStepOptions};
use crate::error::SolverError;
use crate::grid::{DirectorField, FaceField, GridSpec, ScalarField, State, VectorField};
use crate::heat::HeatSolver;
use crate::norms::{DiagnosticsRecord, FunctionalTracker, Functionals, NormExponents};
use crate::ops::{divergence, face_dot, gradient, momentum_advection};
use crate::scalar::Real;
use crate::stokes::{StokesSolver, StokesStepProblem, StokesStrategy};
use crate::viscosity::ViscosityModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingMode {
    /// One pass of the three solves per step.
    Lagged,
    /// Fixed-point iteration of the three solves inside every step.
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplerConfig<T> {
    pub dt: T,
    pub t_end: T,
    pub mode: CouplingMode,
    /// Stop the inner iteration once `δθ + δd + δu` (L² norms) drops below this.
    pub picard_tol: T,
    pub picard_max: usize,
    pub stokes_strategy: StokesStrategy,
    pub stokes_tol: T,
    pub stokes_max_iter: usize,
    /// Admissible `max ||d| - 1|` after a renormalized step.
    pub unit_tol: T,
    /// Emit a diagnostics record every `cadence` steps (and at the end).
    pub cadence: usize,
    pub director: DirectorStepOptions<T>,
    pub exponents: NormExponents,
    /// Accumulate the space-time functionals; off means they are reported as NaN.
    pub functionals: bool,
}

impl<T: Real> CouplerConfig<T> {
    pub fn new(dt: T, t_end: T) -> Self {
        Self {
            dt,
            t_end,
            mode: CouplingMode::Lagged,
            picard_tol: T::lit(1e-8),
            picard_max: 50,
            stokes_strategy: StokesStrategy::Monolithic,
            stokes_tol: T::lit(1e-10),
            stokes_max_iter: StokesStepProblem::<T>::DEFAULT_MAX_ITER,
            unit_tol: T::lit(1e-12),
            cadence: 1,
            director: DirectorStepOptions::default(),
            exponents: NormExponents::default(),
            functionals: true,
        }
    }

    pub fn with_mode(mut self, mode: CouplingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |what: &str, v: T| Err(SolverError::InvalidInput(format!("{what} must be positive, got {v}")));
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return bad("dt", self.dt);
        }
        if !(self.t_end > T::zero() && self.t_end.is_finite()) {
            return bad("t_end", self.t_end);
        }
        if !(self.picard_tol > T::zero()) {
            return bad("picard_tol", self.picard_tol);
        }
        if !(self.stokes_tol > T::zero()) {
            return bad("stokes_tol", self.stokes_tol);
        }
        if self.picard_max == 0 || self.cadence == 0 || self.stokes_max_iter == 0 {
            return Err(SolverError::InvalidInput("picard_max, cadence and stokes_max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Energies of a state: `E_kin = ½‖u‖²`, `E_elastic = ½‖∇d‖²`, `E_thermal = ∫θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBudget<T> {
    pub total: T,
    pub kinetic: T,
    pub elastic: T,
    pub thermal: T,
}

pub fn energy_budget<T: Real>(state: &State<T>) -> EnergyBudget<T> {
    let kinetic = T::lit(0.5) * face_dot(state.u.faces(), state.u.faces());
    let elastic = elastic_energy(&state.d);
    let thermal = state.theta.integral();
    EnergyBudget { total: kinetic + elastic + thermal, kinetic, elastic, thermal }
}

/// What happened inside one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo<T> {
    pub picard_iters: usize,
    /// Last ratio of successive inner differences; zero when only one
    /// iteration was needed.
    pub picard_ratio: T,
    pub picard_ratio_max: T,
    pub stokes_iterations: usize,
}

/// Step failure with the time at which it happened and the records emitted so far.
#[derive(Debug, Error)]
#[error("step failed at t = {t}: {source}")]
pub struct RunError<T: Debug + Display> {
    pub t: T,
    pub last: Option<DiagnosticsRecord<T>>,
    pub records: Vec<DiagnosticsRecord<T>>,
    #[source]
    pub source: SolverError,
}

#[derive(Debug, Clone)]
pub struct RunOutput<T> {
    pub records: Vec<DiagnosticsRecord<T>>,
    pub steps: Vec<StepInfo<T>>,
    pub final_state: State<T>,
}

fn l2_cells<T: Real>(grid: &GridSpec<T>, a: &Array2<T>, b: &Array2<T>) -> T {
    let s = Zip::from(a).and(b).fold(T::zero(), |acc, &x, &y| acc + (x - y) * (x - y));
    (s * grid.cell_area()).sqrt()
}

fn l2_faces<T: Real>(a: &FaceField<T>, b: &FaceField<T>) -> T {
    let mut diff = a.clone();
    diff.axpy(-T::one(), b);
    face_dot(&diff, &diff).sqrt()
}

fn project_with<T: Real>(stokes: &StokesSolver<T>, u: &VectorField<T>) -> VectorField<T> {
    let div = divergence(u);
    let phi = ScalarField::from_values(u.grid(), div.bc, stokes.neumann_poisson(&div.values));
    let mut faces = u.faces().clone();
    faces.axpy(-T::one(), &gradient(&phi));
    VectorField::from_faces(faces)
}

/// Removes the discrete gradient part of `u`: solve `Δ_h φ = div u`, return `u - ∇φ`.
pub fn project_divergence_free<T: Real>(u: &VectorField<T>) -> VectorField<T> {
    project_with(&StokesSolver::new(u.grid()), u)
}

/// Solvers for one grid, viscosity law and director boundary condition.
pub struct Coupler<T> {
    grid: GridSpec<T>,
    model: ViscosityModel<T>,
    config: CouplerConfig<T>,
    heat: HeatSolver<T>,
    director: DirectorSolver<T>,
    stokes: StokesSolver<T>,
}

struct Iterate<T> {
    u: VectorField<T>,
    d: DirectorField<T>,
    p: ScalarField<T>,
    theta: ScalarField<T>,
    stokes_iterations: usize,
}

impl<T: Real> Coupler<T> {
    pub fn new(
        grid: GridSpec<T>,
        model: ViscosityModel<T>,
        director_bc: crate::grid::DirectorBc,
        config: CouplerConfig<T>,
    ) -> Result<Self, SolverError> {
        config.validate()?;
        Ok(Self {
            grid,
            model,
            config,
            heat: HeatSolver::new(grid),
            director: DirectorSolver::new(grid, director_bc),
            stokes: StokesSolver::new(grid),
        })
    }

    pub fn config(&self) -> &CouplerConfig<T> {
        &self.config
    }

    pub fn grid(&self) -> GridSpec<T> {
        self.grid
    }

    pub fn project_divergence_free(&self, u: &VectorField<T>) -> VectorField<T> {
        project_with(&self.stokes, u)
    }

    /// One sweep of the three solves. Explicit terms use `lag`; time
    /// derivatives are taken against `old`.
    fn sweep(&self, old: &State<T>, lag: &Iterate<T>, dt: T) -> Result<Iterate<T>, SolverError> {
        let theta = self.heat.step_lagged(&old.theta, &lag.theta, &lag.u, &lag.d, &self.model, dt)?;
        let d = self.director.step_lagged(&old.d, &lag.d, &lag.u, dt, self.config.director)?;
        let mut rhs = elastic_stress_rhs(&lag.d);
        rhs.axpy(-T::one(), &momentum_advection(&lag.u));
        let problem = StokesStepProblem::new(&old.u, &theta, &rhs, dt, self.model)
            .with_strategy(self.config.stokes_strategy)
            .with_tol(self.config.stokes_tol)
            .with_max_iter(self.config.stokes_max_iter)
            .with_pressure_guess(&lag.p);
        let sol = self.stokes.solve(&problem)?;
        if !sol.converged {
            return Err(SolverError::NonConvergence { residual: sol.residual.to_f64_lossy(), iterations: sol.iterations });
        }
        Ok(Iterate { u: sol.u, d, p: sol.p, theta, stokes_iterations: sol.iterations })
    }

    /// Advances `state` by `dt`.
    pub fn step_by(&self, state: &State<T>, dt: T) -> Result<(State<T>, StepInfo<T>), SolverError> {
        let start = Iterate {
            u: state.u.clone(),
            d: state.d.clone(),
            p: state.p.clone(),
            theta: state.theta.clone(),
            stokes_iterations: 0,
        };
        let mut info = StepInfo { picard_iters: 1, picard_ratio: T::zero(), picard_ratio_max: T::zero(), stokes_iterations: 0 };
        let next = match self.config.mode {
            CouplingMode::Lagged => {
                let it = self.sweep(state, &start, dt)?;
                info.stokes_iterations = it.stokes_iterations;
                it
            }
            CouplingMode::Picard => self.picard(state, start, dt, &mut info)?,
        };
        if self.config.director.renormalize {
            let dev = next.d.unit_deviation_max();
            if dev > self.config.unit_tol {
                return Err(SolverError::UnitLength { deviation: dev.to_f64_lossy() });
            }
        }
        let out = State { u: next.u, d: next.d, p: next.p, theta: next.theta, t: state.t + dt };
        if !out.is_finite() {
            return Err(SolverError::NonFinite { stage: "coupled step" });
        }
        Ok((out, info))
    }

    pub fn step(&self, state: &State<T>) -> Result<(State<T>, StepInfo<T>), SolverError> {
        self.step_by(state, self.config.dt)
    }

    fn picard(&self, old: &State<T>, mut current: Iterate<T>, dt: T, info: &mut StepInfo<T>) -> Result<Iterate<T>, SolverError> {
        let g = self.grid;
        let mut previous: Option<T> = None;
        let mut growth = 0;
        let mut delta = T::zero();
        for k in 1..=self.config.picard_max {
            let next = self.sweep(old, &current, dt)?;
            delta = l2_cells(&g, &next.theta.values, &current.theta.values)
                + (0..3).map(|c| l2_cells(&g, &next.d.d[c], &current.d.d[c])).fold(T::zero(), |a, b| a + b)
                + l2_faces(next.u.faces(), current.u.faces());
            info.picard_iters = k;
            info.stokes_iterations += next.stokes_iterations;
            if let Some(prev) = previous {
                let ratio = delta / prev;
                info.picard_ratio = ratio;
                info.picard_ratio_max = info.picard_ratio_max.max(ratio);
                if ratio >= T::one() {
                    growth += 1;
                    if growth >= 3 {
                        return Err(SolverError::PicardDivergence { ratio: ratio.to_f64_lossy(), iteration: k });
                    }
                } else {
                    growth = 0;
                }
            }
            current = next;
            if delta <= self.config.picard_tol {
                return Ok(current);
            }
            previous = Some(delta);
        }
        Err(SolverError::PicardNonConvergence { difference: delta.to_f64_lossy(), iterations: self.config.picard_max })
    }

    /// Diagnostics row for `state`; functionals are NaN when not supplied.
    pub fn record(&self, state: &State<T>, info: &StepInfo<T>, functionals: Option<Functionals<T>>) -> DiagnosticsRecord<T> {
        let e = energy_budget(state);
        let nan = T::nan();
        let f = functionals.unwrap_or(Functionals { u: nan, d: nan, theta: nan, b_theta: nan });
        DiagnosticsRecord {
            t: state.t,
            e_total: e.total,
            e_kin: e.kinetic,
            e_elastic: e.elastic,
            e_thermal: e.thermal,
            div_max: divergence(&state.u).values.fold(T::zero(), |m, v| m.max(v.abs())),
            dnorm_dev_max: state.d.unit_deviation_max(),
            u_sur: f.u,
            d_sur: f.d,
            theta_sur: f.theta,
            f_sur: f.total(),
            b_theta_sur: f.b_theta,
            picard_iters: info.picard_iters,
            picard_ratio: info.picard_ratio,
        }
    }

    /// Runs from `initial` to `t_end`, projecting the initial velocity first.
    pub fn run(&self, initial: &State<T>) -> Result<RunOutput<T>, RunError<T>> {
        self.run_with(initial, |_, _| {})
    }

    /// As [`run`](Self::run), calling `observer` with every emitted record
    /// and the state it describes.
    pub fn run_with(
        &self,
        initial: &State<T>,
        mut observer: impl FnMut(&DiagnosticsRecord<T>, &State<T>),
    ) -> Result<RunOutput<T>, RunError<T>> {
        let cfg = &self.config;
        let mut state = initial.clone();
        state.u = self.project_divergence_free(&initial.u);
        let mut tracker = cfg.functionals.then(|| FunctionalTracker::new(self.grid, cfg.exponents));
        let fail = |t: T, records: Vec<DiagnosticsRecord<T>>, source: SolverError| RunError {
            t,
            last: records.last().copied(),
            records,
            source,
        };

        let mut records = Vec::new();
        let mut steps = Vec::new();
        let zero_info = StepInfo { picard_iters: 0, picard_ratio: T::zero(), picard_ratio_max: T::zero(), stokes_iterations: 0 };
        let observe = |tracker: &mut Option<FunctionalTracker<T>>, s: &State<T>| -> Result<Option<Functionals<T>>, SolverError> {
            match tracker {
                Some(tr) => tr.observe(s).map(Some).map_err(|e| SolverError::InvalidInput(e.to_string())),
                None => Ok(None),
            }
        };
        let f0 = match observe(&mut tracker, &state) {
            Ok(f) => f,
            Err(e) => return Err(fail(state.t, records, e)),
        };
        let rec = self.record(&state, &zero_info, f0);
        observer(&rec, &state);
        records.push(rec);

        let t0 = state.t;
        let n_steps = ((cfg.t_end - t0) / cfg.dt - T::lit(1e-9)).ceil().to_usize().unwrap_or(0);
        for n in 1..=n_steps {
            let dt = if n == n_steps { cfg.t_end - state.t } else { cfg.dt };
            let (next, info) = match self.step_by(&state, dt) {
                Ok(v) => v,
                Err(e) => return Err(fail(state.t, records, e)),
            };
            state = next;
            steps.push(info);
            let f = match observe(&mut tracker, &state) {
                Ok(f) => f,
                Err(e) => return Err(fail(state.t, records, e)),
            };
            if n % cfg.cadence == 0 || n == n_steps {
                let rec = self.record(&state, &info, f);
                observer(&rec, &state);
                records.push(rec);
            }
        }
        Ok(RunOutput { records, steps, final_state: state })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DirectorBc;

    fn coupler(n: usize, mode: CouplingMode) -> Coupler<f64> {
        let g = GridSpec::unit_square(n).unwrap();
        let h = g.hx();
        let model = ViscosityModel::affine_tanh(1.0, 2.0).unwrap();
        Coupler::new(g, model, DirectorBc::DirichletE, CouplerConfig::new(h * h, 10.0 * h * h).with_mode(mode)).unwrap()
    }

    #[test]
    fn equilibrium_is_fixed_in_both_modes() {
        for mode in [CouplingMode::Lagged, CouplingMode::Picard] {
            let c = coupler(16, mode);
            let s = State::equilibrium(c.grid(), [0.0, 0.0, 1.0], DirectorBc::DirichletE, 0.0);
            let (next, info) = c.step(&s).unwrap();
            assert_eq!(info.picard_iters, 1);
            assert!(next.u.faces().max_abs() < 1e-12);
            assert!(next.theta.values.iter().all(|v| v.abs() < 1e-12));
            assert!(next.d.deviation().iter().all(|a| a.iter().all(|v| v.abs() < 1e-12)));
        }
    }

    #[test]
    fn budget_of_uniform_temperature_is_its_value() {
        let g = GridSpec::unit_square(16).unwrap();
        let s = State::equilibrium(g, [0.0, 0.0, 1.0], DirectorBc::DirichletE, 0.7f64);
        let e = energy_budget(&s);
        assert!((e.total - 0.7).abs() < 1e-14);
        assert_eq!(e.kinetic, 0.0);
        assert_eq!(e.elastic, 0.0);
    }
}
