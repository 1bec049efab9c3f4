//! Manufactured two-subdomain problem on the unit disk, error norms and the
//! convergence-study driver.
//!
//! With `xi = x - (0.3, 0)`, `s = |xi|²`, the inclusion is `s < 0.09` (label 1)
//! and the exact fields are
//!
//! ```text
//! p = 100 (s - 0.09)(0.36 - s)^4 / Phi      for s < 0.36, else 0
//! c = 0.5 + 50 p cos(0.4 x1) sin(0.4 x2) sin(4t)
//! u = -(k / mu(c)) grad p,   w = -D(u) grad c
//! ```
//!
//! Every field is evaluated with the formula of a given subdomain label; each
//! such formula is smooth on the whole disk apart from the `C³` seam at
//! `s = 0.36`, so element quadrature can use the element label directly.

use std::sync::Arc;

use rayon::prelude::*;

use crate::assembly::{AssemblyOptions, ManufacturedSource, Sources};
use crate::coefficients::MediumModel;
use crate::error::{Error, Result};
use crate::geometry::{Point, Vec2};
use crate::mesh::{DiskInterfaceMesh, Mesh, DEFAULT_MESH_SEED};
use crate::quadrature::{build_quadrature, gauss_legendre};
use crate::scheme::{DiscreteState, Problem, Scheme, TimeGrid};
use crate::spaces::{build_spaces, element_points, FieldCoefficients, FluxSpace, ScalarFn, ScalarSpace, SpacePair, VectorFn};

/// Step of the central differences used for `div w`.
pub const FD_STEP: f64 = 1e-5;
/// Points closer than this to the interface have no well-defined source.
pub const INTERFACE_TOLERANCE: f64 = 1e-12;

const INNER_SQ: f64 = 0.09;
const SUPPORT_SQ: f64 = 0.36;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactFields {
    pub p: f64,
    pub c: f64,
    pub u: Vec2,
    pub w: Vec2,
}

#[derive(Debug, Clone)]
pub struct ExactSolution {
    model: MediumModel,
    center: Point,
}

impl Default for ExactSolution {
    fn default() -> Self {
        Self::new(MediumModel::two_phase_inclusion())
    }
}

/// `q(s)` and its first two derivatives.
fn profile(s: f64) -> (f64, f64, f64) {
    if s >= SUPPORT_SQ {
        return (0.0, 0.0, 0.0);
    }
    let a = s - INNER_SQ;
    let b = SUPPORT_SQ - s;
    let q = 100.0 * a * b.powi(4);
    let dq = 100.0 * (b.powi(4) - 4.0 * a * b.powi(3));
    let d2q = 100.0 * (-8.0 * b.powi(3) + 12.0 * a * b * b);
    (q, dq, d2q)
}

fn modulation(x: &Point) -> (f64, Vec2) {
    let (c1, s1) = ((0.4 * x.x).cos(), (0.4 * x.x).sin());
    let (c2, s2) = ((0.4 * x.y).cos(), (0.4 * x.y).sin());
    (c1 * s2, Vec2::new(-0.4 * s1 * s2, 0.4 * c1 * c2))
}

impl ExactSolution {
    pub fn new(model: MediumModel) -> Self {
        Self {
            model,
            center: Point::new(0.3, 0.0),
        }
    }

    pub fn model(&self) -> &MediumModel {
        &self.model
    }

    /// Label of the subdomain containing `x`; points on the interface are
    /// rejected.
    pub fn label_of(&self, x: &Point) -> Result<usize> {
        let r = (x - self.center).norm();
        if (r - INNER_SQ.sqrt()).abs() <= INTERFACE_TOLERANCE {
            return Err(Error::UndefinedPoint(x.x, x.y));
        }
        Ok(usize::from(r < INNER_SQ.sqrt()))
    }

    pub fn pressure(&self, label: usize, x: &Point) -> f64 {
        let xi = x - self.center;
        profile(xi.norm_squared()).0 / self.model.porosity(label)
    }

    pub fn pressure_gradient(&self, label: usize, x: &Point) -> Vec2 {
        let xi = x - self.center;
        xi * (2.0 * profile(xi.norm_squared()).1 / self.model.porosity(label))
    }

    pub fn pressure_laplacian(&self, label: usize, x: &Point) -> f64 {
        let s = (x - self.center).norm_squared();
        let (_, dq, d2q) = profile(s);
        (4.0 * s * d2q + 4.0 * dq) / self.model.porosity(label)
    }

    pub fn concentration(&self, label: usize, x: &Point, t: f64) -> f64 {
        0.5 + 50.0 * self.pressure(label, x) * modulation(x).0 * (4.0 * t).sin()
    }

    pub fn concentration_gradient(&self, label: usize, x: &Point, t: f64) -> Vec2 {
        let (psi, dpsi) = modulation(x);
        let p = self.pressure(label, x);
        (self.pressure_gradient(label, x) * psi + dpsi * p) * (50.0 * (4.0 * t).sin())
    }

    pub fn concentration_dt(&self, label: usize, x: &Point, t: f64) -> f64 {
        200.0 * self.pressure(label, x) * modulation(x).0 * (4.0 * t).cos()
    }

    pub fn velocity(&self, label: usize, x: &Point, t: f64) -> Vec2 {
        let c = self.concentration(label, x, t);
        -self.pressure_gradient(label, x) * (self.model.permeability(label) * self.model.viscosity.reciprocal(c))
    }

    pub fn flux(&self, label: usize, x: &Point, t: f64) -> Vec2 {
        let u = self.velocity(label, x, t);
        -self
            .model
            .dispersion_tensor(label, &u)
            .apply(&self.concentration_gradient(label, x, t))
    }

    pub fn fields_in(&self, label: usize, x: &Point, t: f64) -> ExactFields {
        ExactFields {
            p: self.pressure(label, x),
            c: self.concentration(label, x, t),
            u: self.velocity(label, x, t),
            w: self.flux(label, x, t),
        }
    }

    /// Exact fields at `x` using the subdomain that contains it. On the
    /// interface both one-sided values agree, so label 0 is used there.
    pub fn fields(&self, x: &Point, t: f64) -> ExactFields {
        self.fields_in(self.label_of(x).unwrap_or(0), x, t)
    }

    /// `g = div u`, from analytic second derivatives of `p`.
    pub fn divergence_source(&self, label: usize, x: &Point, t: f64) -> f64 {
        let law = &self.model.viscosity;
        let c = self.concentration(label, x, t);
        let mu = law.eval(c);
        let grad_p = self.pressure_gradient(label, x);
        let grad_c = self.concentration_gradient(label, x, t);
        -self.model.permeability(label)
            * (law.reciprocal(c) * self.pressure_laplacian(label, x) - law.derivative(c) / (mu * mu) * grad_c.dot(&grad_p))
    }

    /// `div w` by fourth-order central differences of the analytic flux.
    pub fn flux_divergence(&self, label: usize, x: &Point, t: f64) -> f64 {
        let h = FD_STEP;
        let d = |e: Vec2, comp: usize| {
            let w = |k: f64| self.flux(label, &(x + e * (k * h)), t)[comp];
            (-w(2.0) + 8.0 * w(1.0) - 8.0 * w(-1.0) + w(-2.0)) / (12.0 * h)
        };
        d(Vec2::new(1.0, 0.0), 0) + d(Vec2::new(0.0, 1.0), 1)
    }

    /// `f = Phi c_t + div w + u . grad c`.
    pub fn concentration_source(&self, label: usize, x: &Point, t: f64) -> f64 {
        self.model.porosity(label) * self.concentration_dt(label, x, t)
            + self.flux_divergence(label, x, t)
            + self.velocity(label, x, t).dot(&self.concentration_gradient(label, x, t))
    }

    /// `(f, g)` at a point off the interface.
    pub fn source_terms(&self, x: &Point, t: f64) -> Result<(f64, f64)> {
        let label = self.label_of(x)?;
        Ok((
            self.concentration_source(label, x, t),
            self.divergence_source(label, x, t),
        ))
    }

    /// `∫_Ω g` by a polar product rule centred on the inclusion, split at the
    /// interface and at the edge of the support.
    pub fn divergence_source_integral(&self, t: f64, radial: usize, angular: usize) -> f64 {
        let (nodes, weights) = gauss_legendre(radial);
        let r_in = INNER_SQ.sqrt();
        let r_out = SUPPORT_SQ.sqrt();
        let mut total = 0.0;
        for (label, (a, b)) in [(1usize, (0.0, r_in)), (0, (r_in, r_out))] {
            for (s, ws) in nodes.iter().zip(&weights) {
                let r = a + (b - a) * s;
                let mut ring = 0.0;
                for j in 0..angular {
                    let th = 2.0 * std::f64::consts::PI * j as f64 / angular as f64;
                    let x = self.center + Vec2::new(r * th.cos(), r * th.sin());
                    ring += self.divergence_source(label, &x, t);
                }
                total += ws * (b - a) * r * ring * 2.0 * std::f64::consts::PI / angular as f64;
            }
        }
        total
    }
}

impl ManufacturedSource for ExactSolution {
    fn divergence_source(&self, label: usize, x: &Point, t: f64) -> f64 {
        ExactSolution::divergence_source(self, label, x, t)
    }

    fn concentration_source(&self, label: usize, x: &Point, t: f64) -> f64 {
        ExactSolution::concentration_source(self, label, x, t)
    }
}

/// Quadrature order for error norms at degree `r`.
pub fn error_quad_order(r: usize) -> usize {
    2 * r + 4
}

/// `‖field - exact‖_{L²}` with `exact(label, x)`.
pub fn l2_error_scalar(space: &ScalarSpace, field: &FieldCoefficients, exact: &impl ScalarFn) -> Result<f64> {
    let mesh = space.mesh();
    let quad = build_quadrature(error_quad_order(space.degree()))?;
    let sum: f64 = (0..mesh.num_triangles())
        .map(|t| {
            let label = mesh.label(t);
            element_points(space.geometry(t), &quad)
                .map(|(x, w)| w * (space.eval(field, t, &x) - exact(label, &x)).powi(2))
                .sum::<f64>()
        })
        .sum();
    Ok(sum.sqrt())
}

/// `‖field - exact‖_{L²}` for a flux-space field.
pub fn l2_error_flux(space: &FluxSpace, field: &FieldCoefficients, exact: &impl VectorFn) -> Result<f64> {
    let mesh = space.mesh();
    let quad = build_quadrature(error_quad_order(space.degree()))?;
    let sum: f64 = (0..mesh.num_triangles())
        .map(|t| {
            let label = mesh.label(t);
            let geo = mesh.geometry(t);
            element_points(&geo, &quad)
                .map(|(x, w)| w * (space.eval(field, t, &x).0 - exact(label, &x)).norm_squared())
                .sum::<f64>()
        })
        .sum();
    Ok(sum.sqrt())
}

/// `(Σ_{n=1}^N tau ‖W^n - w^n‖²)^{1/2}` from the per-step errors.
pub fn time_integrated_flux_error(tau: f64, step_errors: &[f64]) -> Result<f64> {
    if step_errors.is_empty() {
        return Err(Error::InvalidInput("no flux errors recorded".into()));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {tau}")));
    }
    Ok(step_errors.iter().map(|e| tau * e * e).sum::<f64>().sqrt())
}

/// Builds the manufactured problem on `mesh`.
pub fn manufactured_problem(mesh: Arc<Mesh>, degree: usize, exact: Arc<ExactSolution>) -> Result<Problem> {
    Ok(Problem {
        spaces: build_spaces(mesh, degree)?,
        model: exact.model().clone(),
        sources: Sources::Manufactured(exact),
        assembly: AssemblyOptions::default(),
    })
}

/// Errors of one manufactured run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunErrors {
    pub tau: f64,
    pub m: usize,
    /// Measured mesh size (longest edge).
    pub mesh_size: f64,
    pub err_u: f64,
    pub err_c: f64,
    pub err_p: f64,
    pub err_w_timeint: f64,
    pub max_divergence_residual: f64,
    /// `max_n |∫P^n| / ‖P^n‖`.
    pub max_relative_pressure_mean: f64,
}

impl RunErrors {
    /// Nominal mesh parameter `1/M`.
    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }
}

/// Final-time errors of `state` against the exact solution.
pub fn final_errors(spaces: &SpacePair, exact: &ExactSolution, state: &DiscreteState) -> Result<(f64, f64, f64)> {
    let t = state.time;
    let err_u = l2_error_flux(&spaces.flux, &state.velocity, &|l, x: &Point| exact.velocity(l, x, t))?;
    let err_c = l2_error_scalar(&spaces.scalar, &state.concentration, &|l, x: &Point| {
        exact.concentration(l, x, t)
    })?;
    let mesh = spaces.mesh();
    let quad = build_quadrature(error_quad_order(spaces.degree()))?;
    let p_mean = (0..mesh.num_triangles())
        .map(|e| {
            element_points(spaces.scalar.geometry(e), &quad)
                .map(|(x, w)| w * exact.pressure(mesh.label(e), &x))
                .sum::<f64>()
        })
        .sum::<f64>()
        / mesh.area();
    let err_p = l2_error_scalar(&spaces.scalar, &state.pressure, &|l, x: &Point| exact.pressure(l, x) - p_mean)?;
    Ok((err_u, err_c, err_p))
}

/// Runs the manufactured problem with step `tau` on a generated mesh with
/// `m` boundary nodes up to `final_time`.
pub fn run_manufactured(tau: f64, m: usize, final_time: f64, degree: usize, seed: u64) -> Result<RunErrors> {
    let mesh = Arc::new(DiskInterfaceMesh::new(m).with_seed(seed).generate()?);
    run_manufactured_on(mesh, tau, final_time, degree)
}

pub fn run_manufactured_on(mesh: Arc<Mesh>, tau: f64, final_time: f64, degree: usize) -> Result<RunErrors> {
    let m = mesh.edges_with_marker(|k| k == crate::mesh::EdgeMarker::Boundary).count();
    let mesh_size = mesh.h();
    let exact = Arc::new(ExactSolution::default());
    let problem = manufactured_problem(mesh, degree, exact.clone())?;
    let grid = TimeGrid::from_step(final_time, tau)?;
    let scheme = Scheme::new(problem, grid)?;
    let spaces = &scheme.problem().spaces;

    let mut flux_errors = Vec::with_capacity(grid.steps);
    let mut flux_failure = None;
    let mut max_div: f64 = 0.0;
    let mut max_mean: f64 = 0.0;
    let c0 = |l: usize, x: &Point| exact.concentration(l, x, 0.0);
    let out = scheme.run(&c0, None, |state, diag| {
        max_div = max_div.max(diag.divergence_residual);
        if diag.pressure_norm > 0.0 {
            max_mean = max_mean.max(diag.pressure_mean.abs() / diag.pressure_norm);
        }
        if state.n > 0 {
            let t = state.time;
            match l2_error_flux(&spaces.flux, &state.flux, &|l, x: &Point| exact.flux(l, x, t)) {
                Ok(e) => flux_errors.push(e),
                Err(e) => flux_failure = Some(e),
            }
        }
    })?;
    if let Some(e) = flux_failure {
        return Err(e);
    }
    let (err_u, err_c, err_p) = final_errors(spaces, &exact, &out.final_state)?;
    Ok(RunErrors {
        tau,
        m,
        mesh_size,
        err_u,
        err_c,
        err_p,
        err_w_timeint: time_integrated_flux_error(grid.tau(), &flux_errors)?,
        max_divergence_residual: max_div,
        max_relative_pressure_mean: max_mean,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefinementMode {
    /// `tau` and `h` refined together.
    Coupled,
    /// `tau` held fixed while `h` is refined; rows are grouped by `tau`.
    FixedTau,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub name: String,
    pub mode: RefinementMode,
    /// `(tau, M)` pairs in report order.
    pub rows: Vec<(f64, usize)>,
    pub final_time: f64,
    pub degree: usize,
    pub seed: u64,
}

impl StudyConfig {
    pub fn table1() -> Self {
        Self {
            name: "table1".into(),
            mode: RefinementMode::Coupled,
            rows: vec![(1.0 / 8.0, 32), (1.0 / 32.0, 64), (1.0 / 128.0, 128)],
            final_time: 1.0,
            degree: 1,
            seed: DEFAULT_MESH_SEED,
        }
    }

    pub fn table2() -> Self {
        let rows = [0.2, 0.1, 0.05]
            .iter()
            .flat_map(|&tau| [32, 64, 96, 128].map(|m| (tau, m)))
            .collect();
        Self {
            name: "table2".into(),
            mode: RefinementMode::FixedTau,
            rows,
            final_time: 1.0,
            degree: 1,
            seed: DEFAULT_MESH_SEED,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "table1" => Ok(Self::table1()),
            "table2" => Ok(Self::table2()),
            other => Err(Error::InvalidParameter(format!(
                "unknown preset '{other}' (expected table1 or table2)"
            ))),
        }
    }
}

/// `ln(e_coarse / e_fine) / ln 2`.
pub fn convergence_rate(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).ln() / std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub coarse: usize,
    pub fine: usize,
    pub u: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub name: String,
    pub mode: RefinementMode,
    pub rows: Vec<RunErrors>,
}

impl ConvergenceReport {
    /// Rates between consecutive rows (within each `tau` group for
    /// [`RefinementMode::FixedTau`]).
    pub fn rates(&self) -> Vec<Rate> {
        self.rows
            .windows(2)
            .enumerate()
            .filter(|(_, w)| self.mode == RefinementMode::Coupled || w[0].tau == w[1].tau)
            .map(|(i, w)| Rate {
                coarse: i,
                fine: i + 1,
                u: convergence_rate(w[0].err_u, w[1].err_u),
                c: convergence_rate(w[0].err_c, w[1].err_c),
            })
            .collect()
    }

    /// Rate between the two finest rows.
    pub fn finest_rate(&self) -> Option<Rate> {
        self.rates().last().copied()
    }

    pub fn write_csv(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "tau,h,err_U,err_C,err_P,err_W_timeint")?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
                r.tau,
                r.h(),
                r.err_u,
                r.err_c,
                r.err_p,
                r.err_w_timeint
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    /// Plain-text table in the layout of the published tables.
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let line = format!("{}\n", "-".repeat(62));
        s.push_str(&line);
        s.push_str(&format!(
            "{:<8} | {:<6} | {:>12} | {:>12} | {:>12}\n",
            "tau", "h", "|U_h - u|", "|C_h - c|", "|W| (t-int)"
        ));
        s.push_str(&line);
        let fmt_tau = |tau: f64| {
            let inv = 1.0 / tau;
            if (inv - inv.round()).abs() < 1e-9 && inv.round() > 1.0 && self.mode == RefinementMode::Coupled {
                format!("1/{}", inv.round())
            } else {
                format!("{tau}")
            }
        };
        for r in &self.rows {
            s.push_str(&format!(
                "{:<8} | {:<6} | {:>12.3E} | {:>12.3E} | {:>12.3E}\n",
                fmt_tau(r.tau),
                format!("1/{}", r.m),
                r.err_u,
                r.err_c,
                r.err_w_timeint
            ));
        }
        s.push_str(&line);
        match self.mode {
            RefinementMode::Coupled => {
                if let Some(rate) = self.finest_rate() {
                    s.push_str(&format!(
                        "{:<17} | {:>12.2} | {:>12.2} |\n",
                        "convergence rate", rate.u, rate.c
                    ));
                    s.push_str(&line);
                }
            }
            RefinementMode::FixedTau => {}
        }
        s
    }
}

/// Runs every row of `config`, concurrently on the current rayon pool.
/// Rows are independent; the report keeps the configured order.
pub fn convergence_study(config: &StudyConfig) -> Result<ConvergenceReport> {
    if config.rows.len() < 2 {
        return Err(Error::InvalidInput("a convergence study needs at least two rows".into()));
    }
    let rows: Vec<Result<RunErrors>> = config
        .rows
        .par_iter()
        .map(|&(tau, m)| {
            log::info!("{}: starting tau = {tau}, M = {m}", config.name);
            let r = run_manufactured(tau, m, config.final_time, config.degree, config.seed)
                .map_err(|e| e.annotate(format!("row tau = {tau}, M = {m}")));
            if let Ok(r) = &r {
                log::info!("{}: tau = {tau}, M = {m}: err_U = {:.3e}, err_C = {:.3e}", config.name, r.err_u, r.err_c);
            }
            r
        })
        .collect();
    Ok(ConvergenceReport {
        name: config.name.clone(),
        mode: config.mode,
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

/// Convenience for `convergence_study` on a dedicated pool of `threads`.
pub fn convergence_study_with_threads(config: &StudyConfig, threads: usize) -> Result<ConvergenceReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| convergence_study(config))
}

/// Errors of the projections of the exact fields at one resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionErrors {
    pub m: usize,
    /// `‖c - Pi_h c‖` (L² projection).
    pub l2_projection_c: f64,
    /// `‖w - Q_h w‖` (canonical flux interpolant).
    pub fortin_w: f64,
    /// Mixed Ritz projection errors `‖c - C̄‖` and `‖w - W̄‖`.
    pub ritz_c: f64,
    pub ritz_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionReport {
    pub time: f64,
    pub rows: Vec<ProjectionErrors>,
}

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let (x, y): (Vec<f64>, Vec<f64>) = h.iter().zip(e).map(|(h, e)| (h.ln(), e.ln())).unzip();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

impl ProjectionReport {
    /// Fitted slopes `(l2 c, fortin w, ritz c, ritz w)` against `h = 1/M`.
    pub fn slopes(&self) -> [f64; 4] {
        let h: Vec<f64> = self.rows.iter().map(|r| 1.0 / r.m as f64).collect();
        let col = |f: fn(&ProjectionErrors) -> f64| fitted_slope(&h, &self.rows.iter().map(f).collect::<Vec<_>>());
        [
            col(|r| r.l2_projection_c),
            col(|r| r.fortin_w),
            col(|r| r.ritz_c),
            col(|r| r.ritz_w),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("M,h,err_l2proj_C,err_fortin_W,err_ritz_C,err_ritz_W\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}\n",
                r.m,
                1.0 / r.m as f64,
                r.l2_projection_c,
                r.fortin_w,
                r.ritz_c,
                r.ritz_w
            ));
        }
        s
    }
}

/// Projection errors of `(c, w)` at time `t` on one mesh.
pub fn projection_errors(mesh: Arc<Mesh>, degree: usize, exact: &ExactSolution, t: f64) -> Result<ProjectionErrors> {
    use crate::spaces::{fortin_project, l2_project, mixed_ritz_project};
    let m = mesh.edges_with_marker(|k| k == crate::mesh::EdgeMarker::Boundary).count();
    let spaces = build_spaces(mesh, degree)?;
    let c = |l: usize, x: &Point| exact.concentration(l, x, t);
    let w = |l: usize, x: &Point| exact.flux(l, x, t);
    let quad = build_quadrature(error_quad_order(degree) + 2)?;
    let pi_c = l2_project(&spaces.scalar, &c, &quad)?;
    let q_w = fortin_project(&spaces.flux, &w);
    let model = exact.model();
    let ritz = mixed_ritz_project(&spaces, &c, &w, |l, x| {
        model.dispersion_tensor_inverse(l, &exact.velocity(l, x, t))
    })?;
    Ok(ProjectionErrors {
        m,
        l2_projection_c: l2_error_scalar(&spaces.scalar, &pi_c, &c)?,
        fortin_w: l2_error_flux(&spaces.flux, &q_w, &w)?,
        ritz_c: l2_error_scalar(&spaces.scalar, &ritz.scalar, &c)?,
        ritz_w: l2_error_flux(&spaces.flux, &ritz.flux, &w)?,
    })
}

/// Projection errors over a mesh family generated with `seed`.
pub fn projection_study(ms: &[usize], degree: usize, t: f64, seed: u64) -> Result<ProjectionReport> {
    let exact = ExactSolution::default();
    let rows = ms
        .par_iter()
        .map(|&m| {
            let mesh = Arc::new(DiskInterfaceMesh::new(m).with_seed(seed).generate()?);
            projection_errors(mesh, degree, &exact, t).map_err(|e| e.annotate(format!("projection at M = {m}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProjectionReport { time: t, rows })
}
