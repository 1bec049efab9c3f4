//! Sparse saddle-point systems for the pressure and concentration solves.
//!
//! Unknowns are ordered `[flux; scalar; multiplier?]` and the global matrix is
//!
//! ```text
//! [ A        -Bt   0 ]
//! [ B - G     C    m ]
//! [ 0         m^T  0 ]
//! ```
//!
//! where `A` is a weighted flux mass matrix, `B_ij = (div psi_j, phi_i)`,
//! `Bt_ij = (phi_j, div psi_i)`, `G_ij = (beta . psi_j, phi_i)` a convective
//! coupling, `C` a weighted scalar mass matrix and `m` the optional zero-mean
//! border.

use std::sync::Arc;

use rayon::prelude::*;

use crate::coefficients::{MediumModel, SpdTensor2};
use crate::error::{Error, Result};
use crate::geometry::{Point, Vec2};
use crate::quadrature::{build_quadrature, Quadrature};
use crate::sparse::{CooMatrix, CsrMatrix};
use crate::spaces::{element_points, FieldCoefficients, SpacePair};

/// Injection/production wells: `q_I`, `q_P` and the injected concentration.
pub trait WellSource: Send + Sync {
    fn injection(&self, label: usize, x: &Point, t: f64) -> f64;
    fn production(&self, label: usize, x: &Point, t: f64) -> f64;
    fn injected_concentration(&self, label: usize, x: &Point, t: f64) -> f64;
}

/// Free right-hand sides: `g` in the divergence equation and `f` in the
/// concentration equation.
pub trait ManufacturedSource: Send + Sync {
    fn divergence_source(&self, label: usize, x: &Point, t: f64) -> f64;
    fn concentration_source(&self, label: usize, x: &Point, t: f64) -> f64;
}

#[derive(Clone, Default)]
pub enum Sources {
    #[default]
    None,
    Wells(Arc<dyn WellSource>),
    Manufactured(Arc<dyn ManufacturedSource>),
}

impl std::fmt::Debug for Sources {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sources::None => "Sources::None",
            Sources::Wells(_) => "Sources::Wells",
            Sources::Manufactured(_) => "Sources::Manufactured",
        })
    }
}

impl Sources {
    /// `q_I - q_P` (wells) or `g` (manufactured).
    pub fn pressure_source(&self, label: usize, x: &Point, t: f64) -> f64 {
        match self {
            Sources::None => 0.0,
            Sources::Wells(w) => w.injection(label, x, t) - w.production(label, x, t),
            Sources::Manufactured(m) => m.divergence_source(label, x, t),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AssemblyOptions {
    /// Volume quadrature order; `None` selects `2r + 2`.
    pub quad_order: Option<usize>,
    /// Element visiting order; `None` is the natural order.
    pub element_order: Option<Vec<usize>>,
}

impl AssemblyOptions {
    fn quadrature(&self, degree: usize) -> Result<Quadrature> {
        build_quadrature(self.quad_order.unwrap_or(2 * degree + 2))
    }

    fn order(&self, n: usize) -> Vec<usize> {
        self.element_order.clone().unwrap_or_else(|| (0..n).collect())
    }
}

#[derive(Debug, Clone)]
pub struct MeanConstraint {
    /// `∫ phi_i` for each scalar basis function.
    pub weights: Vec<f64>,
    /// Prescribed value of `∫ S`.
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub flux_mass: CsrMatrix,
    pub divergence: CsrMatrix,
    pub gradient: CsrMatrix,
    pub scalar_block: Option<CsrMatrix>,
    pub convection: Option<CsrMatrix>,
    pub rhs_flux: Vec<f64>,
    pub rhs_scalar: Vec<f64>,
    pub mean_constraint: Option<MeanConstraint>,
}

impl SaddleSystem {
    pub fn nflux(&self) -> usize {
        self.flux_mass.nrows
    }

    pub fn nscalar(&self) -> usize {
        self.divergence.nrows
    }

    pub fn size(&self) -> usize {
        self.nflux() + self.nscalar() + usize::from(self.mean_constraint.is_some())
    }

    pub fn without_mean_constraint(&self) -> Self {
        Self {
            mean_constraint: None,
            ..self.clone()
        }
    }

    pub fn global_matrix(&self) -> CsrMatrix {
        let (nf, ns) = (self.nflux(), self.nscalar());
        let n = self.size();
        let mut coo = CooMatrix::new(n, n);
        let mut put = |m: &CsrMatrix, r0: usize, c0: usize, scale: f64| {
            for r in 0..m.nrows {
                for (c, v) in m.row(r) {
                    coo.push(r0 + r, c0 + c, scale * v);
                }
            }
        };
        put(&self.flux_mass, 0, 0, 1.0);
        put(&self.gradient, 0, nf, -1.0);
        put(&self.divergence, nf, 0, 1.0);
        if let Some(g) = &self.convection {
            put(g, nf, 0, -1.0);
        }
        if let Some(c) = &self.scalar_block {
            put(c, nf, nf, 1.0);
        }
        if let Some(mc) = &self.mean_constraint {
            for (i, w) in mc.weights.iter().enumerate() {
                coo.push(nf + i, nf + ns, *w);
                coo.push(nf + ns, nf + i, *w);
            }
        }
        coo.to_csr()
    }

    pub fn global_rhs(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.size());
        b.extend_from_slice(&self.rhs_flux);
        b.extend_from_slice(&self.rhs_scalar);
        if let Some(mc) = &self.mean_constraint {
            b.push(mc.value);
        }
        b
    }

    /// Splits a global solution into (flux, scalar, multiplier).
    pub fn split(&self, x: &[f64]) -> (FieldCoefficients, FieldCoefficients, Option<f64>) {
        let (nf, ns) = (self.nflux(), self.nscalar());
        (
            FieldCoefficients {
                values: x[..nf].to_vec(),
            },
            FieldCoefficients {
                values: x[nf..nf + ns].to_vec(),
            },
            self.mean_constraint.as_ref().map(|_| x[nf + ns]),
        )
    }
}

/// Runs `local` over every element in the requested order and concatenates
/// the element triplets in that order.
fn accumulate<F>(nrows: usize, ncols: usize, order: &[usize], local: F) -> CooMatrix
where
    F: Fn(usize, &mut CooMatrix) + Sync,
{
    let chunks: Vec<CooMatrix> = order
        .par_chunks(256)
        .map(|chunk| {
            let mut coo = CooMatrix::new(nrows, ncols);
            for &t in chunk {
                local(t, &mut coo);
            }
            coo
        })
        .collect();
    let mut coo = CooMatrix::new(nrows, ncols);
    for c in &chunks {
        coo.append(c);
    }
    coo
}

fn accumulate_vec<F>(n: usize, order: &[usize], local: F) -> Vec<f64>
where
    F: Fn(usize, &mut Vec<(usize, f64)>) + Sync,
{
    let chunks: Vec<Vec<(usize, f64)>> = order
        .par_chunks(256)
        .map(|chunk| {
            let mut out = Vec::new();
            for &t in chunk {
                local(t, &mut out);
            }
            out
        })
        .collect();
    let mut v = vec![0.0; n];
    for c in chunks {
        for (i, x) in c {
            v[i] += x;
        }
    }
    v
}

/// `(K psi_j, psi_i)` with a tensor weight `K(t, x)`.
pub fn assemble_flux_mass(
    spaces: &SpacePair,
    weight: impl Fn(usize, &Point) -> SpdTensor2 + Sync,
    opts: &AssemblyOptions,
) -> Result<CsrMatrix> {
    let flux = &spaces.flux;
    let quad = opts.quadrature(spaces.degree())?;
    let nf = flux.ndofs();
    let order = opts.order(spaces.mesh().num_triangles());
    let coo = accumulate(nf, nf, &order, |t, coo| {
        let dofs = flux.dofs(t);
        let n = dofs.len();
        let mut local = [[0.0; 8]; 8];
        for (x, w) in element_points(spaces.scalar.geometry(t), &quad) {
            let b = flux.basis(t, &x);
            let k = weight(t, &x);
            for j in 0..n {
                let kv = k.apply(&b.values[j]);
                for i in 0..n {
                    local[i][j] += w * kv.dot(&b.values[i]);
                }
            }
        }
        for (i, di) in dofs.iter().enumerate() {
            let Some(gi) = di else { continue };
            for (j, dj) in dofs.iter().enumerate() {
                if let Some(gj) = dj {
                    coo.push(*gi, *gj, local[i][j]);
                }
            }
        }
    });
    Ok(coo.to_csr())
}

/// `B_ij = (div psi_j, phi_i)`.
pub fn assemble_divergence(spaces: &SpacePair, opts: &AssemblyOptions) -> Result<CsrMatrix> {
    let (flux, scalar) = (&spaces.flux, &spaces.scalar);
    let quad = opts.quadrature(spaces.degree())?;
    let order = opts.order(spaces.mesh().num_triangles());
    let coo = accumulate(scalar.ndofs(), flux.ndofs(), &order, |t, coo| {
        let dofs = flux.dofs(t);
        let ns = scalar.local_dim();
        let mut local = [[0.0; 8]; 3];
        for (x, w) in element_points(scalar.geometry(t), &quad) {
            let b = flux.basis(t, &x);
            let phi = scalar.basis(t, &x);
            for i in 0..ns {
                for j in 0..dofs.len() {
                    local[i][j] += w * b.divergence[j] * phi[i];
                }
            }
        }
        for i in 0..ns {
            for (j, dj) in dofs.iter().enumerate() {
                if let Some(gj) = dj {
                    coo.push(scalar.dof(t, i), *gj, local[i][j]);
                }
            }
        }
    });
    Ok(coo.to_csr())
}

/// `Bt_ij = (phi_j, div psi_i)`, assembled independently of [`assemble_divergence`].
pub fn assemble_gradient(spaces: &SpacePair, opts: &AssemblyOptions) -> Result<CsrMatrix> {
    let (flux, scalar) = (&spaces.flux, &spaces.scalar);
    let quad = opts.quadrature(spaces.degree())?;
    let order = opts.order(spaces.mesh().num_triangles());
    let coo = accumulate(flux.ndofs(), scalar.ndofs(), &order, |t, coo| {
        let dofs = flux.dofs(t);
        for (x, w) in element_points(scalar.geometry(t), &quad) {
            let b = flux.basis(t, &x);
            let phi = scalar.basis(t, &x);
            for (i, di) in dofs.iter().enumerate() {
                let Some(gi) = di else { continue };
                for j in 0..scalar.local_dim() {
                    coo.push(*gi, scalar.dof(t, j), w * phi[j] * b.divergence[i]);
                }
            }
        }
    });
    Ok(coo.to_csr())
}

/// `(c phi_j, phi_i)` with a scalar weight `c(t, x)`.
pub fn assemble_scalar_mass(
    spaces: &SpacePair,
    weight: impl Fn(usize, &Point) -> f64 + Sync,
    opts: &AssemblyOptions,
) -> Result<CsrMatrix> {
    let scalar = &spaces.scalar;
    let quad = opts.quadrature(spaces.degree())?;
    let order = opts.order(spaces.mesh().num_triangles());
    let ns = scalar.ndofs();
    let coo = accumulate(ns, ns, &order, |t, coo| {
        let n = scalar.local_dim();
        let mut local = [[0.0; 3]; 3];
        for (x, w) in element_points(scalar.geometry(t), &quad) {
            let phi = scalar.basis(t, &x);
            let c = weight(t, &x);
            for i in 0..n {
                for j in 0..n {
                    local[i][j] += w * c * phi[i] * phi[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                coo.push(scalar.dof(t, i), scalar.dof(t, j), local[i][j]);
            }
        }
    });
    Ok(coo.to_csr())
}

/// `G_ij = (beta . psi_j, phi_i)` with a vector weight `beta(t, x)`.
pub fn assemble_convection(
    spaces: &SpacePair,
    beta: impl Fn(usize, &Point) -> Vec2 + Sync,
    opts: &AssemblyOptions,
) -> Result<CsrMatrix> {
    let (flux, scalar) = (&spaces.flux, &spaces.scalar);
    let quad = opts.quadrature(spaces.degree())?;
    let order = opts.order(spaces.mesh().num_triangles());
    let coo = accumulate(scalar.ndofs(), flux.ndofs(), &order, |t, coo| {
        let dofs = flux.dofs(t);
        let ns = scalar.local_dim();
        let mut local = [[0.0; 8]; 3];
        for (x, w) in element_points(scalar.geometry(t), &quad) {
            let b = flux.basis(t, &x);
            let phi = scalar.basis(t, &x);
            let bx = beta(t, &x);
            for i in 0..ns {
                for j in 0..dofs.len() {
                    local[i][j] += w * bx.dot(&b.values[j]) * phi[i];
                }
            }
        }
        for i in 0..ns {
            for (j, dj) in dofs.iter().enumerate() {
                if let Some(gj) = dj {
                    coo.push(scalar.dof(t, i), *gj, local[i][j]);
                }
            }
        }
    });
    Ok(coo.to_csr())
}

/// `(f, phi_i)` for a scalar load `f(t, x)`.
pub fn assemble_scalar_load(
    spaces: &SpacePair,
    f: impl Fn(usize, &Point) -> f64 + Sync,
    opts: &AssemblyOptions,
) -> Result<Vec<f64>> {
    let scalar = &spaces.scalar;
    let quad = opts.quadrature(spaces.degree())?;
    let order = opts.order(spaces.mesh().num_triangles());
    Ok(accumulate_vec(scalar.ndofs(), &order, |t, out| {
        let mut local = [0.0; 3];
        for (x, w) in element_points(scalar.geometry(t), &quad) {
            let phi = scalar.basis(t, &x);
            let fx = f(t, &x);
            for i in 0..scalar.local_dim() {
                local[i] += w * fx * phi[i];
            }
        }
        for i in 0..scalar.local_dim() {
            out.push((scalar.dof(t, i), local[i]));
        }
    }))
}

/// `(v, psi_i)` for a vector load `v(t, x)`.
pub fn assemble_flux_load(
    spaces: &SpacePair,
    v: impl Fn(usize, &Point) -> Vec2 + Sync,
    opts: &AssemblyOptions,
) -> Result<Vec<f64>> {
    let flux = &spaces.flux;
    let quad = opts.quadrature(spaces.degree())?;
    let order = opts.order(spaces.mesh().num_triangles());
    Ok(accumulate_vec(flux.ndofs(), &order, |t, out| {
        let dofs = flux.dofs(t);
        let mut local = [0.0; 8];
        for (x, w) in element_points(spaces.scalar.geometry(t), &quad) {
            let b = flux.basis(t, &x);
            let vx = v(t, &x);
            for k in 0..dofs.len() {
                local[k] += w * vx.dot(&b.values[k]);
            }
        }
        for (k, d) in dofs.iter().enumerate() {
            if let Some(g) = d {
                out.push((*g, local[k]));
            }
        }
    }))
}

/// `(phi, div psi_i)` for a scalar function `phi(t, x)`.
pub fn assemble_divergence_load(
    spaces: &SpacePair,
    phi: impl Fn(usize, &Point) -> f64 + Sync,
    opts: &AssemblyOptions,
) -> Result<Vec<f64>> {
    let flux = &spaces.flux;
    let quad = opts.quadrature(spaces.degree())?;
    let order = opts.order(spaces.mesh().num_triangles());
    Ok(accumulate_vec(flux.ndofs(), &order, |t, out| {
        let dofs = flux.dofs(t);
        let mut local = [0.0; 8];
        for (x, w) in element_points(spaces.scalar.geometry(t), &quad) {
            let b = flux.basis(t, &x);
            let px = phi(t, &x);
            for k in 0..dofs.len() {
                local[k] += w * px * b.divergence[k];
            }
        }
        for (k, d) in dofs.iter().enumerate() {
            if let Some(g) = d {
                out.push((*g, local[k]));
            }
        }
    }))
}

/// L² norm of a scalar load function, for scaling compatibility checks.
fn load_l2_norm(spaces: &SpacePair, f: &(impl Fn(usize, &Point) -> f64 + Sync), quad: &Quadrature) -> f64 {
    let mesh = spaces.mesh();
    (0..mesh.num_triangles())
        .map(|t| {
            element_points(spaces.scalar.geometry(t), quad)
                .map(|(x, w)| w * f(t, &x).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// Pressure–velocity system at time `t`:
/// `(mu(C)/k U, v) - (P, div v) = 0`, `(div U, phi) = (q, phi)`, `∫P = 0`,
/// with `q = q_I - q_P` for wells or `g` in manufactured mode.
///
/// Well sources must satisfy `|∫q| <= 1e-8 ||q|| |Ω|^{1/2}`. A manufactured
/// `g` is shifted by its discrete mean, which is nonzero only through
/// geometric and quadrature error on the polygonal mesh.
pub fn assemble_pressure_system(
    spaces: &SpacePair,
    model: &MediumModel,
    concentration: &FieldCoefficients,
    sources: &Sources,
    t: f64,
    opts: &AssemblyOptions,
) -> Result<SaddleSystem> {
    let mesh = spaces.mesh();
    let scalar = &spaces.scalar;
    if concentration.len() != scalar.ndofs() {
        return Err(Error::InvalidInput(format!(
            "concentration has {} coefficients, space has {}",
            concentration.len(),
            scalar.ndofs()
        )));
    }
    let flux_mass = assemble_flux_mass(
        spaces,
        |e, x| SpdTensor2::scaled_identity(model.resistance(mesh.label(e), scalar.eval(concentration, e, x))),
        opts,
    )?;
    let divergence = assemble_divergence(spaces, opts)?;
    let gradient = assemble_gradient(spaces, opts)?;

    let q = |e: usize, x: &Point| sources.pressure_source(mesh.label(e), x, t);
    let mut rhs_scalar = assemble_scalar_load(spaces, q, opts)?;
    let weights = scalar.basis_integrals();
    let integral: f64 = rhs_scalar.iter().sum();
    match sources {
        Sources::Manufactured(_) => {
            let shift = integral / mesh.area();
            for (r, m) in rhs_scalar.iter_mut().zip(&weights) {
                *r -= shift * m;
            }
            log::debug!("divergence source mean shift {shift:.3e} at t = {t}");
        }
        Sources::Wells(_) => {
            let quad = opts.quadrature(spaces.degree())?;
            let tolerance = 1e-8 * load_l2_norm(spaces, &q, &quad) * mesh.area().sqrt();
            if integral.abs() > tolerance {
                return Err(Error::Compatibility { integral, tolerance });
            }
        }
        Sources::None => {}
    }

    Ok(SaddleSystem {
        rhs_flux: vec![0.0; spaces.flux.ndofs()],
        flux_mass,
        divergence,
        gradient,
        scalar_block: None,
        convection: None,
        rhs_scalar,
        mean_constraint: Some(MeanConstraint { weights, value: 0.0 }),
    })
}

/// Concentration–flux system for the step to `t_next = t_n + tau`:
///
/// `(D(U)^{-1} W, v) - (C, div v) = 0`
/// `(Phi/tau C, phi) + (div W, phi) - (D(U)^{-1} U . W, phi) [+ (q_I C, phi)]
///     = (Phi/tau C^n, phi) + (f or c_hat q_I, phi)`
///
/// `velocity` is `U_h^n` and `previous` is `C_h^n`.
pub fn assemble_concentration_system(
    spaces: &SpacePair,
    model: &MediumModel,
    velocity: &FieldCoefficients,
    previous: &FieldCoefficients,
    tau: f64,
    sources: &Sources,
    t_next: f64,
    opts: &AssemblyOptions,
) -> Result<SaddleSystem> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {tau}")));
    }
    let mesh = spaces.mesh();
    let (scalar, flux) = (&spaces.scalar, &spaces.flux);
    if velocity.len() != flux.ndofs() || previous.len() != scalar.ndofs() {
        return Err(Error::InvalidInput("velocity or concentration has the wrong length".into()));
    }
    let u_at = |e: usize, x: &Point| flux.eval(velocity, e, x).0;
    let d_inv = |e: usize, x: &Point| model.dispersion_tensor_inverse(mesh.label(e), &u_at(e, x));

    let flux_mass = assemble_flux_mass(spaces, d_inv, opts)?;
    let divergence = assemble_divergence(spaces, opts)?;
    let gradient = assemble_gradient(spaces, opts)?;
    let convection = assemble_convection(
        spaces,
        |e, x| {
            let u = u_at(e, x);
            model.dispersion_tensor_inverse(mesh.label(e), &u).apply(&u)
        },
        opts,
    )?;
    let scalar_block = assemble_scalar_mass(
        spaces,
        |e, x| {
            let label = mesh.label(e);
            let reaction = match sources {
                Sources::Wells(w) => w.injection(label, x, t_next),
                _ => 0.0,
            };
            model.porosity(label) / tau + reaction
        },
        opts,
    )?;
    let rhs_scalar = assemble_scalar_load(
        spaces,
        |e, x| {
            let label = mesh.label(e);
            let storage = model.porosity(label) / tau * scalar.eval(previous, e, x);
            let source = match sources {
                Sources::None => 0.0,
                Sources::Wells(w) => w.injected_concentration(label, x, t_next) * w.injection(label, x, t_next),
                Sources::Manufactured(m) => m.concentration_source(label, x, t_next),
            };
            storage + source
        },
        opts,
    )?;
    Ok(SaddleSystem {
        rhs_flux: vec![0.0; flux.ndofs()],
        flux_mass,
        divergence,
        gradient,
        scalar_block: Some(scalar_block),
        convection: Some(convection),
        rhs_scalar,
        mean_constraint: None,
    })
}

/// A smoothed point well: `rate * 3/(pi R²) * (1 - rho²)²` for
/// `rho = |x - center| / R < 1`, which integrates to `rate` when the support
/// lies inside the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Well {
    pub center: Point,
    pub rate: f64,
    pub radius: f64,
}

impl Well {
    pub fn density(&self, x: &Point) -> f64 {
        let rho2 = (x - self.center).norm_squared() / (self.radius * self.radius);
        if rho2 >= 1.0 {
            return 0.0;
        }
        let b = 1.0 - rho2;
        self.rate * 3.0 / (std::f64::consts::PI * self.radius * self.radius) * b * b
    }
}

/// Steady injectors and producers with a fixed injected concentration.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothWells {
    pub injectors: Vec<Well>,
    pub producers: Vec<Well>,
    pub concentration: f64,
    producer_scale: f64,
}

impl SmoothWells {
    pub fn new(injectors: Vec<Well>, producers: Vec<Well>, concentration: f64) -> Result<Self> {
        for w in injectors.iter().chain(&producers) {
            if !(w.rate >= 0.0 && w.radius > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "well at ({}, {}) needs a non-negative rate and a positive radius",
                    w.center.x, w.center.y
                )));
            }
        }
        Ok(Self {
            injectors,
            producers,
            concentration,
            producer_scale: 1.0,
        })
    }

    /// Rescales the producers so that the discrete integrals of `q_I` and
    /// `q_P` agree on this mesh with this quadrature.
    pub fn balanced(mut self, spaces: &SpacePair, opts: &AssemblyOptions) -> Result<Self> {
        self.producer_scale = 1.0;
        let inj: f64 = assemble_scalar_load(spaces, |_, x| self.injection(0, x, 0.0), opts)?.iter().sum();
        let prod: f64 = assemble_scalar_load(spaces, |_, x| self.production(0, x, 0.0), opts)?.iter().sum();
        if prod > 0.0 {
            self.producer_scale = inj / prod;
        } else if inj > 0.0 {
            return Err(Error::InvalidParameter("injection without any producing well".into()));
        }
        Ok(self)
    }
}

impl WellSource for SmoothWells {
    fn injection(&self, _label: usize, x: &Point, _t: f64) -> f64 {
        self.injectors.iter().map(|w| w.density(x)).sum()
    }

    fn production(&self, _label: usize, x: &Point, _t: f64) -> f64 {
        self.producer_scale * self.producers.iter().map(|w| w.density(x)).sum::<f64>()
    }

    fn injected_concentration(&self, _label: usize, _x: &Point, _t: f64) -> f64 {
        self.concentration
    }
}
