//! Physical coefficients: piecewise-constant porosity and permeability, the
//! concentration-dependent viscosity and the velocity-dependent
//! diffusion–dispersion tensor.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Symmetric 2×2 tensor `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdTensor2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SpdTensor2 {
    pub fn scaled_identity(s: f64) -> Self {
        Self { xx: s, xy: 0.0, yy: s }
    }

    pub fn apply(&self, v: &Vec2) -> Vec2 {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn inverse(&self) -> Self {
        let d = self.det();
        Self {
            xx: self.yy / d,
            xy: -self.xy / d,
            yy: self.xx / d,
        }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let r = half_diff.hypot(self.xy);
        [mean - r, mean + r]
    }

    /// Unit eigenvectors matching [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> [Vec2; 2] {
        let [_, hi] = self.eigenvalues();
        let v = if self.xy.abs() > 1e-300 {
            Vec2::new(self.xy, hi - self.xx)
        } else if self.xx >= self.yy {
            Vec2::new(1.0, 0.0)
        } else {
            Vec2::new(0.0, 1.0)
        };
        let v = v.normalize();
        [Vec2::new(-v.y, v.x), v]
    }

    pub fn rayleigh(&self, xi: &Vec2) -> f64 {
        xi.dot(&self.apply(xi)) / xi.norm_squared()
    }

    pub fn mul(&self, other: &Self) -> [[f64; 2]; 2] {
        [
            [self.xx * other.xx + self.xy * other.xy, self.xx * other.xy + self.xy * other.yy],
            [self.xy * other.xx + self.yy * other.xy, self.xy * other.xy + self.yy * other.yy],
        ]
    }
}

/// Concentration-dependent viscosity law with a declared bound `mu0`:
/// `1/mu0 <= mu(c) <= mu0` and `|mu'(c)| <= mu0` on the admissible range.
#[derive(Clone)]
pub enum ViscosityLaw {
    /// `mu(c) = 1 / (1 + exp(rate * c))`.
    Logistic { rate: f64 },
    Constant(f64),
    Custom {
        name: String,
        law: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for ViscosityLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViscosityLaw::Logistic { rate } => write!(f, "Logistic {{ rate: {rate} }}"),
            ViscosityLaw::Constant(v) => write!(f, "Constant({v})"),
            ViscosityLaw::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl ViscosityLaw {
    pub fn eval(&self, c: f64) -> f64 {
        match self {
            ViscosityLaw::Logistic { rate } => 1.0 / (1.0 + (rate * c).exp()),
            ViscosityLaw::Constant(v) => *v,
            ViscosityLaw::Custom { law, .. } => law(c),
        }
    }

    /// `1 / mu(c)`, evaluated without forming `mu` for the logistic law.
    pub fn reciprocal(&self, c: f64) -> f64 {
        match self {
            ViscosityLaw::Logistic { rate } => 1.0 + (rate * c).exp(),
            _ => 1.0 / self.eval(c),
        }
    }

    pub fn derivative(&self, c: f64) -> f64 {
        match self {
            ViscosityLaw::Logistic { rate } => {
                let e = (rate * c).exp();
                -rate * e / ((1.0 + e) * (1.0 + e))
            }
            ViscosityLaw::Constant(_) => 0.0,
            ViscosityLaw::Custom { law, .. } => {
                let step = 1e-6 * (1.0 + c.abs());
                (law(c + step) - law(c - step)) / (2.0 * step)
            }
        }
    }
}

/// Molecular diffusion and mechanical dispersion parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionParams {
    /// Molecular diffusion coefficient.
    pub d0: f64,
    /// Transverse dispersivity (multiplies the identity).
    pub alpha1: f64,
    /// Longitudinal dispersivity (multiplies `u u^T / |u|^2`).
    pub alpha2: f64,
    /// Peclet offset in `F(Pe) = Pe / (Pe + dr)`.
    pub dr: f64,
    /// Peclet scale, `Pe = dp |u|`.
    pub dp: f64,
}

impl Default for DispersionParams {
    fn default() -> Self {
        Self {
            d0: 1.0,
            alpha1: 1.0,
            alpha2: 1.0,
            dr: 1.0,
            dp: 1.0,
        }
    }
}

/// Below this speed the dispersion term is taken as its limit value 0.
pub const ZERO_VELOCITY: f64 = 1e-14;

/// Porous medium and fluid description; subdomain `m` has porosity
/// `porosity[m]` and permeability `permeability[m]`.
#[derive(Debug, Clone)]
pub struct MediumModel {
    pub porosity: Vec<f64>,
    pub permeability: Vec<f64>,
    pub viscosity: ViscosityLaw,
    pub dispersion: DispersionParams,
    /// Declared viscosity bound.
    pub mu0: f64,
    /// Concentration range over which the viscosity bounds are checked.
    pub concentration_range: (f64, f64),
    /// Declared bound on `|q_I| + |q_P|`.
    pub q0: f64,
}

impl MediumModel {
    /// Two-subdomain medium with the logistic viscosity `1/(1+e^{5c})`,
    /// unit dispersion parameters, porosity (0.6, 0.4) and permeability
    /// (0.012, 0.008) outside/inside the inclusion.
    pub fn two_phase_inclusion() -> Self {
        let range: (f64, f64) = (-2.0, 2.0);
        let law = ViscosityLaw::Logistic { rate: 5.0 };
        let mu0 = 1.0 + (5.0 * range.1).exp();
        Self {
            porosity: vec![0.6, 0.4],
            permeability: vec![0.012, 0.008],
            viscosity: law,
            dispersion: DispersionParams::default(),
            mu0,
            concentration_range: range,
            q0: f64::INFINITY,
        }
    }

    pub fn porosity(&self, label: usize) -> f64 {
        self.porosity[label]
    }

    pub fn permeability(&self, label: usize) -> f64 {
        self.permeability[label]
    }

    pub fn viscosity(&self, c: f64) -> f64 {
        self.viscosity.eval(c)
    }

    /// Resistance `mu(c) / k` weighting the Darcy mass term.
    pub fn resistance(&self, label: usize, c: f64) -> f64 {
        self.viscosity.eval(c) / self.permeability[label]
    }

    /// Porosity bound `Phi_0 >= max(Phi, 1/Phi)` implied by the data.
    pub fn porosity_bound(&self) -> f64 {
        self.porosity.iter().map(|&p| p.max(1.0 / p)).fold(1.0, f64::max)
    }

    pub fn permeability_bound(&self) -> f64 {
        self.permeability.iter().map(|&k| k.max(1.0 / k)).fold(1.0, f64::max)
    }

    /// Lower spectral bound `d1 = Phi_min d0`.
    pub fn d1(&self) -> f64 {
        self.porosity.iter().copied().fold(f64::INFINITY, f64::min) * self.dispersion.d0
    }

    /// Upper bound `d2 + d3 |u|` has `d2 = Phi_max d0`.
    pub fn d2(&self) -> f64 {
        self.porosity.iter().copied().fold(0.0, f64::max) * self.dispersion.d0
    }

    /// `d3 = Phi_max max(alpha1, alpha2)`.
    pub fn d3(&self) -> f64 {
        self.porosity.iter().copied().fold(0.0, f64::max) * self.dispersion.alpha1.max(self.dispersion.alpha2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.porosity.is_empty() || self.porosity.len() != self.permeability.len() {
            return Err(Error::InvalidParameter(format!(
                "porosity ({}) and permeability ({}) must list one value per subdomain",
                self.porosity.len(),
                self.permeability.len()
            )));
        }
        for (m, (&phi, &k)) in self.porosity.iter().zip(&self.permeability).enumerate() {
            if !(phi > 0.0) || !(k > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "subdomain {m}: porosity {phi} and permeability {k} must be positive"
                )));
            }
        }
        let d = &self.dispersion;
        for (name, v) in [("d0", d.d0), ("alpha1", d.alpha1), ("alpha2", d.alpha2), ("dr", d.dr), ("dp", d.dp)] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!("dispersion.{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Samples the viscosity on the declared concentration range and checks
    /// `1/mu0 <= mu <= mu0`, `|mu'| <= mu0`. Returns the observed (min, max).
    pub fn check_viscosity_bounds(&self, samples: usize) -> Result<(f64, f64)> {
        let (lo, hi) = self.concentration_range;
        let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..samples {
            let c = lo + (hi - lo) * i as f64 / (samples.max(2) - 1) as f64;
            let mu = self.viscosity.eval(c);
            let dmu = self.viscosity.derivative(c);
            if !(mu >= 1.0 / self.mu0 && mu <= self.mu0) || dmu.abs() > self.mu0 {
                return Err(Error::InvalidParameter(format!(
                    "viscosity bound violated at c = {c}: mu = {mu}, mu' = {dmu}, mu0 = {}",
                    self.mu0
                )));
            }
            mn = mn.min(mu);
            mx = mx.max(mu);
        }
        Ok((mn, mx))
    }

    /// `D(u) = Phi [d0 I + F(Pe)|u| (alpha1 I + (alpha2 - alpha1) u u^T/|u|^2)]`
    /// with `F(Pe) = Pe/(Pe + dr)`, `Pe = dp |u|`, in subdomain `label`.
    pub fn dispersion_tensor(&self, label: usize, u: &Vec2) -> SpdTensor2 {
        let phi = self.porosity[label];
        let d = &self.dispersion;
        let speed = u.norm();
        if speed < ZERO_VELOCITY {
            return SpdTensor2::scaled_identity(phi * d.d0);
        }
        let pe = d.dp * speed;
        let mech = pe / (pe + d.dr) * speed;
        let iso = d.d0 + mech * d.alpha1;
        let aniso = mech * (d.alpha2 - d.alpha1) / (speed * speed);
        SpdTensor2 {
            xx: phi * (iso + aniso * u.x * u.x),
            xy: phi * aniso * u.x * u.y,
            yy: phi * (iso + aniso * u.y * u.y),
        }
    }

    pub fn dispersion_tensor_inverse(&self, label: usize, u: &Vec2) -> SpdTensor2 {
        self.dispersion_tensor(label, u).inverse()
    }
}
