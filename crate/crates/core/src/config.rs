//! Run configuration in a flat `section.key = value` format.
//!
//! Blank lines and lines starting with `#` are ignored. Every key may appear
//! once; unknown keys are rejected. [`RunConfig::serialize`] writes every key
//! in a fixed order, so a canonical file survives a parse/serialize cycle
//! byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::assembly::{AssemblyOptions, SmoothWells, Sources, Well};
use crate::coefficients::{DispersionParams, MediumModel, ViscosityLaw};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{load_mesh, DiskInterfaceMesh, Mesh, DEFAULT_MESH_SEED};
use crate::scheme::Problem;
use crate::spaces::build_spaces;
use crate::verification::{ExactSolution, RefinementMode, StudyConfig};

const HEADER: &str = "# interflow configuration";

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Generate { boundary_nodes: usize },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViscositySpec {
    Logistic(f64),
    Constant(f64),
}

impl ViscositySpec {
    pub fn law(&self) -> ViscosityLaw {
        match *self {
            ViscositySpec::Logistic(rate) => ViscosityLaw::Logistic { rate },
            ViscositySpec::Constant(v) => ViscosityLaw::Constant(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellConfig {
    pub injectors: Vec<Well>,
    pub producers: Vec<Well>,
    pub concentration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceMode {
    None,
    Manufactured,
    Wells(WellConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    pub mode: RefinementMode,
    pub rows: Vec<(f64, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub seed: u64,
    pub degree: usize,
    pub final_time: f64,
    pub steps: usize,
    pub porosity: Vec<f64>,
    pub permeability: Vec<f64>,
    pub viscosity: ViscositySpec,
    pub dispersion: DispersionParams,
    pub source: SourceMode,
    /// Uniform initial concentration outside manufactured mode.
    pub initial_concentration: f64,
    pub output_dir: PathBuf,
    /// Snapshot cadence in steps; 0 writes only the final state.
    pub output_every: usize,
    pub solver_tolerance: f64,
    pub study: Option<StudySpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let model = MediumModel::two_phase_inclusion();
        Self {
            mesh: MeshSource::Generate { boundary_nodes: 32 },
            seed: DEFAULT_MESH_SEED,
            degree: 1,
            final_time: 1.0,
            steps: 8,
            porosity: model.porosity,
            permeability: model.permeability,
            viscosity: ViscositySpec::Logistic(5.0),
            dispersion: DispersionParams::default(),
            source: SourceMode::Manufactured,
            initial_concentration: 0.5,
            output_dir: PathBuf::from("out"),
            output_every: 0,
            solver_tolerance: crate::solver::RESIDUAL_TOLERANCE,
            study: None,
        }
    }
}

struct Entry {
    value: String,
    line: usize,
}

struct Entries {
    path: PathBuf,
    map: BTreeMap<String, Entry>,
}

impl Entries {
    fn err(&self, key: &str, message: impl std::fmt::Display) -> Error {
        let line = self.map.get(key).map_or(0, |e| e.line);
        Error::Parse {
            path: self.path.clone(),
            line,
            message: format!("key '{key}': {message}"),
        }
    }

    fn invalid(&self, key: &str, message: impl std::fmt::Display) -> Error {
        match self.map.get(key) {
            Some(e) => Error::Validation(format!("{key} (line {}): {message}", e.line)),
            None => Error::Validation(format!("{key}: {message}")),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|e| e.value.as_str())
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.raw(key).ok_or_else(|| Error::Parse {
            path: self.path.clone(),
            line: 0,
            message: format!("missing required key '{key}'"),
        })
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|_| self.err(key, format!("expected {what}, got '{v}'"))))
            .transpose()
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key).map(|v| parse_float(v).ok_or_else(|| self.err(key, format!("expected a number, got '{v}'")))).transpose()
    }

    fn floats(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|s| parse_float(s.trim()).ok_or_else(|| self.err(key, format!("expected numbers, got '{v}'"))))
                    .collect()
            })
            .transpose()
    }

    fn wells(&self, key: &str) -> Result<Vec<Well>> {
        let Some(v) = self.raw(key) else { return Ok(Vec::new()) };
        if v.trim().is_empty() {
            return Ok(Vec::new());
        }
        v.split(';')
            .map(|w| {
                let nums: Option<Vec<f64>> = w.split_whitespace().map(parse_float).collect();
                match nums.as_deref() {
                    Some(&[x, y, rate, radius]) => Ok(Well {
                        center: Point::new(x, y),
                        rate,
                        radius,
                    }),
                    _ => Err(self.err(key, format!("expected 'x y rate radius', got '{}'", w.trim()))),
                }
            })
            .collect()
    }
}

/// Decimal numbers and simple fractions such as `1/8`.
fn parse_float(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let (a, b) = (a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?);
        return (b != 0.0).then(|| a / b);
    }
    s.parse().ok()
}

const KEYS: &[&str] = &[
    "mesh.generate",
    "mesh.file",
    "mesh.seed",
    "space.degree",
    "time.T",
    "time.N",
    "model.porosity",
    "model.permeability",
    "model.viscosity",
    "dispersion.d0",
    "dispersion.alpha1",
    "dispersion.alpha2",
    "dispersion.dr",
    "dispersion.dp",
    "source.mode",
    "source.initial_concentration",
    "wells.injectors",
    "wells.producers",
    "wells.concentration",
    "output.dir",
    "output.every",
    "solver.tolerance",
    "study.mode",
    "study.rows",
];

fn list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn well_list(w: &[Well]) -> String {
    w.iter()
        .map(|w| format!("{} {} {} {}", w.center.x, w.center.y, w.rate, w.radius))
        .collect::<Vec<_>>()
        .join("; ")
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: path.clone(),
                line,
                message,
            };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'section.key = value', got '{content}'")))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(err(format!("unknown key '{key}'")));
            }
            if map.contains_key(key) {
                return Err(err(format!("duplicate key '{key}'")));
            }
            map.insert(
                key.to_string(),
                Entry {
                    value: value.trim().to_string(),
                    line,
                },
            );
        }
        let e = Entries { path, map };
        let d = RunConfig::default();

        let mesh = match (e.raw("mesh.generate"), e.raw("mesh.file")) {
            (Some(_), Some(_)) => return Err(e.invalid("mesh.file", "give either mesh.generate or mesh.file, not both")),
            (Some(_), None) => MeshSource::Generate {
                boundary_nodes: e.parse("mesh.generate", "an integer")?.unwrap_or_default(),
            },
            (None, Some(f)) => MeshSource::File(PathBuf::from(f)),
            (None, None) => e.required("mesh.generate").map(|_| unreachable!())?,
        };
        let final_time = e.float("time.T")?.ok_or_else(|| e.required("time.T").unwrap_err())?;
        let steps = e
            .parse::<usize>("time.N", "a non-negative integer")?
            .ok_or_else(|| e.required("time.N").unwrap_err())?;

        let viscosity = match e.raw("model.viscosity") {
            None => d.viscosity,
            Some(v) => {
                let (kind, arg) = v.split_once(':').unwrap_or((v, ""));
                let arg = parse_float(arg);
                match (kind.trim(), arg) {
                    ("logistic", Some(r)) => ViscositySpec::Logistic(r),
                    ("constant", Some(c)) => ViscositySpec::Constant(c),
                    _ => {
                        return Err(e.err(
                            "model.viscosity",
                            format!("expected 'logistic:<rate>' or 'constant:<value>', got '{v}'"),
                        ))
                    }
                }
            }
        };
        let mut dispersion = d.dispersion;
        for (key, slot) in [
            ("dispersion.d0", &mut dispersion.d0),
            ("dispersion.alpha1", &mut dispersion.alpha1),
            ("dispersion.alpha2", &mut dispersion.alpha2),
            ("dispersion.dr", &mut dispersion.dr),
            ("dispersion.dp", &mut dispersion.dp),
        ] {
            if let Some(v) = e.float(key)? {
                *slot = v;
            }
        }
        let source = match e.raw("source.mode").unwrap_or("manufactured") {
            "manufactured" => SourceMode::Manufactured,
            "none" => SourceMode::None,
            "wells" => SourceMode::Wells(WellConfig {
                injectors: e.wells("wells.injectors")?,
                producers: e.wells("wells.producers")?,
                concentration: e.float("wells.concentration")?.unwrap_or(1.0),
            }),
            other => {
                return Err(e.err(
                    "source.mode",
                    format!("expected manufactured, wells or none, got '{other}'"),
                ))
            }
        };
        if !matches!(source, SourceMode::Wells(_)) {
            for key in ["wells.injectors", "wells.producers", "wells.concentration"] {
                if e.raw(key).is_some() {
                    return Err(e.invalid(key, "only allowed with source.mode = wells"));
                }
            }
        }
        let study = match (e.raw("study.mode"), e.raw("study.rows")) {
            (None, None) => None,
            (Some(mode), Some(rows)) => {
                let mode = match mode {
                    "coupled" => RefinementMode::Coupled,
                    "fixed-tau" => RefinementMode::FixedTau,
                    other => return Err(e.err("study.mode", format!("expected coupled or fixed-tau, got '{other}'"))),
                };
                let rows = rows
                    .split(',')
                    .map(|r| {
                        let parsed = r
                            .split_once(':')
                            .and_then(|(t, m)| Some((parse_float(t)?, m.trim().parse::<usize>().ok()?)));
                        parsed.ok_or_else(|| e.err("study.rows", format!("expected 'tau:M', got '{}'", r.trim())))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(StudySpec { mode, rows })
            }
            (Some(_), None) => return Err(e.required("study.rows").unwrap_err()),
            (None, Some(_)) => return Err(e.required("study.mode").unwrap_err()),
        };

        let cfg = RunConfig {
            mesh,
            seed: e.parse("mesh.seed", "an integer")?.unwrap_or(d.seed),
            degree: e.parse("space.degree", "an integer")?.unwrap_or(d.degree),
            final_time,
            steps,
            porosity: e.floats("model.porosity")?.unwrap_or(d.porosity),
            permeability: e.floats("model.permeability")?.unwrap_or(d.permeability),
            viscosity,
            dispersion,
            source,
            initial_concentration: e.float("source.initial_concentration")?.unwrap_or(d.initial_concentration),
            output_dir: e.raw("output.dir").map(PathBuf::from).unwrap_or(d.output_dir),
            output_every: e.parse("output.every", "a non-negative integer")?.unwrap_or(d.output_every),
            solver_tolerance: e.float("solver.tolerance")?.unwrap_or(d.solver_tolerance),
            study,
        };
        cfg.validate_with(&e)?;
        Ok(cfg)
    }

    fn validate_with(&self, e: &Entries) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(e.invalid(key, format!("must be positive, got {v}")))
            }
        };
        if let MeshSource::Generate { boundary_nodes } = self.mesh {
            if boundary_nodes < 8 || boundary_nodes % 2 != 0 {
                return Err(e.invalid("mesh.generate", format!("must be an even number >= 8, got {boundary_nodes}")));
            }
        }
        if self.degree > 1 {
            return Err(e.invalid("space.degree", format!("must be 0 or 1, got {}", self.degree)));
        }
        positive("time.T", self.final_time)?;
        if self.steps == 0 {
            return Err(e.invalid("time.N", "must be at least 1"));
        }
        if self.porosity.len() != self.permeability.len() {
            return Err(e.invalid("model.permeability", "needs one value per porosity entry"));
        }
        for &v in &self.porosity {
            positive("model.porosity", v)?;
        }
        for &v in &self.permeability {
            positive("model.permeability", v)?;
        }
        match self.viscosity {
            ViscositySpec::Constant(v) => positive("model.viscosity", v)?,
            ViscositySpec::Logistic(r) if !r.is_finite() => {
                return Err(e.invalid("model.viscosity", "rate must be finite"))
            }
            _ => {}
        }
        let dp = &self.dispersion;
        for (key, v) in [
            ("dispersion.d0", dp.d0),
            ("dispersion.alpha1", dp.alpha1),
            ("dispersion.alpha2", dp.alpha2),
            ("dispersion.dr", dp.dr),
            ("dispersion.dp", dp.dp),
        ] {
            positive(key, v)?;
        }
        if let SourceMode::Wells(w) = &self.source {
            for (key, wells) in [("wells.injectors", &w.injectors), ("wells.producers", &w.producers)] {
                for well in wells {
                    positive(key, well.radius)?;
                    if !(well.rate >= 0.0) {
                        return Err(e.invalid(key, format!("rate must be non-negative, got {}", well.rate)));
                    }
                }
            }
        }
        positive("solver.tolerance", self.solver_tolerance)?;
        if let Some(s) = &self.study {
            if s.rows.len() < 2 {
                return Err(e.invalid("study.rows", "needs at least two rows"));
            }
            for &(tau, m) in &s.rows {
                positive("study.rows", tau)?;
                if m < 8 || m % 2 != 0 {
                    return Err(e.invalid("study.rows", format!("M must be an even number >= 8, got {m}")));
                }
            }
        }
        Ok(())
    }

    /// Checks the parameters that do not depend on a mesh.
    pub fn validate(&self) -> Result<()> {
        self.validate_with(&Entries {
            path: PathBuf::new(),
            map: BTreeMap::new(),
        })
    }

    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let _ = HEADER;
        match &self.mesh {
            MeshSource::Generate { boundary_nodes } => put("mesh.generate", boundary_nodes.to_string()),
            MeshSource::File(p) => put("mesh.file", p.display().to_string()),
        }
        put("mesh.seed", self.seed.to_string());
        put("space.degree", self.degree.to_string());
        put("time.T", self.final_time.to_string());
        put("time.N", self.steps.to_string());
        put("model.porosity", list(&self.porosity));
        put("model.permeability", list(&self.permeability));
        put(
            "model.viscosity",
            match self.viscosity {
                ViscositySpec::Logistic(r) => format!("logistic:{r}"),
                ViscositySpec::Constant(c) => format!("constant:{c}"),
            },
        );
        let d = &self.dispersion;
        put("dispersion.d0", d.d0.to_string());
        put("dispersion.alpha1", d.alpha1.to_string());
        put("dispersion.alpha2", d.alpha2.to_string());
        put("dispersion.dr", d.dr.to_string());
        put("dispersion.dp", d.dp.to_string());
        match &self.source {
            SourceMode::None => put("source.mode", "none".into()),
            SourceMode::Manufactured => put("source.mode", "manufactured".into()),
            SourceMode::Wells(_) => put("source.mode", "wells".into()),
        }
        put("source.initial_concentration", self.initial_concentration.to_string());
        if let SourceMode::Wells(w) = &self.source {
            put("wells.injectors", well_list(&w.injectors));
            put("wells.producers", well_list(&w.producers));
            put("wells.concentration", w.concentration.to_string());
        }
        put("output.dir", self.output_dir.display().to_string());
        put("output.every", self.output_every.to_string());
        put("solver.tolerance", format!("{:e}", self.solver_tolerance));
        if let Some(st) = &self.study {
            put(
                "study.mode",
                match st.mode {
                    RefinementMode::Coupled => "coupled".into(),
                    RefinementMode::FixedTau => "fixed-tau".into(),
                },
            );
            put(
                "study.rows",
                st.rows.iter().map(|(t, m)| format!("{t}:{m}")).collect::<Vec<_>>().join(", "),
            );
        }
        format!("{HEADER}\n{s}")
    }

    pub fn model(&self) -> MediumModel {
        MediumModel {
            porosity: self.porosity.clone(),
            permeability: self.permeability.clone(),
            viscosity: self.viscosity.law(),
            dispersion: self.dispersion,
            ..MediumModel::two_phase_inclusion()
        }
    }

    /// Generates or loads the mesh. Relative mesh paths are resolved against
    /// `base` (usually the directory of the configuration file).
    pub fn mesh(&self, base: Option<&Path>) -> Result<Mesh> {
        match &self.mesh {
            MeshSource::Generate { boundary_nodes } => {
                DiskInterfaceMesh::new(*boundary_nodes).with_seed(self.seed).generate()
            }
            MeshSource::File(p) => {
                let path = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                load_mesh(path)
            }
        }
    }

    /// Assembles the problem description for `mesh`, checking that every
    /// subdomain label has coefficients.
    pub fn problem(&self, mesh: Arc<Mesh>) -> Result<(Problem, Option<Arc<ExactSolution>>)> {
        if mesh.num_labels() > self.porosity.len() {
            return Err(Error::Validation(format!(
                "model.porosity: mesh has {} subdomain labels but {} porosity values are given",
                mesh.num_labels(),
                self.porosity.len()
            )));
        }
        let model = self.model();
        model.validate()?;
        let spaces = build_spaces(mesh, self.degree)?;
        let assembly = AssemblyOptions::default();
        let (sources, exact) = match &self.source {
            SourceMode::None => (Sources::None, None),
            SourceMode::Manufactured => {
                let exact = Arc::new(ExactSolution::new(model.clone()));
                (Sources::Manufactured(exact.clone()), Some(exact))
            }
            SourceMode::Wells(w) => {
                let wells = SmoothWells::new(w.injectors.clone(), w.producers.clone(), w.concentration)?
                    .balanced(&spaces, &assembly)?;
                (Sources::Wells(Arc::new(wells)), None)
            }
        };
        Ok((
            Problem {
                spaces,
                model,
                sources,
                assembly,
            },
            exact,
        ))
    }

    /// The convergence study described by the `study.*` keys.
    pub fn study(&self) -> Option<StudyConfig> {
        self.study.as_ref().map(|s| StudyConfig {
            name: "config".into(),
            mode: s.mode,
            rows: s.rows.clone(),
            final_time: self.final_time,
            degree: self.degree,
            seed: self.seed,
        })
    }
}
