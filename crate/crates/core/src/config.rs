//! Run configuration: a flat key-value text format with dotted keys.
//!
//! Grammar: one `key = value` pair per line, `#` starts a comment,
//! blank lines ignored. Every key is validated; unknown keys and malformed
//! values are rejected before any compute happens.
//!
//! ```text
//! mesh.structured_n = 32        # or mesh.file = path/to/mesh.chmesh
//! model.m = 1.0
//! model.m_gamma = 1.0
//! model.sigma = 1.0
//! model.delta = 1.0
//! model.delta_gamma = 1.0
//! model.kappa = 1.0
//! model.tau = 1e-3
//! model.bc = ch                 # ch | ac
//! potential.bulk = doublewell(1.0)
//! potential.surface = wetting   # doublewell(c_pen) | wetting
//! solver.schur = auto           # auto | cholesky | cg
//! solver.cg_tol = 1e-12
//! solver.cg_maxit = 100000
//! newton.abs_tol = 1e-10
//! newton.rel_tol = 1e-9
//! newton.max_iters = 50
//! newton.krylov_tol = 1e-8
//! run.n_steps = 200
//! run.output_dir = out
//! run.output_every = 10
//! ic = random(0.1, 0)           # constant(c) | random(amp, mean) | tanh(nx, ny, offset, width)
//! seed = 42
//! ```

use crate::error::{Error, Result};
use crate::params::{BcMode, ModelParams};
use crate::potential_solver::SchurSolverKind;
use crate::potentials::{double_well_penalized, wetting_energy, PotentialSplit};
use crate::stepper::NewtonConfig;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    File(PathBuf),
    Structured(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum IcSpec {
    Constant(f64),
    Random { amplitude: f64, mean: f64 },
    TanhInterface { normal: [f64; 2], offset: f64, width: f64 },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub params: ModelParams,
    pub bulk_potential: String,
    pub surface_potential: String,
    pub newton: NewtonConfig,
    pub schur: SchurSolverKind,
    pub cg_tol: f64,
    pub cg_maxit: usize,
    pub n_steps: usize,
    pub output_dir: PathBuf,
    pub output_every: usize,
    pub ic: IcSpec,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mesh: MeshSource::Structured(16),
            params: ModelParams::default(),
            bulk_potential: "doublewell(0)".into(),
            surface_potential: "doublewell(0)".into(),
            newton: NewtonConfig::default(),
            schur: SchurSolverKind::Auto,
            cg_tol: 1e-12,
            cg_maxit: 100_000,
            n_steps: 10,
            output_dir: PathBuf::from("out"),
            output_every: 1,
            ic: IcSpec::Constant(0.0),
            seed: 0,
        }
    }
}

fn bad(key: &str, detail: impl std::fmt::Display) -> Error {
    Error::Config(format!("key `{key}`: {detail}"))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| bad(key, format!("expected a number, got `{v}`")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| bad(key, format!("expected a nonnegative integer, got `{v}`")))
}

/// Parse `name(a, b, ...)` or a bare `name` into (name, args).
fn parse_call<'a>(key: &str, v: &'a str) -> Result<(&'a str, Vec<f64>)> {
    match v.find('(') {
        None => Ok((v, Vec::new())),
        Some(open) => {
            let close = v
                .rfind(')')
                .ok_or_else(|| bad(key, format!("unbalanced parentheses in `{v}`")))?;
            if close != v.len() - 1 {
                return Err(bad(key, format!("trailing text after `)` in `{v}`")));
            }
            let name = &v[..open];
            let inner = &v[open + 1..close];
            let mut args = Vec::new();
            if !inner.trim().is_empty() {
                for part in inner.split(',') {
                    args.push(parse_f64(key, part.trim())?);
                }
            }
            Ok((name, args))
        }
    }
}

/// Build the potential named by a config value.
pub fn potential_by_name(key: &str, v: &str) -> Result<PotentialSplit> {
    let (name, args) = parse_call(key, v)?;
    match (name, args.as_slice()) {
        ("doublewell", []) => Ok(double_well_penalized(0.0)),
        ("doublewell", [c]) if *c >= 0.0 => Ok(double_well_penalized(*c)),
        ("doublewell", [c]) => Err(bad(key, format!("penalty must be >= 0, got {c}"))),
        ("wetting", []) => Ok(wetting_energy()),
        _ => Err(bad(
            key,
            format!("unknown potential `{v}` (expected doublewell(c) or wetting)"),
        )),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut mesh_set = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let v = value.trim();
            match key {
                "mesh.file" => {
                    if mesh_set {
                        return Err(bad(key, "mesh source given twice"));
                    }
                    cfg.mesh = MeshSource::File(PathBuf::from(v));
                    mesh_set = true;
                }
                "mesh.structured_n" => {
                    if mesh_set {
                        return Err(bad(key, "mesh source given twice"));
                    }
                    let n = parse_usize(key, v)?;
                    if n == 0 {
                        return Err(bad(key, "subdivision count must be >= 1"));
                    }
                    cfg.mesh = MeshSource::Structured(n);
                    mesh_set = true;
                }
                "model.m" => cfg.params.m = parse_f64(key, v)?,
                "model.m_gamma" => cfg.params.m_gamma = parse_f64(key, v)?,
                "model.sigma" => cfg.params.sigma = parse_f64(key, v)?,
                "model.delta" => cfg.params.delta = parse_f64(key, v)?,
                "model.delta_gamma" => cfg.params.delta_gamma = parse_f64(key, v)?,
                "model.kappa" => cfg.params.kappa = parse_f64(key, v)?,
                "model.tau" => cfg.params.tau = parse_f64(key, v)?,
                "model.bc" => {
                    cfg.params.bc_mode = match v {
                        "ch" => BcMode::CahnHilliard,
                        "ac" => BcMode::AllenCahn,
                        _ => return Err(bad(key, format!("expected ch or ac, got `{v}`"))),
                    }
                }
                "potential.bulk" => {
                    potential_by_name(key, v)?;
                    cfg.bulk_potential = v.to_string();
                }
                "potential.surface" => {
                    potential_by_name(key, v)?;
                    cfg.surface_potential = v.to_string();
                }
                "solver.schur" => {
                    cfg.schur = match v {
                        "auto" => SchurSolverKind::Auto,
                        "cholesky" => SchurSolverKind::Cholesky,
                        "cg" => SchurSolverKind::Cg,
                        _ => {
                            return Err(bad(
                                key,
                                format!("expected auto, cholesky or cg, got `{v}`"),
                            ))
                        }
                    }
                }
                "solver.cg_tol" => cfg.cg_tol = parse_f64(key, v)?,
                "solver.cg_maxit" => cfg.cg_maxit = parse_usize(key, v)?,
                "newton.abs_tol" => cfg.newton.abs_tol = parse_f64(key, v)?,
                "newton.rel_tol" => cfg.newton.rel_tol = parse_f64(key, v)?,
                "newton.max_iters" => cfg.newton.max_iters = parse_usize(key, v)?,
                "newton.krylov_tol" => cfg.newton.krylov_tol = parse_f64(key, v)?,
                "newton.krylov_restart" => cfg.newton.krylov_restart = parse_usize(key, v)?,
                "newton.krylov_maxit" => cfg.newton.krylov_maxit = parse_usize(key, v)?,
                "run.n_steps" => cfg.n_steps = parse_usize(key, v)?,
                "run.output_dir" => cfg.output_dir = PathBuf::from(v),
                "run.output_every" => cfg.output_every = parse_usize(key, v)?,
                "ic" => {
                    let (name, args) = parse_call(key, v)?;
                    cfg.ic = match (name, args.as_slice()) {
                        ("constant", [c]) => IcSpec::Constant(*c),
                        ("random", [amp, mean]) => IcSpec::Random {
                            amplitude: *amp,
                            mean: *mean,
                        },
                        ("tanh", [nx, ny, offset, width]) => {
                            let norm = nx.hypot(*ny);
                            if norm == 0.0 {
                                return Err(bad(key, "tanh normal must be nonzero"));
                            }
                            if *width <= 0.0 {
                                return Err(bad(key, "tanh width must be positive"));
                            }
                            IcSpec::TanhInterface {
                                normal: [nx / norm, ny / norm],
                                offset: *offset,
                                width: *width,
                            }
                        }
                        _ => {
                            return Err(bad(
                                key,
                                format!(
                                    "unknown ic `{v}` (expected constant(c), \
                                     random(amp, mean) or tanh(nx, ny, offset, width))"
                                ),
                            ))
                        }
                    }
                }
                "seed" => {
                    cfg.seed = v
                        .parse::<u64>()
                        .map_err(|_| bad(key, format!("expected an integer, got `{v}`")))?
                }
                _ => return Err(Error::Config(format!("unknown key `{key}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg = Self::parse(&text)?;
        if let MeshSource::File(p) = &cfg.mesh {
            if !p.exists() {
                return Err(Error::Config(format!(
                    "mesh.file `{}` does not exist",
                    p.display()
                )));
            }
        }
        Ok(cfg)
    }

    pub fn bulk(&self) -> PotentialSplit {
        potential_by_name("potential.bulk", &self.bulk_potential).expect("validated")
    }

    pub fn surface(&self) -> PotentialSplit {
        potential_by_name("potential.surface", &self.surface_potential).expect("validated")
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate(&self.surface())?;
        if self.n_steps == 0 {
            return Err(Error::Config("run.n_steps must be >= 1".into()));
        }
        if self.output_every == 0 {
            return Err(Error::Config("run.output_every must be >= 1".into()));
        }
        for (k, v) in [
            ("solver.cg_tol", self.cg_tol),
            ("newton.abs_tol", self.newton.abs_tol),
            ("newton.rel_tol", self.newton.rel_tol),
            ("newton.krylov_tol", self.newton.krylov_tol),
        ] {
            if !(v > 0.0) {
                return Err(bad(k, format!("must be positive, got {v}")));
            }
        }
        if self.newton.max_iters == 0 {
            return Err(Error::Config("newton.max_iters must be >= 1".into()));
        }
        Ok(())
    }
}
