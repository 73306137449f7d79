//! One entry point over the five integrators, as used by the command line.

use std::fmt;
use std::str::FromStr;

use crate::anisotropic::{integrate_anisotropic, DiffusionConfig};
use crate::error::{Error, Result};
use crate::fields::{DepthMap, GradientField, PriorField};
use crate::linalg::SolverConfig;
use crate::mumford_shah::{integrate_mumford_shah, MsConfig};
use crate::nonconvex::{integrate_nonconvex, IpianoConfig, PhiFunction};
use crate::operators::Discretization;
use crate::quadratic::integrate_quadratic;
use crate::tv::{integrate_tv, TvConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Quadratic,
    Tv,
    Nonconvex,
    Anisotropic,
    MumfordShah,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Quadratic,
        Method::Tv,
        Method::Nonconvex,
        Method::Anisotropic,
        Method::MumfordShah,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Quadratic => "quadratic",
            Method::Tv => "tv",
            Method::Nonconvex => "nonconvex",
            Method::Anisotropic => "anisotropic",
            Method::MumfordShah => "mumford-shah",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" | "ls" => Ok(Method::Quadratic),
            "tv" => Ok(Method::Tv),
            "nonconvex" | "non-convex" => Ok(Method::Nonconvex),
            "anisotropic" | "ad" => Ok(Method::Anisotropic),
            "mumford-shah" | "mumford_shah" | "ms" => Ok(Method::MumfordShah),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

/// Starting point of the iterative methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// Least-squares solution.
    #[default]
    LeastSquares,
    Zero,
}

impl FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ls" | "quadratic" => Ok(Init::LeastSquares),
            "zero" => Ok(Init::Zero),
            other => Err(Error::InvalidParameter(format!("unknown initialisation `{other}`"))),
        }
    }
}

impl fmt::Display for Init {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Init::LeastSquares => "ls",
            Init::Zero => "zero",
        })
    }
}

/// Method plus the parameters of every method; only the selected one is read.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub method: Method,
    pub init: Init,
    pub solver: SolverConfig,
    pub tv: TvConfig,
    pub phi: PhiFunction,
    pub ipiano: IpianoConfig,
    pub diffusion: DiffusionConfig,
    pub ms: MsConfig,
}

impl MethodConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            init: Init::default(),
            solver: SolverConfig::default(),
            tv: TvConfig::default(),
            phi: PhiFunction::Log { beta: 0.5 },
            ipiano: IpianoConfig::default(),
            diffusion: DiffusionConfig::default(),
            ms: MsConfig::default(),
        }
    }

    /// Whether [`MethodOutput::edges`] stays empty for this method.
    pub fn edges_unavailable(&self) -> bool {
        !matches!(self.method, Method::Anisotropic | Method::MumfordShah)
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        match self.method {
            Method::Quadratic => Ok(()),
            Method::Tv => self.tv.validate(),
            Method::Nonconvex => {
                self.phi.validate()?;
                self.ipiano.validate()
            }
            Method::Anisotropic => self.diffusion.validate(),
            Method::MumfordShah => self.ms.validate(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub depth: DepthMap,
    /// Outer iterations (solver iterations for the quadratic method).
    pub iterations: usize,
    /// Per-iteration convergence trace: energy for the non-convex and
    /// Mumford–Shah methods, primal residual for TV, frozen-weight energy
    /// after each step for anisotropic diffusion; empty for least squares.
    pub history: Vec<f64>,
    /// Per-pixel edge indicator in `[0, 1]` where the method has one.
    pub edges: Option<Vec<f64>>,
}

pub fn run_method(disc: &Discretization, g: &GradientField, prior: &PriorField, cfg: &MethodConfig) -> Result<MethodOutput> {
    cfg.validate()?;
    let n = disc.len();
    let init = |cfg: &MethodConfig| -> Result<DepthMap> {
        match cfg.init {
            Init::Zero => Ok(DepthMap::zeros(n)),
            Init::LeastSquares => Ok(integrate_quadratic(disc, g, prior, &cfg.solver)?.depth),
        }
    };
    Ok(match cfg.method {
        Method::Quadratic => {
            let out = integrate_quadratic(disc, g, prior, &cfg.solver)?;
            MethodOutput {
                depth: out.depth,
                iterations: out.iterations,
                history: Vec::new(),
                edges: None,
            }
        }
        Method::Tv => {
            let z = init(cfg)?;
            let out = integrate_tv(disc, g, prior, &cfg.tv, Some(&z))?;
            MethodOutput {
                depth: out.depth,
                iterations: out.iterations,
                history: out.residual_history,
                edges: None,
            }
        }
        Method::Nonconvex => {
            let z = init(cfg)?;
            let out = integrate_nonconvex(disc, g, prior, cfg.phi, &cfg.ipiano, &z)?;
            MethodOutput {
                depth: out.depth,
                iterations: cfg.ipiano.iterations,
                history: out.energy_history,
                edges: None,
            }
        }
        Method::Anisotropic => {
            let out = integrate_anisotropic(disc, g, prior, &cfg.diffusion)?;
            MethodOutput {
                depth: out.depth,
                iterations: out.iterations,
                history: out.surrogate.iter().map(|e| e[1]).collect(),
                edges: Some(out.weights.min_map()),
            }
        }
        Method::MumfordShah => {
            let z = init(cfg)?;
            let out = integrate_mumford_shah(disc, g, prior, &cfg.ms, Some(&z))?;
            MethodOutput {
                depth: out.depth,
                iterations: cfg.ms.iterations,
                history: out.energy_history,
                edges: Some(out.indicators.edge_map().iter().map(|w| w.clamp(0.0, 1.0)).collect()),
            }
        }
    })
}
