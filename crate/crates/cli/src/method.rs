use clap::Args;
use normint::anisotropic::DiffusionVariant;
use normint::linalg::PreconditionerKind;
use normint::nonconvex::PhiFunction;
use normint::pipeline::{Init, Method, MethodConfig};
use serde_json::{json, Value};

use crate::failure::{Failure, Outcome};

/// Method selection and hyper-parameters shared by `integrate` and `bench`.
#[derive(Args, Debug, Clone)]
pub struct MethodArgs {
    #[arg(long, default_value = "quadratic")]
    pub method: Method,
    /// Starting point of tv, nonconvex and mumford-shah: `ls` or `zero`.
    #[arg(long, default_value = "ls")]
    pub init: Init,
    /// Uniform prior weight.
    #[arg(long, default_value_t = normint::fields::PriorField::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Diffusion scale (anisotropic) or data weight (mumford-shah).
    #[arg(long)]
    pub mu: Option<f64>,
    /// Data scale of the anisotropic tensor.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Selects the log penalty `log(s² + β²)` (nonconvex).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Selects the rational penalty `s²/(s² + γ²)` (nonconvex).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// ADMM step (tv).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Cut width (mumford-shah).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Outer iterations; PCG iterations for quadratic.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Relative residual of the linear solves.
    #[arg(long)]
    pub tol: Option<f64>,
    /// `none`, `jacobi`, `ichol` or `amg`.
    #[arg(long)]
    pub precond: Option<PreconditionerKind>,
    /// Anisotropic tensor: `pm`, `stat` or `scaled`.
    #[arg(long)]
    pub variant: Option<DiffusionVariant>,
}

impl MethodArgs {
    /// With `strict`, parameters the method does not read are rejected.
    pub fn config(&self, method: Method, strict: bool) -> Outcome<MethodConfig> {
        let mut cfg = MethodConfig::new(method);
        cfg.init = self.init;
        let unused = |flag: &str, users: &str| -> Outcome<()> {
            if strict {
                Err(Failure::config(format!("--{flag} applies to {users}, not {method}")))
            } else {
                Ok(())
            }
        };
        if let Some(mu) = self.mu {
            match method {
                Method::Anisotropic => cfg.diffusion.mu = mu,
                Method::MumfordShah => cfg.ms.mu = mu,
                _ => unused("mu", "anisotropic and mumford-shah")?,
            }
        }
        if let Some(nu) = self.nu {
            match method {
                Method::Anisotropic => cfg.diffusion.nu = nu,
                _ => unused("nu", "anisotropic")?,
            }
        }
        if let Some(variant) = self.variant {
            match method {
                Method::Anisotropic => cfg.diffusion.variant = variant,
                _ => unused("variant", "anisotropic")?,
            }
        }
        match (self.beta, self.gamma) {
            (Some(_), Some(_)) => return Err(Failure::config("--beta and --gamma select different penalties")),
            (Some(beta), None) if method == Method::Nonconvex => cfg.phi = PhiFunction::Log { beta },
            (None, Some(gamma)) if method == Method::Nonconvex => cfg.phi = PhiFunction::Rational { gamma },
            (Some(_), None) => unused("beta", "nonconvex")?,
            (None, Some(_)) => unused("gamma", "nonconvex")?,
            (None, None) => {}
        }
        if let Some(alpha) = self.alpha {
            match method {
                Method::Tv => cfg.tv.alpha = alpha,
                _ => unused("alpha", "tv")?,
            }
        }
        if let Some(epsilon) = self.epsilon {
            match method {
                Method::MumfordShah => cfg.ms.epsilon = epsilon,
                _ => unused("epsilon", "mumford-shah")?,
            }
        }
        if let Some(iters) = self.iters {
            match method {
                Method::Quadratic => cfg.solver.max_iterations = iters,
                Method::Tv => cfg.tv.iterations = iters,
                Method::Nonconvex => cfg.ipiano.iterations = iters,
                Method::Anisotropic => cfg.diffusion.iterations = iters,
                Method::MumfordShah => cfg.ms.iterations = iters,
            }
        }
        if let Some(tol) = self.tol {
            cfg.solver.rel_tolerance = tol;
        }
        if let Some(kind) = self.precond {
            cfg.solver.preconditioner = kind;
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Failure::config(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// The parameters the selected method actually uses.
pub fn describe(cfg: &MethodConfig) -> Value {
    let solver = json!({
        "tolerance": cfg.solver.rel_tolerance,
        "max_iterations": cfg.solver.max_iterations,
        "preconditioner": cfg.solver.preconditioner.to_string(),
    });
    let params = match cfg.method {
        Method::Quadratic => json!({}),
        Method::Tv => json!({ "alpha": cfg.tv.alpha, "iterations": cfg.tv.iterations, "init": cfg.init.to_string() }),
        Method::Nonconvex => {
            let phi = match cfg.phi {
                PhiFunction::Log { beta } => json!({ "penalty": "log", "beta": beta }),
                PhiFunction::Rational { gamma } => json!({ "penalty": "rational", "gamma": gamma }),
            };
            json!({
                "phi": phi,
                "iterations": cfg.ipiano.iterations,
                "alpha1": cfg.ipiano.alpha1,
                "alpha2": cfg.ipiano.alpha2,
                "init": cfg.init.to_string(),
            })
        }
        Method::Anisotropic => json!({
            "variant": cfg.diffusion.variant.to_string(),
            "mu": cfg.diffusion.mu,
            "nu": cfg.diffusion.nu,
            "iterations": cfg.diffusion.iterations,
        }),
        Method::MumfordShah => json!({
            "mu": cfg.ms.mu,
            "epsilon": cfg.ms.epsilon,
            "iterations": cfg.ms.iterations,
            "init": cfg.init.to_string(),
        }),
    };
    json!({ "method": cfg.method.name(), "solver": solver, "parameters": params })
}
