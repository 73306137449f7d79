use std::fmt::Write as _;
use std::time::Instant;

use normint::domain::DomainMask;
use normint::fields::{GradientField, PriorField};
use normint::metrics::{aligned_rmse, mean_angular_error};
use normint::noise::NoiseModel;
use normint::operators::Discretization;
use normint::pipeline::{run_method, Method};
use normint::synthetic::{generate_surface, SurfaceKind, SurfaceParams};

use crate::failure::Outcome;
use crate::output::Staged;
use crate::BenchArgs;

pub fn bench(a: BenchArgs) -> Outcome<()> {
    let surfaces = if a.surfaces.is_empty() { SurfaceKind::ALL.to_vec() } else { a.surfaces.clone() };
    let methods = if a.methods.is_empty() { Method::ALL.to_vec() } else { a.methods.clone() };
    // resolve every configuration up front so a bad flag fails before any run
    let configs = methods
        .iter()
        .map(|&m| a.method.config(m, false))
        .collect::<Outcome<Vec<_>>>()?;
    let noise = NoiseModel::new(a.sigma, a.seed)?;

    let mut csv = String::from("surface,size,sigma,method,pixels,iterations,seconds,rmse,mae_degrees\n");
    for &kind in &surfaces {
        for &size in &a.sizes {
            let s = generate_surface(kind, size, SurfaceParams::default())?;
            let (mut p, mut q) = (s.p.clone(), s.q.clone());
            noise.apply(&mut p, &mut q)?;
            let mask = if a.masked { s.object.clone() } else { DomainMask::full(size, size)? };
            let disc = Discretization::from_mask(mask)?;
            let g = GradientField::from_rasters(&disc.domain, &p, &q)?;
            let truth = disc.domain.gather(&s.depth)?;
            // surfaces that carry their own prior (the step) keep it
            let prior = match &s.prior_weight {
                Some(weight) => PriorField::new(truth.clone(), disc.domain.gather(weight)?)?,
                None => PriorField::uniform(disc.len(), a.method.lambda),
            };
            for cfg in &configs {
                let start = Instant::now();
                let out = run_method(&disc, &g, &prior, cfg)?;
                let seconds = start.elapsed().as_secs_f64();
                let rmse = aligned_rmse(&out.depth.z, &truth, None)?;
                let mae = mean_angular_error(&disc.domain, &out.depth.z, &truth).unwrap_or(f64::NAN);
                let row = format!(
                    "{kind},{size},{},{},{},{},{seconds:.4},{rmse:.6e},{mae:.4}",
                    a.sigma,
                    cfg.method,
                    disc.len(),
                    out.iterations
                );
                log::info!("{row}");
                let _ = writeln!(csv, "{row}");
            }
        }
    }
    match &a.output {
        Some(path) => {
            let mut staged = Staged::default();
            staged.add(path, csv.into_bytes());
            staged.commit()?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}
