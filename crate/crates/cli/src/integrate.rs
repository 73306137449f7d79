use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use normint::domain::{Domain, DomainMask};
use normint::fields::{GradientField, PriorField};
use normint::io::{load_mask, load_pfm_f64, write_obj, write_pfm, write_pgm};
use normint::metrics::{aligned_max_error, aligned_rmse, mean_angular_error};
use normint::noise::NoiseModel;
use normint::operators::Discretization;
use normint::pipeline::run_method;
use normint::raster::Raster;
use normint::synthetic::{generate_surface, SurfaceParams};
use serde_json::{json, Map, Value};

use crate::failure::{Failure, Outcome};
use crate::method::describe;
use crate::output::Staged;
use crate::{EvaluateArgs, GenerateArgs, IntegrateArgs};

pub fn read_pfm(path: &Path) -> Outcome<Raster<f64>> {
    load_pfm_f64(path).map_err(|e| Failure::from(e).context(path.display()))
}

pub fn read_mask(path: &Path) -> Outcome<DomainMask> {
    load_mask(path).map_err(|e| Failure::from(e).context(path.display()))
}

fn check_shape<T, S>(name: &str, r: &Raster<T>, reference: &Raster<S>) -> Outcome<()> {
    if r.same_shape(reference) {
        return Ok(());
    }
    let ((h, w), (rh, rw)) = (r.shape(), reference.shape());
    Err(Failure::config(format!("{name} is {h}x{w}, the gradient field is {rh}x{rw}")))
}

pub fn pfm_bytes(r: &Raster<f64>) -> Vec<u8> {
    let mut bytes = Vec::new();
    write_pfm(&mut bytes, &r.map(|&x| x as f32)).expect("writing to memory");
    bytes
}

fn pgm_bytes(r: &Raster<u8>) -> Vec<u8> {
    let mut bytes = Vec::new();
    write_pgm(&mut bytes, r).expect("writing to memory");
    bytes
}

pub fn generate(a: GenerateArgs) -> Outcome<()> {
    let mut params = SurfaceParams::default();
    if let Some(amplitude) = a.amplitude {
        params.amplitude = amplitude;
    }
    let noise = NoiseModel::new(a.sigma, a.seed)?;
    let s = generate_surface(a.surface, a.size, params)?;
    let (mut p, mut q) = (s.p.clone(), s.q.clone());
    noise.apply(&mut p, &mut q)?;
    let out = &a.out;
    let mut staged = Staged::default();
    staged.add(&out.join("p.pfm"), pfm_bytes(&p));
    staged.add(&out.join("q.pfm"), pfm_bytes(&q));
    staged.add(&out.join("z_true.pfm"), pfm_bytes(&s.depth));
    staged.add(&out.join("mask.pgm"), pgm_bytes(&s.object.raster().map(|&b| if b { 255 } else { 0 })));
    if let Some(lambda) = &s.prior_weight {
        staged.add(&out.join("z0.pfm"), pfm_bytes(&s.depth));
        staged.add(&out.join("lambda.pfm"), pfm_bytes(lambda));
    }
    if a.dry_run {
        let files: Vec<String> = staged.paths().map(|p| p.display().to_string()).collect();
        let resolved = json!({
            "surface": a.surface.name(),
            "size": a.size,
            "amplitude": params.amplitude,
            "sigma": a.sigma,
            "seed": a.seed,
            "files": files,
        });
        println!("{}", serde_json::to_string_pretty(&resolved).expect("json"));
        return Ok(());
    }
    std::fs::create_dir_all(out).map_err(|e| Failure::io(format!("{}: {e}", out.display())))?;
    staged.commit()?;
    println!("wrote {} ({}x{}, depth range {:.4})", out.display(), a.size, a.size, s.depth_range());
    Ok(())
}

/// Ordered metric name/value pairs, rendered as text, CSV or JSON.
#[derive(Default)]
pub struct Metrics {
    entries: Vec<(String, Value)>,
}

impl Metrics {
    pub fn push(&mut self, key: &str, value: impl Into<Value>) {
        self.entries.push((key.to_string(), value.into()));
    }

    fn plain(v: &Value) -> String {
        match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k}: {}", Self::plain(v));
        }
        s
    }

    pub fn csv(&self) -> String {
        let keys: Vec<&str> = self.entries.iter().map(|(k, _)| k.as_str()).collect();
        let values: Vec<String> = self.entries.iter().map(|(_, v)| Self::plain(v)).collect();
        format!("{}\n{}\n", keys.join(","), values.join(","))
    }

    pub fn json(&self) -> String {
        let map: Map<String, Value> = self.entries.iter().cloned().collect();
        serde_json::to_string_pretty(&Value::Object(map)).expect("json") + "\n"
    }
}

pub fn integrate(a: IntegrateArgs) -> Outcome<()> {
    let cfg = a.method.config(a.method.method, true)?;

    // every input is read and checked before anything is solved
    let mut p = read_pfm(&a.p)?;
    let mut q = read_pfm(&a.q)?;
    check_shape("q", &q, &p)?;
    let (h, w) = p.shape();
    let mask = match &a.mask {
        Some(path) => read_mask(path)?,
        None => DomainMask::full(h, w)?,
    };
    check_shape("mask", mask.raster(), &p)?;
    let z0 = a.z0.as_deref().map(read_pfm).transpose()?;
    let lambda_map = a.lambda_map.as_deref().map(read_pfm).transpose()?;
    let truth = a.truth.as_deref().map(read_pfm).transpose()?;
    for (name, r) in [("z0", &z0), ("lambda map", &lambda_map), ("truth", &truth)] {
        if let Some(r) = r {
            check_shape(name, r, &p)?;
        }
    }
    if a.mae && truth.is_none() {
        return Err(Failure::config("--mae needs --truth"));
    }
    let noise = NoiseModel::new(a.sigma, a.seed)?;
    if a.edges.is_some() && cfg.edges_unavailable() {
        return Err(Failure::config(format!("{} produces no edge map", cfg.method)));
    }

    let disc = Discretization::from_mask(mask)?;
    let domain = &disc.domain;
    noise.apply(&mut p, &mut q)?;
    let g = GradientField::from_rasters(domain, &p, &q)?;
    let z0 = match &z0 {
        Some(r) => domain.gather(r)?,
        None => vec![0.0; domain.len()],
    };
    let lambda = match &lambda_map {
        Some(r) => domain.gather(r)?,
        None => vec![a.method.lambda; domain.len()],
    };
    let prior = PriorField::new(z0, lambda)?;
    prior.validate()?;

    if a.dry_run {
        let mut resolved = describe(&cfg);
        resolved["domain"] = json!({ "height": h, "width": w, "pixels": domain.len() });
        resolved["lambda"] = match &a.lambda_map {
            Some(path) => json!(path.display().to_string()),
            None => json!(a.method.lambda),
        };
        resolved["noise"] = json!({ "sigma": a.sigma, "seed": a.seed });
        println!("{}", serde_json::to_string_pretty(&resolved).expect("json"));
        return Ok(());
    }

    let start = Instant::now();
    let out = run_method(&disc, &g, &prior, &cfg)?;
    let seconds = start.elapsed().as_secs_f64();
    let z = &out.depth.z;

    let mut metrics = Metrics::default();
    metrics.push("method", cfg.method.name());
    metrics.push("height", h);
    metrics.push("width", w);
    metrics.push("pixels", domain.len());
    metrics.push("iterations", out.iterations);
    metrics.push("seconds", seconds);
    if let Some(last) = out.history.last() {
        metrics.push("final_trace", *last);
    }
    if let Some(truth) = &truth {
        let t = domain.gather(truth)?;
        metrics.push("rmse", aligned_rmse(z, &t, None)?);
        metrics.push("max_error", aligned_max_error(z, &t, None)?);
        if a.mae {
            metrics.push("mae_degrees", mean_angular_error(domain, z, &t)?);
        }
    }

    let mut staged = Staged::default();
    staged.add(&a.output, pfm_bytes(&domain.scatter(z, f64::NAN)));
    if let Some(path) = &a.obj {
        let mut bytes = Vec::new();
        write_obj(&mut bytes, domain, z)?;
        staged.add(path, bytes);
    }
    if let Some(path) = &a.metrics {
        staged.add(path, metrics.text().into_bytes());
    }
    if let Some(path) = &a.metrics_csv {
        staged.add(path, metrics.csv().into_bytes());
    }
    if let Some(path) = &a.metrics_json {
        staged.add(path, metrics.json().into_bytes());
    }
    if let Some(path) = &a.history {
        let mut csv = String::from("iteration,value\n");
        for (k, x) in out.history.iter().enumerate() {
            let _ = writeln!(csv, "{k},{x:e}");
        }
        staged.add(path, csv.into_bytes());
    }
    if let (Some(path), Some(edges)) = (&a.edges, &out.edges) {
        let r = domain.scatter(edges, 1.0);
        staged.add(path, pgm_bytes(&r.map(|&x| (x.clamp(0.0, 1.0) * 255.0).round() as u8)));
    }
    staged.commit()?;
    print!("{}", metrics.text());
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> Outcome<()> {
    let depth = read_pfm(&a.depth)?;
    let truth = read_pfm(&a.truth)?;
    if !depth.same_shape(&truth) {
        return Err(Failure::config(format!(
            "depth is {:?}, truth is {:?}",
            depth.shape(),
            truth.shape()
        )));
    }
    let (h, w) = depth.shape();
    let mask = match &a.mask {
        Some(path) => {
            let m = read_mask(path)?;
            if !m.raster().same_shape(&depth) {
                return Err(Failure::config("mask and depth differ in size"));
            }
            m
        }
        None => DomainMask::full(h, w)?,
    };
    let inside = DomainMask::from_fn(h, w, |u, v| {
        mask.is_inside(u, v) && depth.at(u, v).is_finite() && truth.at(u, v).is_finite()
    })?;
    let domain = Domain::new(inside)?;
    let (z, t) = (domain.gather(&depth)?, domain.gather(&truth)?);
    let mut metrics = Metrics::default();
    metrics.push("pixels", domain.len());
    metrics.push("rmse", aligned_rmse(&z, &t, None)?);
    metrics.push("max_error", aligned_max_error(&z, &t, None)?);
    match mean_angular_error(&domain, &z, &t) {
        Ok(mae) => metrics.push("mae_degrees", mae),
        Err(e) => log::warn!("no angular error: {e}"),
    }
    let text = match a.format.as_str() {
        "csv" => metrics.csv(),
        "json" => metrics.json(),
        _ => metrics.text(),
    };
    print!("{text}");
    Ok(())
}
