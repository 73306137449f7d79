use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, RgbImage};
use normint::flatten::{flatten_image, flatten_ms_config, ControlPointSpec};
use normint::raster::Raster;
use serde_json::json;

use crate::failure::{Failure, Outcome};
use crate::output::Staged;
use crate::FlattenArgs;

fn encode(img: &RgbImage, path: &Path) -> Outcome<Vec<u8>> {
    let format = ImageFormat::from_path(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let mut bytes = Cursor::new(Vec::new());
    img.write_to(&mut bytes, format)?;
    Ok(bytes.into_inner())
}

pub fn flatten(a: FlattenArgs) -> Outcome<()> {
    let spec = ControlPointSpec {
        fraction: a.fraction,
        lambda_on: a.lambda_on,
        lambda_off: a.lambda_off,
    };
    spec.validate()?;
    let mut ms = flatten_ms_config();
    if let Some(mu) = a.mu {
        ms.mu = mu;
    }
    if let Some(epsilon) = a.epsilon {
        ms.epsilon = epsilon;
    }
    if let Some(iters) = a.iters {
        ms.iterations = iters;
    }
    ms.validate()?;
    for path in std::iter::once(&a.output).chain(&a.control) {
        ImageFormat::from_path(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    }
    let input = image::open(&a.input).map_err(|e| Failure::from(e).context(a.input.display()))?;
    if !matches!(input, image::DynamicImage::ImageRgb8(_)) {
        log::warn!("{} is not 8-bit RGB; converting", a.input.display());
    }
    let rgb = input.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);

    if a.dry_run {
        let resolved = json!({
            "input": a.input.display().to_string(),
            "height": h,
            "width": w,
            "fraction": spec.fraction,
            "lambda_on": spec.lambda_on,
            "lambda_off": spec.lambda_off,
            "mu": ms.mu,
            "epsilon": ms.epsilon,
            "iterations": ms.iterations,
        });
        println!("{}", serde_json::to_string_pretty(&resolved).expect("json"));
        return Ok(());
    }

    let raster = Raster::from_fn(h, w, |u, v| rgb.get_pixel(v as u32, u as u32).0.map(f64::from));
    let out = flatten_image(&raster, &spec, &ms)?;
    let image = RgbImage::from_fn(w as u32, h as u32, |x, y| {
        image::Rgb(out.image.at(y as usize, x as usize).map(|c| c.round().clamp(0.0, 255.0) as u8))
    });
    let mut staged = Staged::default();
    staged.add(&a.output, encode(&image, &a.output)?);
    if let Some(path) = &a.control {
        let mask = RgbImage::from_fn(w as u32, h as u32, |x, y| {
            image::Rgb([if out.control.at(y as usize, x as usize) { 255 } else { 0 }; 3])
        });
        staged.add(path, encode(&mask, path)?);
    }
    staged.commit()?;
    let kept = out.control.as_slice().iter().filter(|&&c| c).count();
    println!("flattened {w}x{h} from {kept} control points");
    Ok(())
}
