//! Error measures between a reconstruction and ground truth.

use crate::domain::{Direction, Domain};
use crate::error::{Error, Result};
use crate::normals::unit_normal;

fn check(z: &[f64], truth: &[f64], keep: Option<&[bool]>) -> Result<()> {
    if z.len() != truth.len() || keep.is_some_and(|k| k.len() != z.len()) {
        return Err(Error::DimensionMismatch(format!(
            "reconstruction has {} values, ground truth {}",
            z.len(),
            truth.len()
        )));
    }
    Ok(())
}

fn selected<'a>(z: &'a [f64], truth: &'a [f64], keep: Option<&'a [bool]>) -> impl Iterator<Item = (f64, f64)> + 'a {
    (0..z.len())
        .filter(move |&i| keep.is_none_or(|k| k[i]))
        .map(move |i| (z[i], truth[i]))
}

/// Mean of `z − truth` over the selected pixels: the constant that best
/// aligns the two in the least-squares sense.
pub fn alignment_offset(z: &[f64], truth: &[f64], keep: Option<&[bool]>) -> Result<f64> {
    check(z, truth, keep)?;
    let (mut sum, mut n) = (0.0, 0usize);
    for (a, b) in selected(z, truth, keep) {
        sum += a - b;
        n += 1;
    }
    if n == 0 {
        return Err(Error::InvalidParameter("no pixel selected for comparison".into()));
    }
    Ok(sum / n as f64)
}

/// RMSE after removing the optimal constant offset.
pub fn aligned_rmse(z: &[f64], truth: &[f64], keep: Option<&[bool]>) -> Result<f64> {
    let c = alignment_offset(z, truth, keep)?;
    let (mut sum, mut n) = (0.0, 0usize);
    for (a, b) in selected(z, truth, keep) {
        sum += (a - b - c).powi(2);
        n += 1;
    }
    Ok((sum / n as f64).sqrt())
}

/// Largest absolute error after removing the mean offset.
pub fn aligned_max_error(z: &[f64], truth: &[f64], keep: Option<&[bool]>) -> Result<f64> {
    let c = alignment_offset(z, truth, keep)?;
    Ok(selected(z, truth, keep).fold(0.0, |m, (a, b)| m.max((a - b - c).abs())))
}

/// Mean angle in degrees between normals of `z` and `truth`, both estimated
/// by central differences at pixels whose four neighbours are inside.
pub fn mean_angular_error(domain: &Domain, z: &[f64], truth: &[f64]) -> Result<f64> {
    check(z, truth, None)?;
    if z.len() != domain.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values on a domain of {} pixels",
            z.len(),
            domain.len()
        )));
    }
    let sub = domain.subdomains();
    let (mut sum, mut n) = (0.0, 0usize);
    for i in 0..z.len() {
        let nb = Direction::ALL.map(|d| sub.neighbor(d, i));
        let [Some(up), Some(um), Some(vp), Some(vm)] = nb else {
            continue;
        };
        let normal = |f: &[f64]| unit_normal(0.5 * (f[up] - f[um]), 0.5 * (f[vp] - f[vm]));
        let (a, b) = (normal(z), normal(truth));
        // atan2 keeps small angles accurate where acos of the dot product does not
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        sum += sin.atan2(dot).to_degrees();
        n += 1;
    }
    if n == 0 {
        return Err(Error::InvalidParameter("no pixel has all four neighbours in the domain".into()));
    }
    Ok(sum / n as f64)
}

/// Sum of squared second differences `z(u+1) − 2z(u) + z(u−1)` (and the same
/// along v) over the selected pixels; measures ringing.
pub fn second_difference_energy(domain: &Domain, z: &[f64], keep: Option<&[bool]>) -> Result<f64> {
    if z.len() != domain.len() || keep.is_some_and(|k| k.len() != z.len()) {
        return Err(Error::DimensionMismatch(format!(
            "{} values on a domain of {} pixels",
            z.len(),
            domain.len()
        )));
    }
    let sub = domain.subdomains();
    let mut e = 0.0;
    for i in (0..z.len()).filter(|&i| keep.is_none_or(|k| k[i])) {
        for (f, b) in [(Direction::UPlus, Direction::UMinus), (Direction::VPlus, Direction::VMinus)] {
            if let (Some(a), Some(c)) = (sub.neighbor(f, i), sub.neighbor(b, i)) {
                e += (z[a] - 2.0 * z[i] + z[c]).powi(2);
            }
        }
    }
    Ok(e)
}
