//! Geodesic (straight-line) ray tracing on flat tori and sampled verification
//! of the geometric control condition.
//!
//! On a flat torus geodesics are lines `x0 + t xi` taken modulo the periods.
//! Hitting times against a periodic box are computed exactly per axis: the
//! set of times an axis coordinate lies inside the box is a periodic union
//! of open intervals, and the ray is inside the box on the intersection of
//! those sets over all axes.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::TorusGrid;

/// Open axis-aligned box, interpreted periodically.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicBox<T: Real> {
    pub center: Vec<T>,
    pub half_widths: Vec<T>,
}

/// Control region `omega`: a nonempty union of periodic boxes.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlRegion<T: Real> {
    lengths: Vec<T>,
    boxes: Vec<PeriodicBox<T>>,
}

/// Signed representative of `d` modulo `l` in `[-l/2, l/2)`.
#[inline]
pub fn wrap<T: Real>(d: T, l: T) -> T {
    let half = l / T::lit(2.0);
    (d + half).rem_euclid(&l) - half
}

trait RemEuclid {
    fn rem_euclid(&self, m: &Self) -> Self;
}

impl<T: Real> RemEuclid for T {
    #[inline]
    fn rem_euclid(&self, m: &Self) -> Self {
        let r = *self % *m;
        if r < T::zero() {
            r + *m
        } else {
            r
        }
    }
}

impl<T: Real> ControlRegion<T> {
    pub fn new(lengths: &[T], boxes: Vec<PeriodicBox<T>>) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::InvalidParameter(
                "control region has no boxes".into(),
            ));
        }
        let dim = lengths.len();
        for (i, b) in boxes.iter().enumerate() {
            if b.center.len() != dim || b.half_widths.len() != dim {
                return Err(Error::InvalidParameter(format!(
                    "box {i} does not have {dim} coordinates"
                )));
            }
            for (axis, (&h, &l)) in b.half_widths.iter().zip(lengths).enumerate() {
                if !(h > T::zero() && h <= l / T::lit(2.0)) {
                    return Err(Error::InvalidParameter(format!(
                        "box {i} half-width {h} on axis {axis} outside (0, {}]",
                        l / T::lit(2.0)
                    )));
                }
            }
            if b.center.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "box {i} center not finite"
                )));
            }
        }
        Ok(ControlRegion {
            lengths: lengths.to_vec(),
            boxes,
        })
    }

    /// The whole torus.
    pub fn full(lengths: &[T]) -> Self {
        let half = lengths.iter().map(|&l| l / T::lit(2.0)).collect();
        ControlRegion {
            lengths: lengths.to_vec(),
            boxes: vec![PeriodicBox {
                center: vec![T::zero(); lengths.len()],
                half_widths: half,
            }],
        }
    }

    /// Strip `{x : |x_axis - center| < half_width}` extending over all other axes.
    pub fn strip(lengths: &[T], axis: usize, center: T, half_width: T) -> Result<Self> {
        let mut c = vec![T::zero(); lengths.len()];
        let mut h: Vec<T> = lengths.iter().map(|&l| l / T::lit(2.0)).collect();
        c[axis] = center;
        h[axis] = half_width;
        ControlRegion::new(
            lengths,
            vec![PeriodicBox {
                center: c,
                half_widths: h,
            }],
        )
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[T] {
        &self.lengths
    }

    pub fn boxes(&self) -> &[PeriodicBox<T>] {
        &self.boxes
    }

    pub fn is_full_axis(&self, b: &PeriodicBox<T>, axis: usize) -> bool {
        b.half_widths[axis] >= self.lengths[axis] / T::lit(2.0)
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.boxes.iter().any(|b| {
            (0..self.dim()).all(|a| {
                self.is_full_axis(b, a)
                    || wrap(x[a] - b.center[a], self.lengths[a]).abs() < b.half_widths[a]
            })
        })
    }

    pub fn translated(&self, shift: &[T]) -> Self {
        let boxes = self
            .boxes
            .iter()
            .map(|b| PeriodicBox {
                center: b.center.iter().zip(shift).map(|(&c, &s)| c + s).collect(),
                half_widths: b.half_widths.clone(),
            })
            .collect();
        ControlRegion {
            lengths: self.lengths.clone(),
            boxes,
        }
    }

    pub fn matches_grid(&self, grid: &TorusGrid<T>) -> bool {
        self.lengths == grid.lengths()
    }
}

/// Unit-speed straight line on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct Ray<T: Real> {
    origin: Vec<T>,
    direction: Vec<T>,
}

impl<T: Real> Ray<T> {
    /// Builds a ray, normalizing `direction` to unit length.
    pub fn new(origin: Vec<T>, direction: Vec<T>) -> Result<Self> {
        if origin.len() != direction.len() || origin.is_empty() {
            return Err(Error::InvalidRay(
                "origin and direction dimensions differ".into(),
            ));
        }
        let norm = direction.iter().fold(T::zero(), |a, &d| a + d * d).sqrt();
        if !(norm.is_finite() && norm > T::zero()) {
            return Err(Error::InvalidRay(
                "direction must be nonzero and finite".into(),
            ));
        }
        Ok(Ray {
            origin,
            direction: direction.into_iter().map(|d| d / norm).collect(),
        })
    }

    pub fn origin(&self) -> &[T] {
        &self.origin
    }

    pub fn direction(&self) -> &[T] {
        &self.direction
    }

    pub fn at(&self, t: T) -> Vec<T> {
        self.origin
            .iter()
            .zip(&self.direction)
            .map(|(&x, &d)| x + t * d)
            .collect()
    }
}

/// Sorted open time intervals during which one axis coordinate is inside a box.
fn axis_windows<T: Real>(x0: T, xi: T, center: T, half: T, l: T, horizon: T) -> Vec<(T, T)> {
    let d0 = wrap(x0 - center, l);
    if xi == T::zero() {
        return if d0.abs() < half {
            vec![(T::zero(), horizon)]
        } else {
            Vec::new()
        };
    }
    // reflect so that the motion is in the positive direction
    let (d0, speed) = if xi > T::zero() { (d0, xi) } else { (-d0, -xi) };
    let period = l / speed;
    let width = T::lit(2.0) * half / speed;
    // first entry time in [0, period)
    let first = (-half - d0).rem_euclid(&l) / speed;
    let mut out = Vec::new();
    let mut start = first - period;
    while start < horizon {
        let end = start + width;
        if end > T::zero() {
            out.push((start.max(T::zero()), end.min(horizon)));
        }
        start = start + period;
    }
    out
}

fn intersect<T: Real>(a: &[(T, T)], b: &[(T, T)]) -> Vec<(T, T)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo < hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Earliest `t >= 0` at which the ray enters `region`, or `None` if it does
/// not meet the region before `horizon`. Starting inside gives `0`.
pub fn first_hitting_time<T: Real>(
    ray: &Ray<T>,
    region: &ControlRegion<T>,
    horizon: T,
) -> Result<Option<T>> {
    if !(horizon > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} must be positive"
        )));
    }
    if ray.origin.len() != region.dim() {
        return Err(Error::InvalidRay(format!(
            "ray has dimension {}, region {}",
            ray.origin.len(),
            region.dim()
        )));
    }
    let mut best: Option<T> = None;
    for b in &region.boxes {
        let mut windows = vec![(T::zero(), horizon)];
        for axis in 0..region.dim() {
            if region.is_full_axis(b, axis) {
                continue;
            }
            let w = axis_windows(
                ray.origin[axis],
                ray.direction[axis],
                b.center[axis],
                b.half_widths[axis],
                region.lengths[axis],
                horizon,
            );
            windows = intersect(&windows, &w);
            if windows.is_empty() {
                break;
            }
        }
        if let Some(&(lo, _)) = windows.first() {
            if lo < horizon {
                best = Some(best.map_or(lo, |t: T| t.min(lo)));
            }
        }
    }
    Ok(best)
}

/// Geodesics from one point never refocus on a flat torus.
pub fn t_focus<T: Real>(_grid: &TorusGrid<T>) -> T {
    T::infinity()
}

/// Hitting time of one sampled ray.
#[derive(Clone, Debug)]
pub struct RaySample<T: Real> {
    pub ray: Ray<T>,
    pub hitting_time: Option<T>,
}

/// Outcome of a sampled geometric-control check.
#[derive(Clone, Debug)]
pub struct GccReport<T: Real> {
    /// Max sampled hitting time; `None` if some ray missed within the horizon.
    /// A sampled lower bound of the true control time.
    pub t0_estimate: Option<T>,
    pub worst_ray: Option<Ray<T>>,
    pub uncontrolled: Vec<Ray<T>>,
    pub horizon: T,
    pub origins_per_axis: usize,
    pub n_dirs: usize,
    pub samples: Vec<RaySample<T>>,
    /// Always `+inf` on the torus.
    pub t_focus: T,
}

impl<T: Real> GccReport<T> {
    pub fn controlled(&self) -> bool {
        self.t0_estimate.is_some()
    }

    /// Control before refocusing; on the torus this is plain control since
    /// `t_focus = +inf`.
    pub fn controlled_before_refocusing(&self) -> bool {
        self.t0_estimate.is_some_and(|t0| t0 < self.t_focus)
    }
}

impl<T: Real> fmt::Display for GccReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.t0_estimate {
            Some(t0) => write!(
                f,
                "T0 >= {t0} (sampled lower bound over {} rays, horizon {})",
                self.samples.len(),
                self.horizon
            )?,
            None => write!(
                f,
                "not controlled within horizon {}: {} of {} rays miss",
                self.horizon,
                self.uncontrolled.len(),
                self.samples.len()
            )?,
        }
        write!(f, "; T_focus = {}", self.t_focus)
    }
}

/// Radical inverse of `i` in base 2.
fn van_der_corput(mut i: usize) -> f64 {
    let mut inv = 0.5;
    let mut out = 0.0;
    while i > 0 {
        if i & 1 == 1 {
            out += inv;
        }
        inv *= 0.5;
        i >>= 1;
    }
    out
}

/// Axis directions followed by `n_dirs` low-discrepancy unit vectors.
///
/// The generic directions form a prefix-nested sequence so that enlarging
/// `n_dirs` only adds samples.
pub fn sample_directions<T: Real>(dim: usize, n_dirs: usize) -> Vec<Vec<T>> {
    let mut dirs = Vec::new();
    for axis in 0..dim {
        for sign in [1.0, -1.0] {
            let mut d = vec![T::zero(); dim];
            d[axis] = T::lit(sign);
            dirs.push(d);
        }
    }
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    match dim {
        2 => {
            for j in 0..n_dirs {
                let th = golden_angle * (j as f64 + 0.5);
                dirs.push(vec![T::lit(th.cos()), T::lit(th.sin())]);
            }
        }
        3 => {
            for j in 0..n_dirs {
                let z = 1.0 - 2.0 * van_der_corput(j + 1);
                let r = (1.0 - z * z).max(0.0).sqrt();
                let th = golden_angle * (j as f64 + 0.5);
                dirs.push(vec![T::lit(r * th.cos()), T::lit(r * th.sin()), T::lit(z)]);
            }
        }
        _ => {}
    }
    dirs
}

/// Origins on the lattice `x_j = j L / n` per axis (`n^dim` points).
pub fn sample_origins<T: Real>(lengths: &[T], per_axis: usize) -> Vec<Vec<T>> {
    let dim = lengths.len();
    let total = per_axis.pow(dim as u32);
    (0..total)
        .map(|idx| {
            let mut x = vec![T::zero(); dim];
            let mut rest = idx;
            for axis in (0..dim).rev() {
                let j = rest % per_axis;
                rest /= per_axis;
                x[axis] = T::from_usize_lossy(j) * lengths[axis] / T::from_usize_lossy(per_axis);
            }
            x
        })
        .collect()
}

/// Samples rays from a lattice of origins in axis plus low-discrepancy
/// directions and reports the largest first-hitting time.
pub fn gcc_check<T: Real>(
    region: &ControlRegion<T>,
    horizon: T,
    origins_per_axis: usize,
    n_dirs: usize,
) -> Result<GccReport<T>> {
    if origins_per_axis == 0 || n_dirs == 0 {
        return Err(Error::InvalidParameter(
            "sample counts must be positive".into(),
        ));
    }
    if !(horizon > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} must be positive"
        )));
    }
    let origins = sample_origins(region.lengths(), origins_per_axis);
    let dirs = sample_directions::<T>(region.dim(), n_dirs);
    let pairs: Vec<(usize, usize)> = (0..origins.len())
        .flat_map(|o| (0..dirs.len()).map(move |d| (o, d)))
        .collect();
    let samples: Vec<RaySample<T>> = pairs
        .par_iter()
        .map(|&(o, d)| {
            let ray = Ray::new(origins[o].clone(), dirs[d].clone())?;
            let hitting_time = first_hitting_time(&ray, region, horizon)?;
            Ok(RaySample { ray, hitting_time })
        })
        .collect::<Result<_>>()?;

    let uncontrolled: Vec<Ray<T>> = samples
        .iter()
        .filter(|s| s.hitting_time.is_none())
        .map(|s| s.ray.clone())
        .collect();
    let (t0_estimate, worst_ray) = if uncontrolled.is_empty() {
        let worst = samples
            .iter()
            .max_by(|a, b| a.hitting_time.partial_cmp(&b.hitting_time).unwrap())
            .expect("at least one sample");
        (worst.hitting_time, Some(worst.ray.clone()))
    } else {
        (None, Some(uncontrolled[0].clone()))
    };
    Ok(GccReport {
        t0_estimate,
        worst_ray,
        uncontrolled,
        horizon,
        origins_per_axis,
        n_dirs,
        samples,
        t_focus: T::infinity(),
    })
}
