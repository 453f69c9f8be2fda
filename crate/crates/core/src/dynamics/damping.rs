use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::ControlRegion;
use crate::scalar::Real;
use crate::spectral::{apply_spectral_multiplier, Field, Spectrum, TorusGrid};

/// Largest admissible share of `||a||^2` carried by modes above 2/3 of Nyquist.
pub const SMOOTHNESS_TAIL: f64 = 1e-8;

/// Default transition width of the smoothed plateau, in grid cells.
pub const DEFAULT_TRANSITION_CELLS: f64 = 4.0;

/// Smooth nonnegative coefficient `a(x)` with `a >= eta` on the region.
#[derive(Clone, Debug)]
pub struct DampingProfile<T: Real> {
    a: Field<T>,
    a_sq: Field<T>,
    eta: T,
    region: ControlRegion<T>,
}

impl<T: Real> DampingProfile<T> {
    /// Plateau of height `amplitude` over `region`, mollified by a periodic
    /// Gaussian of standard deviation `transition_cells / 2` cells and clipped
    /// below at zero.
    pub fn smoothed(
        grid: &Arc<TorusGrid<T>>,
        region: &ControlRegion<T>,
        amplitude: T,
        transition_cells: T,
    ) -> Result<Self> {
        if !region.matches_grid(grid) {
            return Err(Error::GridMismatch);
        }
        if !(amplitude > T::zero() && amplitude.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "damping amplitude {amplitude} must be positive"
            )));
        }
        if !(transition_cells > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "transition width {transition_cells} must be positive"
            )));
        }
        let indicator = Field::from_fn(grid, |x| {
            if region.contains(x) {
                amplitude
            } else {
                T::zero()
            }
        })?;
        let sigma: Vec<T> = (0..grid.dim())
            .map(|axis| transition_cells * grid.cell_width(axis) / T::lit(2.0))
            .collect();
        let smooth = apply_spectral_multiplier(&indicator, |k| {
            let e = k
                .iter()
                .zip(&sigma)
                .fold(T::zero(), |acc, (&ki, &s)| acc + ki * ki * s * s);
            (-e / T::lit(2.0)).exp()
        })?;
        let a = smooth.map(|v| v.max(T::zero()));
        let profile = DampingProfile::from_field(a, region.clone())?;
        let tail = profile.fourier_tail_fraction();
        if tail > T::lit(SMOOTHNESS_TAIL) {
            return Err(Error::Resolution(format!(
                "damping profile carries {tail:e} of its energy above 2/3 Nyquist; widen the transition"
            )));
        }
        Ok(profile)
    }

    /// `a == value` everywhere; `value = 0` switches damping off.
    pub fn constant(grid: &Arc<TorusGrid<T>>, value: T) -> Result<Self> {
        if !(value >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "damping value {value} must be nonnegative"
            )));
        }
        let a = Field::constant(grid, value)?;
        DampingProfile::from_field(a, ControlRegion::full(grid.lengths()))
    }

    /// Wraps an explicit coefficient; `eta` is its minimum over the region.
    pub fn from_field(a: Field<T>, region: ControlRegion<T>) -> Result<Self> {
        if !region.matches_grid(a.grid()) {
            return Err(Error::GridMismatch);
        }
        if let Some(v) = a.values().iter().find(|v| **v < T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "damping coefficient must be nonnegative, found {v}"
            )));
        }
        let grid = a.grid().clone();
        let dim = grid.dim();
        let eta = (0..grid.len())
            .filter(|&i| region.contains(&grid.point(i)[..dim]))
            .map(|i| a.values()[i])
            .fold(None, |m: Option<T>, v| Some(m.map_or(v, |m| m.min(v))))
            .ok_or_else(|| Error::Resolution("control region contains no grid point".into()))?;
        let a_sq = a.map(|v| v * v);
        Ok(DampingProfile {
            a,
            a_sq,
            eta,
            region,
        })
    }

    pub fn a(&self) -> &Field<T> {
        &self.a
    }

    pub fn a_squared(&self) -> &Field<T> {
        &self.a_sq
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn region(&self) -> &ControlRegion<T> {
        &self.region
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero()
    }

    /// Share of `sum |a_k|^2` carried by modes with some `|k_i| > n/3`.
    pub fn fourier_tail_fraction(&self) -> T {
        let spec = Spectrum::forward(&self.a);
        let grid = spec.grid();
        let cut = T::from_usize_lossy(grid.n()) / T::lit(3.0);
        let mut total = T::zero();
        let mut tail = T::zero();
        for (i, c) in spec.coeffs().iter().enumerate() {
            let e = c.norm_sqr();
            total = total + e;
            let kmax = grid
                .wave_vector(i)
                .iter()
                .map(|k| k.unsigned_abs())
                .max()
                .unwrap_or(0);
            if T::lit(kmax as f64) > cut {
                tail = tail + e;
            }
        }
        if total == T::zero() {
            T::zero()
        } else {
            tail / total
        }
    }
}
