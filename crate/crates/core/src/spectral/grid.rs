use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform collocation grid on the flat torus `prod_i [0, L_i)`.
///
/// Points are stored row-major with the last axis fastest. The grid owns the
/// FFT plans for its resolution and for the 3x padded resolution used when
/// dealiasing the quintic term; plans are immutable and shared across threads.
pub struct TorusGrid<T: Real> {
    dim: usize,
    n: usize,
    lengths: Vec<T>,
    plans: Plans<T>,
    /// `|kappa|^2` per spectral index.
    kappa_sq: Vec<T>,
    /// `sum_i kappa_i^2` with the Nyquist component of each axis dropped.
    laplacian: Vec<T>,
}

struct Plans<T: Real> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    padded_forward: Arc<dyn Fft<T>>,
    padded_inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> TorusGrid<T> {
    /// Builds a grid with `n` points per axis on a `dim`-torus of the given periods.
    pub fn new(dim: usize, n: usize, lengths: &[T]) -> Result<Arc<Self>> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if lengths.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} period lengths, got {}",
                lengths.len()
            )));
        }
        if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l > T::zero())) {
            return Err(Error::InvalidGrid(format!(
                "period length {l} must be positive"
            )));
        }

        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            padded_forward: planner.plan_fft_forward(3 * n),
            padded_inverse: planner.plan_fft_inverse(3 * n),
        };

        let mut grid = TorusGrid {
            dim,
            n,
            lengths: lengths.to_vec(),
            plans,
            kappa_sq: Vec::new(),
            laplacian: Vec::new(),
        };
        let len = grid.len();
        let mut kappa_sq = Vec::with_capacity(len);
        let mut laplacian = Vec::with_capacity(len);
        for idx in 0..len {
            let mut full = T::zero();
            let mut lap = T::zero();
            for axis in 0..dim {
                let j = grid.axis_index(idx, axis);
                let kap = grid.kappa_axis(j, axis);
                full = full + kap * kap;
                if j != n / 2 {
                    lap = lap + kap * kap;
                }
            }
            kappa_sq.push(full);
            laplacian.push(lap);
        }
        grid.kappa_sq = kappa_sq;
        grid.laplacian = laplacian;
        Ok(Arc::new(grid))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lengths(&self) -> &[T] {
        &self.lengths
    }

    /// Total number of collocation points, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Torus volume `prod_i L_i`.
    pub fn volume(&self) -> T {
        self.lengths.iter().fold(T::one(), |acc, &l| acc * l)
    }

    /// Quadrature weight of a single collocation point.
    pub fn cell_volume(&self) -> T {
        self.volume() / T::from_usize_lossy(self.len())
    }

    pub fn cell_width(&self, axis: usize) -> T {
        self.lengths[axis] / T::from_usize_lossy(self.n)
    }

    pub fn min_cell_width(&self) -> T {
        (0..self.dim)
            .map(|a| self.cell_width(a))
            .fold(T::infinity(), T::min)
    }

    /// Diameter of the fundamental domain, `sqrt(sum_i L_i^2)`.
    pub fn diameter(&self) -> T {
        self.lengths
            .iter()
            .fold(T::zero(), |acc, &l| acc + l * l)
            .sqrt()
    }

    /// Index along `axis` of the flat point (or mode) index `idx`.
    #[inline]
    pub fn axis_index(&self, idx: usize, axis: usize) -> usize {
        let stride = self.n.pow((self.dim - 1 - axis) as u32);
        (idx / stride) % self.n
    }

    /// Flat index of a multi-index.
    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &j| acc * self.n + j)
    }

    /// Coordinates of collocation point `idx`.
    pub fn point(&self, idx: usize) -> [T; 3] {
        let mut x = [T::zero(); 3];
        for (axis, xa) in x.iter_mut().enumerate().take(self.dim) {
            *xa = T::from_usize_lossy(self.axis_index(idx, axis)) * self.cell_width(axis);
        }
        x
    }

    /// Signed integer wave number of spectral index `j` along one axis.
    /// The Nyquist index `n/2` maps to `-n/2`.
    #[inline]
    pub fn wave_number(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Integer wave vector of a flat spectral index.
    pub fn wave_vector(&self, idx: usize) -> Vec<i64> {
        (0..self.dim)
            .map(|a| self.wave_number(self.axis_index(idx, a)))
            .collect()
    }

    /// Angular wave number `2 pi k / L` for spectral index `j` along `axis`.
    #[inline]
    pub fn kappa_axis(&self, j: usize, axis: usize) -> T {
        T::lit(2.0) * T::PI() * T::lit(self.wave_number(j) as f64) / self.lengths[axis]
    }

    /// Angular wave vector of a flat spectral index.
    pub fn kappa(&self, idx: usize) -> [T; 3] {
        let mut k = [T::zero(); 3];
        for (axis, ka) in k.iter_mut().enumerate().take(self.dim) {
            *ka = self.kappa_axis(self.axis_index(idx, axis), axis);
        }
        k
    }

    /// `|2 pi k / L|^2` per spectral index.
    pub fn kappa_sq(&self) -> &[T] {
        &self.kappa_sq
    }

    /// Symbol of `-Delta` realized as `-sum_i D_i^2` with spectral first
    /// derivatives `D_i`, which vanish on the Nyquist index of their axis.
    pub fn laplacian_symbol(&self) -> &[T] {
        &self.laplacian
    }

    /// Flat index of the mode `-k`.
    pub fn mirror(&self, idx: usize) -> usize {
        let mut out = 0;
        for axis in 0..self.dim {
            let j = self.axis_index(idx, axis);
            out = out * self.n + (self.n - j) % self.n;
        }
        out
    }

    /// True when some axis of the mode sits on the Nyquist index.
    pub fn touches_nyquist(&self, idx: usize) -> bool {
        (0..self.dim).any(|a| self.axis_index(idx, a) == self.n / 2)
    }

    /// Unnormalized in-place multi-dimensional FFT.
    pub(crate) fn fft_in_place(&self, buf: &mut [Complex<T>], inverse: bool) {
        let plan = if inverse {
            &self.plans.inverse
        } else {
            &self.plans.forward
        };
        fft_axes(plan.as_ref(), buf, self.n, self.dim);
    }

    /// Unnormalized in-place FFT on the `3n`-per-axis padded grid.
    pub(crate) fn padded_fft_in_place(&self, buf: &mut [Complex<T>], inverse: bool) {
        let plan = if inverse {
            &self.plans.padded_inverse
        } else {
            &self.plans.padded_forward
        };
        fft_axes(plan.as_ref(), buf, 3 * self.n, self.dim);
    }
}

fn fft_axes<T: Real>(plan: &dyn Fft<T>, buf: &mut [Complex<T>], n: usize, dim: usize) {
    debug_assert_eq!(buf.len(), n.pow(dim as u32));
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
    // last axis is contiguous
    plan.process_with_scratch(buf, &mut scratch);
    if dim == 1 {
        return;
    }
    let mut line = vec![Complex::new(T::zero(), T::zero()); n];
    for axis in 0..dim - 1 {
        let stride = n.pow((dim - 1 - axis) as u32);
        let outer = n.pow(axis as u32);
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * n * stride + inner;
                for (i, c) in line.iter_mut().enumerate() {
                    *c = buf[base + i * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (i, c) in line.iter().enumerate() {
                    buf[base + i * stride] = *c;
                }
            }
        }
    }
}

impl<T: Real> PartialEq for TorusGrid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.lengths == other.lengths
    }
}

impl<T: Real> fmt::Debug for TorusGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("lengths", &self.lengths)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_resolution() {
        assert!(matches!(
            TorusGrid::<f64>::new(1, 12, &[1.0]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(TorusGrid::<f64>::new(1, 4, &[1.0]).is_err());
        assert!(TorusGrid::<f64>::new(4, 8, &[1.0; 4]).is_err());
        assert!(TorusGrid::<f64>::new(2, 8, &[1.0]).is_err());
        assert!(TorusGrid::<f64>::new(1, 8, &[0.0]).is_err());
    }

    #[test]
    fn geometry() {
        let g = TorusGrid::<f64>::new(2, 8, &[1.0, 2.0]).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!(g.volume(), 2.0);
        assert_eq!(g.cell_volume(), 2.0 / 64.0);
        let idx = g.flat_index(&[3, 5]);
        assert_eq!(g.axis_index(idx, 0), 3);
        assert_eq!(g.axis_index(idx, 1), 5);
        assert_eq!(g.point(idx)[1], 5.0 * 0.25);
        assert_eq!(g.wave_vector(idx), vec![3, -3]);
        assert_eq!(g.wave_vector(g.mirror(idx)), vec![-3, 3]);
        assert!(g.touches_nyquist(g.flat_index(&[4, 0])));
    }

    #[test]
    fn laplacian_drops_nyquist_component() {
        let g = TorusGrid::<f64>::new(1, 8, &[1.0]).unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        assert_eq!(g.laplacian_symbol()[3], (3.0 * two_pi).powi(2));
        assert_eq!(g.laplacian_symbol()[4], 0.0);
        assert_eq!(g.kappa_sq()[4], (4.0 * two_pi).powi(2));
    }
}
