use std::sync::Arc;

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{Field, TorusGrid};

/// Normalized Fourier coefficients of a real field:
/// `u(x) = sum_k c_k exp(i kappa_k . x)` with `kappa_k = 2 pi k / L`.
#[derive(Clone, Debug)]
pub struct Spectrum<T: Real> {
    grid: Arc<TorusGrid<T>>,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> Spectrum<T> {
    pub fn forward(f: &Field<T>) -> Self {
        let grid = f.grid().clone();
        let mut buf: Vec<Complex<T>> = f
            .values()
            .iter()
            .map(|&v| Complex::new(v, T::zero()))
            .collect();
        grid.fft_in_place(&mut buf, false);
        let norm = T::one() / T::from_usize_lossy(grid.len());
        for c in buf.iter_mut() {
            *c = *c * norm;
        }
        Spectrum { grid, coeffs: buf }
    }

    pub fn from_coeffs(grid: Arc<TorusGrid<T>>, coeffs: Vec<Complex<T>>) -> Self {
        assert_eq!(coeffs.len(), grid.len());
        Spectrum { grid, coeffs }
    }

    pub fn grid(&self) -> &Arc<TorusGrid<T>> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    /// Inverse transform. Any anti-Hermitian residue (including an imaginary
    /// Nyquist component) is discarded by keeping the real part.
    pub fn to_field(&self) -> Field<T> {
        let mut buf = self.coeffs.clone();
        self.grid.fft_in_place(&mut buf, true);
        Field::from_parts(self.grid.clone(), buf.into_iter().map(|c| c.re).collect())
    }

    /// `sum_k w_k |c_k|^2 * volume`.
    pub fn weighted_energy(&self, weight: impl Fn(usize) -> T) -> T {
        let vol = self.grid.volume();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| weight(i) * c.norm_sqr())
            .sum::<T>()
            * vol
    }

    /// Largest `|c_{-k} - conj(c_k)|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> T {
        let scale = self
            .coeffs
            .iter()
            .fold(T::zero(), |m, c| m.max(c.norm()))
            .max(T::min_positive_value());
        let mut worst = T::zero();
        for (i, c) in self.coeffs.iter().enumerate() {
            let m = self.coeffs[self.grid.mirror(i)];
            worst = worst.max((m - c.conj()).norm());
        }
        worst / scale
    }
}

/// Multiplies the spectrum of `f` by a real symbol of the angular wave vector.
///
/// The symbol must be even on the resolved modes so that the output is real.
pub fn apply_spectral_multiplier<T: Real>(
    f: &Field<T>,
    symbol: impl Fn(&[T]) -> T,
) -> Result<Field<T>> {
    let grid = f.grid();
    let dim = grid.dim();
    let values: Vec<T> = (0..grid.len())
        .map(|i| {
            let k = grid.kappa(i);
            symbol(&k[..dim])
        })
        .collect();
    let tol = T::lit(1e-12);
    for (i, &s) in values.iter().enumerate() {
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "symbol is not finite at mode {:?}",
                grid.wave_vector(i)
            )));
        }
        let m = values[grid.mirror(i)];
        if (s - m).abs() > tol * s.abs().max(m.abs()).max(T::one()) {
            return Err(Error::SymmetryViolation {
                mode: grid.wave_vector(i),
                value: s.as_f64(),
                mirror_value: m.as_f64(),
            });
        }
    }
    Ok(apply_symbol_values(f, &values))
}

/// Multiplies by precomputed symbol values (one per spectral index).
fn apply_symbol_values<T: Real>(f: &Field<T>, symbol: &[T]) -> Field<T> {
    let mut spec = Spectrum::forward(f);
    for (c, &s) in spec.coeffs.iter_mut().zip(symbol) {
        *c = *c * s;
    }
    spec.to_field()
}

/// Spectral partial derivative along `axis`; the Nyquist component is dropped.
pub fn derivative<T: Real>(f: &Field<T>, axis: usize) -> Field<T> {
    let grid = f.grid().clone();
    let mut spec = Spectrum::forward(f);
    for (i, c) in spec.coeffs.iter_mut().enumerate() {
        let j = grid.axis_index(i, axis);
        if j == grid.n() / 2 {
            *c = Complex::new(T::zero(), T::zero());
        } else {
            let k = grid.kappa_axis(j, axis);
            *c = Complex::new(-c.im * k, c.re * k);
        }
    }
    spec.to_field()
}

/// Spectral gradient, one field per axis.
pub fn gradient<T: Real>(f: &Field<T>) -> Vec<Field<T>> {
    (0..f.grid().dim()).map(|a| derivative(f, a)).collect()
}

/// Alias-free `P((P u)^p)` for `p <= 5`, where `P` keeps the modes with every
/// `|k_i| < n/2`. The product is formed on the 3x padded grid.
pub fn dealiased_power<T: Real>(u: &Field<T>, p: i32) -> Field<T> {
    debug_assert!((1..=5).contains(&p));
    let grid = u.grid().clone();
    let spec = Spectrum::forward(u);
    let n = grid.n();
    let m = 3 * n;
    let dim = grid.dim();
    let zero = Complex::new(T::zero(), T::zero());
    let mut padded = vec![zero; m.pow(dim as u32)];

    let padded_index = |idx: usize| -> Option<usize> {
        let mut out = 0;
        for axis in 0..dim {
            let j = grid.axis_index(idx, axis);
            if j == n / 2 {
                return None;
            }
            let k = grid.wave_number(j);
            out = out * m + k.rem_euclid(m as i64) as usize;
        }
        Some(out)
    };

    for (i, c) in spec.coeffs.iter().enumerate() {
        if let Some(pi) = padded_index(i) {
            padded[pi] = *c;
        }
    }
    grid.padded_fft_in_place(&mut padded, true);
    for c in padded.iter_mut() {
        let v = c.re.powi(p);
        *c = Complex::new(v, T::zero());
    }
    grid.padded_fft_in_place(&mut padded, false);
    let norm = T::one() / T::from_usize_lossy(padded.len());
    let mut coeffs = vec![zero; grid.len()];
    for (i, c) in coeffs.iter_mut().enumerate() {
        if let Some(pi) = padded_index(i) {
            *c = padded[pi] * norm;
        }
    }
    Spectrum::from_coeffs(grid, coeffs).to_field()
}
