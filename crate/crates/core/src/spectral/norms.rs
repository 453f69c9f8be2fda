//! Sobolev, Lebesgue and dyadic Besov norms on the torus.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{Field, Spectrum};

/// `||f||_{H^s} = sqrt(sum_k (1 + |kappa_k|^2)^s |c_k|^2 vol)`.
///
/// `s = 0` is the L2 norm and `s = -1` the H^{-1} norm.
pub fn sobolev_norm<T: Real>(f: &Field<T>, s: T) -> T {
    let spec = Spectrum::forward(f);
    sobolev_norm_of(&spec, s)
}

pub fn sobolev_norm_of<T: Real>(spec: &Spectrum<T>, s: T) -> T {
    let ksq = spec.grid().kappa_sq();
    spec.weighted_energy(|i| (T::one() + ksq[i]).powf(s)).sqrt()
}

/// Homogeneous `||grad f||_{L2}` realized with spectral derivatives.
pub fn gradient_norm<T: Real>(f: &Field<T>) -> T {
    let spec = Spectrum::forward(f);
    let lap = spec.grid().laplacian_symbol();
    spec.weighted_energy(|i| lap[i]).sqrt()
}

/// Midpoint-rule `(int |f|^p)^{1/p}`; `p = +inf` gives the max norm.
pub fn lp_norm<T: Real>(f: &Field<T>, p: T) -> Result<T> {
    if p.is_nan() || p < T::one() {
        return Err(Error::InvalidParameter(format!(
            "Lebesgue exponent must lie in [1, inf], got {p}"
        )));
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let scale = f.max_abs();
    if scale == T::zero() {
        return Ok(T::zero());
    }
    // factor out the max to keep |f|^p representable for large p
    let sum: T = f.values().iter().map(|v| (v.abs() / scale).powf(p)).sum();
    Ok(scale * (sum * f.grid().cell_volume()).powf(T::one() / p))
}

/// Discrete `B^s_{2,inf}` norm with sharp dyadic cutoffs on `|kappa|`:
/// `||1_{[0,1)}(|kappa|) f||_{L2} + sup_j ||1_{[2^j, 2^{j+1})}(|kappa|) f||_{H^s}`.
pub fn besov_norm<T: Real>(f: &Field<T>, s: T) -> T {
    let spec = Spectrum::forward(f);
    let grid = spec.grid().clone();
    let ksq = grid.kappa_sq();
    let vol = grid.volume();
    let mut low = T::zero();
    let mut blocks: Vec<T> = Vec::new();
    for (i, c) in spec.coeffs().iter().enumerate() {
        let kap = ksq[i].sqrt();
        let e = c.norm_sqr();
        if kap < T::one() {
            low = low + e;
        } else {
            let j = kap.log2().floor().to_usize().unwrap_or(0);
            if blocks.len() <= j {
                blocks.resize(j + 1, T::zero());
            }
            blocks[j] = blocks[j] + (T::one() + ksq[i]).powf(s) * e;
        }
    }
    let sup = blocks.into_iter().fold(T::zero(), T::max);
    (low * vol).sqrt() + (sup * vol).sqrt()
}
