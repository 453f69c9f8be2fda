use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::TorusGrid;

/// Real scalar field sampled on a [`TorusGrid`].
///
/// Values are finite by construction; fields are immutable once built and
/// cheap to share between threads.
#[derive(Clone, Debug)]
pub struct Field<T: Real> {
    grid: Arc<TorusGrid<T>>,
    values: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn new(grid: Arc<TorusGrid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!(
                "non-finite value {} at index {pos}",
                values[pos]
            )));
        }
        Ok(Field { grid, values })
    }

    /// Internal constructor for values produced by finite arithmetic on
    /// finite inputs; callers that can overflow must go through [`Field::new`].
    pub(crate) fn from_parts(grid: Arc<TorusGrid<T>>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn zeros(grid: &Arc<TorusGrid<T>>) -> Self {
        Field::from_parts(grid.clone(), vec![T::zero(); grid.len()])
    }

    pub fn constant(grid: &Arc<TorusGrid<T>>, c: T) -> Result<Self> {
        Field::new(grid.clone(), vec![c; grid.len()])
    }

    /// Samples `f` at every collocation point. `f` receives `dim` coordinates.
    pub fn from_fn(grid: &Arc<TorusGrid<T>>, f: impl Fn(&[T]) -> T) -> Result<Self> {
        let dim = grid.dim();
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                f(&x[..dim])
            })
            .collect();
        Field::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &Arc<TorusGrid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn same_grid(&self, other: &Field<T>) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub(crate) fn check_grid(&self, other: &Field<T>) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Field::from_parts(
            self.grid.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Pointwise combination of two fields on the same grid.
    ///
    /// Panics on grid mismatch; use [`Field::check_grid`] first when the
    /// grids are not known to agree.
    pub fn zip_map(&self, other: &Field<T>, f: impl Fn(T, T) -> T) -> Self {
        assert!(self.same_grid(other), "grid mismatch");
        Field::from_parts(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &Field<T>) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field<T>) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Grid quadrature of `f`.
    pub fn integral(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.grid.cell_volume()
    }

    /// Grid quadrature of `f g`.
    pub fn inner(&self, other: &Field<T>) -> T {
        assert!(self.same_grid(other), "grid mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a * b)
            .sum::<T>()
            * self.grid.cell_volume()
    }

    /// Circular shift by whole grid cells: `out(x) = self(x - shift * h)`.
    pub fn shift_cells(&self, shift: &[usize]) -> Self {
        let g = &self.grid;
        let n = g.n();
        let mut out = vec![T::zero(); g.len()];
        for (idx, &v) in self.values.iter().enumerate() {
            let mut target = 0;
            for (axis, s) in shift.iter().enumerate().take(g.dim()) {
                target = target * n + (g.axis_index(idx, axis) + s) % n;
            }
            out[target] = v;
        }
        Field::from_parts(g.clone(), out)
    }
}
