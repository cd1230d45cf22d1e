//! Dense column-stochastic matrices: column `x` holds `G(·, x; t)`.

use nalgebra::DMatrix;

use crate::error::{QaeError, Result};

pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    entries: DMatrix<f64>,
    /// First time step covered; a product over `t0..t1` carries `t0`.
    time_tag: u64,
}

impl TransitionMatrix {
    pub fn new(entries: DMatrix<f64>, time_tag: u64) -> Result<Self> {
        check_stochastic(&entries)?;
        Ok(TransitionMatrix { entries, time_tag })
    }

    pub fn from_columns(n: usize, columns: &[Vec<f64>], time_tag: u64) -> Result<Self> {
        if columns.len() != n || columns.iter().any(|c| c.len() != n) {
            return Err(QaeError::InvalidArgument("columns do not form a square matrix".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |y, x| columns[x][y]), time_tag)
    }

    pub fn identity(n: usize, time_tag: u64) -> Self {
        TransitionMatrix { entries: DMatrix::identity(n, n), time_tag }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.entries[(y, x)]
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn time_tag(&self) -> u64 {
        self.time_tag
    }

    /// `later · self`: apply `self` first, then `later`.
    pub fn then(&self, later: &TransitionMatrix) -> Result<TransitionMatrix> {
        if later.dim() != self.dim() {
            return Err(QaeError::InvalidArgument("matrix dimensions differ".into()));
        }
        TransitionMatrix::new(&later.entries * &self.entries, self.time_tag)
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let v = &self.entries * nalgebra::DVector::from_column_slice(p);
        v.iter().copied().collect()
    }

    pub fn ergodicity_coefficient(&self) -> f64 {
        alpha_unchecked(&self.entries)
    }

    pub fn tv_diameter(&self) -> f64 {
        tv_unchecked(&self.entries)
    }
}

/// Entries non-negative and every column summing to one within [`STOCHASTIC_TOL`].
pub fn check_stochastic(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(QaeError::InvalidArgument(format!("matrix is {}x{}, expected non-empty square", m.nrows(), m.ncols())));
    }
    for (x, col) in m.column_iter().enumerate() {
        if let Some(v) = col.iter().find(|v| !(**v >= -STOCHASTIC_TOL) || !v.is_finite()) {
            return Err(QaeError::InvalidArgument(format!("column {x} has entry {v}")));
        }
        let s: f64 = col.iter().sum();
        if (s - 1.0).abs() > STOCHASTIC_TOL {
            return Err(QaeError::InvalidArgument(format!("column {x} sums to {s}")));
        }
    }
    Ok(())
}

fn alpha_unchecked(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    let mut min_overlap = f64::INFINITY;
    for x in 0..n {
        for y in x + 1..n {
            let overlap: f64 = m.column(x).iter().zip(m.column(y).iter()).map(|(a, b)| a.min(*b)).sum();
            min_overlap = min_overlap.min(overlap);
        }
    }
    if n < 2 {
        return 0.0;
    }
    (1.0 - min_overlap).clamp(0.0, 1.0)
}

fn tv_unchecked(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    let mut worst: f64 = 0.0;
    for x in 0..n {
        for y in x + 1..n {
            let d: f64 = m.column(x).iter().zip(m.column(y).iter()).map(|(a, b)| (a - b).abs()).sum();
            worst = worst.max(d);
        }
    }
    worst
}

/// `α(G) = 1 - min_{x,y} Σ_z min(G(z,x), G(z,y))`.
pub fn ergodicity_coefficient(m: &DMatrix<f64>) -> Result<f64> {
    check_stochastic(m)?;
    Ok(alpha_unchecked(m))
}

/// `max_{x,y} ‖G(·,x) - G(·,y)‖₁`.
pub fn tv_diameter(m: &DMatrix<f64>) -> Result<f64> {
    check_stochastic(m)?;
    Ok(tv_unchecked(m))
}
