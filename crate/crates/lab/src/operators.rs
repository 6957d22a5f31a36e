//! Potentials, Schrödinger Hamiltonians and canonical operators on a grid.

use crate::grid_core::{Grid, GridFunction};
use crate::linalg;
use crate::{LabError, Matrix, RealMatrix, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Shape of a potential before the chemical shift.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind {
    /// `s·|x|²`.
    Harmonic { strength: f64 },
    /// `|x|² - μ`.
    ShiftedHarmonic { mu: f64 },
    /// `B·(|x|²/a² - 1)² - c`.
    DoubleWell { separation: f64, barrier: f64, offset: f64 },
    /// `C·|x|² - D·e^{-|x|²/w²}`.
    GaussianWell { depth: f64, width: f64, confinement: f64 },
    /// Samples on a fixed grid.
    Tabulated(GridFunction<f64>),
}

/// Potential `V(x) = base(x) - chemical_shift`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    pub kind: PotentialKind,
    pub chemical_shift: f64,
}

impl Potential {
    /// Potential without chemical shift.
    pub fn new(kind: PotentialKind) -> Potential {
        Potential { kind, chemical_shift: 0.0 }
    }

    /// `|x|²`.
    pub fn harmonic() -> Potential {
        Potential::new(PotentialKind::Harmonic { strength: 1.0 })
    }

    /// `|x|² - μ`.
    pub fn shifted_harmonic(mu: f64) -> Potential {
        Potential::new(PotentialKind::ShiftedHarmonic { mu })
    }

    /// Double well with minima at `|x| = separation`.
    pub fn double_well(separation: f64, barrier: f64, offset: f64) -> Potential {
        Potential::new(PotentialKind::DoubleWell { separation, barrier, offset })
    }

    /// Confined Gaussian well.
    pub fn gaussian_well(depth: f64, width: f64, confinement: f64) -> Potential {
        Potential::new(PotentialKind::GaussianWell { depth, width, confinement })
    }

    /// Tabulated samples.
    pub fn tabulated(values: GridFunction<f64>) -> Potential {
        Potential::new(PotentialKind::Tabulated(values))
    }

    /// Same potential with an additional constant shift `V - μ`.
    pub fn with_chemical_shift(mut self, mu: f64) -> Potential {
        self.chemical_shift += mu;
        self
    }

    /// Analytic value; `None` for tabulated potentials.
    pub fn value(&self, x: &[f64]) -> Option<f64> {
        let r2: f64 = x.iter().map(|t| t * t).sum();
        let base = match &self.kind {
            PotentialKind::Harmonic { strength } => strength * r2,
            PotentialKind::ShiftedHarmonic { mu } => r2 - mu,
            PotentialKind::DoubleWell { separation, barrier, offset } => {
                let u = r2 / (separation * separation) - 1.0;
                barrier * u * u - offset
            }
            PotentialKind::GaussianWell { depth, width, confinement } => {
                confinement * r2 - depth * (-r2 / (width * width)).exp()
            }
            PotentialKind::Tabulated(_) => return None,
        };
        Some(base - self.chemical_shift)
    }

    /// Analytic gradient; `None` for tabulated potentials.
    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let r2: f64 = x.iter().map(|t| t * t).sum();
        let radial = match &self.kind {
            PotentialKind::Harmonic { strength } => 2.0 * strength,
            PotentialKind::ShiftedHarmonic { .. } => 2.0,
            PotentialKind::DoubleWell { separation, barrier, .. } => {
                let a2 = separation * separation;
                4.0 * barrier * (r2 / a2 - 1.0) / a2
            }
            PotentialKind::GaussianWell { depth, width, confinement } => {
                let w2 = width * width;
                2.0 * confinement + 2.0 * depth / w2 * (-r2 / w2).exp()
            }
            PotentialKind::Tabulated(_) => return None,
        };
        Some(x.iter().map(|t| radial * t).collect())
    }

    /// Analytic Hessian, row-major `d×d`; `None` for tabulated potentials.
    pub fn hessian(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d = x.len();
        let r2: f64 = x.iter().map(|t| t * t).sum();
        let (iso, outer) = match &self.kind {
            PotentialKind::Harmonic { strength } => (2.0 * strength, 0.0),
            PotentialKind::ShiftedHarmonic { .. } => (2.0, 0.0),
            PotentialKind::DoubleWell { separation, barrier, .. } => {
                let a2 = separation * separation;
                (4.0 * barrier * (r2 / a2 - 1.0) / a2, 8.0 * barrier / (a2 * a2))
            }
            PotentialKind::GaussianWell { depth, width, confinement } => {
                let w2 = width * width;
                let e = (-r2 / w2).exp();
                (2.0 * confinement + 2.0 * depth / w2 * e, -4.0 * depth / (w2 * w2) * e)
            }
            PotentialKind::Tabulated(_) => return None,
        };
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                h[i * d + j] = outer * x[i] * x[j] + if i == j { iso } else { 0.0 };
            }
        }
        Some(h)
    }

    /// Samples on `grid`; tabulated potentials require the identical grid.
    pub fn sample(&self, grid: &Grid) -> Result<GridFunction<f64>> {
        match &self.kind {
            PotentialKind::Tabulated(values) => {
                values.grid().ensure_same(grid)?;
                Ok(values.map(|v| v - self.chemical_shift))
            }
            _ => Ok(GridFunction::from_fn(*grid, |x| self.value(x).unwrap_or(0.0))),
        }
    }

    /// Gradient samples per axis; tabulated potentials use centered differences.
    pub fn sample_gradient(&self, grid: &Grid) -> Result<Vec<GridFunction<f64>>> {
        match &self.kind {
            PotentialKind::Tabulated(_) => {
                let v = self.sample(grid)?;
                Ok((0..grid.dim()).map(|a| centered_difference(&v, a)).collect())
            }
            _ => Ok((0..grid.dim())
                .map(|a| GridFunction::from_fn(*grid, |x| self.gradient(x).map(|g| g[a]).unwrap_or(0.0)))
                .collect()),
        }
    }

    /// Frobenius norm of the Hessian at every grid point.
    pub fn sample_hessian_norm(&self, grid: &Grid) -> Result<GridFunction<f64>> {
        match &self.kind {
            PotentialKind::Tabulated(_) => {
                let grads = self.sample_gradient(grid)?;
                let mut out = GridFunction::constant(*grid, 0.0);
                for g in &grads {
                    for a in 0..grid.dim() {
                        let second = centered_difference(g, a);
                        for (o, s) in out.values_mut().iter_mut().zip(second.values()) {
                            *o += s * s;
                        }
                    }
                }
                Ok(out.map(f64::sqrt))
            }
            _ => Ok(GridFunction::from_fn(*grid, |x| {
                self.hessian(x).map(|h| h.iter().map(|v| v * v).sum::<f64>().sqrt()).unwrap_or(0.0)
            })),
        }
    }

    /// Confinement check: `V ≥ 1` on the two outermost grid layers.
    pub fn is_confining(&self, grid: &Grid) -> Result<bool> {
        let v = self.sample(grid)?;
        let n = grid.n();
        let min_edge = (0..grid.len())
            .filter(|&i| {
                let m = grid.multi_index(i);
                (0..grid.dim()).any(|a| m[a] < 2 || m[a] >= n - 2)
            })
            .map(|i| v.values()[i])
            .fold(f64::INFINITY, f64::min);
        Ok(min_edge >= 1.0)
    }
}

fn centered_difference(f: &GridFunction<f64>, axis: usize) -> GridFunction<f64> {
    let grid = *f.grid();
    let n = grid.n();
    let stride = n.pow((grid.dim() - 1 - axis) as u32);
    let dx = grid.spacing();
    let vals = f.values();
    let out = (0..grid.len())
        .map(|i| {
            let m = grid.multi_index(i)[axis];
            if m == 0 {
                (vals[i + stride] - vals[i]) / dx
            } else if m == n - 1 {
                (vals[i] - vals[i - stride]) / dx
            } else {
                (vals[i + stride] - vals[i - stride]) / (2.0 * dx)
            }
        })
        .collect();
    GridFunction::new(grid, out).expect("same grid")
}

/// Discretization of the Laplacian.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KineticScheme {
    /// Fourier multiplier `ħ²|k|²`.
    Spectral,
    /// Periodic second-order finite differences.
    Fd2,
}

/// Hermitian matrix on a grid, with the `ħ` it was built for.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    grid: Grid,
    matrix: Matrix,
    hbar: Option<f64>,
}

impl HermitianOperator {
    /// Wrap a matrix after checking size and Hermitian symmetry to `1e-10·max|a_ij|`.
    pub fn new(grid: Grid, matrix: Matrix, hbar: Option<f64>) -> Result<Self> {
        if matrix.nrows() != grid.len() || matrix.ncols() != grid.len() {
            return Err(LabError::GridMismatch(format!(
                "{}x{} matrix on a grid of {} points",
                matrix.nrows(),
                matrix.ncols(),
                grid.len()
            )));
        }
        if !linalg::is_hermitian(&matrix, 1e-10) {
            return Err(LabError::InvalidOperator(format!(
                "hermitian defect {:e}",
                linalg::hermitian_defect(&matrix)
            )));
        }
        Ok(HermitianOperator { grid, matrix, hbar })
    }

    /// Grid.
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Matrix.
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Semiclassical parameter, if any.
    pub fn hbar(&self) -> Option<f64> {
        self.hbar
    }

    /// Consume into the matrix.
    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }
}

fn kinetic_1d(grid: &Grid, hbar: f64, scheme: KineticScheme) -> Vec<f64> {
    let n = grid.n();
    let dx = grid.spacing();
    match scheme {
        KineticScheme::Spectral => (0..n)
            .map(|delta| {
                let s: f64 = (0..n)
                    .map(|m| {
                        let k = grid.wavenumber(m);
                        k * k * (k * delta as f64 * dx).cos()
                    })
                    .sum();
                hbar * hbar * s / n as f64
            })
            .collect(),
        KineticScheme::Fd2 => {
            let mut row = vec![0.0; n];
            let c = hbar * hbar / (dx * dx);
            row[0] = 2.0 * c;
            row[1] = -c;
            row[n - 1] = -c;
            row
        }
    }
}

fn kronecker_sum_1d(grid: &Grid, row: &[f64], axis: Option<usize>) -> RealMatrix {
    let n = grid.n();
    let total = grid.len();
    let mut m = RealMatrix::zeros(total, total);
    let axes: Vec<usize> = match axis {
        Some(a) => vec![a],
        None => (0..grid.dim()).collect(),
    };
    for i in 0..total {
        let mi = grid.multi_index(i);
        for &a in &axes {
            let mut mj = mi;
            for b in 0..n {
                mj[a] = b;
                let j = grid.flat_index(&mj);
                let delta = (mi[a] + n - b) % n;
                m[(i, j)] += row[delta];
            }
        }
    }
    m
}

/// Kinetic energy `-ħ²Δ` as a real matrix.
pub fn kinetic_matrix(grid: &Grid, hbar: f64, scheme: KineticScheme) -> Result<RealMatrix> {
    if !(hbar > 0.0) {
        return Err(LabError::InvalidParameter(format!("hbar {hbar} must be positive")));
    }
    Ok(kronecker_sum_1d(grid, &kinetic_1d(grid, hbar, scheme), None))
}

/// `H = -ħ²Δ + V`.
///
/// Logs a warning when the Nyquist wavenumber `πn/(2L)` does not exceed
/// `3·√(max V₋ + 1)`.
pub fn build_hamiltonian(
    grid: &Grid,
    potential: &Potential,
    hbar: f64,
    scheme: KineticScheme,
) -> Result<HermitianOperator> {
    let mut t = kinetic_matrix(grid, hbar, scheme)?;
    let v = potential.sample(grid)?;
    let max_neg = v.values().iter().fold(0.0_f64, |m, &x| m.max(-x));
    if grid.nyquist() <= 3.0 * (max_neg + 1.0).sqrt() {
        log::warn!(
            "nyquist wavenumber {:.3} does not resolve the classically allowed momenta",
            grid.nyquist()
        );
    }
    if !potential.is_confining(grid)? {
        log::warn!("potential is below 1 near the box boundary");
    }
    for (i, &vi) in v.values().iter().enumerate() {
        t[(i, i)] += vi;
    }
    HermitianOperator::new(*grid, linalg::from_real(&t), Some(hbar))
}

/// Multiplication by the coordinate `x_axis`.
pub fn position_operator(grid: &Grid, axis: usize) -> Result<Matrix> {
    if axis >= grid.dim() {
        return Err(LabError::InvalidParameter(format!("axis {axis} out of range")));
    }
    let values: Vec<f64> = (0..grid.len()).map(|i| grid.coordinate(i, axis)).collect();
    Ok(linalg::diagonal(&values))
}

/// Multiplication by a real function.
pub fn multiplication_operator(f: &GridFunction<f64>) -> Matrix {
    linalg::diagonal(f.values())
}

/// Momentum `p̂ = -iħ∂_axis` as the Fourier multiplier `ħk` with the Nyquist mode set to zero,
/// which keeps the matrix Hermitian on an even grid.
pub fn momentum_operator(grid: &Grid, hbar: f64, axis: usize) -> Result<Matrix> {
    if axis >= grid.dim() {
        return Err(LabError::InvalidParameter(format!("axis {axis} out of range")));
    }
    if hbar == 0.0 || !hbar.is_finite() {
        return Err(LabError::InvalidParameter(format!("hbar {hbar} must be nonzero")));
    }
    let n = grid.n();
    let dx = grid.spacing();
    let row: Vec<f64> = (0..n)
        .map(|delta| {
            let s: f64 = (0..n)
                .filter(|&m| m != n / 2)
                .map(|m| {
                    let k = grid.wavenumber(m);
                    k * (k * delta as f64 * dx).sin()
                })
                .sum();
            hbar * s / n as f64
        })
        .collect();
    let m = kronecker_sum_1d(grid, &row, Some(axis));
    Ok(m.map(|v| Complex64::new(0.0, v)))
}

/// Commutator `[A, B] = AB - BA`.
pub fn commutator(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(LabError::GridMismatch(format!("shapes {:?} and {:?}", a.shape(), b.shape())));
    }
    Ok(linalg::commutator(a, b))
}
