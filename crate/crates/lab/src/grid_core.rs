//! Periodic configuration grids, sampled functions, quadrature and convolution.

use crate::fourier::fft_nd;
use crate::{LabError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Default cap on the number of grid points `n^d` handled by dense solvers.
pub const DEFAULT_POINT_BUDGET: usize = 4096;

/// Uniform periodic grid on `[-L, L)^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    half_length: f64,
}

impl Grid {
    /// Grid with the default point budget.
    pub fn new(dim: usize, n: usize, half_length: f64) -> Result<Grid> {
        Grid::with_budget(dim, n, half_length, DEFAULT_POINT_BUDGET)
    }

    /// Grid with an explicit budget on `n^d`.
    pub fn with_budget(dim: usize, n: usize, half_length: f64, budget: usize) -> Result<Grid> {
        if !(1..=3).contains(&dim) {
            return Err(LabError::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 4 || !n.is_multiple_of(2) {
            return Err(LabError::InvalidGrid(format!("points per axis {n} must be even and >= 4")));
        }
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(LabError::InvalidGrid(format!("half length {half_length} must be positive")));
        }
        let total = n.checked_pow(dim as u32).unwrap_or(usize::MAX);
        if total > budget {
            return Err(LabError::InvalidGrid(format!("{total} points exceed the budget {budget}")));
        }
        Ok(Grid { dim, n, half_length })
    }

    /// Spatial dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Half box length `L`.
    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    /// Spacing `Δx = 2L/n`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    /// Cell volume `Δx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Total number of points `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Always false; grids have at least four points.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate `x_j = -L + jΔx` along one axis.
    pub fn axis_coordinate(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing()
    }

    /// All axis coordinates.
    pub fn axis_coordinates(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.axis_coordinate(j)).collect()
    }

    /// Index of the origin along one axis.
    pub fn origin_index(&self) -> usize {
        self.n / 2
    }

    /// Multi-index of a flat index (axis 0 slowest).
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            out[axis] = rem % self.n;
            rem /= self.n;
        }
        out
    }

    /// Flat index of a multi-index.
    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi[..self.dim].iter().fold(0, |acc, &m| acc * self.n + m)
    }

    /// Coordinate of point `flat` along `axis`.
    pub fn coordinate(&self, flat: usize, axis: usize) -> f64 {
        self.axis_coordinate(self.multi_index(flat)[axis])
    }

    /// Coordinates of point `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let m = self.multi_index(flat);
        (0..self.dim).map(|a| self.axis_coordinate(m[a])).collect()
    }

    /// Squared distance of point `flat` to the origin.
    pub fn radius_squared(&self, flat: usize) -> f64 {
        self.point(flat).iter().map(|x| x * x).sum()
    }

    /// Angular wavenumber `k_m = πm/L` for FFT slot `m` (signed ordering).
    pub fn wavenumber(&self, slot: usize) -> f64 {
        crate::fourier::signed_index(slot, self.n) as f64 * std::f64::consts::PI / self.half_length
    }

    /// Nyquist wavenumber `πn/(2L)`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI * self.n as f64 / (2.0 * self.half_length)
    }

    /// Check that another grid is identical.
    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(LabError::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Construct a grid; see [`Grid::new`].
pub fn make_grid(dim: usize, n: usize, half_length: f64) -> Result<Grid> {
    Grid::new(dim, n, half_length)
}

/// Sample type stored in a [`GridFunction`].
pub trait GridValue:
    Copy + Default + std::ops::Add<Output = Self> + std::ops::Mul<f64, Output = Self> + Send + Sync + 'static
{
    /// Widen to complex.
    fn to_complex(self) -> Complex64;
    /// Narrow from complex (real part for real samples).
    fn from_complex(z: Complex64) -> Self;
    /// Absolute value.
    fn magnitude(self) -> f64;
    /// Type tag used by the binary container.
    const DTYPE: &'static str;
}

impl GridValue for f64 {
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn from_complex(z: Complex64) -> Self {
        z.re
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
    const DTYPE: &'static str = "f64";
}

impl GridValue for Complex64 {
    fn to_complex(self) -> Complex64 {
        self
    }
    fn from_complex(z: Complex64) -> Self {
        z
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
    const DTYPE: &'static str = "c128";
}

/// Function sampled on every grid point, row-major with axis 0 slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T: GridValue = f64> {
    grid: Grid,
    values: Vec<T>,
}

impl<T: GridValue> GridFunction<T> {
    /// Wrap samples; the length must be `n^d`.
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::GridMismatch(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    /// Sample `f` at every grid point.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> T) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        GridFunction { grid, values }
    }

    /// Constant function.
    pub fn constant(grid: Grid, value: T) -> Self {
        GridFunction { grid, values: vec![value; grid.len()] }
    }

    /// Underlying grid.
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Samples.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Mutable samples.
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    /// Consume into samples.
    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Pointwise map.
    pub fn map<U: GridValue>(&self, f: impl Fn(T) -> U) -> GridFunction<U> {
        GridFunction { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Riemann sum `Σ values·Δx^d`.
    pub fn integrate(&self) -> T {
        let sum = self.values.iter().fold(T::default(), |acc, &v| acc + v);
        sum * self.grid.cell_volume()
    }

    /// Discrete `L^p` norm, `p = ∞` allowed.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            self.values.iter().fold(0.0_f64, |m, v| m.max(v.magnitude()))
        } else {
            let s: f64 = self.values.iter().map(|v| v.magnitude().powf(p)).sum();
            (s * self.grid.cell_volume()).powf(1.0 / p)
        }
    }

    /// Largest absolute sample.
    pub fn max_abs(&self) -> f64 {
        self.lp_norm(f64::INFINITY)
    }

    /// Complex copy.
    pub fn to_complex(&self) -> GridFunction<Complex64> {
        self.map(|v| v.to_complex())
    }

    /// Cyclic translation by whole grid steps: `out[i] = in[i - shift]` per axis.
    pub fn translate(&self, shift: &[i64]) -> Self {
        let n = self.grid.n as i64;
        let mut out = self.values.clone();
        for (flat, slot) in out.iter_mut().enumerate() {
            let m = self.grid.multi_index(flat);
            let mut src = [0usize; 3];
            for axis in 0..self.grid.dim {
                src[axis] = (m[axis] as i64 - shift[axis]).rem_euclid(n) as usize;
            }
            *slot = self.values[self.grid.flat_index(&src)];
        }
        GridFunction { grid: self.grid, values: out }
    }

    /// Write `x0,..,x{d-1},value` rows (complex samples use `re,im`).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.grid.dim).map(|a| format!("x{a}")).collect();
        if T::DTYPE == "f64" {
            header.push("value".into());
        } else {
            header.push("re".into());
            header.push("im".into());
        }
        w.write_record(&header)?;
        for (i, v) in self.values.iter().enumerate() {
            let mut row: Vec<String> = self.grid.point(i).iter().map(|x| format!("{x:.17e}")).collect();
            let z = v.to_complex();
            row.push(format!("{:.17e}", z.re));
            if T::DTYPE != "f64" {
                row.push(format!("{:.17e}", z.im));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Write the binary container: magic, header length, JSON header, little-endian samples.
    pub fn write_binary<W: Write>(&self, mut writer: W) -> Result<()> {
        let header = ContainerHeader {
            format: CONTAINER_FORMAT.to_string(),
            version: 1,
            dtype: T::DTYPE.to_string(),
            grid: self.grid,
            count: self.values.len(),
        };
        let bytes = serde_json::to_vec(&header)?;
        writer.write_all(CONTAINER_MAGIC)?;
        writer.write_all(&(bytes.len() as u64).to_le_bytes())?;
        writer.write_all(&bytes)?;
        for v in &self.values {
            let z = v.to_complex();
            writer.write_all(&z.re.to_le_bytes())?;
            if T::DTYPE != "f64" {
                writer.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Read a binary container written by [`GridFunction::write_binary`].
    pub fn read_binary<R: Read>(mut reader: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        reader.read_exact(&mut magic)?;
        if &magic != CONTAINER_MAGIC {
            return Err(LabError::Io("bad container magic".into()));
        }
        let mut len = [0u8; 8];
        reader.read_exact(&mut len)?;
        let mut head = vec![0u8; u64::from_le_bytes(len) as usize];
        reader.read_exact(&mut head)?;
        let header: ContainerHeader = serde_json::from_slice(&head)?;
        if header.format != CONTAINER_FORMAT || header.dtype != T::DTYPE {
            return Err(LabError::Io(format!("container holds {} {}", header.format, header.dtype)));
        }
        let grid = Grid::with_budget(header.grid.dim, header.grid.n, header.grid.half_length, usize::MAX)?;
        let mut values = Vec::with_capacity(header.count);
        let mut buf = [0u8; 8];
        for _ in 0..header.count {
            reader.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf);
            let im = if T::DTYPE == "f64" {
                0.0
            } else {
                reader.read_exact(&mut buf)?;
                f64::from_le_bytes(buf)
            };
            values.push(T::from_complex(Complex64::new(re, im)));
        }
        GridFunction::new(grid, values)
    }

    /// Save the binary container to a file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_binary(file)
    }

    /// Load a binary container from a file.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_binary(file)
    }
}

impl GridFunction<f64> {
    /// Read a real function from CSV rows `x0,..,value` in grid order.
    pub fn read_csv<R: Read>(grid: Grid, reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let tol = 1e-9 * grid.spacing();
        let mut values = Vec::with_capacity(grid.len());
        for (i, record) in r.records().enumerate() {
            let record = record?;
            if record.len() != grid.dim() + 1 {
                return Err(LabError::Io(format!("row {i} has {} fields", record.len())));
            }
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| LabError::Io(e.to_string()));
            if i < grid.len() {
                let point = grid.point(i);
                for (axis, x) in point.iter().enumerate() {
                    if (parse(&record[axis])? - x).abs() > tol {
                        return Err(LabError::GridMismatch(format!("row {i} is not at grid point {point:?}")));
                    }
                }
            }
            values.push(parse(&record[grid.dim()])?);
        }
        GridFunction::new(grid, values)
    }
}

impl GridFunction<Complex64> {
    /// Real part, provided the imaginary part is below `1e-12·max|values|`.
    pub fn into_real(self) -> Result<GridFunction<f64>> {
        let scale = self.max_abs();
        let worst = self.values.iter().fold(0.0_f64, |m, z| m.max(z.im.abs()));
        if worst > 1e-12 * scale {
            return Err(LabError::InvalidParameter(format!(
                "imaginary part {worst:e} exceeds tolerance for a real function"
            )));
        }
        Ok(self.map(|z| z.re))
    }
}

const CONTAINER_MAGIC: &[u8; 4] = b"SCLG";
const CONTAINER_FORMAT: &str = "semiclassical-lab-grid";

#[derive(Serialize, Deserialize)]
struct ContainerHeader {
    format: String,
    version: u32,
    dtype: String,
    grid: Grid,
    count: usize,
}

/// Normalized Gaussian `g_ε(x) = ε^{-d/2} e^{-π|x|²/ε}`, periodized over the box.
///
/// Logs a warning when `√ε` is below `2Δx` or above `L/4`.
pub fn gaussian_kernel(grid: &Grid, eps: f64) -> Result<GridFunction<f64>> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(LabError::InvalidParameter(format!("kernel width {eps} must be positive")));
    }
    let width = eps.sqrt();
    if width < 2.0 * grid.spacing() || width > grid.half_length() / 4.0 {
        log::warn!(
            "gaussian kernel width sqrt(eps)={width:.3e} outside [2dx, L/4] = [{:.3e}, {:.3e}]",
            2.0 * grid.spacing(),
            grid.half_length() / 4.0
        );
    }
    let period = 2.0 * grid.half_length();
    let images = ((40.0 * eps / std::f64::consts::PI).sqrt() / period).ceil() as i64 + 1;
    let axis: Vec<f64> = grid
        .axis_coordinates()
        .iter()
        .map(|&x| {
            (-images..=images)
                .map(|m| {
                    let y = x + m as f64 * period;
                    (-std::f64::consts::PI * y * y / eps).exp()
                })
                .sum::<f64>()
                / eps.sqrt()
        })
        .collect();
    let values = (0..grid.len())
        .map(|i| {
            let m = grid.multi_index(i);
            (0..grid.dim()).map(|a| axis[m[a]]).product()
        })
        .collect();
    GridFunction::new(*grid, values)
}

/// Boundary treatment for [`convolve`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionMode {
    /// Cyclic convolution on the torus.
    Periodic,
    /// Linear convolution with zero extension to a doubled box.
    ZeroPadded,
}

/// Convolution `(f*g)(x_i) = Δx^d Σ_j f(x_j) g(x_i - x_j)`.
///
/// `g` is indexed by displacement with its origin at the grid center.
pub fn convolve<T: GridValue>(
    f: &GridFunction<T>,
    g: &GridFunction<T>,
    mode: ConvolutionMode,
) -> Result<GridFunction<T>> {
    f.grid().ensure_same(g.grid())?;
    let grid = *f.grid();
    let (n, d) = (grid.n(), grid.dim());
    let m = match mode {
        ConvolutionMode::Periodic => n,
        ConvolutionMode::ZeroPadded => 2 * n,
    };
    let total = m.pow(d as u32);
    let to_padded = |multi: &[usize; 3]| multi[..d].iter().fold(0, |acc, &k| acc * m + k);
    let mut fp = vec![Complex64::new(0.0, 0.0); total];
    let mut gp = vec![Complex64::new(0.0, 0.0); total];
    for i in 0..grid.len() {
        let mi = grid.multi_index(i);
        fp[to_padded(&mi)] = f.values()[i].to_complex();
        let mut mg = [0usize; 3];
        for a in 0..d {
            let disp = mi[a] as i64 - (n / 2) as i64;
            mg[a] = disp.rem_euclid(m as i64) as usize;
        }
        gp[to_padded(&mg)] = g.values()[i].to_complex();
    }
    fft_nd(&mut fp, m, d, false);
    fft_nd(&mut gp, m, d, false);
    for (a, b) in fp.iter_mut().zip(&gp) {
        *a *= b;
    }
    fft_nd(&mut fp, m, d, true);
    let scale = grid.cell_volume() / total as f64;
    let values = (0..grid.len())
        .map(|i| T::from_complex(fp[to_padded(&grid.multi_index(i))] * scale))
        .collect();
    GridFunction::new(grid, values)
}

/// Spectral partial derivative of a periodic real function along `axis`.
pub fn spectral_derivative(f: &GridFunction<f64>, axis: usize) -> Result<GridFunction<f64>> {
    let grid = *f.grid();
    if axis >= grid.dim() {
        return Err(LabError::InvalidParameter(format!("axis {axis} out of range")));
    }
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut data, grid.n(), grid.dim(), false);
    let nyquist_slot = grid.n() / 2;
    for (flat, z) in data.iter_mut().enumerate() {
        let slot = grid.multi_index(flat)[axis];
        let k = if slot == nyquist_slot { 0.0 } else { grid.wavenumber(slot) };
        *z *= Complex64::new(0.0, k);
    }
    fft_nd(&mut data, grid.n(), grid.dim(), true);
    let scale = 1.0 / grid.len() as f64;
    GridFunction::new(grid, data.iter().map(|z| z.re * scale).collect())
}

/// Total variation `Σ |f(x+Δx e_a) - f(x)| Δx^{d-1}` summed over axes (non-periodic differences),
/// a quadrature for `‖∇f‖_{L¹}` that stays finite at kinks.
pub fn total_variation(f: &GridFunction<f64>) -> f64 {
    let grid = *f.grid();
    let n = grid.n();
    let face = grid.spacing().powi(grid.dim() as i32 - 1);
    let mut total = 0.0;
    for axis in 0..grid.dim() {
        let stride = n.pow((grid.dim() - 1 - axis) as u32);
        for i in 0..grid.len() {
            if grid.multi_index(i)[axis] + 1 < n {
                total += (f.values()[i + stride] - f.values()[i]).abs();
            }
        }
    }
    total * face
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        let g = make_grid(1, 8, 4.0).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.axis_coordinate(0), -4.0);
        let g2 = make_grid(2, 4, 1.0).unwrap();
        assert_eq!(g2.len(), 16);
        assert_eq!(g2.spacing(), 0.5);
        assert!(make_grid(1, 7, 1.0).is_err());
        assert!(make_grid(1, 8, 0.0).is_err());
        assert!(make_grid(4, 8, 1.0).is_err());
        assert!(make_grid(3, 32, 1.0).is_err());
    }

    #[test]
    fn flat_and_multi_index_agree() {
        let g = make_grid(3, 4, 1.0).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
        }
        assert_eq!(g.multi_index(1), [0, 0, 1]);
    }

    #[test]
    fn integrate_constant_and_gaussian() {
        let g = make_grid(1, 8, 4.0).unwrap();
        assert_eq!(GridFunction::constant(g, 1.0).integrate(), 8.0);
        let g = make_grid(1, 128, 6.0).unwrap();
        let k = gaussian_kernel(&g, 1.0).unwrap();
        assert!((k.integrate() - 1.0).abs() < 1e-10);
        assert!((k.values()[g.origin_index()] - 1.0).abs() < 1e-14);
        let odd = GridFunction::from_fn(g, |x| x[0] * (-x[0] * x[0]).exp());
        assert!(odd.integrate().abs() < 1e-12);
    }

    #[test]
    fn kernel_rejects_nonpositive_width() {
        let g = make_grid(1, 16, 2.0).unwrap();
        assert!(gaussian_kernel(&g, 0.0).is_err());
        assert!(gaussian_kernel(&g, -1.0).is_err());
    }

    #[test]
    fn delta_is_convolution_identity() {
        let g = make_grid(2, 16, 3.0).unwrap();
        let mut delta = GridFunction::constant(g, 0.0);
        let origin = g.flat_index(&[8, 8]);
        delta.values_mut()[origin] = 1.0 / g.cell_volume();
        let k = gaussian_kernel(&g, 0.7).unwrap();
        for mode in [ConvolutionMode::Periodic, ConvolutionMode::ZeroPadded] {
            let c = convolve(&delta, &k, mode).unwrap();
            for (a, b) in c.values().iter().zip(k.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_semigroup() {
        let g = make_grid(1, 256, 6.0).unwrap();
        let g1 = gaussian_kernel(&g, 1.0).unwrap();
        let g2 = gaussian_kernel(&g, 2.0).unwrap();
        let c = convolve(&g1, &g1, ConvolutionMode::Periodic).unwrap();
        for (a, b) in c.values().iter().zip(g2.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn box_convolution_matches_direct_sum() {
        let g = make_grid(1, 32, 4.0).unwrap();
        let boxf = GridFunction::from_fn(g, |x| if x[0].abs() <= 1.0 { 1.0 } else { 0.0 });
        let c = convolve(&boxf, &boxf, ConvolutionMode::ZeroPadded).unwrap();
        let n = g.n() as i64;
        for i in 0..g.n() {
            let mut direct = 0.0;
            for j in 0..g.n() {
                let k = i as i64 - j as i64 + n / 2;
                if (0..n).contains(&k) {
                    direct += boxf.values()[j] * boxf.values()[k as usize];
                }
            }
            direct *= g.spacing();
            assert!((c.values()[i] - direct).abs() < 1e-12);
        }
        let mid = c.values()[g.origin_index()];
        assert!((mid - 9.0 * g.spacing()).abs() < 1e-12);
    }

    #[test]
    fn binary_and_csv_round_trip() {
        let g = make_grid(2, 4, 1.0).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0] - 2.0 * x[1]);
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        let back = GridFunction::<f64>::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back, f);
        let mut text = Vec::new();
        f.write_csv(&mut text).unwrap();
        let parsed = GridFunction::read_csv(g, text.as_slice()).unwrap();
        assert_eq!(parsed, f);
        let z = f.to_complex();
        let mut buf = Vec::new();
        z.write_binary(&mut buf).unwrap();
        assert_eq!(GridFunction::<Complex64>::read_binary(buf.as_slice()).unwrap(), z);
    }

    #[test]
    fn spectral_derivative_of_sine() {
        let g = make_grid(1, 64, std::f64::consts::PI).unwrap();
        let f = GridFunction::from_fn(g, |x| (3.0 * x[0]).sin());
        let df = spectral_derivative(&f, 0).unwrap();
        for (i, v) in df.values().iter().enumerate() {
            let x = g.axis_coordinate(i);
            assert!((v - 3.0 * (3.0 * x).cos()).abs() < 1e-11);
        }
    }

    #[test]
    fn complex_to_real_checks_imaginary_part() {
        let g = make_grid(1, 8, 1.0).unwrap();
        let z = GridFunction::constant(g, Complex64::new(1.0, 1e-3));
        assert!(z.into_real().is_err());
        let z = GridFunction::constant(g, Complex64::new(1.0, 1e-15));
        assert!(z.into_real().is_ok());
    }
}
