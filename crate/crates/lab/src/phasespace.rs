//! Wigner transform, Weyl quantization, coherent-state smoothing, classical symbols,
//! bathtub and energy-convexity identities, and the local Weyl law budget constants.
//!
//! The phase-space lattice of a grid with `n` points per axis has `2n` position
//! points per axis at spacing `Δx/2` (grid points and midpoints) and `n/2` momentum
//! points per axis at spacing `πħ/L`. Each pair `(a, b)` of grid indices maps to the
//! midpoint slot `τ = 2b + (a-b)` and the separation `a - b ∈ [-n/2, n/2)`, and an FFT
//! in the separation gives the momentum dependence. The map is a bijection between
//! `n^d × n^d` matrices and lattice fields with `ΣΣ|f|² ΔxΔξ = h^d Tr|γ|²`, so Wigner
//! and Weyl are exact inverses. Marginals are exact on the grid rows; on midpoint rows
//! they are band-limited interpolations, which makes the trace and marginal identities
//! hold to spectral accuracy for states whose kernel is negligible at separation `L`.

use crate::fourier;
use crate::grid_core::{Grid, GridFunction};
use crate::linalg;
use crate::operators::Potential;
use crate::spectral::{classical_phase_volume, sublevel_distance, unit_ball_volume, DensityOperator, DensityTag, IdentityAudit};
use crate::{planck_volume, LabError, Matrix, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

/// Real field on the phase-space lattice of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceField {
    grid: Grid,
    hbar: f64,
    values: Vec<f64>,
}

fn check_lattice(grid: &Grid, hbar: f64) -> Result<()> {
    if !grid.n().is_multiple_of(2) || grid.n() < 4 {
        return Err(LabError::InvalidGrid(format!("phase-space lattice needs even n ≥ 4, got {}", grid.n())));
    }
    if !(hbar > 0.0) || !hbar.is_finite() {
        return Err(LabError::InvalidParameter(format!("hbar {hbar} must be positive")));
    }
    Ok(())
}

impl PhaseSpaceField {
    /// Wrap lattice values, position index slowest.
    pub fn new(grid: Grid, hbar: f64, values: Vec<f64>) -> Result<Self> {
        check_lattice(&grid, hbar)?;
        let field = PhaseSpaceField { grid, hbar, values: Vec::new() };
        if values.len() != field.x_points() * field.xi_points() {
            return Err(LabError::GridMismatch(format!(
                "{} values for a lattice of {}",
                values.len(),
                field.x_points() * field.xi_points()
            )));
        }
        Ok(PhaseSpaceField { values, ..field })
    }

    /// Zero field.
    pub fn zeros(grid: Grid, hbar: f64) -> Result<Self> {
        check_lattice(&grid, hbar)?;
        let len = (2 * grid.n()).pow(grid.dim() as u32) * (grid.n() / 2).pow(grid.dim() as u32);
        Ok(PhaseSpaceField { grid, hbar, values: vec![0.0; len] })
    }

    /// Sample `f(x, ξ)` at every lattice point.
    pub fn from_fn(grid: Grid, hbar: f64, f: impl Fn(&[f64], &[f64]) -> f64) -> Result<Self> {
        let mut field = PhaseSpaceField::zeros(grid, hbar)?;
        let nxi = field.xi_points();
        let xis: Vec<Vec<f64>> = (0..nxi).map(|s| field.xi_point(s)).collect();
        for t in 0..field.x_points() {
            let x = field.x_point(t);
            for (s, xi) in xis.iter().enumerate() {
                field.values[t * nxi + s] = f(&x, xi);
            }
        }
        Ok(field)
    }

    /// Configuration grid.
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `ħ` of the momentum lattice.
    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Values with the position index slowest.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable values.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Position lattice points per axis (`2n`).
    pub fn x_count(&self) -> usize {
        2 * self.grid.n()
    }

    /// Momentum lattice points per axis (`n/2`).
    pub fn xi_count(&self) -> usize {
        self.grid.n() / 2
    }

    /// Total position lattice points.
    pub fn x_points(&self) -> usize {
        self.x_count().pow(self.grid.dim() as u32)
    }

    /// Total momentum lattice points.
    pub fn xi_points(&self) -> usize {
        self.xi_count().pow(self.grid.dim() as u32)
    }

    /// Position spacing `Δx/2`.
    pub fn x_spacing(&self) -> f64 {
        self.grid.spacing() / 2.0
    }

    /// Momentum spacing `πħ/L`.
    pub fn xi_spacing(&self) -> f64 {
        PI * self.hbar / self.grid.half_length()
    }

    /// Phase-space cell volume `(Δx/2)^d (πħ/L)^d`.
    pub fn cell_volume(&self) -> f64 {
        (self.x_spacing() * self.xi_spacing()).powi(self.grid.dim() as i32)
    }

    fn xi_offset(&self) -> i64 {
        (self.xi_count() / 2) as i64
    }

    /// Per-axis position indices of a flat position slot.
    pub fn x_multi(&self, flat: usize) -> [usize; 3] {
        unflatten(flat, self.x_count(), self.grid.dim())
    }

    /// Per-axis momentum slots of a flat momentum slot.
    pub fn xi_multi(&self, flat: usize) -> [usize; 3] {
        unflatten(flat, self.xi_count(), self.grid.dim())
    }

    /// Coordinates of a flat position slot.
    pub fn x_point(&self, flat: usize) -> Vec<f64> {
        let m = self.x_multi(flat);
        (0..self.grid.dim()).map(|a| -self.grid.half_length() + m[a] as f64 * self.x_spacing()).collect()
    }

    /// Momenta of a flat momentum slot, `ξ = κπħ/L` with `κ` in the symmetric range.
    pub fn xi_point(&self, flat: usize) -> Vec<f64> {
        let m = self.xi_multi(flat);
        (0..self.grid.dim()).map(|a| (m[a] as i64 - self.xi_offset()) as f64 * self.xi_spacing()).collect()
    }

    /// `true` when the flat position slot lies on the configuration grid.
    pub fn is_grid_row(&self, flat: usize) -> bool {
        let m = self.x_multi(flat);
        (0..self.grid.dim()).all(|a| m[a].is_multiple_of(2))
    }

    /// Lattice quadrature of `∫∫ f`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    /// `∫ f dξ` at every position slot.
    pub fn marginal(&self) -> Vec<f64> {
        let nxi = self.xi_points();
        let w = self.xi_spacing().powi(self.grid.dim() as i32);
        self.values.chunks(nxi).map(|row| row.iter().sum::<f64>() * w).collect()
    }

    /// `∫ f dξ` restricted to the configuration grid.
    pub fn grid_marginal(&self) -> GridFunction<f64> {
        let marginal = self.marginal();
        let d = self.grid.dim();
        GridFunction::from_fn(self.grid, |x| {
            let mut flat = 0;
            for &xa in x.iter().take(d) {
                let j = ((xa + self.grid.half_length()) / self.grid.spacing()).round() as usize;
                flat = flat * self.x_count() + 2 * j;
            }
            marginal[flat]
        })
    }

    /// `(∫∫|f|^p)^{1/p}`; `p = ∞` gives the maximum modulus.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        }
        (self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * self.cell_volume()).powf(1.0 / p)
    }

    /// Fail unless both fields share grid and `ħ`.
    pub fn ensure_same_lattice(&self, other: &PhaseSpaceField) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        if (self.hbar - other.hbar).abs() > 1e-15 * self.hbar {
            return Err(LabError::GridMismatch(format!("hbar {} vs {}", self.hbar, other.hbar)));
        }
        Ok(())
    }

    /// `‖f - g‖_{L^p}` on the lattice.
    pub fn distance(&self, other: &PhaseSpaceField, p: f64) -> Result<f64> {
        self.ensure_same_lattice(other)?;
        let diff = PhaseSpaceField {
            grid: self.grid,
            hbar: self.hbar,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        };
        Ok(diff.lp_norm(p))
    }

    /// `f(x - x_steps·Δx/2, ξ - ξ_steps·πħ/L)`, periodic in `x` and quasi-periodic in `ξ`.
    ///
    /// Shifting `ξ` by a full period `n/2` flips the sign of rows with an odd position
    /// index along that axis, which is the periodicity of the discrete transform.
    pub fn translate(&self, x_steps: &[i64], xi_steps: &[i64]) -> Result<Self> {
        let d = self.grid.dim();
        if x_steps.len() != d || xi_steps.len() != d {
            return Err(LabError::InvalidParameter("translation needs one step per axis".into()));
        }
        let nx = self.x_count() as i64;
        let c = self.xi_count() as i64;
        let nxi = self.xi_points();
        let mut out = vec![0.0; self.values.len()];
        for t in 0..self.x_points() {
            let mt = self.x_multi(t);
            let mut src_t = 0usize;
            let mut src_multi = [0usize; 3];
            for a in 0..d {
                src_multi[a] = (mt[a] as i64 - x_steps[a]).rem_euclid(nx) as usize;
                src_t = src_t * nx as usize + src_multi[a];
            }
            for s in 0..nxi {
                let ms = self.xi_multi(s);
                let mut src_s = 0usize;
                let mut sign = 1.0;
                for a in 0..d {
                    let raw = ms[a] as i64 - xi_steps[a];
                    let wraps = raw.div_euclid(c);
                    if wraps % 2 != 0 && src_multi[a] % 2 == 1 {
                        sign = -sign;
                    }
                    src_s = src_s * c as usize + raw.rem_euclid(c) as usize;
                }
                out[t * nxi + s] = sign * self.values[src_t * nxi + src_s];
            }
        }
        Ok(PhaseSpaceField { grid: self.grid, hbar: self.hbar, values: out })
    }

    /// Write `x0..,xi0..,value` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let d = self.grid.dim();
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..d).map(|a| format!("x{a}")).collect();
        header.extend((0..d).map(|a| format!("xi{a}")));
        header.push("value".into());
        w.write_record(&header)?;
        let nxi = self.xi_points();
        for t in 0..self.x_points() {
            let x = self.x_point(t);
            for s in 0..nxi {
                let mut row: Vec<String> = x.iter().map(|v| format!("{v:.17e}")).collect();
                row.extend(self.xi_point(s).iter().map(|v| format!("{v:.17e}")));
                row.push(format!("{:.17e}", self.values[t * nxi + s]));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Write the binary container: magic, header length, JSON header, little-endian values.
    pub fn write_binary<W: Write>(&self, mut writer: W) -> Result<()> {
        let header = FieldHeader {
            format: FIELD_FORMAT.to_string(),
            version: 1,
            dtype: "f64".to_string(),
            grid: self.grid,
            hbar: self.hbar,
            count: self.values.len(),
        };
        let bytes = serde_json::to_vec(&header)?;
        writer.write_all(FIELD_MAGIC)?;
        writer.write_all(&(bytes.len() as u64).to_le_bytes())?;
        writer.write_all(&bytes)?;
        for v in &self.values {
            writer.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Read a container written by [`PhaseSpaceField::write_binary`].
    pub fn read_binary<R: Read>(mut reader: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        reader.read_exact(&mut magic)?;
        if &magic != FIELD_MAGIC {
            return Err(LabError::Io("bad container magic".into()));
        }
        let mut len = [0u8; 8];
        reader.read_exact(&mut len)?;
        let mut head = vec![0u8; u64::from_le_bytes(len) as usize];
        reader.read_exact(&mut head)?;
        let header: FieldHeader = serde_json::from_slice(&head)?;
        if header.format != FIELD_FORMAT || header.dtype != "f64" {
            return Err(LabError::Io(format!("container holds {} {}", header.format, header.dtype)));
        }
        let grid = Grid::with_budget(header.grid.dim(), header.grid.n(), header.grid.half_length(), usize::MAX)?;
        let mut values = Vec::with_capacity(header.count);
        let mut buf = [0u8; 8];
        for _ in 0..header.count {
            reader.read_exact(&mut buf)?;
            values.push(f64::from_le_bytes(buf));
        }
        PhaseSpaceField::new(grid, header.hbar, values)
    }

    /// Save the binary container to a file.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_binary(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    /// Load a binary container from a file.
    pub fn load(path: &Path) -> Result<Self> {
        Self::read_binary(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

const FIELD_MAGIC: &[u8; 4] = b"SCLP";
const FIELD_FORMAT: &str = "semiclassical-lab-phase";

#[derive(Serialize, Deserialize)]
struct FieldHeader {
    format: String,
    version: u32,
    dtype: String,
    grid: Grid,
    hbar: f64,
    count: usize,
}

fn unflatten(mut flat: usize, base: usize, dim: usize) -> [usize; 3] {
    let mut out = [0usize; 3];
    for a in (0..dim).rev() {
        out[a] = flat % base;
        flat /= base;
    }
    out
}

/// Smallest separation of parity `t` in `[-n/2, n/2)`.
fn first_separation(t: usize, n: usize) -> i64 {
    -((n / 2) as i64) + ((t + n / 2) % 2) as i64
}

/// Grid indices `(a, b)` of the pair at midpoint slot `t` and separation `sep`.
fn pair(t: usize, sep: i64, n: usize) -> (usize, usize) {
    let b = ((t as i64 - sep) / 2).rem_euclid(n as i64);
    let a = (b + sep).rem_euclid(n as i64);
    (a as usize, b as usize)
}

struct RowPlan {
    /// Flat grid indices `(a, b)` for every separation slot.
    pairs: Vec<(usize, usize)>,
    /// `Π_a e^{-2πi d0_a κ_a / n}` for every momentum slot.
    phases: Vec<Complex64>,
    /// FFT bin of every momentum slot.
    bins: Vec<usize>,
}

fn row_plan(field: &PhaseSpaceField, t: usize) -> RowPlan {
    let grid = field.grid;
    let d = grid.dim();
    let n = grid.n();
    let c = field.xi_count();
    let mt = field.x_multi(t);
    let d0: Vec<i64> = (0..d).map(|a| first_separation(mt[a], n)).collect();
    let count = field.xi_points();
    let mut pairs = Vec::with_capacity(count);
    for j in 0..count {
        let mj = unflatten(j, c, d);
        let (mut fa, mut fb) = (0usize, 0usize);
        for a in 0..d {
            let (ia, ib) = pair(mt[a], d0[a] + 2 * mj[a] as i64, n);
            fa = fa * n + ia;
            fb = fb * n + ib;
        }
        pairs.push((fa, fb));
    }
    let mut phases = Vec::with_capacity(count);
    let mut bins = Vec::with_capacity(count);
    for s in 0..count {
        let ms = field.xi_multi(s);
        let mut phase = 0.0;
        let mut bin = 0usize;
        for a in 0..d {
            let kappa = ms[a] as i64 - field.xi_offset();
            phase -= 2.0 * PI * (d0[a] * kappa) as f64 / n as f64;
            bin = bin * c + kappa.rem_euclid(c as i64) as usize;
        }
        phases.push(Complex64::from_polar(1.0, phase));
        bins.push(bin);
    }
    RowPlan { pairs, phases, bins }
}

/// Wigner transform of a Hermitian grid matrix.
///
/// Pairs at separation `n/2` along some axis have their Hermitian partner in another
/// position row, so the raw transform `w` is complex there; the stored field is
/// `Re w + Im w`, which equals `w` elsewhere and keeps the map a real isometry.
pub fn wigner_matrix(grid: &Grid, hbar: f64, op: &Matrix) -> Result<PhaseSpaceField> {
    if op.shape() != (grid.len(), grid.len()) {
        return Err(LabError::GridMismatch(format!("operator shape {:?} on {} points", op.shape(), grid.len())));
    }
    if !linalg::is_hermitian(op, 1e-10) {
        return Err(LabError::InvalidOperator("Wigner transform needs a Hermitian operator".into()));
    }
    let mut field = PhaseSpaceField::zeros(*grid, hbar)?;
    let d = grid.dim();
    let c = field.xi_count();
    let nxi = field.xi_points();
    let factor = 2f64.powi(d as i32);
    let mut buffer = vec![Complex64::new(0.0, 0.0); nxi];
    for t in 0..field.x_points() {
        let plan = row_plan(&field, t);
        for (slot, &(a, b)) in buffer.iter_mut().zip(&plan.pairs) {
            *slot = op[(a, b)];
        }
        fourier::fft_nd(&mut buffer, c, d, false);
        for s in 0..nxi {
            let v = buffer[plan.bins[s]] * plan.phases[s] * factor;
            field.values[t * nxi + s] = v.re + v.im;
        }
    }
    Ok(field)
}

/// Wigner transform `f_γ(x, ξ) = ∫ e^{-iy·ξ/ħ} γ(x + y/2, x - y/2) dy` on the lattice.
pub fn wigner(op: &DensityOperator) -> Result<PhaseSpaceField> {
    wigner_matrix(op.grid(), op.hbar(), op.matrix())
}

/// Weyl quantization, the exact inverse of [`wigner_matrix`] on the lattice, computed
/// as the adjoint `f ↦ Herm W⁻¹((1+i)f)` of the real isometry.
pub fn weyl_quantize(f: &PhaseSpaceField) -> Result<Matrix> {
    let grid = f.grid;
    let d = grid.dim();
    let c = f.xi_count();
    let nxi = f.xi_points();
    let factor = 1.0 / (2f64.powi(d as i32) * nxi as f64);
    let mut out = Matrix::zeros(grid.len(), grid.len());
    let mut buffer = vec![Complex64::new(0.0, 0.0); nxi];
    for t in 0..f.x_points() {
        let plan = row_plan(f, t);
        for s in 0..nxi {
            buffer[plan.bins[s]] = plan.phases[s].conj() * Complex64::new(1.0, 1.0) * f.values[t * nxi + s];
        }
        fourier::fft_nd(&mut buffer, c, d, true);
        for (value, &(a, b)) in buffer.iter().zip(&plan.pairs) {
            out[(a, b)] = value * factor;
        }
    }
    Ok(linalg::hermitian_part(&out))
}

/// Fourier-interpolated refinement `E γ E*` onto the grid with `2n` points per axis.
///
/// `E` zero-pads the spectrum of each column, keeping the Nyquist mode on one side, and is an
/// isometry; the refined Wigner lattice covers the full momentum band of the original grid.
pub fn refine_operator(grid: &Grid, op: &Matrix) -> Result<(Grid, Matrix)> {
    if op.shape() != (grid.len(), grid.len()) {
        return Err(LabError::GridMismatch(format!("operator shape {:?} on {} points", op.shape(), grid.len())));
    }
    let fine = Grid::with_budget(grid.dim(), 2 * grid.n(), grid.half_length(), usize::MAX)?;
    let embed = refinement_matrix(grid, &fine);
    Ok((fine, linalg::matmul3(&embed, op, &embed.adjoint())))
}

fn refinement_matrix(coarse: &Grid, fine: &Grid) -> Matrix {
    let d = coarse.dim();
    let n = coarse.n();
    let m = fine.n();
    let mut out = Matrix::zeros(fine.len(), coarse.len());
    let mut column = vec![Complex64::new(0.0, 0.0); coarse.len()];
    let mut padded = vec![Complex64::new(0.0, 0.0); fine.len()];
    let norm = 1.0 / (coarse.len() as f64 * (fine.len() as f64 / coarse.len() as f64).sqrt());
    for j in 0..coarse.len() {
        column.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        column[j] = Complex64::new(1.0, 0.0);
        fourier::fft_nd(&mut column, n, d, false);
        padded.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (k, v) in column.iter().enumerate() {
            let mk = unflatten(k, n, d);
            let mut target = 0usize;
            for &slot in mk.iter().take(d) {
                let signed = fourier::signed_index(slot, n);
                target = target * m + signed.rem_euclid(m as i64) as usize;
            }
            padded[target] = *v;
        }
        // Grid origins coincide at -L, so a pure zero-pad interpolates.
        fourier::fft_nd(&mut padded, m, d, true);
        for (i, v) in padded.iter().enumerate() {
            out[(i, j)] = v * norm;
        }
    }
    out
}

/// Apply the unnormalized multi-dimensional DFT to every column.
fn fft_columns(a: &Matrix, grid: &Grid, inverse: bool) -> Matrix {
    let mut out = a.clone();
    let mut column = vec![Complex64::new(0.0, 0.0); a.nrows()];
    for c in 0..a.ncols() {
        for (i, v) in column.iter_mut().enumerate() {
            *v = a[(i, c)];
        }
        fourier::fft_nd(&mut column, grid.n(), grid.dim(), inverse);
        for (i, v) in column.iter().enumerate() {
            out[(i, c)] = *v;
        }
    }
    out
}

/// `F A F*/N` for the forward (or inverse) unnormalized DFT `F`.
fn conjugate_by_dft(a: &Matrix, grid: &Grid, inverse: bool) -> Matrix {
    let left = fft_columns(a, grid, inverse);
    let both = fft_columns(&left.adjoint(), grid, inverse).adjoint();
    both / Complex64::new(grid.len() as f64, 0.0)
}

/// `∫ G_ε(z) T_z A dz` with `G_ε(x, ξ) = g_ε(x) g_{h²/4ε}(ξ)`.
///
/// Momentum averaging multiplies the kernel by `e^{-π|x-y|²/4ε}` and position averaging
/// multiplies the Fourier kernel by `e^{-ε|k-k'|²/4π}`. Both are Schur products with
/// positive semidefinite, unit-diagonal matrices, so positivity and the trace are preserved.
pub fn smooth_matrix(grid: &Grid, a: &Matrix, eps: f64) -> Result<Matrix> {
    if a.shape() != (grid.len(), grid.len()) {
        return Err(LabError::GridMismatch(format!("operator shape {:?} on {} points", a.shape(), grid.len())));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(LabError::InvalidParameter(format!("smoothing scale {eps} must be positive")));
    }
    let len = grid.len();
    let d = grid.dim();
    let points: Vec<Vec<f64>> = (0..len).map(|i| grid.point(i)).collect();
    let mut out = Matrix::from_fn(len, len, |r, c| {
        let dist2: f64 = points[r].iter().zip(&points[c]).map(|(x, y)| (x - y) * (x - y)).sum();
        a[(r, c)] * (-PI * dist2 / (4.0 * eps)).exp()
    });
    let waves: Vec<Vec<f64>> = (0..len)
        .map(|i| {
            let m = grid.multi_index(i);
            (0..d).map(|ax| grid.wavenumber(m[ax])).collect()
        })
        .collect();
    let mut spectral = conjugate_by_dft(&out, grid, false);
    for r in 0..len {
        for c in 0..len {
            let q2: f64 = waves[r].iter().zip(&waves[c]).map(|(k, l)| (k - l) * (k - l)).sum();
            spectral[(r, c)] *= (-eps * q2 / (4.0 * PI)).exp();
        }
    }
    out = conjugate_by_dft(&spectral, grid, true);
    Ok(linalg::hermitian_part(&out))
}

/// Semiclassical convolution `G_ε ⋆ op` for `ε ∈ (0, 1]`.
pub fn coherent_state_smooth(op: &DensityOperator, eps: f64) -> Result<DensityOperator> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(LabError::InvalidParameter(format!("smoothing scale {eps} outside (0, 1]")));
    }
    let grid = *op.grid();
    let spacing = grid.spacing();
    if eps.sqrt() < spacing {
        log::warn!("smoothing width √ε = {:.3e} is below the grid spacing {spacing:.3e}", eps.sqrt());
    }
    let m = smooth_matrix(&grid, op.matrix(), eps)?;
    DensityOperator::new(grid, op.hbar(), m, DensityTag::Smoothed)
}

/// Husimi transform `m_γ(z) = ⟨φ_z, γ φ_z⟩` on the phase-space lattice.
///
/// `φ_z(y) ∝ e^{-|y-x|²/2ħ} e^{iξ·y/ħ}` is periodized and normalized on the grid, so
/// `0 ≤ γ ≤ 1` gives `0 ≤ m_γ ≤ 1` exactly. In the continuum this is the Wigner
/// transform of `G_{h/2} ⋆ γ`; on the lattice that route loses positivity for states
/// with momenta beyond the lattice window, so the expectation is evaluated directly.
pub fn husimi(gamma: &DensityOperator) -> Result<PhaseSpaceField> {
    let grid = *gamma.grid();
    let hbar = gamma.hbar();
    let mut field = PhaseSpaceField::zeros(grid, hbar)?;
    let (d, n, len) = (grid.dim(), grid.n(), grid.len());
    let (weights, vectors) = linalg::hermitian_eigen(gamma.matrix());
    let scale = weights.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
    let modes: Vec<usize> = (0..len).filter(|&j| weights[j].abs() > 1e-15 * scale).collect();
    let period = 2.0 * grid.half_length();
    let profile = |u: f64| -> f64 { (-1..=1).map(|k| (-(u + k as f64 * period).powi(2) / (2.0 * hbar)).exp()).sum() };
    let c = field.xi_count();
    let bins: Vec<usize> = (0..field.xi_points())
        .map(|s| {
            let ms = field.xi_multi(s);
            (0..d).fold(0, |acc, a| acc * n + (ms[a] as i64 - field.xi_offset()).rem_euclid(n as i64) as usize)
        })
        .collect();
    let nxi = c.pow(d as u32);
    let mut buffer = vec![Complex64::new(0.0, 0.0); len];
    for t in 0..field.x_points() {
        let centre = field.x_point(t);
        let mut g: Vec<f64> = (0..len)
            .map(|i| (0..d).map(|a| profile(grid.coordinate(i, a) - centre[a])).product())
            .collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        g.iter_mut().for_each(|v| *v /= norm);
        let row = &mut field.values[t * nxi..(t + 1) * nxi];
        for &j in &modes {
            for (i, slot) in buffer.iter_mut().enumerate() {
                *slot = vectors[(i, j)] * g[i];
            }
            fourier::fft_nd(&mut buffer, n, d, false);
            for (value, &bin) in row.iter_mut().zip(&bins) {
                *value += weights[j] * buffer[bin].norm_sqr();
            }
        }
    }
    Ok(field)
}

/// Convex Gaussian average of a field with standard deviations `x_width` and `xi_width`.
///
/// Weights are normalized discrete Gaussians, periodic in `x` and truncated at the
/// momentum boundary, so values in `[0, 1]` stay in `[0, 1]`.
pub fn lattice_blur(f: &PhaseSpaceField, x_width: f64, xi_width: f64) -> Result<PhaseSpaceField> {
    if !(x_width >= 0.0 && xi_width >= 0.0) {
        return Err(LabError::InvalidParameter("blur widths must be nonnegative".into()));
    }
    let d = f.grid.dim();
    let mut shape = vec![f.x_count(); d];
    shape.extend(vec![f.xi_count(); d]);
    let mut values = f.values.clone();
    for axis in 0..2 * d {
        let (width, step, periodic) = if axis < d {
            (x_width, f.x_spacing(), true)
        } else {
            (xi_width, f.xi_spacing(), false)
        };
        if width == 0.0 {
            continue;
        }
        let reach = ((6.0 * width / step).ceil() as i64).min(shape[axis] as i64 / 2);
        let mut weights: Vec<f64> = (-reach..=reach).map(|k| (-0.5 * (k as f64 * step / width).powi(2)).exp()).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        values = blur_axis(&values, &shape, axis, &weights, periodic);
    }
    Ok(PhaseSpaceField { grid: f.grid, hbar: f.hbar, values })
}

fn blur_axis(values: &[f64], shape: &[usize], axis: usize, weights: &[f64], periodic: bool) -> Vec<f64> {
    let len = shape[axis] as i64;
    let stride: usize = shape[axis + 1..].iter().product();
    let reach = (weights.len() / 2) as i64;
    let mut out = vec![0.0; values.len()];
    for (i, slot) in out.iter_mut().enumerate() {
        let pos = ((i / stride) % shape[axis]) as i64;
        let base = i - pos as usize * stride;
        for (k, w) in weights.iter().enumerate() {
            let mut src = pos + k as i64 - reach;
            if periodic {
                src = src.rem_euclid(len);
            } else if !(0..len).contains(&src) {
                continue;
            }
            *slot += w * values[base + src as usize * stride];
        }
    }
    out
}

/// Potential values at every position slot of the lattice; midpoints of tabulated
/// potentials are averages of the neighbouring grid samples.
pub fn potential_on_lattice(grid: &Grid, hbar: f64, potential: &Potential) -> Result<Vec<f64>> {
    let probe = PhaseSpaceField::zeros(*grid, hbar)?;
    let d = grid.dim();
    let n = grid.n();
    if potential.value(&vec![0.0; d]).is_some() {
        return Ok((0..probe.x_points())
            .map(|t| potential.value(&probe.x_point(t)).unwrap_or(0.0))
            .collect());
    }
    let samples = potential.sample(grid)?;
    Ok((0..probe.x_points())
        .map(|t| {
            let m = probe.x_multi(t);
            let odd: Vec<usize> = (0..d).filter(|&a| m[a] % 2 == 1).collect();
            let corners = 1usize << odd.len();
            let mut sum = 0.0;
            for mask in 0..corners {
                let mut idx = [0usize; 3];
                for a in 0..d {
                    idx[a] = m[a] / 2;
                }
                for (bit, &a) in odd.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        idx[a] = (idx[a] + 1) % n;
                    }
                }
                sum += samples.values()[grid.flat_index(&idx[..d])];
            }
            sum / corners as f64
        })
        .collect())
}

/// Classical ground state `f = 1_{|ξ|²+V-E≤0}` with its exact density.
#[derive(Clone, Debug)]
pub struct ClassicalSymbol {
    /// Indicator on the lattice.
    pub f: PhaseSpaceField,
    /// `ω_d (E - V)_+^{d/2}` on the grid.
    pub rho: GridFunction<f64>,
    /// `∫∫ f = ω_d ∫(E - V)_+^{d/2}`, exact in one dimension for analytic potentials.
    pub mass: f64,
    /// `V - E`.
    pub potential: Potential,
}

impl ClassicalSymbol {
    /// Largest deviation of the lattice marginal on grid rows from the exact density.
    pub fn marginal_error(&self) -> f64 {
        let marginal = self.f.grid_marginal();
        marginal.values().iter().zip(self.rho.values()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Unit-ball volume `ω_d = π^{d/2}/Γ(1 + d/2)`.
pub fn omega_d(dim: usize) -> f64 {
    unit_ball_volume(dim)
}

/// Classical symbol of `V` at energy `E`.
pub fn classical_symbol(grid: &Grid, hbar: f64, potential: &Potential, energy: f64) -> Result<ClassicalSymbol> {
    let shifted = potential.clone().with_chemical_shift(energy);
    let v = potential_on_lattice(grid, hbar, &shifted)?;
    let mut f = PhaseSpaceField::zeros(*grid, hbar)?;
    let nxi = f.xi_points();
    let xi2: Vec<f64> = (0..nxi).map(|s| f.xi_point(s).iter().map(|k| k * k).sum()).collect();
    for (t, &vt) in v.iter().enumerate() {
        for (s, k2) in xi2.iter().enumerate() {
            if k2 + vt <= 0.0 {
                f.values[t * nxi + s] = 1.0;
            }
        }
    }
    let d = grid.dim();
    let omega = unit_ball_volume(d);
    let rho = shifted.sample(grid)?.map(|x| omega * (-x).max(0.0).powf(d as f64 / 2.0));
    let mass = classical_phase_volume(grid, potential, energy)?;
    Ok(ClassicalSymbol { f, rho, mass, potential: shifted })
}

/// Classical quantitative bathtub identity `∫∫𝓗(g - f) = ∫∫|𝓗||f - g|` with `f = 1_{𝓗≤0}`.
pub fn bathtub_identity_audit(h: &PhaseSpaceField, g: &PhaseSpaceField) -> Result<IdentityAudit> {
    h.ensure_same_lattice(g)?;
    if g.values.iter().any(|&v| !(-1e-12..=1.0 + 1e-12).contains(&v)) {
        return Err(LabError::InvalidParameter("g must take values in [0, 1]".into()));
    }
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for (&hv, &gv) in h.values.iter().zip(&g.values) {
        let f = if hv <= 0.0 { 1.0 } else { 0.0 };
        lhs += hv * (gv - f);
        rhs += hv.abs() * (f - gv).abs();
    }
    let w = h.cell_volume();
    Ok(IdentityAudit { lhs: lhs * w, rhs: rhs * w, residual: (lhs - rhs).abs() * w })
}

/// Terms of the classical energy-convexity identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityAudit {
    /// `𝓔_g - 𝓔_f`.
    pub lhs: f64,
    /// `Q(g) + ∫V₊ϱ_g + (c_d/p)∫(ϱ_g^p - ϱ_f^p - pϱ_f^{p-1}(ϱ_g - ϱ_f))`.
    pub rhs: f64,
    pub identity_residual: f64,
    /// `min_x [ϱ_g^p - ϱ_f^p - pϱ_f^{p-1}(ϱ_g - ϱ_f) - (p-1)|ϱ_g^{p/2} - ϱ_f^{p/2}|²]`.
    pub pointwise_min_slack: f64,
}

/// `∫(ξ² - a²)` over `[u, v]`.
fn shifted_square_integral(u: f64, v: f64, a2: f64) -> f64 {
    (v * v * v - u * u * u) / 3.0 - a2 * (v - u)
}

/// Energy convexity identity for `f = 1_{|ξ|²+V≤0}` and a lattice field `0 ≤ g ≤ 1`.
///
/// In one dimension `g` is read as piecewise constant on momentum cells and every
/// momentum integral is exact, so the identity holds to rounding at each position.
/// In higher dimensions the momentum integrals are lattice sums. The density of `f`
/// is `ω_d V₋^{d/2}` with `∫|ξ|²f dξ = (c_d/p)ϱ_f^p`.
pub fn energy_convexity_audit(potential: &Potential, g: &PhaseSpaceField) -> Result<ConvexityAudit> {
    if g.values.iter().any(|&v| !(-1e-12..=1.0 + 1e-12).contains(&v)) {
        return Err(LabError::InvalidParameter("g must take values in [0, 1]".into()));
    }
    let grid = *g.grid();
    let d = grid.dim();
    let df = d as f64;
    let p = 1.0 + 2.0 / df;
    let omega = unit_ball_volume(d);
    let cd = omega.powf(-2.0 / df);
    let v = potential_on_lattice(&grid, g.hbar, potential)?;
    let nxi = g.xi_points();
    let dxi = g.xi_spacing();
    let xis: Vec<Vec<f64>> = (0..nxi).map(|s| g.xi_point(s)).collect();
    let (mut lhs, mut rhs) = (0.0, 0.0);
    let mut slack = f64::INFINITY;
    for (t, &vt) in v.iter().enumerate() {
        let row = &g.values[t * nxi..(t + 1) * nxi];
        let rho_f = omega * (-vt).max(0.0).powf(df / 2.0);
        let kinetic_f = cd / p * rho_f.powf(p);
        let (rho_g, kinetic_g, q) = if d == 1 {
            let rho_g: f64 = row.iter().sum::<f64>() * dxi;
            let a2 = cd * rho_g * rho_g;
            let a = a2.sqrt();
            let mut kinetic = 0.0;
            let mut q = 0.0;
            let inside = |u: f64, v: f64| {
                let (lo, hi) = (u.max(-a), v.min(a));
                if hi > lo {
                    shifted_square_integral(lo, hi, a2)
                } else {
                    0.0
                }
            };
            for (s, &gv) in row.iter().enumerate() {
                let (lo, hi) = (xis[s][0] - dxi / 2.0, xis[s][0] + dxi / 2.0);
                kinetic += gv * (hi * hi * hi - lo * lo * lo) / 3.0;
                let i_in = inside(lo, hi);
                q += (1.0 - gv) * (-i_in) + gv * (shifted_square_integral(lo, hi, a2) - i_in);
            }
            let lo_edge = xis[0][0] - dxi / 2.0;
            let hi_edge = xis[nxi - 1][0] + dxi / 2.0;
            q -= inside(f64::NEG_INFINITY.max(-a - 1.0), lo_edge) + inside(hi_edge, a + 1.0);
            (rho_g, kinetic, q)
        } else {
            let w = dxi.powi(d as i32);
            let rho_g: f64 = row.iter().sum::<f64>() * w;
            let a2 = cd * rho_g.powf(2.0 / df);
            let mut kinetic = 0.0;
            let mut q = 0.0;
            for (s, &gv) in row.iter().enumerate() {
                let k2: f64 = xis[s].iter().map(|k| k * k).sum();
                kinetic += gv * k2 * w;
                let hg = k2 - a2;
                let indicator = if hg <= 0.0 { 1.0 } else { 0.0 };
                q += hg.abs() * (indicator - gv).abs() * w;
            }
            (rho_g, kinetic, q)
        };
        let energy_g = kinetic_g + vt * rho_g;
        let energy_f = kinetic_f + vt * rho_f;
        let bregman = rho_g.powf(p) - rho_f.powf(p) - p * rho_f.powf(p - 1.0) * (rho_g - rho_f);
        lhs += energy_g - energy_f;
        rhs += q + vt.max(0.0) * rho_g + cd / p * bregman;
        slack = slack.min(bregman - (p - 1.0) * (rho_g.powf(p / 2.0) - rho_f.powf(p / 2.0)).powi(2));
    }
    let w = g.x_spacing().powi(d as i32);
    Ok(ConvexityAudit {
        lhs: lhs * w,
        rhs: rhs * w,
        identity_residual: (lhs - rhs).abs() * w,
        pointwise_min_slack: slack,
    })
}

/// Constants of the quantitative local Weyl law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylBudget {
    pub m_f: f64,
    pub m_op: f64,
    /// `(d/8π)(M_op + M_f)`.
    pub m: f64,
    pub l1: f64,
    pub l2: f64,
    pub d: f64,
    pub c1: f64,
    pub c2: f64,
}

/// `x^e`, with empty densities contributing zero for every exponent.
fn power_or_zero(x: f64, e: f64) -> f64 {
    if x > 0.0 {
        x.powf(e)
    } else {
        0.0
    }
}

/// `∫_{ℝ^d} |x|² e^{-π|x|² + β|x|} dx` by radial quadrature.
fn gaussian_second_moment(dim: usize, beta: f64) -> f64 {
    let sphere = dim as f64 * unit_ball_volume(dim);
    let r_max = 10.0 + beta / PI;
    let steps = 20_000;
    let h = r_max / steps as f64;
    let integrand = |r: f64| r.powi(dim as i32 + 1) * (-PI * r * r + beta * r).exp();
    let interior: f64 = (1..steps).map(|k| integrand(k as f64 * h)).sum();
    sphere * h * (interior + 0.5 * (integrand(0.0) + integrand(r_max)))
}

/// Weighted total variation `Σ e^{β|x_mid|}|ϱ_{i+1} - ϱ_i|` over grid faces.
fn weighted_total_variation(f: &GridFunction<f64>, beta: f64) -> f64 {
    let grid = *f.grid();
    let n = grid.n();
    let d = grid.dim();
    let face = grid.spacing().powi(d as i32 - 1);
    let mut total = 0.0;
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        for i in 0..grid.len() {
            if grid.multi_index(i)[axis] + 1 < n {
                let a = grid.point(i);
                let b = grid.point(i + stride);
                let mid: f64 = a.iter().zip(&b).map(|(x, y)| ((x + y) / 2.0).powi(2)).sum::<f64>().sqrt();
                total += (beta * mid).exp() * (f.values()[i + stride] - f.values()[i]).abs();
            }
        }
    }
    total * face
}

/// Budget constants `𝖬`, `𝖫₁`, `𝖫₂`, `𝖣`, `𝖢₁`, `𝖢₂` for a classical symbol and an operator.
///
/// Integrals run over the grid box; `C_{d,β}` is the box-restricted product
/// `‖e^{-(d-2)β|x|/2d}‖_{L^d} ‖e^{β|x|}g₁‖_{L¹}`, and `∇ϱ` norms are total variations.
pub fn weyl_budget(symbol: &ClassicalSymbol, gamma: &DensityOperator, beta: f64) -> Result<WeylBudget> {
    let grid = *gamma.grid();
    grid.ensure_same(symbol.rho.grid())?;
    if !(beta >= 0.0) {
        return Err(LabError::InvalidParameter(format!("beta {beta} must be nonnegative")));
    }
    let d = grid.dim();
    let df = d as f64;
    let p = 1.0 + 2.0 / df;
    let p_dual = p / (p - 1.0);
    let omega = unit_ball_volume(d);
    let cell = grid.cell_volume();
    let radius: Vec<f64> = (0..grid.len()).map(|i| grid.radius_squared(i).sqrt()).collect();
    let rho_f = &symbol.rho;
    let rho_op = gamma.density();
    let potential = &symbol.potential;
    let v = potential.sample(&grid)?;

    let m_f = symbol.mass;
    let m_op = planck_volume(gamma.hbar(), d) * linalg::trace(gamma.matrix()).re;
    let m = df / (8.0 * PI) * (m_op + m_f);

    let weighted_l1 =
        |f: &GridFunction<f64>| f.values().iter().zip(&radius).map(|(x, r)| (beta * r).exp() * x.abs()).sum::<f64>() * cell;
    let decay_ld = (radius.iter().map(|r| (-(df - 2.0) * beta * r / 2.0).exp()).sum::<f64>() * cell).powf(1.0 / df);
    let weighted_gaussian: f64 = radius.iter().map(|r| (beta * r - PI * r * r).exp()).sum::<f64>() * cell;
    let c_d_beta = decay_ld * weighted_gaussian;
    let prefactor = 2.0 * p_dual.sqrt() / p * omega.powf(1.0 / df);
    let e = (df - 2.0) / df;
    let l1 = prefactor * c_d_beta * (power_or_zero(weighted_l1(rho_f), e) + power_or_zero(weighted_l1(&rho_op), e));
    let l2 = prefactor * (power_or_zero(rho_f.max_abs(), e) + power_or_zero(rho_op.max_abs(), e));

    let gradients = potential.sample_gradient(&grid)?;
    let grad_norm: Vec<f64> = (0..grid.len())
        .map(|i| gradients.iter().map(|g| g.values()[i].powi(2)).sum::<f64>().sqrt())
        .collect();
    let grad_v_minus = (0..grid.len()).filter(|&i| v.values()[i] < 0.0).map(|i| grad_norm[i]).fold(0.0_f64, f64::max);
    let grad_v_plus = (0..grid.len())
        .filter(|&i| v.values()[i] > 0.0)
        .map(|i| (-beta * radius[i]).exp() * grad_norm[i])
        .fold(0.0_f64, f64::max);
    let total = GridFunction::new(grid, rho_f.values().iter().zip(rho_op.values()).map(|(a, b)| a + b).collect())?;
    let hessian = potential.sample_hessian_norm(&grid)?;
    let sobolev: f64 = (0..grid.len())
        .filter(|&i| v.values()[i] <= 1.0)
        .map(|i| v.values()[i].abs() + grad_norm[i] + hessian.values()[i])
        .sum::<f64>()
        * cell;
    let branch_gradient = grad_v_minus * weighted_total_variation(&total, 0.0);
    let branch_sobolev = sobolev * total.max_abs();
    let d_budget = df / PI * branch_gradient.min(branch_sobolev)
        + 0.5 * gaussian_second_moment(d, beta) * grad_v_plus * weighted_total_variation(rho_f, beta);

    let distance = sublevel_distance(&grid, potential, 1.0)?;
    let fattened = distance.values().iter().filter(|&&x| x < 1.0).count() as f64 * cell;
    let c1 = df * omega.powf(2.0 / df) * fattened.powf(2.0 / df) * power_or_zero(m_op, 1.0 - 2.0 / df)
        + fattened * 2f64.powf(df / 2.0);
    let v_minus_sup = v.values().iter().fold(0.0_f64, |acc, &x| acc.max(-x));
    let c2 = (2.0 * ((df + 2.0) / (2.0 * std::f64::consts::E * PI)).powf(1.0 + df / 2.0) + 8.0 / (3.0 * PI))
        * m_op
        * (1.0 + v_minus_sup);
    Ok(WeylBudget { m_f, m_op, m, l1, l2, d: d_budget, c1, c2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_core::make_grid;
    use crate::planck;
    use crate::operators::KineticScheme;
    use crate::schatten::{phase_space_shift, schatten_norm, ShiftMode, ShiftVector};
    use crate::spectral::{diagonalize_schrodinger, spectral_projector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian_state(grid: &Grid, hbar: f64) -> DensityOperator {
        let dx = grid.spacing();
        let psi: Vec<f64> = grid
            .axis_coordinates()
            .iter()
            .map(|x| (PI * hbar).powf(-0.25) * (-x * x / (2.0 * hbar)).exp() * dx.sqrt())
            .collect();
        let m = Matrix::from_fn(grid.len(), grid.len(), |a, b| Complex64::new(psi[a] * psi[b], 0.0));
        DensityOperator::new(*grid, hbar, m, DensityTag::General).unwrap()
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
        let a = Matrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        linalg::hermitian_part(&a)
    }

    #[test]
    fn gaussian_wigner_oracle() {
        let g = make_grid(1, 256, 6.0).unwrap();
        let hbar = 0.1;
        let f = wigner(&gaussian_state(&g, hbar)).unwrap();
        let exact = PhaseSpaceField::from_fn(g, hbar, |x, xi| 2.0 * (-(x[0] * x[0] + xi[0] * xi[0]) / hbar).exp()).unwrap();
        assert!(f.distance(&exact, f64::INFINITY).unwrap() < 1e-6);
        let h = planck(hbar);
        assert!((f.mass() - h).abs() < 1e-9 * h);
        let rho = gaussian_state(&g, hbar).density();
        let marginal = f.grid_marginal();
        for (a, b) in marginal.values().iter().zip(rho.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn plancherel_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (dim, n) in [(1, 12), (1, 14), (2, 6)] {
            let g = make_grid(dim, n, 2.0).unwrap();
            let a = random_hermitian(&mut rng, g.len());
            let f = wigner_matrix(&g, 0.3, &a).unwrap();
            let hs = schatten_norm(&a, 2.0, 0.3, dim).unwrap();
            assert!((f.lp_norm(2.0) - hs).abs() < 1e-9 * hs);
            let back = weyl_quantize(&f).unwrap();
            assert!(linalg::max_abs(&(back - &a)) < 1e-10);
        }
    }

    #[test]
    fn resolved_identities() {
        let g = make_grid(1, 256, 6.0).unwrap();
        let hbar = 0.1;
        let one = PhaseSpaceField::from_fn(g, hbar, |_, _| 1.0).unwrap();
        let id = weyl_quantize(&one).unwrap();
        let gamma = gaussian_state(&g, hbar);
        let defect = linalg::matmul(&id, gamma.matrix()) - gamma.matrix();
        assert!(linalg::max_abs(&defect) < 1e-9);
        let v = PhaseSpaceField::from_fn(g, hbar, |x, _| x[0] * x[0]).unwrap();
        let vq = weyl_quantize(&v).unwrap();
        let exact = linalg::diagonal(&g.axis_coordinates().iter().map(|x| x * x).collect::<Vec<_>>());
        // The periodic extension of x² jumps at the box edge, which couples edge rows.
        let defect = linalg::matmul(&(vq - exact), gamma.matrix());
        for (a, x) in g.axis_coordinates().iter().enumerate() {
            if x.abs() < 3.0 {
                assert!(defect.row(a).iter().all(|z| z.norm() < 1e-9));
            }
        }
    }

    #[test]
    fn translation_covariance() {
        let hbar = 0.1;
        let g = make_grid(1, 96, 6.0).unwrap();
        let dec = diagonalize_schrodinger(&g, &Potential::shifted_harmonic(1.0), hbar, KineticScheme::Spectral).unwrap();
        let gamma = spectral_projector(&dec, f64::NEG_INFINITY, 0.0, hbar).unwrap();
        let f = wigner(&gamma).unwrap();
        for (s, m) in [(3i64, 2i64), (-5, -7), (0, 40)] {
            let z = ShiftVector::new(vec![s as f64 * g.spacing()], vec![m as f64 * f.xi_spacing()]).unwrap();
            let shifted = phase_space_shift(gamma.matrix(), &g, &z, hbar, ShiftMode::GridAligned).unwrap();
            let lhs = wigner_matrix(&g, hbar, &shifted).unwrap();
            let rhs = f.translate(&[2 * s], &[m]).unwrap();
            assert!(lhs.distance(&rhs, f64::INFINITY).unwrap() < 1e-9, "shift ({s}, {m})");
        }
    }

    #[test]
    fn smoothing_properties() {
        let hbar = 0.1;
        let g = make_grid(1, 96, 6.0).unwrap();
        let dec = diagonalize_schrodinger(&g, &Potential::shifted_harmonic(1.0), hbar, KineticScheme::Spectral).unwrap();
        let gamma = spectral_projector(&dec, f64::NEG_INFINITY, 0.0, hbar).unwrap();
        let zero = coherent_state_smooth(&DensityOperator::zero(g, hbar), 0.2).unwrap();
        assert_eq!(linalg::max_abs(zero.matrix()), 0.0);
        for eps in [0.05, 0.2, 1.0] {
            let s = coherent_state_smooth(&gamma, eps).unwrap();
            assert!((s.scaled_trace() - gamma.scaled_trace()).abs() < 1e-9 * gamma.scaled_trace());
            assert!(linalg::hermitian_eigenvalues(s.matrix())[0] >= -1e-9);
            for p in [1.0, 2.0, 3.0] {
                let before = schatten_norm(gamma.matrix(), p, hbar, 1).unwrap();
                let after = schatten_norm(s.matrix(), p, hbar, 1).unwrap();
                assert!(after <= before * (1.0 + 1e-12));
            }
        }
        assert!(coherent_state_smooth(&gamma, 0.0).is_err());
        assert!(coherent_state_smooth(&gamma, 1.5).is_err());
    }

    #[test]
    fn husimi_examples() {
        let hbar = 0.1;
        let g = make_grid(1, 256, 6.0).unwrap();
        let gamma = gaussian_state(&g, hbar);
        let m = husimi(&gamma).unwrap();
        let exact = PhaseSpaceField::from_fn(g, hbar, |x, xi| (-(x[0] * x[0] + xi[0] * xi[0]) / (2.0 * hbar)).exp()).unwrap();
        assert!(m.distance(&exact, f64::INFINITY).unwrap() < 1e-8);
        assert!((m.mass() - planck(hbar)).abs() < 1e-9 * planck(hbar));
        let zero = husimi(&DensityOperator::zero(g, hbar)).unwrap();
        assert_eq!(zero.lp_norm(f64::INFINITY), 0.0);
        let dec = diagonalize_schrodinger(&g, &Potential::shifted_harmonic(1.0), hbar, KineticScheme::Spectral).unwrap();
        let proj = spectral_projector(&dec, f64::NEG_INFINITY, 0.0, hbar).unwrap();
        let mp = husimi(&proj).unwrap();
        assert!(mp.values().iter().all(|&v| (-1e-9..=1.0 + 1e-9).contains(&v)));
        assert!((mp.mass() - proj.scaled_trace()).abs() < 1e-9 * proj.scaled_trace());
    }

    #[test]
    fn classical_symbol_examples() {
        let g = make_grid(1, 256, 3.0).unwrap();
        let s = classical_symbol(&g, 0.02, &Potential::harmonic(), 1.0).unwrap();
        for (i, x) in g.axis_coordinates().iter().enumerate() {
            let expected = if x.abs() <= 1.0 { 2.0 * (1.0 - x * x).sqrt() } else { 0.0 };
            assert!((s.rho.values()[i] - expected).abs() < 1e-12);
        }
        assert!((s.mass - PI).abs() < 1e-10);
        assert!(s.marginal_error() <= 2.0 * s.f.xi_spacing() + 1e-12);
        assert!((omega_d(3) - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn bathtub_examples() {
        let g = make_grid(1, 8, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = PhaseSpaceField::from_fn(g, 0.3, |x, xi| xi[0] * xi[0] + x[0] * x[0] - 1.0).unwrap();
        let f = PhaseSpaceField::new(g, 0.3, h.values().iter().map(|&v| if v <= 0.0 { 1.0 } else { 0.0 }).collect()).unwrap();
        let same = bathtub_identity_audit(&h, &f).unwrap();
        assert_eq!((same.lhs, same.rhs), (0.0, 0.0));
        let random = PhaseSpaceField::new(g, 0.3, (0..h.values().len()).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        let ones = PhaseSpaceField::from_fn(g, 0.3, |_, _| 1.0).unwrap();
        for gfield in [random, ones] {
            let a = bathtub_identity_audit(&h, &gfield).unwrap();
            assert!(a.residual <= 1e-12 * a.lhs.abs().max(1.0));
        }
        let bad = PhaseSpaceField::from_fn(g, 0.3, |_, _| 1.5).unwrap();
        assert!(bathtub_identity_audit(&h, &bad).is_err());
    }

    #[test]
    fn convexity_examples() {
        let v = Potential::shifted_harmonic(1.0);
        let g1 = make_grid(1, 64, 3.0).unwrap();
        let s1 = classical_symbol(&g1, 0.1, &v, 0.0).unwrap();
        let same = energy_convexity_audit(&v, &s1.f).unwrap();
        assert!(same.identity_residual < 1e-14 && same.lhs >= 0.0 && same.lhs < s1.f.xi_spacing().powi(2), "{same:?}");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let random = PhaseSpaceField::new(g1, 0.1, (0..s1.f.values().len()).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        let blurred = lattice_blur(&s1.f, 0.1, 0.1).unwrap();
        for gfield in [&random, &blurred] {
            let a = energy_convexity_audit(&v, gfield).unwrap();
            assert!(a.identity_residual <= 1e-10 * (a.lhs.abs() + a.rhs.abs()).max(1.0), "{a:?}");
        }
        // p = 3 in one dimension, where the pointwise inequality fails outside the classical region.
        assert!(energy_convexity_audit(&v, &blurred).unwrap().pointwise_min_slack < 0.0);
        let g2 = make_grid(2, 12, 2.0).unwrap();
        let residual = |hbar: f64| {
            let s2 = classical_symbol(&g2, hbar, &v, 0.0).unwrap();
            let blurred = lattice_blur(&s2.f, 0.2, 0.2).unwrap();
            let a = energy_convexity_audit(&v, &blurred).unwrap();
            assert!(a.pointwise_min_slack >= -1e-12, "{a:?}");
            a.identity_residual / (a.lhs.abs() + a.rhs.abs())
        };
        assert!(residual(0.15) < 0.6 * residual(0.3));
        let (a, b, p) = (1.0f64, 4.0f64, 2.0f64);
        assert_eq!(b.powf(p) - a.powf(p) - p * a.powf(p - 1.0) * (b - a), (p - 1.0) * (b.powf(p / 2.0) - a.powf(p / 2.0)).powi(2));
    }

    #[test]
    fn budget_examples() {
        let hbar = 0.1;
        let g = make_grid(1, 192, 6.0).unwrap();
        let v = Potential::shifted_harmonic(1.0);
        let dec = diagonalize_schrodinger(&g, &v, hbar, KineticScheme::Spectral).unwrap();
        let gamma = spectral_projector(&dec, f64::NEG_INFINITY, 0.0, hbar).unwrap();
        let s = classical_symbol(&g, hbar, &v, 0.0).unwrap();
        let b = weyl_budget(&s, &gamma, 0.5).unwrap();
        assert!((b.m_op - PI).abs() < 1e-10 && (b.m_f - PI).abs() < 1e-10);
        assert!((b.m - 0.25).abs() < 1e-10);
        for x in [b.l1, b.l2, b.d, b.c1, b.c2] {
            assert!(x.is_finite() && x >= 0.0);
        }
        let zero_symbol = ClassicalSymbol {
            f: PhaseSpaceField::zeros(g, hbar).unwrap(),
            rho: GridFunction::constant(g, 0.0),
            mass: 0.0,
            potential: v.clone(),
        };
        let z = weyl_budget(&zero_symbol, &DensityOperator::zero(g, hbar), 0.5).unwrap();
        assert_eq!((z.m, z.l1, z.l2, z.d, z.c2), (0.0, 0.0, 0.0, 0.0, 0.0));
        let distance = sublevel_distance(&g, &v, 1.0).unwrap();
        let fattened = distance.values().iter().filter(|&&x| x < 1.0).count() as f64 * g.spacing();
        assert!((z.c1 - fattened * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn refinement_is_isometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = make_grid(1, 16, 2.0).unwrap();
        let a = random_hermitian(&mut rng, 16);
        let (fine, b) = refine_operator(&g, &a).unwrap();
        assert_eq!(fine.n(), 32);
        let fa = linalg::frobenius(&a);
        assert!((linalg::frobenius(&b) - fa).abs() < 1e-12 * fa);
        assert!((linalg::trace(&b) - linalg::trace(&a)).norm() < 1e-12 * fa);
    }

    #[test]
    fn binary_round_trip() {
        let g = make_grid(1, 8, 2.0).unwrap();
        let f = PhaseSpaceField::from_fn(g, 0.2, |x, xi| x[0] - xi[0]).unwrap();
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(PhaseSpaceField::read_binary(buf.as_slice()).unwrap(), f);
        let mut csv = Vec::new();
        f.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 16 * 4);
    }
}
