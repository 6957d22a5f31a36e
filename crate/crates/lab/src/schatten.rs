//! Scaled Schatten norms, quantum gradients, phase-space translations, Besov
//! seminorms and commutator bound audits.
//!
//! Bound audits are evaluated in the eigenbasis of `H`, where `γ = 1_{H≤0}`,
//! `1_{0<H<λ}` and `1_{H≥λ}` are contiguous coordinate blocks, so every trace and
//! norm reduces to a block of `V*AV` scaled entrywise by eigenvalue gaps.

use crate::grid_core::{spectral_derivative, Grid, GridFunction};
use crate::linalg::{self, matmul};
use crate::operators::momentum_operator;
use crate::spectral::{DensityOperator, SpectralDecomposition};
use crate::{fourier, planck_volume, LabError, Matrix, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::Range;
use std::sync::OnceLock;

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(LabError::InvalidParameter(format!("Schatten exponent {p} below 1")))
    }
}

/// `(h^d Σ s_j^p)^{1/p}` from singular values; `p = ∞` gives `max s_j` without the `h^d` factor.
pub fn schatten_from_singular_values(values: &[f64], p: f64, hbar: f64, dim: usize) -> Result<f64> {
    check_exponent(p)?;
    if p.is_infinite() {
        return Ok(values.iter().fold(0.0_f64, |m, s| m.max(s.abs())));
    }
    let sum: f64 = values.iter().map(|s| s.abs().powf(p)).sum();
    Ok((planck_volume(hbar, dim) * sum).powf(1.0 / p))
}

/// Scaled Schatten norm `‖A‖_{𝓛^p} = (h^d Tr|A|^p)^{1/p}`; `p = ∞` is the operator norm.
pub fn schatten_norm(a: &Matrix, p: f64, hbar: f64, dim: usize) -> Result<f64> {
    check_exponent(p)?;
    schatten_from_singular_values(&linalg::singular_values(a), p, hbar, dim)
}

/// Scaled Schatten norm of a vector-valued operator `(Σ_j |A_j|²)^{1/2}`.
pub fn family_schatten_norm(family: &[Matrix], p: f64, hbar: f64, dim: usize) -> Result<f64> {
    check_exponent(p)?;
    match family {
        [] => Ok(0.0),
        [single] => schatten_norm(single, p, hbar, dim),
        _ => {
            let n = family[0].nrows();
            let mut gram = Matrix::zeros(n, n);
            for a in family {
                gram += matmul(&a.adjoint(), a);
            }
            let values: Vec<f64> = linalg::hermitian_eigenvalues(&linalg::hermitian_part(&gram))
                .into_iter()
                .map(|v| v.max(0.0).sqrt())
                .collect();
            schatten_from_singular_values(&values, p, hbar, dim)
        }
    }
}

/// Quantum gradients, one operator per axis.
#[derive(Clone, Debug)]
pub struct QuantumGradients {
    /// `(iħ)^{-1}[p̂_j, γ]`.
    pub dx: Vec<Matrix>,
    /// `(iħ)^{-1}[x_j, γ]`.
    pub dxi: Vec<Matrix>,
}

impl QuantumGradients {
    /// `‖D_x γ‖_{𝓛^p}` of the vector-valued gradient.
    pub fn dx_norm(&self, p: f64, hbar: f64, dim: usize) -> Result<f64> {
        family_schatten_norm(&self.dx, p, hbar, dim)
    }

    /// `‖D_ξ γ‖_{𝓛^p}` of the vector-valued gradient.
    pub fn dxi_norm(&self, p: f64, hbar: f64, dim: usize) -> Result<f64> {
        family_schatten_norm(&self.dxi, p, hbar, dim)
    }
}

/// `[x_axis, A]` computed entrywise.
pub fn position_commutator(grid: &Grid, a: &Matrix, axis: usize) -> Matrix {
    Matrix::from_fn(a.nrows(), a.ncols(), |r, c| {
        a[(r, c)] * (grid.coordinate(r, axis) - grid.coordinate(c, axis))
    })
}

/// `D_x γ = (iħ)^{-1}[p̂, γ]` and `D_ξ γ = (iħ)^{-1}[x, γ]`, both Hermitian.
pub fn quantum_gradients(gamma: &DensityOperator) -> Result<QuantumGradients> {
    let grid = *gamma.grid();
    let hbar = gamma.hbar();
    let g = gamma.matrix();
    let factor = Complex64::new(0.0, -1.0 / hbar);
    let scale = linalg::max_abs(g).max(f64::MIN_POSITIVE);
    let mut dx = Vec::with_capacity(grid.dim());
    let mut dxi = Vec::with_capacity(grid.dim());
    for axis in 0..grid.dim() {
        let p = momentum_operator(&grid, hbar, axis)?;
        let a = linalg::commutator(&p, g) * factor;
        let b = position_commutator(&grid, g, axis) * factor;
        for m in [&a, &b] {
            if linalg::hermitian_defect(m) > 1e-8 * scale * (1.0 + linalg::max_abs(m)) {
                return Err(LabError::Numerical("quantum gradient is not Hermitian".into()));
            }
        }
        dx.push(a);
        dxi.push(b);
    }
    Ok(QuantumGradients { dx, dxi })
}

/// Phase-space point `z = (x₀, ξ₀)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftVector {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl ShiftVector {
    /// Shift with matching position and momentum lengths and finite components.
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if x.len() != xi.len() || x.is_empty() {
            return Err(LabError::InvalidParameter("shift components must share a nonzero length".into()));
        }
        if x.iter().chain(xi.iter()).any(|v| !v.is_finite()) {
            return Err(LabError::InvalidParameter("shift components must be finite".into()));
        }
        Ok(ShiftVector { x, xi })
    }

    /// Zero shift in dimension `dim`.
    pub fn zero(dim: usize) -> Self {
        ShiftVector { x: vec![0.0; dim], xi: vec![0.0; dim] }
    }

    /// Dimension `d` of configuration space.
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Euclidean length `(|x₀|² + |ξ₀|²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        self.x.iter().chain(self.xi.iter()).map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// How spatial translations are realized on the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMode {
    /// Cyclic index shift; `x₀` must be a multiple of `Δx`.
    GridAligned,
    /// Fourier multiplier `e^{-ik·x₀}`, exact for band-limited functions.
    FourierInterpolated,
}

/// Apply `τ_z φ(x) = e^{iξ₀·x/ħ} φ(x - x₀)` to every column of `u`.
pub fn apply_translation(grid: &Grid, z: &ShiftVector, hbar: f64, mode: ShiftMode, u: &Matrix) -> Result<Matrix> {
    let d = grid.dim();
    if z.dim() != d {
        return Err(LabError::InvalidParameter(format!("shift dimension {} on a {d}-d grid", z.dim())));
    }
    if u.nrows() != grid.len() {
        return Err(LabError::GridMismatch(format!("{} rows on a grid of {} points", u.nrows(), grid.len())));
    }
    if !(hbar > 0.0) {
        return Err(LabError::InvalidParameter(format!("hbar {hbar} must be positive")));
    }
    let n = grid.n();
    let dx = grid.spacing();
    let mut out = Matrix::zeros(u.nrows(), u.ncols());
    match mode {
        ShiftMode::GridAligned => {
            let mut shift = [0i64; 3];
            for (a, &x0) in z.x.iter().enumerate() {
                let s = (x0 / dx).round();
                if (x0 - s * dx).abs() > 1e-9 * dx.max(x0.abs()) {
                    return Err(LabError::InvalidParameter(format!(
                        "shift {x0} is not a multiple of the spacing {dx}; use the Fourier mode"
                    )));
                }
                shift[a] = s as i64;
            }
            for i in 0..grid.len() {
                let mi = grid.multi_index(i);
                let mut src = mi;
                for a in 0..d {
                    src[a] = (mi[a] as i64 - shift[a]).rem_euclid(n as i64) as usize;
                }
                let j = grid.flat_index(&src[..d]);
                out.row_mut(i).copy_from(&u.row(j));
            }
        }
        ShiftMode::FourierInterpolated => {
            let len = grid.len();
            let multiplier: Vec<Complex64> = (0..len)
                .map(|m| {
                    let mi = grid.multi_index(m);
                    let phase: f64 = (0..d).map(|a| -grid.wavenumber(mi[a]) * z.x[a]).sum();
                    Complex64::from_polar(1.0 / len as f64, phase)
                })
                .collect();
            let mut column = vec![Complex64::new(0.0, 0.0); len];
            for c in 0..u.ncols() {
                for (i, slot) in column.iter_mut().enumerate() {
                    *slot = u[(i, c)];
                }
                fourier::fft_nd(&mut column, n, d, false);
                for (slot, m) in column.iter_mut().zip(&multiplier) {
                    *slot *= m;
                }
                fourier::fft_nd(&mut column, n, d, true);
                for (i, v) in column.iter().enumerate() {
                    out[(i, c)] = *v;
                }
            }
        }
    }
    if z.xi.iter().any(|&v| v != 0.0) {
        for i in 0..grid.len() {
            let phase: f64 = (0..d).map(|a| z.xi[a] * grid.coordinate(i, a)).sum::<f64>() / hbar;
            let w = Complex64::from_polar(1.0, phase);
            out.row_mut(i).scale_mut_complex(w);
        }
    }
    Ok(out)
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, w: Complex64);
}

impl<S: nalgebra::StorageMut<Complex64, nalgebra::U1, nalgebra::Dyn>> ScaleComplex
    for nalgebra::Matrix<Complex64, nalgebra::U1, nalgebra::Dyn, S>
{
    fn scale_mut_complex(&mut self, w: Complex64) {
        for v in self.iter_mut() {
            *v *= w;
        }
    }
}

/// Unitary matrix of `τ_z`.
pub fn translation_unitary(grid: &Grid, z: &ShiftVector, hbar: f64, mode: ShiftMode) -> Result<Matrix> {
    apply_translation(grid, z, hbar, mode, &linalg::identity(grid.len()))
}

/// `T_z A = τ_z A τ_z*`.
pub fn phase_space_shift(a: &Matrix, grid: &Grid, z: &ShiftVector, hbar: f64, mode: ShiftMode) -> Result<Matrix> {
    let left = apply_translation(grid, z, hbar, mode, a)?;
    Ok(apply_translation(grid, z, hbar, mode, &left.adjoint())?.adjoint())
}

/// `‖T_z γ - γ‖_{𝓛^p}`, through a thin QR reduction to `2r × 2r` when `γ` has rank `r < n/2`.
pub fn translated_difference_norm(gamma: &DensityOperator, z: &ShiftVector, p: f64, mode: ShiftMode) -> Result<f64> {
    check_exponent(p)?;
    let grid = gamma.grid();
    let hbar = gamma.hbar();
    let (w, vectors) = linalg::hermitian_eigen(gamma.matrix());
    let keep: Vec<usize> = (0..w.len()).filter(|&j| w[j].abs() > 1e-14).collect();
    if keep.is_empty() {
        return Ok(0.0);
    }
    let n = grid.len();
    if 2 * keep.len() >= n {
        let diff = phase_space_shift(gamma.matrix(), grid, z, hbar, mode)? - gamma.matrix();
        return schatten_norm(&linalg::hermitian_part(&diff), p, hbar, grid.dim());
    }
    let r = keep.len();
    let u = Matrix::from_fn(n, r, |i, c| vectors[(i, keep[c])]);
    let tu = apply_translation(grid, z, hbar, mode, &u)?;
    let mut q = Matrix::zeros(n, 2 * r);
    q.columns_mut(0, r).copy_from(&tu);
    q.columns_mut(r, r).copy_from(&u);
    let r_factor = q.qr().r();
    let signs: Vec<f64> = keep.iter().map(|&j| w[j]).chain(keep.iter().map(|&j| -w[j])).collect();
    let middle = linalg::hermitian_part(&matmul(&matmul(&r_factor, &linalg::diagonal(&signs)), &r_factor.adjoint()));
    let values: Vec<f64> = linalg::hermitian_eigenvalues(&middle).into_iter().map(f64::abs).collect();
    schatten_from_singular_values(&values, p, hbar, grid.dim())
}

/// Finite-sample Besov seminorm and the per-sample ratios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovEstimate {
    pub value: f64,
    pub norms: Vec<f64>,
    pub ratios: Vec<f64>,
}

/// `max_z ‖T_z γ - γ‖_{𝓛^p} / |z|^s` over the given samples (a lower bound of the supremum).
pub fn besov_seminorm(
    gamma: &DensityOperator,
    p: f64,
    s: f64,
    samples: &[ShiftVector],
    mode: ShiftMode,
) -> Result<BesovEstimate> {
    if samples.is_empty() {
        return Err(LabError::InvalidParameter("empty Besov sample set".into()));
    }
    if samples.iter().any(|z| z.norm() == 0.0) {
        return Err(LabError::InvalidParameter("Besov samples must be nonzero".into()));
    }
    let mut norms = Vec::with_capacity(samples.len());
    let mut ratios = Vec::with_capacity(samples.len());
    for z in samples {
        let v = translated_difference_norm(gamma, z, p, mode)?;
        norms.push(v);
        ratios.push(v / z.norm().powf(s));
    }
    log::debug!("besov samples: {:?}", samples);
    let value = ratios.iter().fold(0.0_f64, |m, &r| m.max(r));
    Ok(BesovEstimate { value, norms, ratios })
}

/// Dyadic lattice `|z| = 2^{-j}` along the first position axis, the first momentum axis and their diagonal.
pub fn dyadic_samples(dim: usize, exponents: Range<i32>) -> Vec<ShiftVector> {
    let mut out = Vec::new();
    for j in exponents {
        let r = 2f64.powi(-j);
        let mut along_x = ShiftVector::zero(dim);
        along_x.x[0] = r;
        let mut along_xi = ShiftVector::zero(dim);
        along_xi.xi[0] = r;
        let mut diagonal = ShiftVector::zero(dim);
        diagonal.x[0] = r / 2f64.sqrt();
        diagonal.xi[0] = r / 2f64.sqrt();
        out.extend([along_x, along_xi, diagonal]);
    }
    out
}

/// Which commutator inequality is audited.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Hs,
    TraceFirst,
    TraceSecond,
    WeightedHs,
    AppendixHs,
}

impl BoundKind {
    /// All five variants.
    pub const ALL: [BoundKind; 5] =
        [BoundKind::Hs, BoundKind::TraceFirst, BoundKind::TraceSecond, BoundKind::WeightedHs, BoundKind::AppendixHs];

    /// Serialized name.
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Hs => "hs",
            BoundKind::TraceFirst => "trace_first",
            BoundKind::TraceSecond => "trace_second",
            BoundKind::WeightedHs => "weighted_hs",
            BoundKind::AppendixHs => "appendix_hs",
        }
    }
}

/// Both sides of one commutator inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundAudit {
    pub name: BoundKind,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub lambda: f64,
    pub mu: Option<f64>,
}

impl BoundAudit {
    fn new(name: BoundKind, lhs: f64, rhs: f64, lambda: f64, mu: Option<f64>) -> Self {
        BoundAudit { name, lhs, rhs, margin: rhs - lhs, lambda, mu }
    }
}

struct WeightedBlocks {
    lhs: f64,
    /// `b_i` restricted to rows `ō`, columns `o`.
    b: [Matrix; 3],
    /// `c_i` restricted to rows `o`, columns `ō`.
    c: [Matrix; 3],
    commutator_term: f64,
}

/// Commutator inequalities for `γ = 1_{H≤0}` and a fixed `A`, evaluated in the eigenbasis of `H`.
pub struct BoundAuditor<'a> {
    dec: &'a SpectralDecomposition,
    occupied: usize,
    a: Matrix,
    weight: Matrix,
    weighted: OnceLock<WeightedBlocks>,
}

fn block(m: &Matrix, rows: Range<usize>, cols: Range<usize>) -> Matrix {
    m.view((rows.start, cols.start), (rows.len(), cols.len())).into_owned()
}

impl<'a> BoundAuditor<'a> {
    /// Prepare audits for `A` with weight `m` (default `1 + |p̂|²`).
    ///
    /// `gamma` must be the projector `1_{H≤0}` of `dec`.
    pub fn new(dec: &'a SpectralDecomposition, gamma: &DensityOperator, a: &Matrix, weight: Option<&Matrix>) -> Result<Self> {
        let grid = *dec.grid();
        grid.ensure_same(gamma.grid())?;
        let n = grid.len();
        if a.shape() != (n, n) {
            return Err(LabError::GridMismatch(format!("operator shape {:?} on {n} points", a.shape())));
        }
        let occupied = dec.count_below(0.0);
        let vo = dec.eigenvectors().columns(0, occupied).into_owned();
        let projector = matmul(&vo, &vo.adjoint());
        if linalg::max_abs(&(&projector - gamma.matrix())) > 1e-8 {
            return Err(LabError::InvalidOperator("gamma is not the projector 1_{H≤0} of the decomposition".into()));
        }
        let m = match weight {
            Some(w) => {
                if w.shape() != (n, n) || !linalg::is_hermitian(w, 1e-10) {
                    return Err(LabError::InvalidOperator("weight must be a Hermitian grid operator".into()));
                }
                w.clone()
            }
            None => {
                let mut w = linalg::identity(n);
                for axis in 0..grid.dim() {
                    let p = momentum_operator(&grid, gamma.hbar(), axis)?;
                    w += matmul(&p, &p);
                }
                w
            }
        };
        Ok(BoundAuditor {
            dec,
            occupied,
            a: dec.to_eigenbasis(a),
            weight: m,
            weighted: OnceLock::new(),
        })
    }

    fn n(&self) -> usize {
        self.a.nrows()
    }

    fn lam(&self, k: usize) -> f64 {
        self.dec.eigenvalues()[k]
    }

    /// Entry of `Ã` or of `Ã*`.
    fn entry(&self, adjoint: bool, r: usize, c: usize) -> Complex64 {
        if adjoint {
            self.a[(c, r)].conj()
        } else {
            self.a[(r, c)]
        }
    }

    fn scaled(&self, adjoint: bool, rows: Range<usize>, cols: Range<usize>, f: impl Fn(usize, usize) -> f64) -> Matrix {
        Matrix::from_fn(rows.len(), cols.len(), |i, j| {
            let (r, c) = (rows.start + i, cols.start + j);
            self.entry(adjoint, r, c) * f(r, c)
        })
    }

    fn frobenius_sq(&self, adjoint: bool, rows: Range<usize>, cols: Range<usize>, f: impl Fn(usize, usize) -> f64) -> f64 {
        let mut s = 0.0;
        for r in rows {
            for c in cols.clone() {
                s += (self.entry(adjoint, r, c) * f(r, c)).norm_sqr();
            }
        }
        s
    }

    fn weighted_blocks(&self) -> &WeightedBlocks {
        self.weighted.get_or_init(|| {
            let n = self.n();
            let no = self.occupied;
            let o = 0..no;
            let u = no..n;
            let m = self.dec.to_eigenbasis(&self.weight);
            let a = &self.a;
            let a_star = a.adjoint();
            let x1 = block(a, u.clone(), o.clone());
            let x2 = block(a, o.clone(), u.clone());
            let lhs = linalg::trace(&matmul(&matmul(&x1, &block(&m, o.clone(), o.clone())), &x1.adjoint())).re
                + linalg::trace(&matmul(&matmul(&x2, &block(&m, u.clone(), u.clone())), &x2.adjoint())).re;
            let a_rows_o = block(a, o.clone(), 0..n);
            let b = [
                block(&a_star, u.clone(), o.clone()),
                matmul(&block(&m, u.clone(), 0..n), &a_rows_o.adjoint()),
                -block(&m, u.clone(), o.clone()),
            ];
            let c = [
                matmul(&a_rows_o, &block(&m, 0..n, u.clone())),
                block(a, o.clone(), u.clone()),
                matmul(&block(a, 0..n, o.clone()).adjoint(), &block(a, 0..n, u.clone())),
            ];
            let star_cols_o = a_rows_o.adjoint();
            let comm_cols_o = matmul(&a_star, &block(&m, 0..n, o.clone())) - matmul(&m, &star_cols_o);
            let commutator_term = linalg::trace(&matmul(&a_rows_o, &comm_cols_o)).re;
            WeightedBlocks { lhs, b, c, commutator_term }
        })
    }

    /// Evaluate one inequality at spectral cut `λ > 0`; `μ` is used by the second trace-class form.
    pub fn audit(&self, lambda: f64, mu: f64, which: BoundKind) -> Result<BoundAudit> {
        if !(lambda > 0.0) {
            return Err(LabError::InvalidParameter(format!("lambda {lambda} must be positive")));
        }
        let n = self.n();
        let no = self.occupied;
        let cut = self.dec.eigenvalues().partition_point(|&l| l < lambda).max(no);
        let o = 0..no;
        let ubar = no..n;
        let inner = no..cut;
        let upper = cut..n;
        let r1: f64 = (0..no).map(|j| 1.0 / (lambda - self.lam(j))).sum();
        let r2: f64 = (0..no).map(|j| (lambda - self.lam(j)).powi(-2)).sum();
        let gap = |k: usize, j: usize| self.lam(k) - self.lam(j);
        let gap_ratio = |k: usize, j: usize| (self.lam(k) - self.lam(j)) / (lambda - self.lam(j));
        let hs_lhs = self.frobenius_sq(false, ubar.clone(), o.clone(), |_, _| 1.0)
            + self.frobenius_sq(false, o.clone(), ubar.clone(), |_, _| 1.0);
        let audit = match which {
            BoundKind::Hs => {
                let mut rhs = 0.0;
                for adj in [false, true] {
                    let local = self.frobenius_sq(adj, o.clone(), inner.clone(), |_, _| 1.0);
                    let comm = linalg::operator_norm(&self.scaled(adj, o.clone(), ubar.clone(), |j, k| gap(k, j)));
                    rhs += local + comm * comm * r2;
                }
                BoundAudit::new(which, hs_lhs, rhs, lambda, None)
            }
            BoundKind::TraceFirst | BoundKind::TraceSecond => {
                let lhs = linalg::trace_norm(&block(&self.a, ubar.clone(), o.clone()))
                    + linalg::trace_norm(&block(&self.a, o.clone(), ubar.clone()));
                let mut rhs = 0.0;
                for adj in [false, true] {
                    let local = linalg::trace_norm(&self.scaled(adj, inner.clone(), o.clone(), |_, _| 1.0));
                    let far = if which == BoundKind::TraceFirst {
                        let two = linalg::operator_norm(&self.scaled(adj, ubar.clone(), o.clone(), |k, j| gap(k, j).powi(2)));
                        let one = linalg::operator_norm(&self.scaled(adj, ubar.clone(), o.clone(), gap));
                        (two * r2).min(one * r1)
                    } else {
                        if !(mu > self.dec.potential_floor()) || !(mu > 0.0) {
                            return Err(LabError::InvalidParameter(format!(
                                "mu {mu} must exceed ‖V₋‖_∞ = {}",
                                self.dec.potential_floor()
                            )));
                        }
                        let root = |k: usize| (self.lam(k) + mu).max(0.0).sqrt();
                        let frac = linalg::operator_norm(&self.scaled(adj, ubar.clone(), o.clone(), |k, j| {
                            gap(k, j) * (root(k) - root(j))
                        }));
                        2.0 * (lambda + mu).sqrt() * frac * r2
                    };
                    rhs += local + far;
                }
                let mu_used = (which == BoundKind::TraceSecond).then_some(mu);
                BoundAudit::new(which, lhs, rhs, lambda, mu_used)
            }
            BoundKind::WeightedHs => {
                let wb = self.weighted_blocks();
                let cut_rel = cut - no;
                let far_rows = cut_rel..(n - no);
                let mut rhs = wb.commutator_term;
                for i in 0..3 {
                    let (b, c) = (&wb.b[i], &wb.c[i]);
                    let mut nb = 0.0;
                    let mut nc = 0.0;
                    for kr in far_rows.clone() {
                        let k = kr + no;
                        for j in 0..no {
                            let w = gap_ratio(k, j);
                            nb += (b[(kr, j)] * w).norm_sqr();
                            nc += (c[(j, kr)] * w).norm_sqr();
                        }
                    }
                    rhs += nb.sqrt() * nc.sqrt();
                    for kr in 0..cut_rel {
                        for j in 0..no {
                            rhs += (b[(kr, j)] * c[(j, kr)]).re;
                        }
                    }
                }
                BoundAudit::new(which, wb.lhs, rhs, lambda, None)
            }
            BoundKind::AppendixHs => {
                let b: f64 = [true, false]
                    .iter()
                    .map(|&adj| self.frobenius_sq(adj, upper.clone(), o.clone(), gap_ratio).sqrt())
                    .sum();
                let d2 = self.frobenius_sq(false, o.clone(), inner.clone(), |_, _| 1.0)
                    + self.frobenius_sq(true, o.clone(), inner.clone(), |_, _| 1.0);
                let rhs = (b + (b * b + 4.0 * d2).sqrt()) / 2.0;
                BoundAudit::new(which, hs_lhs.sqrt(), rhs, lambda, None)
            }
        };
        Ok(audit)
    }

    /// All five inequalities at every `λ`.
    pub fn audit_all(&self, lambdas: &[f64], mu: f64) -> Result<Vec<BoundAudit>> {
        let mut out = Vec::with_capacity(lambdas.len() * 5);
        for &lambda in lambdas {
            for which in BoundKind::ALL {
                out.push(self.audit(lambda, mu, which)?);
            }
        }
        Ok(out)
    }
}

/// Evaluate one commutator inequality for `γ = 1_{H≤0}`.
pub fn commutator_bound_audit(
    dec: &SpectralDecomposition,
    gamma: &DensityOperator,
    a: &Matrix,
    lambda: f64,
    mu: f64,
    which: BoundKind,
) -> Result<BoundAudit> {
    BoundAuditor::new(dec, gamma, a, None)?.audit(lambda, mu, which)
}

/// Both sides of the fractional commutator estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalCommutator {
    pub lhs: f64,
    pub rhs: f64,
}

/// `‖(1-γ)[(H+μ)^{1/2}, φ]γ‖` against `2ħ(‖∇φ γ‖ + μ^{-1/2}‖∇φ·p̂ γ‖)` for `γ = 1_{H≤0}`.
pub fn fractional_commutator(
    dec: &SpectralDecomposition,
    phi: &GridFunction<f64>,
    mu: f64,
    hbar: f64,
) -> Result<FractionalCommutator> {
    let grid = *dec.grid();
    grid.ensure_same(phi.grid())?;
    if !(mu > 0.0) || !(mu > dec.potential_floor()) {
        return Err(LabError::InvalidParameter(format!(
            "mu {mu} must exceed ‖V₋‖_∞ = {}",
            dec.potential_floor()
        )));
    }
    let n = grid.len();
    let no = dec.count_below(0.0);
    let phi_tilde = dec.to_eigenbasis(&linalg::diagonal(phi.values()));
    let root = |k: usize| (dec.eigenvalues()[k] + mu).max(0.0).sqrt();
    let comm = Matrix::from_fn(n - no, no, |i, j| phi_tilde[(i + no, j)] * (root(i + no) - root(j)));
    let lhs = linalg::operator_norm(&comm);
    let vo = dec.eigenvectors().columns(0, no).into_owned();
    let mut stacked = Matrix::zeros(n * grid.dim(), no);
    let mut flux = Matrix::zeros(n, no);
    for axis in 0..grid.dim() {
        let g = spectral_derivative(phi, axis)?;
        let gv = linalg::diagonal(g.values());
        stacked.rows_mut(axis * n, n).copy_from(&matmul(&gv, &vo));
        flux += matmul(&gv, &matmul(&momentum_operator(&grid, hbar, axis)?, &vo));
    }
    let rhs = 2.0 * hbar * (linalg::operator_norm(&stacked) + linalg::operator_norm(&flux) / mu.sqrt());
    Ok(FractionalCommutator { lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_core::make_grid;
    use crate::operators::{position_operator, KineticScheme, Potential};
    use crate::spectral::{diagonalize_schrodinger, spectral_projector, DensityTag};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
        Matrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn harmonic(hbar: f64, n: usize) -> (SpectralDecomposition, DensityOperator) {
        let g = make_grid(1, n, 6.0).unwrap();
        let dec = diagonalize_schrodinger(&g, &Potential::shifted_harmonic(1.0), hbar, KineticScheme::Spectral).unwrap();
        let gamma = spectral_projector(&dec, f64::NEG_INFINITY, 0.0, hbar).unwrap();
        (dec, gamma)
    }

    #[test]
    fn trivial_norms() {
        let hbar = 0.1;
        let h = 2.0 * PI * hbar;
        let mut p = Matrix::zeros(6, 6);
        p[(2, 2)] = Complex64::new(1.0, 0.0);
        for exponent in [1.0, 2.0, 3.5] {
            assert!((schatten_norm(&p, exponent, hbar, 1).unwrap() - h.powf(1.0 / exponent)).abs() < 1e-14);
        }
        assert_eq!(schatten_norm(&p, f64::INFINITY, hbar, 1).unwrap(), 1.0);
        let id = linalg::identity(8);
        assert!((schatten_norm(&id, 1.0, hbar, 1).unwrap() - 8.0 * h).abs() < 1e-13);
        assert!(schatten_norm(&id, 0.5, hbar, 1).is_err());
    }

    #[test]
    fn singular_values_match_gram_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 5);
        let gram = matmul(&a.adjoint(), &a);
        let oracle: Vec<f64> = linalg::hermitian_eigenvalues(&gram).into_iter().map(|v| v.max(0.0).sqrt()).collect();
        for p in [1.0, 2.0, 4.0] {
            let expected = schatten_from_singular_values(&oracle, p, 0.3, 1).unwrap();
            assert!((schatten_norm(&a, p, 0.3, 1).unwrap() - expected).abs() < 1e-10 * expected);
        }
    }

    #[test]
    fn holder_interpolation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 7);
            let two = schatten_norm(&a, 2.0, 0.2, 1).unwrap();
            let inf = schatten_norm(&a, f64::INFINITY, 0.2, 1).unwrap();
            for p in [2.0, 3.0, 6.0, 20.0] {
                let lhs = schatten_norm(&a, p, 0.2, 1).unwrap();
                assert!(lhs <= two.powf(2.0 / p) * inf.powf(1.0 - 2.0 / p) + 1e-9);
            }
        }
    }

    #[test]
    fn gradients_trivial_cases() {
        let g = make_grid(1, 32, 3.0).unwrap();
        let phi = GridFunction::from_fn(g, |x| 0.5 + 0.4 * (PI * x[0] / 3.0).cos());
        let gamma = DensityOperator::new(g, 0.1, linalg::diagonal(phi.values()), DensityTag::General).unwrap();
        let grads = quantum_gradients(&gamma).unwrap();
        assert_eq!(linalg::max_abs(&grads.dxi[0]), 0.0);
        let id = quantum_gradients(&DensityOperator::identity(g, 0.1)).unwrap();
        assert!(linalg::max_abs(&id.dx[0]) < 1e-12);
        assert_eq!(linalg::max_abs(&id.dxi[0]), 0.0);
    }

    #[test]
    fn ladder_oracle() {
        let (_, gamma) = harmonic(0.1, 192);
        let grads = quantum_gradients(&gamma).unwrap();
        let measured = grads.dxi_norm(2.0, 0.1, 1).unwrap().powi(2);
        // Tr|[x, γ]|² = ħN for H = p² + x², so the scaled norm is hN/ħ = 2πN.
        assert!((measured - 2.0 * PI * 5.0).abs() < 1e-8, "{measured}");
        let dx = grads.dx_norm(2.0, 0.1, 1).unwrap().powi(2);
        assert!((dx - 2.0 * PI * 5.0).abs() < 1e-8, "{dx}");
    }

    #[test]
    fn shifts_are_unitary() {
        let g = make_grid(1, 64, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 64);
        let zero = phase_space_shift(&a, &g, &ShiftVector::zero(1), 0.1, ShiftMode::GridAligned).unwrap();
        assert_eq!(zero, a);
        let z = ShiftVector::new(vec![3.0 * g.spacing()], vec![0.37]).unwrap();
        for mode in [ShiftMode::GridAligned, ShiftMode::FourierInterpolated] {
            let t = phase_space_shift(&a, &g, &z, 0.1, mode).unwrap();
            for p in [1.0, 2.0, f64::INFINITY] {
                let x = schatten_norm(&a, p, 0.1, 1).unwrap();
                assert!((schatten_norm(&t, p, 0.1, 1).unwrap() - x).abs() < 1e-10 * x);
            }
        }
        let off = ShiftVector::new(vec![0.3 * g.spacing()], vec![0.0]).unwrap();
        assert!(phase_space_shift(&a, &g, &off, 0.1, ShiftMode::GridAligned).is_err());
        assert!(phase_space_shift(&a, &g, &off, 0.1, ShiftMode::FourierInterpolated).is_ok());
    }

    #[test]
    fn low_rank_difference_matches_dense() {
        let (_, gamma) = harmonic(0.1, 96);
        let z = ShiftVector::new(vec![0.25], vec![0.1]).unwrap();
        let dense = phase_space_shift(gamma.matrix(), gamma.grid(), &z, 0.1, ShiftMode::GridAligned).unwrap() - gamma.matrix();
        for p in [1.0, 2.0, f64::INFINITY] {
            let expected = schatten_norm(&dense, p, 0.1, 1).unwrap();
            let fast = translated_difference_norm(&gamma, &z, p, ShiftMode::GridAligned).unwrap();
            assert!((fast - expected).abs() < 1e-9 * expected.max(1e-3), "p={p}: {fast} vs {expected}");
        }
    }

    #[test]
    fn besov_trivial_cases() {
        let g = make_grid(1, 32, 4.0).unwrap();
        let samples = dyadic_samples(1, 1..4);
        for gamma in [DensityOperator::zero(g, 0.1), DensityOperator::identity(g, 0.1)] {
            let b = besov_seminorm(&gamma, 2.0, 0.5, &samples, ShiftMode::FourierInterpolated).unwrap();
            assert!(b.value < 1e-12);
        }
        assert!(besov_seminorm(&DensityOperator::zero(g, 0.1), 2.0, 0.5, &[], ShiftMode::GridAligned).is_err());
    }

    #[test]
    fn translation_gradient_bound() {
        let (_, gamma) = harmonic(0.1, 96);
        let grads = quantum_gradients(&gamma).unwrap();
        let d = grads.dx_norm(1.0, 0.1, 1).unwrap() + grads.dxi_norm(1.0, 0.1, 1).unwrap();
        for (x0, xi0) in [(0.125, 0.0), (0.5, 0.2), (0.0, 0.3), (1.0, -0.4)] {
            let z = ShiftVector::new(vec![x0], vec![xi0]).unwrap();
            let lhs = translated_difference_norm(&gamma, &z, 1.0, ShiftMode::GridAligned).unwrap();
            assert!(lhs <= d * z.norm() * (1.0 + 1e-9), "{lhs} > {}", d * z.norm());
        }
    }

    #[test]
    fn bound_audits_harmonic() {
        let hbar = 0.1;
        let (dec, gamma) = harmonic(hbar, 96);
        let g = *dec.grid();
        let id = BoundAuditor::new(&dec, &gamma, &linalg::identity(g.len()), None).unwrap();
        for which in BoundKind::ALL {
            let a = id.audit(hbar, 2.0, which).unwrap();
            assert!(a.lhs.abs() < 1e-10 && a.margin >= 0.0, "{a:?}");
        }
        let ops = [
            position_operator(&g, 0).unwrap(),
            momentum_operator(&g, hbar, 0).unwrap(),
            translation_unitary(&g, &ShiftVector::new(vec![0.25], vec![0.1]).unwrap(), hbar, ShiftMode::GridAligned).unwrap(),
        ];
        for a in &ops {
            let auditor = BoundAuditor::new(&dec, &gamma, a, None).unwrap();
            for audit in auditor.audit_all(&[hbar, hbar.sqrt(), 0.25], 2.0).unwrap() {
                assert!(audit.margin >= 0.0 && audit.lhs >= 0.0, "{audit:?}");
            }
        }
        assert!(id.audit(0.0, 2.0, BoundKind::Hs).is_err());
        assert!(id.audit(hbar, 0.5, BoundKind::TraceSecond).is_err());
    }

    #[test]
    fn weighted_identity_is_exact_without_far_block() {
        let hbar = 0.2;
        let (dec, gamma) = harmonic(hbar, 48);
        let a = position_operator(dec.grid(), 0).unwrap();
        let auditor = BoundAuditor::new(&dec, &gamma, &a, None).unwrap();
        let top = dec.eigenvalues().last().unwrap() + 1.0;
        let audit = auditor.audit(top, 2.0, BoundKind::WeightedHs).unwrap();
        assert!(audit.margin.abs() < 1e-9 * audit.lhs, "{audit:?}");
        let hs = auditor.audit(top, 2.0, BoundKind::Hs).unwrap();
        assert!(hs.margin >= 0.0);
    }

    #[test]
    fn fractional_commutator_examples() {
        let hbar = 0.1;
        let (dec, _) = harmonic(hbar, 96);
        let g = *dec.grid();
        let constant = GridFunction::constant(g, 1.5);
        assert!(fractional_commutator(&dec, &constant, 2.0, hbar).unwrap().lhs < 1e-10);
        let l = g.half_length();
        let windowed = GridFunction::from_fn(g, |x| l / PI * (PI * x[0] / l).sin());
        let r = fractional_commutator(&dec, &windowed, 2.0, hbar).unwrap();
        assert!(r.lhs > 0.0 && r.lhs <= r.rhs, "{r:?}");
        assert!(fractional_commutator(&dec, &windowed, 0.0, hbar).is_err());
    }
}
