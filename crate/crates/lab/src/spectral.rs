//! Diagonalization, spectral projectors, eigenvalue counting and a-priori estimate audits.

use crate::grid_core::{Grid, GridFunction};
use crate::linalg::{self, matmul};
use crate::operators::{build_hamiltonian, kinetic_matrix, momentum_operator, HermitianOperator, KineticScheme, Potential};
use crate::{planck_volume, LabError, Matrix, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Half-width of the energy window around the Fermi level used by the counting audits.
pub const EPS0: f64 = 0.25;

/// Eigen-decomposition of a Hermitian operator with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    operator: HermitianOperator,
    eigenvalues: Vec<f64>,
    eigenvectors: Matrix,
    norm: f64,
    potential_floor: Option<f64>,
}

impl SpectralDecomposition {
    /// Source operator.
    pub fn operator(&self) -> &HermitianOperator {
        &self.operator
    }

    /// Grid.
    pub fn grid(&self) -> &Grid {
        self.operator.grid()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns.
    pub fn eigenvectors(&self) -> &Matrix {
        &self.eigenvectors
    }

    /// Operator norm `max|λ_j|`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Record `‖V₋‖_∞` of the potential that produced the operator.
    pub fn with_potential_floor(mut self, v_minus_sup: f64) -> Self {
        self.potential_floor = Some(v_minus_sup.max(0.0));
        self
    }

    /// `‖V₋‖_∞` when recorded, otherwise the lower bound `max(0, -λ_min)`.
    pub fn potential_floor(&self) -> f64 {
        self.potential_floor
            .unwrap_or_else(|| self.eigenvalues.first().map_or(0.0, |&l| (-l).max(0.0)))
    }

    /// Endpoint tolerance `1e-10·max(1, ‖H‖)` for spectral membership tests.
    pub fn endpoint_tolerance(&self) -> f64 {
        1e-10 * self.norm.max(1.0)
    }

    /// Indices `j` with `a - ε ≤ λ_j ≤ b + ε`.
    pub fn indices_in(&self, a: f64, b: f64) -> Vec<usize> {
        let eps = self.endpoint_tolerance();
        (0..self.eigenvalues.len())
            .filter(|&j| self.eigenvalues[j] >= a - eps && self.eigenvalues[j] <= b + eps)
            .collect()
    }

    /// Number of eigenvalues `≤ e` (with the endpoint tolerance).
    pub fn count_below(&self, e: f64) -> usize {
        let eps = self.endpoint_tolerance();
        self.eigenvalues.iter().filter(|&&l| l <= e + eps).count()
    }

    /// `f(H) = Σ f(λ_j) v_j v_j*`.
    pub fn function(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let w: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        linalg::spectral_synthesis(&w, &self.eigenvectors)
    }

    /// Columns `v_j` for the given indices.
    pub fn columns(&self, indices: &[usize]) -> Matrix {
        let n = self.eigenvectors.nrows();
        Matrix::from_fn(n, indices.len(), |r, c| self.eigenvectors[(r, indices[c])])
    }

    /// `V* A V`, the matrix of `A` in the eigenbasis.
    pub fn to_eigenbasis(&self, a: &Matrix) -> Matrix {
        matmul(&self.eigenvectors.adjoint(), &matmul(a, &self.eigenvectors))
    }

    /// `V B V*`, back from the eigenbasis.
    pub fn from_eigenbasis(&self, b: &Matrix) -> Matrix {
        matmul(&self.eigenvectors, &matmul(b, &self.eigenvectors.adjoint()))
    }

    /// Largest residual ratio `‖Hv_j - λ_j v_j‖ / (|λ_j| + ‖H‖)`.
    pub fn residual(&self) -> f64 {
        let hv = matmul(self.operator.matrix(), &self.eigenvectors);
        (0..self.eigenvalues.len())
            .map(|j| {
                let r = (hv.column(j) - self.eigenvectors.column(j) * Complex64::new(self.eigenvalues[j], 0.0)).norm();
                r / (self.eigenvalues[j].abs() + self.norm).max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }
}

/// Full eigen-decomposition with ascending eigenvalues and stable tie order.
pub fn diagonalize(h: &HermitianOperator) -> Result<SpectralDecomposition> {
    if !linalg::is_hermitian(h.matrix(), 1e-10) {
        return Err(LabError::InvalidOperator("matrix is not Hermitian".into()));
    }
    let (eigenvalues, eigenvectors) = linalg::hermitian_eigen(h.matrix());
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(LabError::Numerical("eigen solver produced non-finite values".into()));
    }
    let norm = eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(SpectralDecomposition { operator: h.clone(), eigenvalues, eigenvectors, norm, potential_floor: None })
}

/// Build and diagonalize `H = -ħ²Δ + V`, recording `‖V₋‖_∞`.
pub fn diagonalize_schrodinger(
    grid: &Grid,
    potential: &Potential,
    hbar: f64,
    scheme: KineticScheme,
) -> Result<SpectralDecomposition> {
    let h = build_hamiltonian(grid, potential, hbar, scheme)?;
    let v_minus = potential.sample(grid)?.values().iter().fold(0.0_f64, |m, &v| m.max(-v));
    Ok(diagonalize(&h)?.with_potential_floor(v_minus))
}

/// Provenance of a density operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityTag {
    Projector,
    Hartree,
    Smoothed,
    General,
}

/// Operator `0 ≤ γ ≤ 1` on a grid.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    grid: Grid,
    hbar: f64,
    matrix: Matrix,
    tag: DensityTag,
}

impl DensityOperator {
    /// Validate Hermitian symmetry, the spectral bounds and, for projectors, idempotency.
    pub fn new(grid: Grid, hbar: f64, matrix: Matrix, tag: DensityTag) -> Result<Self> {
        if !(hbar > 0.0) {
            return Err(LabError::InvalidParameter(format!("hbar {hbar} must be positive")));
        }
        let op = HermitianOperator::new(grid, matrix, Some(hbar))?;
        let ev = linalg::hermitian_eigenvalues(op.matrix());
        if ev.first().is_some_and(|&l| l < -1e-10) || ev.last().is_some_and(|&l| l > 1.0 + 1e-10) {
            return Err(LabError::InvalidOperator(format!(
                "spectrum [{:e}, {:e}] outside [0, 1]",
                ev.first().unwrap(),
                ev.last().unwrap()
            )));
        }
        let matrix = op.into_matrix();
        if tag == DensityTag::Projector {
            let defect = linalg::max_abs(&(matmul(&matrix, &matrix) - &matrix));
            if defect > 1e-8 {
                return Err(LabError::InvalidOperator(format!("projector defect {defect:e}")));
            }
        }
        Ok(DensityOperator { grid, hbar, matrix, tag })
    }

    pub(crate) fn from_parts(grid: Grid, hbar: f64, matrix: Matrix, tag: DensityTag) -> Self {
        DensityOperator { grid, hbar, matrix, tag }
    }

    /// Zero operator.
    pub fn zero(grid: Grid, hbar: f64) -> Self {
        DensityOperator::from_parts(grid, hbar, Matrix::zeros(grid.len(), grid.len()), DensityTag::Projector)
    }

    /// Identity operator.
    pub fn identity(grid: Grid, hbar: f64) -> Self {
        DensityOperator::from_parts(grid, hbar, linalg::identity(grid.len()), DensityTag::Projector)
    }

    /// Grid.
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Semiclassical parameter.
    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Matrix.
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Provenance tag.
    pub fn tag(&self) -> DensityTag {
        self.tag
    }

    /// `h^d Tr γ`.
    pub fn scaled_trace(&self) -> f64 {
        planck_volume(self.hbar, self.grid.dim()) * linalg::trace(&self.matrix).re
    }

    /// Density `ϱ_γ(x) = h^d γ(x, x)`.
    pub fn density(&self) -> GridFunction<f64> {
        let scale = planck_volume(self.hbar, self.grid.dim()) / self.grid.cell_volume();
        let values = self.matrix.diagonal().iter().map(|z| z.re * scale).collect();
        GridFunction::new(self.grid, values).expect("diagonal has grid length")
    }

    /// Kinetic density `ϱ_{p·γp}(x) = h^d Σ_a (p̂_a γ p̂_a)(x, x)`, evaluated as the
    /// weighted sum of squares `h^d Σ_j w_j |p̂_a u_j|²` over the eigenpairs of `γ`.
    pub fn kinetic_density(&self) -> Result<GridFunction<f64>> {
        let (weights, vectors) = linalg::hermitian_eigen(&self.matrix);
        let keep: Vec<usize> = (0..weights.len()).filter(|&j| weights[j] > 1e-14).collect();
        let scale = planck_volume(self.hbar, self.grid.dim()) / self.grid.cell_volume();
        let mut out = vec![0.0; self.grid.len()];
        if keep.is_empty() {
            return GridFunction::new(self.grid, out);
        }
        let u = Matrix::from_fn(self.grid.len(), keep.len(), |r, c| vectors[(r, keep[c])]);
        for axis in 0..self.grid.dim() {
            let pu = matmul(&momentum_operator(&self.grid, self.hbar, axis)?, &u);
            for (c, &j) in keep.iter().enumerate() {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += weights[j] * pu[(i, c)].norm_sqr() * scale;
                }
            }
        }
        GridFunction::new(self.grid, out)
    }
}

/// `1_{[a,b]}(H)` with inclusive endpoints; `a = -∞` allowed.
pub fn spectral_projector(dec: &SpectralDecomposition, a: f64, b: f64, hbar: f64) -> Result<DensityOperator> {
    if a > b || a.is_nan() || b.is_nan() {
        return Err(LabError::InvalidParameter(format!("empty interval [{a}, {b}]")));
    }
    if !(hbar > 0.0) {
        return Err(LabError::InvalidParameter(format!("hbar {hbar} must be positive")));
    }
    log::debug!("spectral projector endpoint tolerance {:e}", dec.endpoint_tolerance());
    let idx = dec.indices_in(a, b);
    let v = dec.columns(&idx);
    let matrix = matmul(&v, &v.adjoint());
    Ok(DensityOperator::from_parts(*dec.grid(), hbar, matrix, DensityTag::Projector))
}

/// Volume factor `ω_d` of the unit ball.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => {
            let d = dim as f64;
            std::f64::consts::PI.powf(d / 2.0) / gamma_half_integer(dim + 2)
        }
    }
}

fn gamma_half_integer(twice: usize) -> f64 {
    // Γ(twice/2)
    if twice.is_multiple_of(2) {
        (1..twice / 2).map(|k| k as f64).product()
    } else {
        let mut g = std::f64::consts::PI.sqrt();
        let mut x = 0.5;
        while (2.0 * x) < twice as f64 - 0.5 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Classical phase-space volume `ω_d ∫ (E - V)_+^{d/2} dx` over the box.
///
/// In one dimension with an analytic potential the turning points are located by
/// bisection and each allowed interval is integrated with a cosine substitution,
/// which is spectrally accurate for simple turning points. Otherwise the grid
/// Riemann sum is used.
pub fn classical_phase_volume(grid: &Grid, potential: &Potential, energy: f64) -> Result<f64> {
    let d = grid.dim();
    if d == 1 && potential.value(&[0.0]).is_some() {
        let s = |x: f64| energy - potential.value(&[x]).unwrap();
        let l = grid.half_length();
        let m = 8192;
        let xs: Vec<f64> = (0..=m).map(|i| -l + 2.0 * l * i as f64 / m as f64).collect();
        let mut total = 0.0;
        let mut i = 0;
        while i < m {
            if s(xs[i]) <= 0.0 && s(xs[i + 1]) <= 0.0 {
                i += 1;
                continue;
            }
            let left = if s(xs[i]) > 0.0 { if i == 0 { -l } else { bisect(&s, xs[i - 1], xs[i]) } } else { bisect(&s, xs[i], xs[i + 1]) };
            let mut j = i + 1;
            while j < m && s(xs[j]) > 0.0 {
                j += 1;
            }
            let right = if s(xs[j]) > 0.0 { l } else { bisect(&s, xs[j - 1], xs[j]) };
            total += cosine_quadrature(&s, left, right, 4096);
            i = j;
        }
        return Ok(2.0 * total);
    }
    let v = potential.sample(grid)?;
    let omega = unit_ball_volume(d);
    let sum: f64 = v.values().iter().map(|&vi| (energy - vi).max(0.0).powf(d as f64 / 2.0)).sum();
    Ok(omega * sum * grid.cell_volume())
}

/// Sign-change root of `s` in `[a, b]` by bisection, returning the boundary of `{s > 0}`.
fn bisect(s: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let positive_at_a = s(a) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (s(mid) > 0.0) == positive_at_a {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= f64::EPSILON * a.abs().max(b.abs()).max(1e-300) {
            break;
        }
    }
    0.5 * (a + b)
}

/// `∫_a^b √(s(x))_+ dx` with `x = c - r cos θ` and the trapezoid rule in `θ`.
fn cosine_quadrature(s: &impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let h = std::f64::consts::PI / m as f64;
    (1..m)
        .map(|k| {
            let t = k as f64 * h;
            s(c - r * t.cos()).max(0.0).sqrt() * r * t.sin()
        })
        .sum::<f64>()
        * h
}

/// Weyl-law comparison between the quantum count and the classical phase volume.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylAudit {
    pub quantum: f64,
    pub classical: f64,
    pub error: f64,
}

/// `h^d·rank 1_{H≤E}` versus `ω_d ∫(E-V)_+^{d/2}` with the spectral Hamiltonian on `grid`.
pub fn weyl_audit(grid: &Grid, potential: &Potential, hbar: f64, energy: f64) -> Result<WeylAudit> {
    let h = build_hamiltonian(grid, potential, hbar, KineticScheme::Spectral)?;
    let dec = diagonalize(&h)?;
    weyl_audit_decomposed(&dec, potential, hbar, energy)
}

/// [`weyl_audit`] on an existing decomposition of `H` for the same potential.
pub fn weyl_audit_decomposed(
    dec: &SpectralDecomposition,
    potential: &Potential,
    hbar: f64,
    energy: f64,
) -> Result<WeylAudit> {
    let grid = dec.grid();
    let quantum = planck_volume(hbar, grid.dim()) * dec.count_below(energy) as f64;
    let classical = classical_phase_volume(grid, potential, energy)?;
    Ok(WeylAudit { quantum, classical, error: (quantum - classical).abs() })
}

/// Scaled eigenvalue count in a window against the budget `|b-a| + ħ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalCountAudit {
    pub count_scaled: f64,
    pub budget: f64,
    pub ratio: f64,
}

/// `h^d #{λ_j ∈ [a, b]}` and its ratio to `|b-a| + ħ`.
pub fn local_count_audit(dec: &SpectralDecomposition, a: f64, b: f64, hbar: f64) -> Result<LocalCountAudit> {
    if a > b {
        return Err(LabError::InvalidParameter(format!("empty interval [{a}, {b}]")));
    }
    let count = dec.indices_in(a, b).len() as f64;
    let count_scaled = planck_volume(hbar, dec.grid().dim()) * count;
    let budget = (b - a).abs() + hbar;
    Ok(LocalCountAudit { count_scaled, budget, ratio: count_scaled / budget })
}

/// Resolvent trace sum and its normalization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventAudit {
    pub value: f64,
    pub normalized: f64,
}

/// `h^d Σ_{λ_j ≤ 0} (λ - λ_j)^{-order}`, normalized by `λ` (order 2) or `1 + ln(1 + 1/λ)` (order 1).
pub fn resolvent_audit(dec: &SpectralDecomposition, lambda: f64, hbar: f64, order: u32) -> Result<ResolventAudit> {
    if lambda < hbar * (1.0 - 1e-12) {
        return Err(LabError::InvalidParameter(format!("lambda {lambda} below hbar {hbar}")));
    }
    if order != 1 && order != 2 {
        return Err(LabError::InvalidParameter(format!("resolvent order {order} not in {{1, 2}}")));
    }
    let occupied = dec.count_below(0.0);
    let sum: f64 = dec.eigenvalues()[..occupied].iter().map(|&l| (lambda - l).powi(-(order as i32))).sum();
    let value = planck_volume(hbar, dec.grid().dim()) * sum;
    let normalized = if order == 2 { lambda * value } else { value / (1.0 + (1.0 + 1.0 / lambda).ln()) };
    Ok(ResolventAudit { value, normalized })
}

/// Exponentially weighted masses outside the fattened allowed region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgmonAudit {
    pub weighted_mass: f64,
    pub budget: f64,
    pub gradient_weighted_mass: f64,
    pub gradient_budget: f64,
}

/// Euclidean distance from every grid point to `{V ≤ level}` (brute force).
pub fn sublevel_distance(grid: &Grid, potential: &Potential, level: f64) -> Result<GridFunction<f64>> {
    let v = potential.sample(grid)?;
    let inside: Vec<Vec<f64>> = (0..grid.len()).filter(|&i| v.values()[i] <= level).map(|i| grid.point(i)).collect();
    if inside.is_empty() {
        return Err(LabError::InvalidParameter(format!("sublevel set {{V <= {level}}} is empty on the grid")));
    }
    Ok(GridFunction::from_fn(*grid, |x| {
        inside
            .iter()
            .map(|y| y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }))
}

/// Weighted masses `∫_{d₁ ≥ 1} e^{d₁/2ħ} ϱ` and `∫_{d₁ ≥ 1} e^{d₁/2ħ} ϱ_{p·γp}` with their budgets
/// `(4/3)e^{-1/2ħ}∫ϱV₋` and `e^{1-1/2ħ}∫ϱV₋`, where `d₁ = dist(x, {V ≤ 1})`.
///
/// Densities come from the dense matrix of `γ`, so tail values carry the absolute
/// rounding error of the eigen solver; see [`agmon_audit_tail_resolved`] for small `ħ`.
pub fn agmon_audit(gamma: &DensityOperator, potential: &Potential) -> Result<AgmonAudit> {
    let rho = gamma.density();
    let krho = gamma.kinetic_density()?;
    agmon_from_densities(gamma.hbar(), &rho, &krho, potential)
}

/// [`agmon_audit`] for a one-dimensional `fd2` Hamiltonian, with the classically forbidden
/// tails of every occupied eigenvector rebuilt by the inward continued-fraction recursion
/// `ρ_{i-1} = 1/(a_i - ρ_i)`, `a_i = 2 + Δx²(V_i - λ)/ħ²`. The recursion is stable where
/// `V > λ` and gives tail values with relative rather than absolute accuracy. Gradients are
/// forward differences, matching the `fd2` quadratic form.
pub fn agmon_audit_tail_resolved(dec: &SpectralDecomposition, potential: &Potential, hbar: f64) -> Result<AgmonAudit> {
    let grid = *dec.grid();
    if grid.dim() != 1 {
        return Err(LabError::InvalidParameter("tail reconstruction is one-dimensional".into()));
    }
    let n = grid.n();
    let dx = grid.spacing();
    let c = hbar * hbar / (dx * dx);
    let v = potential.sample(&grid)?;
    let scale = planck_volume(hbar, 1) / dx;
    let mut rho = vec![0.0; n];
    let mut krho = vec![0.0; n];
    for j in 0..dec.count_below(0.0) {
        let lam = dec.eigenvalues()[j];
        let mut psi: Vec<f64> = (0..n).map(|i| dec.eigenvectors()[(i, j)].re).collect();
        let a: Vec<f64> = (0..n).map(|i| 2.0 + (v.values()[i] - lam) / c).collect();
        let allowed: Vec<usize> = (0..n).filter(|&i| v.values()[i] <= lam).collect();
        let (first, last) = match (allowed.first(), allowed.last()) {
            (Some(&f), Some(&l)) => (f, l),
            _ => return Err(LabError::Numerical(format!("eigenvalue {lam} below the potential minimum"))),
        };
        let mut diff: Vec<f64> = (0..n).map(|i| if i + 1 < n { psi[i + 1] - psi[i] } else { 0.0 }).collect();
        let m_right = (last + 2).min(n - 1);
        let mut ratio = vec![0.0; n];
        for i in ((m_right + 1)..n).rev() {
            let next = if i + 1 < n { ratio[i] } else { 0.0 };
            ratio[i - 1] = 1.0 / (a[i] - next);
        }
        for i in m_right..n - 1 {
            psi[i + 1] = ratio[i] * psi[i];
            diff[i] = psi[i] * (ratio[i] - 1.0);
        }
        let m_left = first.saturating_sub(2);
        let mut back = vec![0.0; n];
        for i in 0..m_left {
            let prev = if i > 0 { back[i] } else { 0.0 };
            back[i + 1] = 1.0 / (a[i] - prev);
        }
        for i in (1..=m_left).rev() {
            psi[i - 1] = back[i] * psi[i];
            diff[i - 1] = psi[i] * (1.0 - back[i]);
        }
        for i in 0..n {
            rho[i] += scale * psi[i] * psi[i];
            krho[i] += scale * hbar * hbar * diff[i] * diff[i] / (dx * dx);
        }
    }
    let rho = GridFunction::new(grid, rho)?;
    let krho = GridFunction::new(grid, krho)?;
    agmon_from_densities(hbar, &rho, &krho, potential)
}

fn agmon_from_densities(
    hbar: f64,
    rho: &GridFunction<f64>,
    krho: &GridFunction<f64>,
    potential: &Potential,
) -> Result<AgmonAudit> {
    let grid = rho.grid();
    let radius = 1.0;
    let dist = sublevel_distance(grid, potential, 1.0)?;
    let v = potential.sample(grid)?;
    let dv = grid.cell_volume();
    let mut weighted = 0.0;
    let mut gradient_weighted = 0.0;
    let mut bulk = 0.0;
    for i in 0..grid.len() {
        let di = dist.values()[i];
        if di >= radius {
            let w = (di / (2.0 * hbar)).exp();
            weighted += w * rho.values()[i] * dv;
            gradient_weighted += w * krho.values()[i] * dv;
        }
        bulk += rho.values()[i] * (-v.values()[i]).max(0.0) * dv;
    }
    Ok(AgmonAudit {
        weighted_mass: weighted,
        budget: 4.0 / 3.0 * (-radius / (2.0 * hbar)).exp() * bulk,
        gradient_weighted_mass: gradient_weighted,
        gradient_budget: (1.0 - radius / (2.0 * hbar)).exp() * bulk,
    })
}

/// Lieb–Thirring, CLR and `L^∞` density diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralInequalityAudit {
    pub lt_lhs: f64,
    pub lt_rhs: f64,
    pub clr_lhs: f64,
    pub clr_rhs: f64,
    pub linf_ratio: f64,
}

/// `h^d Tr(|p̂|²γ)` vs `∫ϱV₋`, `‖ϱ‖₁` vs `∫V₋^{d/2}`, and `‖ϱ‖_∞/(1 + ‖V₋‖_∞ + ‖Vγ‖)`.
/// The kinetic operator uses `scheme`, which should match the Hamiltonian defining `γ`.
pub fn spectral_inequality_audit(
    gamma: &DensityOperator,
    potential: &Potential,
    scheme: KineticScheme,
) -> Result<SpectralInequalityAudit> {
    let grid = gamma.grid();
    let hbar = gamma.hbar();
    let d = grid.dim();
    let t = linalg::from_real(&kinetic_matrix(grid, hbar, scheme)?);
    let lt_lhs = planck_volume(hbar, d) * linalg::trace_product(&t, gamma.matrix()).re;
    let v = potential.sample(grid)?;
    let rho = gamma.density();
    let dv = grid.cell_volume();
    let vminus: Vec<f64> = v.values().iter().map(|&x| (-x).max(0.0)).collect();
    let lt_rhs: f64 = rho.values().iter().zip(&vminus).map(|(r, w)| r * w).sum::<f64>() * dv;
    let clr_lhs = rho.lp_norm(1.0);
    let clr_rhs: f64 = vminus.iter().map(|w| w.powf(d as f64 / 2.0)).sum::<f64>() * dv;
    let vgamma = matmul(&linalg::diagonal(v.values()), gamma.matrix());
    let vmax = vminus.iter().fold(0.0_f64, |m, &x| m.max(x));
    let linf_ratio = rho.max_abs() / (1.0 + vmax + linalg::operator_norm(&vgamma));
    Ok(SpectralInequalityAudit { lt_lhs, lt_rhs, clr_lhs, clr_rhs, linf_ratio })
}

/// Both sides of `Tr H(P-γ) = Tr|H||P-γ|² + Tr|H|P(1-P)` with `γ = 1_{H≤0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityAudit {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Quantitative variational identity evaluated in the eigenbasis of `H`.
pub fn variational_identity_audit(h: &HermitianOperator, p: &DensityOperator) -> Result<IdentityAudit> {
    h.grid().ensure_same(p.grid())?;
    let ev = linalg::hermitian_eigenvalues(p.matrix());
    if ev.first().is_some_and(|&l| l < -1e-10) || ev.last().is_some_and(|&l| l > 1.0 + 1e-10) {
        return Err(LabError::InvalidOperator("P is not between 0 and 1".into()));
    }
    let dec = diagonalize(h)?;
    let pt = dec.to_eigenbasis(p.matrix());
    let eps = dec.endpoint_tolerance();
    let n = pt.nrows();
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for k in 0..n {
        let lam = dec.eigenvalues()[k];
        let g = if lam <= eps { 1.0 } else { 0.0 };
        lhs += lam * (pt[(k, k)].re - g);
        let mut d2 = 0.0;
        let mut p2 = 0.0;
        for j in 0..n {
            let gj = if j == k { g } else { 0.0 };
            d2 += (pt[(k, j)] - gj).norm_sqr();
            p2 += pt[(k, j)].norm_sqr();
        }
        rhs += lam.abs() * (d2 + pt[(k, k)].re - p2);
    }
    Ok(IdentityAudit { lhs, rhs, residual: (lhs - rhs).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_core::make_grid;
    use std::f64::consts::PI;

    fn harmonic_dec(hbar: f64, n: usize, l: f64) -> SpectralDecomposition {
        let g = make_grid(1, n, l).unwrap();
        let h = build_hamiltonian(&g, &Potential::shifted_harmonic(1.0), hbar, KineticScheme::Spectral).unwrap();
        diagonalize(&h).unwrap()
    }

    #[test]
    fn diagonal_example() {
        let g = make_grid(1, 4, 1.0).unwrap();
        let h = HermitianOperator::new(g, linalg::diagonal(&[3.0, 1.0, 2.0, 5.0]), None).unwrap();
        let dec = diagonalize(&h).unwrap();
        assert_eq!(dec.eigenvalues(), &[1.0, 2.0, 3.0, 5.0]);
        assert!(dec.residual() < 1e-14);
    }

    #[test]
    fn projector_rank_and_idempotent() {
        let dec = harmonic_dec(0.1, 192, 6.0);
        let gamma = spectral_projector(&dec, f64::NEG_INFINITY, 0.0, 0.1).unwrap();
        assert!((linalg::trace(gamma.matrix()).re - 5.0).abs() < 1e-10);
        let defect = linalg::max_abs(&(matmul(gamma.matrix(), gamma.matrix()) - gamma.matrix()));
        assert!(defect < 1e-8);
        let empty = spectral_projector(&dec, -10.0, -5.0, 0.1).unwrap();
        assert_eq!(linalg::max_abs(empty.matrix()), 0.0);
        assert!(spectral_projector(&dec, 1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn weyl_examples() {
        let g = make_grid(1, 192, 6.0).unwrap();
        let v = Potential::shifted_harmonic(1.0);
        let a = weyl_audit(&g, &v, 0.1, 0.0).unwrap();
        assert!((a.quantum - PI).abs() < 1e-12);
        assert!((a.classical - PI).abs() < 1e-12);
        assert!(a.error < 1e-12);
        let b = weyl_audit(&g, &v, 0.12, 0.0).unwrap();
        assert!((b.quantum - 2.0 * PI * 0.12 * 4.0).abs() < 1e-12);
        assert!((b.error - (PI - 2.0 * PI * 0.48)).abs() < 1e-12);
        let up = Potential::harmonic().with_chemical_shift(-1.0);
        let c = weyl_audit(&g, &up, 0.1, 0.0).unwrap();
        assert_eq!((c.quantum, c.classical, c.error), (0.0, 0.0, 0.0));
    }

    #[test]
    fn classical_volume_double_well_matches_grid_sum() {
        let g = make_grid(1, 4096, 4.0).unwrap();
        let v = Potential::double_well(1.2, 2.0, 1.0);
        let exact = classical_phase_volume(&g, &v, 0.1).unwrap();
        let samples = v.sample(&g).unwrap();
        let riemann: f64 = samples.values().iter().map(|&x| 2.0 * (0.1 - x).max(0.0).sqrt()).sum::<f64>() * g.spacing();
        assert!((exact - riemann).abs() < 1e-4, "{exact} vs {riemann}");
    }

    #[test]
    fn local_count_examples() {
        let dec = harmonic_dec(0.1, 192, 6.0);
        let a = local_count_audit(&dec, -0.05, 0.05, 0.1).unwrap();
        assert_eq!(a.count_scaled, 0.0);
        assert_eq!(a.ratio, 0.0);
        let b = local_count_audit(&dec, -0.1, 0.1, 0.1).unwrap();
        assert!((b.count_scaled - 4.0 * PI * 0.1).abs() < 1e-12);
        assert!((b.ratio - 4.0 * PI * 0.1 / 0.3).abs() < 1e-12);
    }

    #[test]
    fn resolvent_examples() {
        let dec = harmonic_dec(0.1, 192, 6.0);
        let r = resolvent_audit(&dec, 0.1, 0.1, 2).unwrap();
        let exact: f64 = 2.0 * PI * 0.1 * (0..5).map(|n| (0.1 + 1.0 - (2 * n + 1) as f64 * 0.1).powi(-2)).sum::<f64>();
        assert!((r.value - exact).abs() < 1e-8 * exact);
        assert!((r.normalized - 0.1 * exact).abs() < 1e-8 * exact);
        assert!(resolvent_audit(&dec, 0.05, 0.1, 2).is_err());
        let g = make_grid(1, 32, 3.0).unwrap();
        let h = build_hamiltonian(&g, &Potential::harmonic().with_chemical_shift(-1.0), 0.1, KineticScheme::Spectral).unwrap();
        let empty = diagonalize(&h).unwrap();
        assert_eq!(resolvent_audit(&empty, 0.1, 0.1, 1).unwrap().value, 0.0);
    }

    #[test]
    fn agmon_harmonic_holds() {
        let hbar = 0.05;
        let g = make_grid(1, 192, 3.2).unwrap();
        let v = Potential::shifted_harmonic(1.0);
        let h = build_hamiltonian(&g, &v, hbar, KineticScheme::Spectral).unwrap();
        let dec = diagonalize(&h).unwrap();
        let gamma = spectral_projector(&dec, f64::NEG_INFINITY, 0.0, hbar).unwrap();
        let a = agmon_audit(&gamma, &v).unwrap();
        assert!(a.weighted_mass <= a.budget, "{a:?}");
        assert!(a.gradient_weighted_mass <= a.gradient_budget, "{a:?}");
        assert!(gamma.kinetic_density().unwrap().values().iter().all(|&x| x >= -1e-14));
        let zero = agmon_audit(&DensityOperator::zero(g, hbar), &v).unwrap();
        assert_eq!(zero.weighted_mass, 0.0);
        assert_eq!(zero.budget, 0.0);
        let flat = Potential::harmonic().with_chemical_shift(-2.0);
        assert!(agmon_audit(&gamma, &flat).is_err());
    }

    #[test]
    fn lieb_thirring_harmonic() {
        let hbar = 0.1;
        let g = make_grid(1, 192, 6.0).unwrap();
        let v = Potential::shifted_harmonic(1.0);
        let dec = diagonalize(&build_hamiltonian(&g, &v, hbar, KineticScheme::Spectral).unwrap()).unwrap();
        let gamma = spectral_projector(&dec, f64::NEG_INFINITY, 0.0, hbar).unwrap();
        let a = spectral_inequality_audit(&gamma, &v, KineticScheme::Spectral).unwrap();
        assert!(a.lt_lhs <= a.lt_rhs);
        assert!((a.clr_lhs - PI).abs() < 1e-9);
        let z = spectral_inequality_audit(&DensityOperator::zero(g, hbar), &v, KineticScheme::Spectral).unwrap();
        assert_eq!((z.lt_lhs, z.clr_lhs), (0.0, 0.0));
    }

    #[test]
    fn variational_identity_trivial_cases() {
        let dec = harmonic_dec(0.2, 32, 3.0);
        let gamma = spectral_projector(&dec, f64::NEG_INFINITY, 0.0, 0.2).unwrap();
        let a = variational_identity_audit(dec.operator(), &gamma).unwrap();
        assert!(a.lhs.abs() < 1e-12 && a.rhs.abs() < 1e-12);
        let id = DensityOperator::identity(*dec.grid(), 0.2);
        let b = variational_identity_audit(dec.operator(), &id).unwrap();
        assert!(b.residual <= 1e-10 * (b.lhs.abs() + dec.norm()));
    }

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-12);
        assert!((unit_ball_volume(5) - 8.0 * PI * PI / 15.0).abs() < 1e-12);
    }
}
