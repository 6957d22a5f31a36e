//! Seeded random audits of the exact identities and the phase-space transforms, and the
//! soft-core refinement study.

use super::config::{GridPolicy, KernelSpec};
use crate::grid_core::{make_grid, GridFunction};
use crate::meanfield::thomas_fermi_solve;
use crate::operators::{build_hamiltonian, HermitianOperator, KineticScheme, Potential};
use crate::phasespace::{
    bathtub_identity_audit, classical_symbol, energy_convexity_audit, lattice_blur, weyl_quantize, wigner, wigner_matrix,
    PhaseSpaceField,
};
use crate::spectral::{variational_identity_audit, DensityOperator, DensityTag};
use crate::{linalg, Complex64, Matrix, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Which exact identity an [`IdentityRecord`] audits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityKind {
    /// `Tr H(P-γ) = Tr|H||P-γ|² + Tr|H|P(1-P)`.
    Variational,
    /// `∫∫𝓗(g - f) = ∫∫|𝓗||f - g|`.
    Bathtub,
    /// Classical energy convexity identity.
    Convexity,
}

/// One random identity audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub kind: IdentityKind,
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `max(1, |lhs| + |rhs|)`.
    pub scale: f64,
    pub passed: bool,
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let a = Matrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    linalg::hermitian_part(&a)
}

/// Random `0 ≤ P ≤ 1`: a random eigenbasis with occupations that are uniform, or
/// rounded to a projector on one instance in four.
fn random_density(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let (_, basis) = linalg::hermitian_eigen(&random_hermitian(rng, n));
    let projector = rng.gen_bool(0.25);
    let weights: Vec<f64> = (0..n)
        .map(|_| {
            let w: f64 = rng.gen_range(0.0..1.0);
            if projector {
                w.round()
            } else {
                w
            }
        })
        .collect();
    linalg::hermitian_part(&linalg::spectral_synthesis(&weights, &basis))
}

fn record(kind: IdentityKind, index: usize, lhs: f64, rhs: f64, residual: f64, tol: f64) -> IdentityRecord {
    let scale = (lhs.abs() + rhs.abs()).max(1.0);
    IdentityRecord { kind, index, lhs, rhs, residual, scale, passed: residual <= tol * scale }
}

/// `count` audits of each exact identity with residual tolerance `tol·scale`.
///
/// Variational instances alternate between random Hermitian matrices and Schrödinger
/// operators with random tabulated potentials; bathtub instances use random symbols and
/// trial fields; convexity instances use `V = |x|² - μ` with random, blurred and exact trial
/// fields in one dimension.
pub fn identity_audits(seed: u64, count: usize, tol: f64) -> Result<Vec<IdentityRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(3 * count);
    for index in 0..count {
        let n = 2 * rng.gen_range(2..=8);
        let grid = make_grid(1, n, rng.gen_range(1.0..4.0))?;
        let hbar = rng.gen_range(0.05..0.5);
        let h = if index % 2 == 0 {
            HermitianOperator::new(grid, random_hermitian(&mut rng, n), None)?
        } else {
            let v = GridFunction::new(grid, (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect())?;
            build_hamiltonian(&grid, &Potential::tabulated(v), hbar, KineticScheme::Spectral)?
        };
        let p = DensityOperator::new(grid, hbar, random_density(&mut rng, n), DensityTag::General)?;
        let a = variational_identity_audit(&h, &p)?;
        out.push(record(IdentityKind::Variational, index, a.lhs, a.rhs, a.residual, tol));
    }
    for index in 0..count {
        let n = 2 * rng.gen_range(2..=8);
        let grid = make_grid(1, n, rng.gen_range(1.0..4.0))?;
        let hbar = rng.gen_range(0.05..0.5);
        let symbol = PhaseSpaceField::zeros(grid, hbar)?;
        let len = symbol.values().len();
        let h = PhaseSpaceField::new(grid, hbar, (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        let g = PhaseSpaceField::new(grid, hbar, (0..len).map(|_| rng.gen_range(0.0..1.0)).collect())?;
        let a = bathtub_identity_audit(&h, &g)?;
        out.push(record(IdentityKind::Bathtub, index, a.lhs, a.rhs, a.residual, tol));
    }
    for index in 0..count {
        let n = 16 * rng.gen_range(2..=6);
        let grid = make_grid(1, n, rng.gen_range(2.0..4.0))?;
        let hbar = rng.gen_range(0.05..0.4);
        let v = Potential::shifted_harmonic(rng.gen_range(0.5..2.0));
        let f = classical_symbol(&grid, hbar, &v, 0.0)?.f;
        let g = match index % 3 {
            0 => PhaseSpaceField::new(grid, hbar, (0..f.values().len()).map(|_| rng.gen_range(0.0..1.0)).collect())?,
            1 => lattice_blur(&f, rng.gen_range(0.05..0.5), rng.gen_range(0.05..0.5))?,
            _ => f,
        };
        let a = energy_convexity_audit(&v, &g)?;
        out.push(record(IdentityKind::Convexity, index, a.lhs, a.rhs, a.identity_residual, tol));
    }
    Ok(out)
}

/// Plancherel and round-trip defects of one random operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub index: usize,
    pub dim: usize,
    pub n: usize,
    /// `|‖f_A‖_{L²} - ‖A‖_{𝓛²}| / ‖A‖_{𝓛²}`.
    pub plancherel_error: f64,
    /// `max|op(f_A) - A| / max|A|`.
    pub round_trip_error: f64,
    pub passed: bool,
}

/// `count` random Hermitian operators on one- and two-dimensional grids.
pub fn transform_audits(seed: u64, count: usize, tol: f64) -> Result<Vec<TransformRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for index in 0..count {
        let dim = if index % 5 == 4 { 2 } else { 1 };
        let n = if dim == 1 { 2 * rng.gen_range(2..=16) } else { 2 * rng.gen_range(2..=4) };
        let grid = make_grid(dim, n, rng.gen_range(1.0..6.0))?;
        let hbar = rng.gen_range(0.02..0.5);
        let a = random_hermitian(&mut rng, grid.len());
        let f = wigner_matrix(&grid, hbar, &a)?;
        let op_norm = crate::schatten::schatten_norm(&a, 2.0, hbar, dim)?;
        let plancherel_error = (f.lp_norm(2.0) - op_norm).abs() / op_norm;
        let back = weyl_quantize(&f)?;
        let round_trip_error = linalg::max_abs(&(&back - &a)) / linalg::max_abs(&a);
        let passed = plancherel_error <= tol && round_trip_error <= tol;
        out.push(TransformRecord { index, dim, n, plancherel_error, round_trip_error, passed });
    }
    Ok(out)
}

/// `max|f_γ - 2e^{-(x²+ξ²)/ħ}|` for the harmonic ground state `γ = |ψ⟩⟨ψ|` sampled on `n` points of `[-6, 6)`.
pub fn gaussian_wigner_error(hbar: f64, n: usize) -> Result<f64> {
    let grid = make_grid(1, n, 6.0)?;
    let dx = grid.spacing();
    let psi: Vec<f64> = (0..n)
        .map(|i| {
            let x = grid.coordinate(i, 0);
            (std::f64::consts::PI * hbar).powf(-0.25) * (-x * x / (2.0 * hbar)).exp()
        })
        .collect();
    let rank_one = Matrix::from_fn(n, n, |i, j| Complex64::new(psi[i] * psi[j] * dx, 0.0));
    let gamma = DensityOperator::new(grid, hbar, rank_one, DensityTag::General)?;
    let f = wigner(&gamma)?;
    let mut err = 0.0_f64;
    for t in 0..f.x_points() {
        for s in 0..f.xi_points() {
            let x = f.x_point(t)[0];
            let xi = f.xi_point(s)[0];
            let exact = 2.0 * (-(x * x + xi * xi) / hbar).exp();
            err = err.max((f.values()[t * f.xi_points() + s] - exact).abs());
        }
    }
    Ok(err)
}

/// One level of the soft-core refinement study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SofteningStep {
    pub n: usize,
    pub softening: f64,
    pub residual: f64,
    pub mass: f64,
    /// `‖ρ_n - ρ_{n/2}‖_{L¹}` on the coarse points, from the second level on.
    pub change_l1: Option<f64>,
}

/// Thomas–Fermi densities for `n = base·2^k`, `k < levels`, with the softening tied to `Δx`.
pub fn softening_study(
    potential: &Potential,
    kernel: &KernelSpec,
    policy: &GridPolicy,
    levels: usize,
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<SofteningStep>> {
    let mut out: Vec<SofteningStep> = Vec::with_capacity(levels);
    let mut previous: Option<GridFunction<f64>> = None;
    for k in 0..levels {
        let n = policy.base_points << k;
        let grid = crate::grid_core::Grid::with_budget(policy.dim, n, policy.half_length, policy.max_points)?;
        let sol = thomas_fermi_solve(&grid, potential, &kernel.build(&grid)?, damping, tol, max_iter)?;
        let change_l1 = previous.as_ref().map(|coarse| {
            let cg = *coarse.grid();
            let mut total = 0.0;
            for i in 0..cg.len() {
                let m = cg.multi_index(i);
                let fine: Vec<usize> = (0..cg.dim()).map(|a| 2 * m[a]).collect();
                total += (sol.rho.values()[grid.flat_index(&fine)] - coarse.values()[i]).abs();
            }
            total * cg.cell_volume()
        });
        out.push(SofteningStep { n, softening: kernel.softening_on(&grid)?, residual: sol.residual, mass: sol.mass(), change_l1 });
        previous = Some(sol.rho);
    }
    Ok(out)
}
