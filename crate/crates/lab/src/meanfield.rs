//! Thomas–Fermi fixed point and grand-canonical reduced Hartree minimization with
//! repulsive soft-core kernels `κ(|x|² + s²)^{-a/2}`.

use crate::fourier;
use crate::grid_core::{spectral_derivative, Grid, GridFunction};
use crate::linalg;
use crate::operators::{build_hamiltonian, KineticScheme, Potential, PotentialKind};
use crate::phasespace::{classical_symbol, weyl_quantize, wigner, PhaseSpaceField};
use crate::schatten::schatten_norm;
use crate::spectral::{diagonalize, unit_ball_volume, DensityOperator, DensityTag, SpectralDecomposition};
use crate::{planck_volume, Complex64, LabError, Matrix, Result};
use serde::{Deserialize, Serialize};

/// Repulsive pair interaction `κ(|x|² + s²)^{-a/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionKernel {
    pub strength: f64,
    pub exponent: f64,
    pub softening: f64,
}

impl InteractionKernel {
    /// Validate `κ ≥ 0`, `a ∈ [0, 1]`, `s ≥ 0`, and `s > 0` whenever `a > 0`.
    pub fn new(strength: f64, exponent: f64, softening: f64) -> Result<Self> {
        let kernel = InteractionKernel { strength, exponent, softening };
        kernel.validate()?;
        Ok(kernel)
    }

    /// No interaction.
    pub fn zero() -> Self {
        InteractionKernel { strength: 0.0, exponent: 0.0, softening: 0.0 }
    }

    /// Check the parameter ranges.
    pub fn validate(&self) -> Result<()> {
        if !(self.strength >= 0.0) || !self.strength.is_finite() {
            return Err(LabError::InvalidParameter(format!("kernel strength {} must be nonnegative", self.strength)));
        }
        if !(0.0..=1.0).contains(&self.exponent) {
            return Err(LabError::InvalidParameter(format!("kernel exponent {} outside [0, 1]", self.exponent)));
        }
        if !(self.softening >= 0.0) || (self.exponent > 0.0 && self.softening == 0.0) {
            return Err(LabError::InvalidParameter(format!(
                "softening {} must be positive for a singular kernel",
                self.softening
            )));
        }
        Ok(())
    }

    /// `K` at squared distance `r2`.
    pub fn value(&self, r2: f64) -> f64 {
        self.strength * (r2 + self.softening * self.softening).powf(-self.exponent / 2.0)
    }

    /// `true` when the kernel vanishes identically.
    pub fn is_zero(&self) -> bool {
        self.strength == 0.0
    }

    /// DFT of the kernel sampled at every displacement of the doubled box, `Δx^d Σ K e^{-ik·x}`.
    pub fn padded_transform(&self, grid: &Grid) -> Vec<f64> {
        let (n, d) = (grid.n(), grid.dim());
        let m = 2 * n;
        let total = m.pow(d as u32);
        let dx = grid.spacing();
        let mut data: Vec<Complex64> = (0..total)
            .map(|i| {
                let mut r2 = 0.0;
                let mut rest = i;
                for _ in 0..d {
                    let disp = fourier::signed_index(rest % m, m) as f64 * dx;
                    r2 += disp * disp;
                    rest /= m;
                }
                Complex64::new(self.value(r2), 0.0)
            })
            .collect();
        fourier::fft_nd(&mut data, m, d, false);
        data.iter().map(|z| z.re * grid.cell_volume()).collect()
    }

    /// Smallest Fourier coefficient of the padded kernel relative to the largest.
    pub fn transform_min_ratio(&self, grid: &Grid) -> f64 {
        let t = self.padded_transform(grid);
        let max = t.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        if max == 0.0 {
            return 0.0;
        }
        t.iter().fold(f64::INFINITY, |a, &b| a.min(b)) / max
    }

    /// Linear convolution `K∗ρ` with zero extension to the doubled box.
    pub fn convolve(&self, rho: &GridFunction<f64>) -> Result<GridFunction<f64>> {
        let grid = *rho.grid();
        if self.is_zero() {
            return Ok(GridFunction::constant(grid, 0.0));
        }
        let (n, d) = (grid.n(), grid.dim());
        let m = 2 * n;
        let total = m.pow(d as u32);
        let padded = |i: usize| {
            let mi = grid.multi_index(i);
            mi[..d].iter().fold(0, |acc, &k| acc * m + k)
        };
        let mut data = vec![Complex64::new(0.0, 0.0); total];
        for (i, &v) in rho.values().iter().enumerate() {
            data[padded(i)] = Complex64::new(v, 0.0);
        }
        fourier::fft_nd(&mut data, m, d, false);
        for (z, k) in data.iter_mut().zip(self.padded_transform(&grid)) {
            *z *= k;
        }
        fourier::fft_nd(&mut data, m, d, true);
        let scale = 1.0 / total as f64;
        GridFunction::new(grid, (0..grid.len()).map(|i| data[padded(i)].re * scale).collect())
    }

    /// `½∫∫K(x-y)ρ(x)ρ(y)`.
    pub fn interaction_energy(&self, rho: &GridFunction<f64>) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let field = self.convolve(rho)?;
        Ok(0.5 * rho.values().iter().zip(field.values()).map(|(a, b)| a * b).sum::<f64>() * rho.grid().cell_volume())
    }
}

/// Thomas–Fermi density.
#[derive(Clone, Debug)]
pub struct TFSolution {
    pub rho: GridFunction<f64>,
    /// Effective potential `U + K∗ρ` at the returned density.
    pub potential: GridFunction<f64>,
    /// `sup|ω_d(U + K∗ρ)_-^{d/2} - ρ|`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl TFSolution {
    /// `∫ρ`.
    pub fn mass(&self) -> f64 {
        self.rho.integrate()
    }
}

fn tf_map(u: &GridFunction<f64>, kernel: &InteractionKernel, rho: &GridFunction<f64>) -> Result<(GridFunction<f64>, GridFunction<f64>)> {
    let d = u.grid().dim() as f64;
    let omega = unit_ball_volume(u.grid().dim());
    let field = kernel.convolve(rho)?;
    let w = GridFunction::new(*u.grid(), u.values().iter().zip(field.values()).map(|(a, b)| a + b).collect())?;
    let next = w.map(|x| omega * (-x).max(0.0).powf(d / 2.0));
    Ok((next, w))
}

/// Damped fixed-point iteration for `ρ = ω_d(U + K∗ρ)_-^{d/2}` from `ρ⁰ = ω_d U_-^{d/2}`.
///
/// The step `ρ ← (1-α)ρ + ασ` with `σ = ω_d(U + K∗ρ)_-^{d/2}` uses the minimizer of the
/// convex Thomas–Fermi energy `∫(c_d/p)ρ^p + Uρ + ½ρK∗ρ` along the segment, capped at
/// `damping`: a fixed step cannot contract the slope `ω_d(d/2)W_-^{d/2-1}` of the map at grid
/// points just inside the turning points. Non-convergence returns the iterate with the
/// smallest defect and `converged = false`.
pub fn thomas_fermi_solve(
    grid: &Grid,
    potential: &Potential,
    kernel: &InteractionKernel,
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> Result<TFSolution> {
    kernel.validate()?;
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(LabError::InvalidParameter(format!("damping {damping} outside (0, 1]")));
    }
    if !potential.is_confining(grid)? {
        log::warn!("Thomas–Fermi potential is not confining on the box");
    }
    let d = grid.dim() as f64;
    let cd = unit_ball_volume(grid.dim()).powf(-2.0 / d);
    let u = potential.sample(grid)?;
    let (mut rho, _) = tf_map(&u, &InteractionKernel::zero(), &GridFunction::constant(*grid, 0.0))?;
    let mut best: Option<TFSolution> = None;
    for iteration in 1..=max_iter.max(1) {
        let (next, w) = tf_map(&u, kernel, &rho)?;
        let residual = next.values().iter().zip(rho.values()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if !residual.is_finite() {
            return Err(LabError::Numerical("Thomas–Fermi iteration diverged".into()));
        }
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            best = Some(TFSolution { rho: rho.clone(), potential: w.clone(), residual, iterations: iteration, converged: false });
        }
        if residual < tol {
            let mut sol = best.take().unwrap();
            sol.converged = true;
            return Ok(sol);
        }
        let step: Vec<f64> = next.values().iter().zip(rho.values()).map(|(a, b)| a - b).collect();
        let k_step = kernel.convolve(&GridFunction::new(*grid, step.clone())?)?;
        // Derivative of the energy along the segment; increasing in α by convexity.
        let slope = |alpha: f64| -> f64 {
            (0..grid.len())
                .map(|i| {
                    let r = (rho.values()[i] + alpha * step[i]).max(0.0);
                    (cd * r.powf(2.0 / d) + w.values()[i] + alpha * k_step.values()[i]) * step[i]
                })
                .sum()
        };
        let alpha = if slope(damping) <= 0.0 {
            damping
        } else {
            let (mut lo, mut hi) = (0.0, damping);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if slope(mid) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        rho = GridFunction::new(*grid, rho.values().iter().zip(&step).map(|(a, s)| a + alpha * s).collect())?;
    }
    let sol = best.unwrap();
    log::warn!("Thomas–Fermi iteration stopped after {max_iter} steps at defect {:e}", sol.residual);
    Ok(sol)
}

/// Classical Thomas–Fermi state `1(|ξ|² + U + K∗ρ_TF ≤ 0)`.
pub fn thomas_fermi_symbol(tf: &TFSolution, hbar: f64) -> Result<PhaseSpaceField> {
    let potential = Potential::new(PotentialKind::Tabulated(tf.potential.clone()));
    Ok(classical_symbol(tf.rho.grid(), hbar, &potential, 0.0)?.f)
}

/// Settings of the self-consistent field loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScfSettings {
    pub mixing: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub scheme: KineticScheme,
}

impl Default for ScfSettings {
    fn default() -> Self {
        ScfSettings { mixing: 0.5, tol: 1e-8, max_iter: 400, scheme: KineticScheme::Spectral }
    }
}

/// One accepted SCF step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScfStep {
    pub iteration: usize,
    pub energy: f64,
    pub density_change: f64,
    pub mixing: f64,
}

/// Reduced Hartree minimizer.
#[derive(Clone, Debug)]
pub struct HartreeSolution {
    pub gamma: DensityOperator,
    pub rho: GridFunction<f64>,
    /// `U + K∗ρ`.
    pub potential: GridFunction<f64>,
    pub energy: f64,
    /// `‖γ - 1_{H_γ<0} - q‖_op` with `q` the part of `γ` on eigenvalues of `H_γ` within the
    /// endpoint tolerance of zero.
    pub fixed_point_residual: f64,
    /// `‖γ - 1_{H_γ<0}‖_op`, which equals the occupation of a level pinned at zero.
    pub projector_residual: f64,
    /// Occupation `θ ∈ (0, 1)` of a level of `H_γ` pinned at zero, if any.
    pub pinned_occupation: Option<f64>,
    pub scf_history: Vec<ScfStep>,
    pub converged: bool,
    /// Eigenvalues of `H_γ` within the endpoint tolerance of zero.
    pub threshold_states: usize,
}

/// `h^d Tr((-ħ²Δ + U)γ) + ½∫∫K(x-y)ρ(x)ρ(y)`.
pub fn hartree_energy(
    gamma: &DensityOperator,
    potential: &Potential,
    kernel: &InteractionKernel,
    scheme: KineticScheme,
) -> Result<f64> {
    let grid = *gamma.grid();
    let h = build_hamiltonian(&grid, potential, gamma.hbar(), scheme)?;
    let linear = planck_volume(gamma.hbar(), grid.dim()) * linalg::trace_product(h.matrix(), gamma.matrix()).re;
    Ok(linear + kernel.interaction_energy(&gamma.density())?)
}

fn mean_field_spectrum(grid: &Grid, w: &GridFunction<f64>, hbar: f64, scheme: KineticScheme) -> Result<SpectralDecomposition> {
    let potential = Potential::new(PotentialKind::Tabulated(w.clone()));
    diagonalize(&build_hamiltonian(grid, &potential, hbar, scheme)?)
}

fn effective_potential(u: &GridFunction<f64>, kernel: &InteractionKernel, rho: &GridFunction<f64>) -> Result<GridFunction<f64>> {
    let field = kernel.convolve(rho)?;
    GridFunction::new(*u.grid(), u.values().iter().zip(field.values()).map(|(a, b)| a + b).collect())
}

fn l1_distance(a: &GridFunction<f64>, b: &GridFunction<f64>) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).sum::<f64>() * a.grid().cell_volume()
}

fn density_of(grid: &Grid, hbar: f64, m: &Matrix) -> GridFunction<f64> {
    DensityOperator::from_parts(*grid, hbar, m.clone(), DensityTag::General).density()
}

/// `⟨v|K∗f|v⟩` for a unit grid vector `v`.
fn level_shift(kernel: &InteractionKernel, v: &[Complex64], f: &GridFunction<f64>) -> Result<f64> {
    let field = kernel.convolve(f)?;
    Ok(v.iter().zip(field.values()).map(|(z, k)| z.norm_sqr() * k).sum())
}

/// Target state of one SCF step: levels below the one nearest zero filled, that level
/// occupied by `θ`.
struct Target {
    sigma: Matrix,
    theta: f64,
    level: f64,
}

/// Fill `H_γ` below the level `v_k` nearest zero and choose its occupation so that the
/// first-order prediction of `λ_k` after mixing with weight `β` vanishes.
fn target_state(
    dec: &SpectralDecomposition,
    kernel: &InteractionKernel,
    rho: &GridFunction<f64>,
    hbar: f64,
    beta: f64,
) -> Result<Target> {
    let grid = *dec.grid();
    let values = dec.eigenvalues();
    let k = (0..values.len()).min_by(|&a, &b| values[a].abs().total_cmp(&values[b].abs())).unwrap_or(0);
    let lower: Vec<usize> = (0..k).collect();
    let below = dec.columns(&lower);
    let filled = linalg::matmul(&below, &below.adjoint());
    let v = dec.columns(&[k]);
    let pinned = linalg::matmul(&v, &v.adjoint());
    let level = values[k];
    let theta = if kernel.is_zero() {
        if level < -dec.endpoint_tolerance() { 1.0 } else { 0.0 }
    } else {
        let rho_low = density_of(&grid, hbar, &filled);
        let rho_k = density_of(&grid, hbar, &pinned);
        let column: Vec<Complex64> = v.column(0).iter().copied().collect();
        let offset = GridFunction::new(grid, rho_low.values().iter().zip(rho.values()).map(|(a, b)| a - b).collect())?;
        let a = level_shift(kernel, &column, &offset)?;
        let slope = level_shift(kernel, &column, &rho_k)?;
        if slope > 0.0 {
            (-(level / beta + a) / slope).clamp(0.0, 1.0)
        } else if level < 0.0 {
            1.0
        } else {
            0.0
        }
    };
    Ok(Target { sigma: filled + pinned * Complex64::new(theta, 0.0), theta, level })
}

/// Grand-canonical reduced Hartree minimization by damped mixing.
///
/// Each step diagonalizes `H_γ = -ħ²Δ + U + K∗ρ_γ`, fills every level below the one nearest
/// zero, and occupies that level by `θ ∈ [0, 1]` chosen so that its predicted eigenvalue after
/// the step vanishes. Minimizers may have a level pinned at zero with fractional occupation
/// (the `q` of `γ = 1_{H_γ<0} + q`); otherwise `θ` settles at 0 or 1 and the step is the usual
/// aufbau filling. The state moves to `(1-α)γ + ασ`, whose density is the mixed density; a
/// step is accepted only when the energy does not increase, otherwise `α` is halved. A
/// period-two cycle of the density also halves `α`, and `α < 10⁻³` is a numerical failure.
pub fn hartree_scf(
    grid: &Grid,
    potential: &Potential,
    kernel: &InteractionKernel,
    hbar: f64,
    settings: &ScfSettings,
) -> Result<HartreeSolution> {
    kernel.validate()?;
    if !(settings.mixing > 0.0 && settings.mixing <= 1.0) {
        return Err(LabError::InvalidParameter(format!("mixing {} outside (0, 1]", settings.mixing)));
    }
    let energy_of = |m: &Matrix| -> Result<f64> {
        hartree_energy(&DensityOperator::from_parts(*grid, hbar, m.clone(), DensityTag::General), potential, kernel, settings.scheme)
    };
    let u = potential.sample(grid)?;
    let dec = mean_field_spectrum(grid, &u, hbar, settings.scheme)?;
    let occupied = dec.columns(&(0..dec.eigenvalues().len()).filter(|&j| dec.eigenvalues()[j] < -dec.endpoint_tolerance()).collect::<Vec<_>>());
    let mut gamma = linalg::matmul(&occupied, &occupied.adjoint());
    let mut rho = density_of(grid, hbar, &gamma);
    let mut energy = energy_of(&gamma)?;
    let mut alpha = settings.mixing;
    let mut history = Vec::new();
    let mut previous: Option<GridFunction<f64>> = None;
    let mut converged = false;
    for iteration in 1..=settings.max_iter {
        let w = effective_potential(&u, kernel, &rho)?;
        let dec = mean_field_spectrum(grid, &w, hbar, settings.scheme)?;
        let target = target_state(&dec, kernel, &rho, hbar, 1.0)?;
        let rho_target = density_of(grid, hbar, &target.sigma);
        let change = l1_distance(&rho_target, &rho);
        let scale = rho.integrate().abs().max(f64::MIN_POSITIVE);
        let level_settled = target.theta == 0.0 || target.theta == 1.0 || target.level.abs() < settings.tol;
        if change < settings.tol * scale && level_settled {
            gamma = target.sigma;
            rho = rho_target;
            converged = true;
            history.push(ScfStep { iteration, energy: energy_of(&gamma)?, density_change: change, mixing: 1.0 });
            break;
        }
        if let Some(prev) = &previous {
            if l1_distance(&rho_target, prev) < 1e-3 * change {
                alpha /= 2.0;
                log::debug!("period-two density cycle, mixing halved to {alpha}");
            }
        }
        let accepted = loop {
            if alpha < 1e-3 {
                return Err(LabError::Numerical(format!("SCF mixing fell below 1e-3 at iteration {iteration}")));
            }
            let step = target_state(&dec, kernel, &rho, hbar, alpha)?;
            let trial = &gamma * Complex64::new(1.0 - alpha, 0.0) + &step.sigma * Complex64::new(alpha, 0.0);
            let e = energy_of(&trial)?;
            if e <= energy + 1e-10 * energy.abs().max(1.0) {
                break (trial, e);
            }
            alpha /= 2.0;
            log::debug!("energy increased, mixing halved to {alpha}");
        };
        previous = Some(rho_target);
        gamma = accepted.0;
        energy = accepted.1;
        rho = density_of(grid, hbar, &gamma);
        history.push(ScfStep { iteration, energy, density_change: change, mixing: alpha });
    }
    if !converged {
        log::warn!("Hartree SCF did not converge in {} iterations", settings.max_iter);
    }
    let w = effective_potential(&u, kernel, &rho)?;
    let dec = mean_field_spectrum(grid, &w, hbar, settings.scheme)?;
    let eps = dec.endpoint_tolerance().max(settings.tol);
    let below: Vec<usize> = (0..dec.eigenvalues().len()).filter(|&j| dec.eigenvalues()[j] < -eps).collect();
    let kernel_levels: Vec<usize> = (0..dec.eigenvalues().len()).filter(|&j| dec.eigenvalues()[j].abs() <= eps).collect();
    let projector = {
        let v = dec.columns(&below);
        linalg::matmul(&v, &v.adjoint())
    };
    let kernel_part = {
        let v = dec.columns(&kernel_levels);
        linalg::matmul3(&v, &linalg::matmul3(&v.adjoint(), &gamma, &v), &v.adjoint())
    };
    let projector_residual = linalg::operator_norm(&(&gamma - &projector));
    let fixed_point_residual = linalg::operator_norm(&(&gamma - &projector - &kernel_part));
    let pinned_occupation = kernel_levels
        .iter()
        .map(|&j| {
            let v = dec.columns(&[j]);
            linalg::matmul3(&v.adjoint(), &gamma, &v)[(0, 0)].re
        })
        .find(|&t| t > 1e-12 && t < 1.0 - 1e-12);
    if let Some(theta) = pinned_occupation {
        log::info!("level pinned at zero with occupation {theta:.6}");
    }
    let gamma = DensityOperator::new(*grid, hbar, linalg::hermitian_part(&gamma), DensityTag::Hartree)?;
    let energy = hartree_energy(&gamma, potential, kernel, settings.scheme)?;
    Ok(HartreeSolution {
        gamma,
        rho,
        potential: w,
        energy,
        fixed_point_residual,
        projector_residual,
        pinned_occupation,
        scf_history: history,
        converged,
        threshold_states: kernel_levels.len(),
    })
}

/// Distances between a Hartree state and the Thomas–Fermi state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HartreeTfReport {
    pub density_l1: f64,
    pub density_l2: f64,
    /// `‖f_HF - f_TF‖_{L²}` on the phase-space lattice.
    pub wigner_l2: f64,
    /// `h^d Tr|γ_HF - op_{f_TF}|`.
    pub trace_distance: f64,
}

/// Compare a Hartree solution with a Thomas–Fermi solution and its phase-space symbol.
pub fn hartree_vs_tf_report(sol: &HartreeSolution, tf: &TFSolution, f_tf: &PhaseSpaceField) -> Result<HartreeTfReport> {
    let grid = *sol.gamma.grid();
    grid.ensure_same(tf.rho.grid())?;
    grid.ensure_same(f_tf.grid())?;
    let hbar = sol.gamma.hbar();
    if (f_tf.hbar() - hbar).abs() > 1e-15 * hbar {
        return Err(LabError::GridMismatch(format!("symbol at hbar {} for a state at hbar {hbar}", f_tf.hbar())));
    }
    let diff = GridFunction::new(grid, sol.rho.values().iter().zip(tf.rho.values()).map(|(a, b)| a - b).collect())?;
    let f_hf = wigner(&sol.gamma)?;
    let op_tf = weyl_quantize(f_tf)?;
    Ok(HartreeTfReport {
        density_l1: diff.lp_norm(1.0),
        density_l2: diff.lp_norm(2.0),
        wigner_l2: f_hf.distance(f_tf, 2.0)?,
        trace_distance: schatten_norm(&(sol.gamma.matrix() - op_tf), 1.0, hbar, grid.dim())?,
    })
}

/// Both sides of `‖K∗ρ‖_∞ ≤ κ(δ^{-a}‖ρ‖₁ + C_a δ^{d-a}‖ρ‖_∞)`, `C_a = dω_d/(d-a)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionBound {
    pub delta: f64,
    pub lhs: f64,
    /// Infinite when `a = d`, where the near-field integral diverges.
    pub rhs: f64,
}

/// Split the kernel at `|y| = δ`: the far part is bounded by `δ^{-a}‖ρ‖₁`, the near part by
/// `‖ρ‖_∞ ∫_{|y|<δ}|y|^{-a} = C_a δ^{d-a}‖ρ‖_∞`; the soft core only lowers `K`.
pub fn convolution_bound(rho: &GridFunction<f64>, kernel: &InteractionKernel, delta: f64) -> Result<ConvolutionBound> {
    if !(delta > 0.0) {
        return Err(LabError::InvalidParameter(format!("delta {delta} must be positive")));
    }
    let d = rho.grid().dim() as f64;
    let a = kernel.exponent;
    let lhs = kernel.convolve(rho)?.max_abs();
    let near = if a < d { d * unit_ball_volume(rho.grid().dim()) / (d - a) * delta.powf(d - a) } else { f64::INFINITY };
    let rhs = kernel.strength * (delta.powf(-a) * rho.lp_norm(1.0) + near * rho.max_abs());
    Ok(ConvolutionBound { delta, lhs, rhs })
}

/// `sup e^{-β|x|}|∇V|` and `sup e^{-β|x|}|∇²V|` by spectral differentiation of grid samples.
pub fn derivative_growth(v: &GridFunction<f64>, beta: f64) -> Result<[f64; 2]> {
    let grid = *v.grid();
    let d = grid.dim();
    let first: Vec<GridFunction<f64>> = (0..d).map(|a| spectral_derivative(v, a)).collect::<Result<_>>()?;
    let mut second = vec![0.0; grid.len()];
    for g in &first {
        for b in 0..d {
            let h = spectral_derivative(g, b)?;
            for (s, x) in second.iter_mut().zip(h.values()) {
                *s += x * x;
            }
        }
    }
    let mut out = [0.0_f64; 2];
    for (i, hess) in second.iter().enumerate() {
        let weight = (-beta * grid.radius_squared(i).sqrt()).exp();
        let grad: f64 = first.iter().map(|g| g.values()[i].powi(2)).sum::<f64>().sqrt();
        out[0] = out[0].max(weight * grad);
        out[1] = out[1].max(weight * hess.sqrt());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_core::make_grid;
    use crate::spectral::{diagonalize_schrodinger, spectral_projector};

    fn shifted() -> Potential {
        Potential::shifted_harmonic(1.0)
    }

    #[test]
    fn kernel_validation_and_transform() {
        assert!(InteractionKernel::new(-1.0, 0.5, 0.1).is_err());
        assert!(InteractionKernel::new(1.0, 1.5, 0.1).is_err());
        assert!(InteractionKernel::new(1.0, 0.5, 0.0).is_err());
        let g = make_grid(1, 96, 6.0).unwrap();
        let k = InteractionKernel::new(0.5, 1.0, 0.1).unwrap();
        assert!(k.transform_min_ratio(&g) > -1e-3);
        // Constant kernel: K∗ρ = κ∫ρ wherever the doubled box covers the support.
        let c = InteractionKernel::new(2.0, 0.0, 0.0).unwrap();
        let rho = GridFunction::from_fn(g, |x| (-x[0] * x[0]).exp());
        let field = c.convolve(&rho).unwrap();
        let mass = rho.integrate();
        assert!(field.values().iter().all(|v| (v - 2.0 * mass).abs() < 1e-10));
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let g = make_grid(1, 32, 3.0).unwrap();
        let k = InteractionKernel::new(0.7, 0.5, 0.2).unwrap();
        let rho = GridFunction::from_fn(g, |x| (1.0 - x[0] * x[0]).max(0.0));
        let fast = k.convolve(&rho).unwrap();
        for i in 0..g.len() {
            let direct: f64 = (0..g.len())
                .map(|j| k.value((g.point(i)[0] - g.point(j)[0]).powi(2)) * rho.values()[j])
                .sum::<f64>()
                * g.spacing();
            assert!((fast.values()[i] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn tf_linear_limit() {
        let g = make_grid(1, 128, 3.0).unwrap();
        let sol = thomas_fermi_solve(&g, &shifted(), &InteractionKernel::zero(), 0.5, 1e-12, 10).unwrap();
        assert!(sol.converged && sol.residual == 0.0 && sol.iterations == 1);
        for (r, x) in sol.rho.values().iter().zip(g.axis_coordinates()) {
            assert_eq!(*r, 2.0 * (1.0 - x * x).max(0.0).sqrt());
        }
    }

    #[test]
    fn tf_interacting_example() {
        let g = make_grid(1, 192, 6.0).unwrap();
        let k = InteractionKernel::new(0.5, 1.0, 0.1).unwrap();
        let sol = thomas_fermi_solve(&g, &shifted(), &k, 0.5, 1e-8, 500).unwrap();
        assert!(sol.converged && sol.residual < 1e-8, "{} after {}", sol.residual, sol.iterations);
        let (check, _) = tf_map(&shifted().sample(&g).unwrap(), &k, &sol.rho).unwrap();
        let defect = check.values().iter().zip(sol.rho.values()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(defect < 1e-8);
        let free = thomas_fermi_solve(&g, &shifted(), &InteractionKernel::zero(), 0.5, 1e-8, 10).unwrap();
        assert!(sol.mass() <= free.mass());
        assert!(sol.rho.values().iter().all(|&r| r >= -1e-12));
        for delta in [0.5, 1.0] {
            let b = convolution_bound(&sol.rho, &InteractionKernel::new(0.5, 0.5, 0.1).unwrap(), delta).unwrap();
            assert!(b.lhs <= b.rhs, "{b:?}");
        }
    }

    #[test]
    fn hartree_linear_limit() {
        let g = make_grid(1, 96, 6.0).unwrap();
        let hbar = 0.1;
        let sol = hartree_scf(&g, &shifted(), &InteractionKernel::zero(), hbar, &ScfSettings::default()).unwrap();
        let dec = diagonalize_schrodinger(&g, &shifted(), hbar, KineticScheme::Spectral).unwrap();
        let proj = spectral_projector(&dec, f64::NEG_INFINITY, 0.0, hbar).unwrap();
        assert!(sol.converged && sol.fixed_point_residual <= 1e-10 && sol.pinned_occupation.is_none());
        assert!(linalg::max_abs(&(sol.gamma.matrix() - proj.matrix())) < 1e-10);
        let expected: f64 = planck_volume(hbar, 1) * dec.eigenvalues().iter().filter(|&&l| l < 0.0).sum::<f64>();
        assert!((sol.energy - expected).abs() < 1e-10 * expected.abs());
        assert_eq!(hartree_energy(&DensityOperator::zero(g, hbar), &shifted(), &InteractionKernel::zero(), KineticScheme::Spectral).unwrap(), 0.0);
    }

    #[test]
    fn hartree_interacting_example() {
        let g = make_grid(1, 96, 6.0).unwrap();
        let hbar = 0.1;
        let k = InteractionKernel::new(0.2, 0.5, 0.1).unwrap();
        let sol = hartree_scf(&g, &shifted(), &k, hbar, &ScfSettings::default()).unwrap();
        assert!(sol.converged && sol.fixed_point_residual < 1e-6, "residual {}", sol.fixed_point_residual);
        // At these parameters one level sits at the Fermi energy with fractional occupation.
        let theta = sol.pinned_occupation.unwrap();
        assert!(theta > 0.0 && theta < 1.0);
        assert!((sol.projector_residual - theta).abs() < 1e-8);
        let dec = diagonalize_schrodinger(&g, &shifted(), hbar, KineticScheme::Spectral).unwrap();
        let trial = spectral_projector(&dec, f64::NEG_INFINITY, 0.0, hbar).unwrap();
        let trial_energy = hartree_energy(&trial, &shifted(), &k, KineticScheme::Spectral).unwrap();
        assert!(sol.energy <= trial_energy);
        for pair in sol.scf_history.windows(2) {
            assert!(pair[1].energy <= pair[0].energy + 1e-12 * pair[0].energy.abs().max(1.0));
        }
        assert!(k.interaction_energy(&sol.rho).unwrap() >= 0.0);
    }

    #[test]
    fn report_identities() {
        let g = make_grid(1, 64, 6.0).unwrap();
        let hbar = 0.2;
        let sol = hartree_scf(&g, &shifted(), &InteractionKernel::zero(), hbar, &ScfSettings::default()).unwrap();
        let tf = TFSolution {
            rho: sol.rho.clone(),
            potential: sol.potential.clone(),
            residual: 0.0,
            iterations: 0,
            converged: true,
        };
        let f = wigner(&sol.gamma).unwrap();
        let same = hartree_vs_tf_report(&sol, &tf, &f).unwrap();
        assert!(same.density_l1 == 0.0 && same.density_l2 == 0.0 && same.wigner_l2 == 0.0);
        assert!(same.trace_distance < 1e-9);
        let linear = thomas_fermi_solve(&g, &shifted(), &InteractionKernel::zero(), 1.0, 1e-12, 5).unwrap();
        let symbol = thomas_fermi_symbol(&linear, hbar).unwrap();
        let r = hartree_vs_tf_report(&sol, &linear, &symbol).unwrap();
        assert!(r.density_l1 > 0.0 && r.trace_distance > 0.0);
    }

    #[test]
    fn derivative_growth_of_harmonic() {
        let g = make_grid(1, 64, 3.0).unwrap();
        let v = GridFunction::from_fn(g, |x| (x[0] * std::f64::consts::PI / 3.0).sin());
        let [d1, d2] = derivative_growth(&v, 0.0).unwrap();
        assert!((d1 - std::f64::consts::PI / 3.0).abs() < 1e-3);
        assert!((d2 - (std::f64::consts::PI / 3.0).powi(2)).abs() < 1e-3);
    }
}
