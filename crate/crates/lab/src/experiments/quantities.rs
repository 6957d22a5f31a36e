//! Named measurements evaluated at one sweep point.

use super::config::SweepConfig;
use crate::fourier;
use crate::grid_core::{spectral_derivative, Grid, GridFunction};
use crate::meanfield::{
    derivative_growth, hartree_scf, hartree_vs_tf_report, thomas_fermi_solve, thomas_fermi_symbol, HartreeSolution,
    HartreeTfReport, InteractionKernel, TFSolution,
};
use crate::operators::{momentum_operator, position_operator, KineticScheme, Potential};
use crate::phasespace::{classical_symbol, weyl_quantize, wigner, ClassicalSymbol};
use crate::schatten::{
    besov_seminorm, dyadic_samples, position_commutator, quantum_gradients, schatten_norm, translated_difference_norm,
    translation_unitary, BoundAudit, BoundAuditor, ShiftMode, ShiftVector,
};
use crate::spectral::{
    agmon_audit_tail_resolved, diagonalize_schrodinger, resolvent_audit, spectral_projector, weyl_audit,
    weyl_audit_decomposed, DensityOperator, SpectralDecomposition,
};
use crate::{linalg, Complex64, LabError, Matrix, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::cell::OnceCell;

/// Measurements available to a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    /// `|h^d N - ω_d∫V₋^{d/2}|`.
    WeylError,
    /// Largest Weyl-law error over a window of `ħ` values down to the next sweep point.
    WeylEnvelope,
    /// `h^d Tr|[x, γ]|`.
    CommXL1,
    /// `h^d Tr|[p̂, γ]|`.
    CommPL1,
    /// `h^d ‖[x, γ]‖²_{HS}`.
    CommXL2Sq,
    /// `h^d ‖[p̂, γ]‖²_{HS}`.
    CommPL2Sq,
    /// Sampled Besov seminorm of `γ`.
    BesovP,
    /// Largest `‖T_zγ - γ‖_{𝓛^p}/min(|z|/ħ^{1/p'}, |z|^{1/p}, 1)` at `p = 1`.
    BesovRegimeP1,
    BesovRegimeP2,
    BesovRegimePInf,
    /// `‖ϱ_γ - ϱ_f‖_{L¹}`.
    RhoL1,
    RhoL2,
    /// `‖f_γ - f‖_{L²}`.
    WignerL2,
    /// `‖γ - op_f‖_{𝓛¹}`.
    StateL1,
    /// Smallest margin of the five commutator inequalities for `x`, `p̂` and `τ_z`.
    BoundMargin,
    /// Largest normalized first-order resolvent sum over `λ ∈ [ħ, 1]`.
    ResolventOrder1,
    ResolventOrder2,
    /// Agmon weighted mass over its budget.
    AgmonRatio,
    AgmonGradientRatio,
    /// `‖∇ϱ_γ‖_{L¹}/‖D_xγ‖_{𝓛¹}`.
    DensityGradientRatio,
    /// Largest `‖T_xϱ_γ - ϱ_γ‖_{L²}/min(|x|/ħ, √|x|, 1)` over dyadic shifts.
    DensityShiftRatio,
    TfResidual,
    TfMass,
    /// Hartree fixed-point residual `‖γ - 1_{H_γ<0} - q‖`.
    HartreeResidual,
    HartreeEnergy,
    /// `‖γ_HF - 1_{H≤0}‖_op` for the external potential alone.
    HartreeVsProjector,
    TfRhoL1,
    TfRhoL2,
    TfWignerL2,
    TfStateL1,
    /// `‖ϱ_HF‖_∞`.
    RhoHfLinf,
    /// `sup e^{-β|x|}|∇V_γ|` of the converged Hartree potential.
    H4Gradient,
    H4Hessian,
    PinnedOccupation,
    /// `h^d Tr|[x, γ_HF]|` of the converged Hartree state.
    HfCommXL1,
    HfCommPL1,
}

const NAMES: [(Quantity, &str); 36] = [
    (Quantity::WeylError, "weyl_error"),
    (Quantity::WeylEnvelope, "weyl_envelope"),
    (Quantity::CommXL1, "comm_x_L1"),
    (Quantity::CommPL1, "comm_p_L1"),
    (Quantity::CommXL2Sq, "comm_x_L2sq"),
    (Quantity::CommPL2Sq, "comm_p_L2sq"),
    (Quantity::BesovP, "besov_p"),
    (Quantity::BesovRegimeP1, "besov_regime_p1"),
    (Quantity::BesovRegimeP2, "besov_regime_p2"),
    (Quantity::BesovRegimePInf, "besov_regime_pinf"),
    (Quantity::RhoL1, "rho_L1"),
    (Quantity::RhoL2, "rho_L2"),
    (Quantity::WignerL2, "wigner_L2"),
    (Quantity::StateL1, "state_L1"),
    (Quantity::BoundMargin, "bound_margin"),
    (Quantity::ResolventOrder1, "resolvent_order1"),
    (Quantity::ResolventOrder2, "resolvent_order2"),
    (Quantity::AgmonRatio, "agmon_ratio"),
    (Quantity::AgmonGradientRatio, "agmon_gradient_ratio"),
    (Quantity::DensityGradientRatio, "density_gradient_ratio"),
    (Quantity::DensityShiftRatio, "density_shift_ratio"),
    (Quantity::TfResidual, "tf_residual"),
    (Quantity::TfMass, "tf_mass"),
    (Quantity::HartreeResidual, "hartree_residual"),
    (Quantity::HartreeEnergy, "hartree_energy"),
    (Quantity::HartreeVsProjector, "hartree_vs_projector"),
    (Quantity::TfRhoL1, "tf_rho_L1"),
    (Quantity::TfRhoL2, "tf_rho_L2"),
    (Quantity::TfWignerL2, "tf_wigner_L2"),
    (Quantity::TfStateL1, "tf_state_L1"),
    (Quantity::RhoHfLinf, "rho_hf_Linf"),
    (Quantity::H4Gradient, "h4_gradient"),
    (Quantity::H4Hessian, "h4_hessian"),
    (Quantity::PinnedOccupation, "pinned_occupation"),
    (Quantity::HfCommXL1, "hf_comm_x_L1"),
    (Quantity::HfCommPL1, "hf_comm_p_L1"),
];

impl Quantity {
    /// Quantity by its CSV name.
    pub fn parse(name: &str) -> Option<Quantity> {
        NAMES.iter().find(|(_, n)| *n == name).map(|(q, _)| *q)
    }

    /// CSV name.
    pub fn name(self) -> &'static str {
        NAMES.iter().find(|(q, _)| *q == self).map(|(_, n)| *n).expect("every quantity is named")
    }

    /// Whether the quantity needs the mean-field solvers.
    pub fn is_mean_field(self) -> bool {
        matches!(
            self,
            Quantity::TfResidual
                | Quantity::TfMass
                | Quantity::HartreeResidual
                | Quantity::HartreeEnergy
                | Quantity::HartreeVsProjector
                | Quantity::TfRhoL1
                | Quantity::TfRhoL2
                | Quantity::TfWignerL2
                | Quantity::TfStateL1
                | Quantity::RhoHfLinf
                | Quantity::H4Gradient
                | Quantity::H4Hessian
                | Quantity::PinnedOccupation
                | Quantity::HfCommXL1
                | Quantity::HfCommPL1
        )
    }
}

/// One commutator-inequality evaluation at a sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub hbar: f64,
    pub n: usize,
    /// `x`, `p` or `tau_z`.
    pub operator: String,
    #[serde(flatten)]
    pub audit: BoundAudit,
}

/// Value of one quantity with its auxiliary data.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub value: f64,
    pub aux: Value,
}

impl Measurement {
    fn plain(value: f64) -> Self {
        Measurement { value, aux: json!({}) }
    }
}

/// Lazily built objects of one sweep point.
pub struct Point<'a> {
    config: &'a SweepConfig,
    pub hbar: f64,
    /// Lower end of the Weyl-law envelope window.
    pub window_end: f64,
    pub grid: Grid,
    potential: Potential,
    dec: OnceCell<SpectralDecomposition>,
    dec_fd2: OnceCell<SpectralDecomposition>,
    gamma: OnceCell<DensityOperator>,
    symbol: OnceCell<ClassicalSymbol>,
    kernel: OnceCell<InteractionKernel>,
    tf: OnceCell<TFSolution>,
    hartree: OnceCell<HartreeSolution>,
    report: OnceCell<HartreeTfReport>,
    /// Commutator audits gathered by [`Quantity::BoundMargin`].
    pub audits: Vec<AuditRecord>,
}

fn lazy<T>(cell: &OnceCell<T>, init: impl FnOnce() -> Result<T>) -> Result<&T> {
    if cell.get().is_none() {
        let value = init()?;
        let _ = cell.set(value);
    }
    Ok(cell.get().expect("initialized"))
}

/// `f(x - shift·e_axis)` by Fourier interpolation.
pub fn fourier_shift(f: &GridFunction<f64>, axis: usize, shift: f64) -> Result<GridFunction<f64>> {
    let grid = *f.grid();
    if axis >= grid.dim() {
        return Err(LabError::InvalidParameter(format!("axis {axis} on a {}-d grid", grid.dim())));
    }
    let n = grid.n();
    let d = grid.dim();
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fourier::fft_nd(&mut data, n, d, false);
    for (flat, slot) in data.iter_mut().enumerate() {
        let m = grid.multi_index(flat)[axis];
        if 2 * m == n {
            // Real part of the unresolved Nyquist mode.
            *slot *= (grid.wavenumber(m) * shift).cos();
        } else {
            *slot *= Complex64::from_polar(1.0, -grid.wavenumber(m) * shift);
        }
    }
    fourier::fft_nd(&mut data, n, d, true);
    let scale = 1.0 / grid.len() as f64;
    GridFunction::new(grid, data.iter().map(|c| c.re * scale).collect())
}

impl<'a> Point<'a> {
    /// Point at `hbar` on the policy grid.
    pub fn new(config: &'a SweepConfig, hbar: f64, window_end: f64) -> Result<Self> {
        let grid = config.grid.grid_for(hbar)?;
        let potential = config.potential.build(&grid)?;
        Ok(Point {
            config,
            hbar,
            window_end,
            grid,
            potential,
            dec: OnceCell::new(),
            dec_fd2: OnceCell::new(),
            gamma: OnceCell::new(),
            symbol: OnceCell::new(),
            kernel: OnceCell::new(),
            tf: OnceCell::new(),
            hartree: OnceCell::new(),
            report: OnceCell::new(),
            audits: Vec::new(),
        })
    }

    /// Grid data recorded on every row.
    pub fn grid_aux(&self) -> Value {
        json!({
            "dim": self.grid.dim(),
            "dx": self.grid.spacing(),
            "half_length": self.grid.half_length(),
            "policy": self.config.grid.describe(),
        })
    }

    fn dec(&self) -> Result<&SpectralDecomposition> {
        lazy(&self.dec, || diagonalize_schrodinger(&self.grid, &self.potential, self.hbar, self.config.scheme))
    }

    fn dec_fd2(&self) -> Result<&SpectralDecomposition> {
        lazy(&self.dec_fd2, || diagonalize_schrodinger(&self.grid, &self.potential, self.hbar, KineticScheme::Fd2))
    }

    fn gamma(&self) -> Result<&DensityOperator> {
        lazy(&self.gamma, || spectral_projector(self.dec()?, f64::NEG_INFINITY, 0.0, self.hbar))
    }

    fn symbol(&self) -> Result<&ClassicalSymbol> {
        lazy(&self.symbol, || classical_symbol(&self.grid, self.hbar, &self.potential, 0.0))
    }

    fn kernel(&self) -> Result<&InteractionKernel> {
        lazy(&self.kernel, || match &self.config.kernel {
            Some(k) => k.build(&self.grid),
            None => Ok(InteractionKernel::zero()),
        })
    }

    fn tf(&self) -> Result<&TFSolution> {
        lazy(&self.tf, || {
            let t = &self.config.tolerances;
            let sol = thomas_fermi_solve(&self.grid, &self.potential, self.kernel()?, t.tf_damping, t.tf_tol, t.tf_max_iter)?;
            if !sol.converged {
                return Err(LabError::Numerical(format!("Thomas–Fermi defect {:e} above tolerance", sol.residual)));
            }
            Ok(sol)
        })
    }

    fn hartree(&self) -> Result<&HartreeSolution> {
        lazy(&self.hartree, || {
            let mut settings = self.config.tolerances.scf;
            settings.scheme = self.config.scheme;
            hartree_scf(&self.grid, &self.potential, self.kernel()?, self.hbar, &settings)
        })
    }

    fn report(&self) -> Result<&HartreeTfReport> {
        lazy(&self.report, || {
            let tf = self.tf()?;
            hartree_vs_tf_report(self.hartree()?, tf, &thomas_fermi_symbol(tf, self.hbar)?)
        })
    }

    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn commutator_norm(&self, g: &Matrix, with_momentum: bool, p: f64) -> Result<f64> {
        let mut family = Vec::with_capacity(self.dim());
        for axis in 0..self.dim() {
            family.push(if with_momentum {
                linalg::commutator(&momentum_operator(&self.grid, self.hbar, axis)?, g)
            } else {
                position_commutator(&self.grid, g, axis)
            });
        }
        crate::schatten::family_schatten_norm(&family, p, self.hbar, self.dim())
    }

    fn shifts(&self) -> Vec<ShiftVector> {
        let (lo, hi) = self.config.shifts.dyadic;
        dyadic_samples(self.dim(), lo..hi)
    }

    fn besov_regime(&self, p: f64) -> Result<Measurement> {
        let gamma = self.gamma()?;
        let inv_conj = if p.is_infinite() { 1.0 } else { 1.0 - 1.0 / p };
        let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
        let (mut max, mut min) = (0.0_f64, f64::INFINITY);
        let mut ratios = Vec::new();
        for z in self.shifts() {
            let r = z.norm();
            let bound = (r / self.hbar.powf(inv_conj)).min(r.powf(inv_p)).min(1.0);
            let ratio = translated_difference_norm(gamma, &z, p, ShiftMode::FourierInterpolated)? / bound;
            max = max.max(ratio);
            min = min.min(ratio);
            ratios.push(ratio);
        }
        Ok(Measurement { value: max, aux: json!({ "min_ratio": min, "ratios": ratios }) })
    }

    fn resolvent(&self, order: u32) -> Result<Measurement> {
        let dec = self.dec()?;
        let samples = self.config.shifts.resolvent_samples.max(2);
        let (mut max, mut min) = (0.0_f64, f64::INFINITY);
        let mut values = Vec::with_capacity(samples);
        for i in 0..samples {
            let lambda = self.hbar * (1.0 / self.hbar).powf(i as f64 / (samples - 1) as f64);
            let v = resolvent_audit(dec, lambda.max(self.hbar), self.hbar, order)?.normalized;
            max = max.max(v);
            min = min.min(v);
            values.push(json!([lambda, v]));
        }
        Ok(Measurement { value: max, aux: json!({ "min": min, "samples": values }) })
    }

    fn bound_margin(&mut self) -> Result<Measurement> {
        let dec = self.dec()?;
        let gamma = self.gamma()?;
        let mu = dec.potential_floor() + 1.0;
        let tau = ShiftVector::new(
            (0..self.dim()).map(|a| if a == 0 { 0.25 } else { 0.0 }).collect(),
            (0..self.dim()).map(|a| if a == 0 { 0.1 } else { 0.0 }).collect(),
        )?;
        let operators = [
            ("x", position_operator(&self.grid, 0)?),
            ("p", momentum_operator(&self.grid, self.hbar, 0)?),
            ("tau_z", translation_unitary(&self.grid, &tau, self.hbar, ShiftMode::FourierInterpolated)?),
        ];
        let lambdas = [self.hbar, self.hbar.sqrt(), 0.25];
        let mut records = Vec::new();
        for (name, a) in &operators {
            let auditor = BoundAuditor::new(dec, gamma, a, None)?;
            for audit in auditor.audit_all(&lambdas, mu)? {
                records.push(AuditRecord { hbar: self.hbar, n: self.grid.n(), operator: name.to_string(), audit });
            }
        }
        let worst = records.iter().map(|r| r.audit.margin).fold(f64::INFINITY, f64::min);
        let count = records.len();
        self.audits.extend(records);
        Ok(Measurement { value: worst, aux: json!({ "audits": count, "mu": mu }) })
    }

    fn weyl_envelope(&self) -> Result<Measurement> {
        let samples = self.config.shifts.envelope_samples.max(1);
        let ratio = (self.window_end / self.hbar).min(1.0);
        let mut worst = 0.0_f64;
        let mut worst_scaled = 0.0_f64;
        for i in 0..samples {
            let h = self.hbar * ratio.powf(i as f64 / samples as f64);
            let audit = if i == 0 {
                weyl_audit_decomposed(self.dec()?, &self.potential, h, 0.0)?
            } else {
                let grid = self.config.grid.grid_for(h)?;
                weyl_audit(&grid, &self.config.potential.build(&grid)?, h, 0.0)?
            };
            worst = worst.max(audit.error);
            worst_scaled = worst_scaled.max(audit.error / (audit.classical * h));
        }
        Ok(Measurement {
            value: worst,
            aux: json!({ "samples": samples, "window_end": self.window_end, "max_error_over_classical_hbar": worst_scaled }),
        })
    }

    fn density_shift(&self) -> Result<Measurement> {
        let rho = self.gamma()?.density();
        let (lo, hi) = self.config.shifts.dyadic;
        let (mut max, mut min) = (0.0_f64, f64::INFINITY);
        let mut ratios = Vec::new();
        for j in lo..hi {
            let r = 2f64.powi(-j);
            let shifted = fourier_shift(&rho, 0, r)?;
            let diff = GridFunction::new(self.grid, shifted.values().iter().zip(rho.values()).map(|(a, b)| a - b).collect())?;
            let bound = (r / self.hbar).min(r.sqrt()).min(1.0);
            let ratio = diff.lp_norm(2.0) / bound;
            max = max.max(ratio);
            min = min.min(ratio);
            ratios.push(json!([r, ratio]));
        }
        Ok(Measurement { value: max, aux: json!({ "min_ratio": min, "ratios": ratios }) })
    }

    /// Evaluate `q`.
    pub fn measure(&mut self, q: Quantity) -> Result<Measurement> {
        let hbar = self.hbar;
        let d = self.dim();
        Ok(match q {
            Quantity::WeylError => {
                let a = weyl_audit_decomposed(self.dec()?, &self.potential, hbar, 0.0)?;
                Measurement {
                    value: a.error,
                    aux: json!({ "quantum": a.quantum, "classical": a.classical, "classical_times_hbar": a.classical * hbar }),
                }
            }
            Quantity::WeylEnvelope => self.weyl_envelope()?,
            Quantity::CommXL1 => Measurement::plain(self.commutator_norm(self.gamma()?.matrix(), false, 1.0)?),
            Quantity::CommPL1 => Measurement::plain(self.commutator_norm(self.gamma()?.matrix(), true, 1.0)?),
            Quantity::CommXL2Sq => Measurement::plain(self.commutator_norm(self.gamma()?.matrix(), false, 2.0)?.powi(2)),
            Quantity::CommPL2Sq => Measurement::plain(self.commutator_norm(self.gamma()?.matrix(), true, 2.0)?.powi(2)),
            Quantity::BesovP => {
                let s = &self.config.shifts;
                let est = besov_seminorm(self.gamma()?, s.besov_p, s.besov_s, &self.shifts(), ShiftMode::FourierInterpolated)?;
                Measurement { value: est.value, aux: json!({ "p": s.besov_p, "s": s.besov_s, "ratios": est.ratios }) }
            }
            Quantity::BesovRegimeP1 => self.besov_regime(1.0)?,
            Quantity::BesovRegimeP2 => self.besov_regime(2.0)?,
            Quantity::BesovRegimePInf => self.besov_regime(f64::INFINITY)?,
            Quantity::RhoL1 | Quantity::RhoL2 => {
                let rho = self.gamma()?.density();
                let diff = GridFunction::new(
                    self.grid,
                    rho.values().iter().zip(self.symbol()?.rho.values()).map(|(a, b)| a - b).collect(),
                )?;
                Measurement::plain(diff.lp_norm(if q == Quantity::RhoL1 { 1.0 } else { 2.0 }))
            }
            Quantity::WignerL2 => Measurement::plain(wigner(self.gamma()?)?.distance(&self.symbol()?.f, 2.0)?),
            Quantity::StateL1 => {
                let op_f = weyl_quantize(&self.symbol()?.f)?;
                Measurement::plain(schatten_norm(&(self.gamma()?.matrix() - op_f), 1.0, hbar, d)?)
            }
            Quantity::BoundMargin => self.bound_margin()?,
            Quantity::ResolventOrder1 => self.resolvent(1)?,
            Quantity::ResolventOrder2 => self.resolvent(2)?,
            Quantity::AgmonRatio | Quantity::AgmonGradientRatio => {
                let a = agmon_audit_tail_resolved(self.dec_fd2()?, &self.potential, hbar)?;
                let aux = json!({
                    "weighted_mass": a.weighted_mass,
                    "budget": a.budget,
                    "gradient_weighted_mass": a.gradient_weighted_mass,
                    "gradient_budget": a.gradient_budget,
                });
                let value = if q == Quantity::AgmonRatio {
                    a.weighted_mass / a.budget
                } else {
                    a.gradient_weighted_mass / a.gradient_budget
                };
                Measurement { value, aux }
            }
            Quantity::DensityGradientRatio => {
                let gamma = self.gamma()?;
                let rho = gamma.density();
                let mut grad = vec![0.0; self.grid.len()];
                for axis in 0..d {
                    let g = spectral_derivative(&rho, axis)?;
                    for (s, v) in grad.iter_mut().zip(g.values()) {
                        *s += v * v;
                    }
                }
                let lhs = grad.iter().map(|v| v.sqrt()).sum::<f64>() * self.grid.cell_volume();
                let rhs = quantum_gradients(gamma)?.dx_norm(1.0, hbar, d)?;
                Measurement { value: lhs / rhs, aux: json!({ "grad_rho_L1": lhs, "dx_gamma_L1": rhs }) }
            }
            Quantity::DensityShiftRatio => self.density_shift()?,
            Quantity::TfResidual => {
                let tf = self.tf()?;
                Measurement { value: tf.residual, aux: json!({ "iterations": tf.iterations }) }
            }
            Quantity::TfMass => Measurement::plain(self.tf()?.mass()),
            Quantity::HartreeResidual => {
                let s = self.hartree()?;
                if !s.converged {
                    return Err(LabError::Numerical(format!("SCF did not converge at hbar {hbar}")));
                }
                Measurement {
                    value: s.fixed_point_residual,
                    aux: json!({
                        "projector_residual": s.projector_residual,
                        "pinned_occupation": s.pinned_occupation,
                        "iterations": s.scf_history.len(),
                        "threshold_states": s.threshold_states,
                    }),
                }
            }
            Quantity::HartreeEnergy => Measurement::plain(self.hartree()?.energy),
            Quantity::HartreeVsProjector => {
                let diff = self.hartree()?.gamma.matrix() - self.gamma()?.matrix();
                Measurement::plain(linalg::operator_norm(&diff))
            }
            Quantity::TfRhoL1 => Measurement::plain(self.report()?.density_l1),
            Quantity::TfRhoL2 => Measurement::plain(self.report()?.density_l2),
            Quantity::TfWignerL2 => Measurement::plain(self.report()?.wigner_l2),
            Quantity::TfStateL1 => Measurement::plain(self.report()?.trace_distance),
            Quantity::RhoHfLinf => Measurement::plain(self.hartree()?.rho.max_abs()),
            Quantity::H4Gradient | Quantity::H4Hessian => {
                let beta = self.config.tolerances.h4_beta;
                let [grad, hess] = derivative_growth(&self.hartree()?.potential, beta)?;
                let value = if q == Quantity::H4Gradient { grad } else { hess };
                Measurement { value, aux: json!({ "beta": beta, "hessian_times_hbar": hess * hbar }) }
            }
            Quantity::PinnedOccupation => Measurement::plain(self.hartree()?.pinned_occupation.unwrap_or(0.0)),
            Quantity::HfCommXL1 => Measurement::plain(self.commutator_norm(self.hartree()?.gamma.matrix(), false, 1.0)?),
            Quantity::HfCommPL1 => Measurement::plain(self.commutator_norm(self.hartree()?.gamma.matrix(), true, 1.0)?),
        })
    }
}
