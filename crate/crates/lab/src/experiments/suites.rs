//! Measurement suites behind the CLI subcommands.
//!
//! A suite fills in the quantities and fits a configuration leaves unset; explicit
//! lists in the configuration always win.

use super::config::{FitSpec, KernelSpec, SweepConfig};
use super::{run_sweep, Report};
use crate::Result;

/// Sweep-based subcommands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Weyl,
    Comm,
    Besov,
    Agmon,
    Tf,
    Hartree,
}

pub const ANALOGUE: &str = "d=1 analogue";

fn fit(quantity: &str, target: f64, log_power: f64, label: &str) -> FitSpec {
    FitSpec { quantity: quantity.to_string(), target, log_power, label: label.to_string() }
}

impl Suite {
    pub const ALL: [Suite; 6] = [Suite::Weyl, Suite::Comm, Suite::Besov, Suite::Agmon, Suite::Tf, Suite::Hartree];

    pub fn parse(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Subcommand name, also the stem of the CSV file.
    pub fn name(self) -> &'static str {
        match self {
            Suite::Weyl => "weyl",
            Suite::Comm => "comm",
            Suite::Besov => "besov",
            Suite::Agmon => "agmon",
            Suite::Tf => "tf",
            Suite::Hartree => "hartree",
        }
    }

    /// Quantities measured when the configuration names none.
    pub fn quantities(self) -> &'static [&'static str] {
        match self {
            Suite::Weyl => &["weyl_error", "weyl_envelope", "rho_L1", "rho_L2", "wigner_L2", "state_L1"],
            Suite::Comm => &[
                "comm_x_L1",
                "comm_p_L1",
                "comm_x_L2sq",
                "comm_p_L2sq",
                "bound_margin",
                "resolvent_order1",
                "resolvent_order2",
            ],
            Suite::Besov => &[
                "besov_p",
                "besov_regime_p1",
                "besov_regime_p2",
                "besov_regime_pinf",
                "density_gradient_ratio",
                "density_shift_ratio",
            ],
            Suite::Agmon => &["agmon_ratio", "agmon_gradient_ratio"],
            Suite::Tf => &["tf_residual", "tf_mass"],
            Suite::Hartree => &[
                "hartree_residual",
                "hartree_energy",
                "hartree_vs_projector",
                "tf_rho_L1",
                "tf_rho_L2",
                "tf_wigner_L2",
                "tf_state_L1",
                "rho_hf_Linf",
                "h4_gradient",
                "h4_hessian",
                "pinned_occupation",
                "hf_comm_x_L1",
                "hf_comm_p_L1",
            ],
        }
    }

    /// Fits requested when the configuration names none.
    ///
    /// Hartree commutators get a `√|ln ħ|` correction for a Coulomb-type exponent `a ≥ 1`.
    pub fn fits(self, kernel: Option<&KernelSpec>) -> Vec<FitSpec> {
        match self {
            Suite::Weyl => vec![
                fit("weyl_envelope", 1.0, 0.0, ""),
                fit("rho_L1", 0.5, 0.0, ANALOGUE),
                fit("rho_L2", 1.0 / 3.0, 0.0, ANALOGUE),
                fit("wigner_L2", 0.25, 0.0, ANALOGUE),
            ],
            Suite::Comm => ["comm_x_L1", "comm_p_L1", "comm_x_L2sq", "comm_p_L2sq"]
                .iter()
                .map(|q| fit(q, 1.0, 0.0, ""))
                .collect(),
            Suite::Besov => vec![fit("besov_p", 0.0, 0.0, "")],
            Suite::Agmon | Suite::Tf => Vec::new(),
            Suite::Hartree => {
                let coulomb = kernel.is_some_and(|k| k.exponent >= 1.0);
                let log_power = if coulomb { 0.5 } else { 0.0 };
                vec![
                    fit("tf_rho_L1", 0.5, 0.0, ANALOGUE),
                    fit("tf_rho_L2", 1.0 / 3.0, 0.0, ANALOGUE),
                    fit("tf_wigner_L2", 0.25, 0.0, ANALOGUE),
                    fit("hf_comm_x_L1", 1.0, log_power, ""),
                    fit("hf_comm_p_L1", 1.0, log_power, ""),
                ]
            }
        }
    }

    /// `config` with unset quantities and fits filled in.
    pub fn configure(self, mut config: SweepConfig) -> SweepConfig {
        if config.quantities.is_none() {
            config.quantities = Some(self.quantities().iter().map(|q| q.to_string()).collect());
        }
        if config.fits.is_none() {
            config.fits = Some(self.fits(config.kernel.as_ref()));
        }
        config
    }

    /// Configure and run.
    pub fn run(self, config: SweepConfig) -> Result<Report> {
        run_sweep(&self.configure(config))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{PotentialSpec, Quantity};

    #[test]
    fn suites_name_known_quantities() {
        let config = SweepConfig::new(PotentialSpec::ShiftedHarmonic { mu: 1.0 });
        for suite in Suite::ALL {
            assert_eq!(Suite::parse(suite.name()), Some(suite));
            for q in suite.quantities() {
                assert!(Quantity::parse(q).is_some(), "{q}");
            }
            for f in suite.fits(config.kernel.as_ref()) {
                assert!(suite.quantities().contains(&f.quantity.as_str()), "{}", f.quantity);
            }
        }
        assert!(Suite::parse("identities").is_none());
    }

    #[test]
    fn explicit_lists_win() {
        let mut config = SweepConfig::new(PotentialSpec::ShiftedHarmonic { mu: 1.0 });
        config.quantities = Some(vec!["weyl_error".into()]);
        let configured = Suite::Weyl.configure(config);
        assert_eq!(configured.quantities.unwrap(), vec!["weyl_error".to_string()]);
        assert_eq!(configured.fits.unwrap().len(), 4);
    }

    #[test]
    fn coulomb_kernels_get_the_log_correction() {
        let mut config = SweepConfig::new(PotentialSpec::ShiftedHarmonic { mu: 1.0 });
        config.kernel = Some(KernelSpec { strength: 0.2, exponent: 1.0, softening: None, softening_cells: Some(2.0) });
        let fits = Suite::Hartree.fits(config.kernel.as_ref());
        assert_eq!(fits.iter().find(|f| f.quantity == "hf_comm_x_L1").unwrap().log_power, 0.5);
        config.kernel.as_mut().unwrap().exponent = 0.5;
        assert!(Suite::Hartree.fits(config.kernel.as_ref()).iter().all(|f| f.log_power == 0.0));
    }
}
