//! Raman-scheme parameters and the effective gate parameters derived from them.
//!
//! All frequencies are angular (ħ = 1). Config files quote values in units of 2π·MHz; those
//! are converted once with [`from_mhz`], which makes the time unit the microsecond.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Relative tolerance for the exact algebraic MS conditions.
pub const CONDITION_TOL: f64 = 1e-9;
/// Adiabaticity ratios above this are reported as a warning.
pub const ADIABATICITY_TOL: f64 = 1e-3;

/// `ν/2π` in MHz to angular frequency in rad/μs.
pub fn from_mhz(nu: f64) -> f64 {
    TAU * nu
}

/// Angular frequency in rad/μs to `ν/2π` in MHz.
pub fn to_mhz(omega: f64) -> f64 {
    omega / TAU
}

/// Raw drive and cavity parameters of the four-level Raman scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct RamanConfig {
    /// Vacuum Rabi half-frequency.
    pub g: f64,
    pub omega1: f64,
    pub omega2: f64,
    /// One-photon detunings Δ₁, Δ₂.
    pub detuning1: f64,
    pub detuning2: f64,
    /// Bare two-photon detunings δ₁, δ₂.
    pub raman_detuning1: f64,
    pub raman_detuning2: f64,
    /// Cavity field amplitude decay rate.
    pub kappa: f64,
    pub gamma_1g: f64,
    pub gamma_1e: f64,
    pub gamma_2g: f64,
    pub gamma_2e: f64,
    pub n_atoms: usize,
}

impl RamanConfig {
    /// Lossless two-atom configuration.
    pub fn new(g: f64, omega: (f64, f64), detuning: (f64, f64), raman_detuning: (f64, f64)) -> Self {
        Self {
            g,
            omega1: omega.0,
            omega2: omega.1,
            detuning1: detuning.0,
            detuning2: detuning.1,
            raman_detuning1: raman_detuning.0,
            raman_detuning2: raman_detuning.1,
            kappa: 0.0,
            gamma_1g: 0.0,
            gamma_1e: 0.0,
            gamma_2g: 0.0,
            gamma_2e: 0.0,
            n_atoms: 2,
        }
    }

    /// Builds the config from cavity detunings `Δ_C` and laser detunings `Δ_L` of both arms.
    pub fn from_cavity_laser(
        g: f64,
        omega: (f64, f64),
        cavity_detuning: (f64, f64),
        laser_detuning: (f64, f64),
    ) -> Self {
        Self::new(
            g,
            omega,
            (
                0.5 * (cavity_detuning.0 + laser_detuning.0),
                0.5 * (cavity_detuning.1 + laser_detuning.1),
            ),
            (cavity_detuning.0 - laser_detuning.0, cavity_detuning.1 - laser_detuning.1),
        )
    }

    /// Same spontaneous rate on all four branches.
    pub fn with_common_gamma(mut self, gamma: f64) -> Self {
        self.gamma_1g = gamma;
        self.gamma_1e = gamma;
        self.gamma_2g = gamma;
        self.gamma_2e = gamma;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    /// `Δ_{C_i}` for arm 1 or 2.
    pub fn cavity_detuning(&self, arm: u8) -> f64 {
        let (big, small) = self.arm(arm);
        big + 0.5 * small
    }

    /// `Δ_{L_i}` for arm 1 or 2.
    pub fn laser_detuning(&self, arm: u8) -> f64 {
        let (big, small) = self.arm(arm);
        big - 0.5 * small
    }

    fn arm(&self, arm: u8) -> (f64, f64) {
        match arm {
            1 => (self.detuning1, self.raman_detuning1),
            _ => (self.detuning2, self.raman_detuning2),
        }
    }

    /// Multiplies every frequency by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            g: self.g * s,
            omega1: self.omega1 * s,
            omega2: self.omega2 * s,
            detuning1: self.detuning1 * s,
            detuning2: self.detuning2 * s,
            raman_detuning1: self.raman_detuning1 * s,
            raman_detuning2: self.raman_detuning2 * s,
            kappa: self.kappa * s,
            gamma_1g: self.gamma_1g * s,
            gamma_1e: self.gamma_1e * s,
            gamma_2g: self.gamma_2g * s,
            gamma_2e: self.gamma_2e * s,
            n_atoms: self.n_atoms,
        }
    }

    fn rates(&self) -> [f64; 5] {
        [self.kappa, self.gamma_1g, self.gamma_1e, self.gamma_2g, self.gamma_2e]
    }

    pub fn validate(&self) -> Result<()> {
        if self.detuning1 == 0.0 || self.detuning2 == 0.0 {
            return Err(Error::SingularParameter("one-photon detuning is zero".into()));
        }
        if self.rates().iter().any(|&r| r < 0.0 || !r.is_finite()) {
            return Err(Error::InvalidParameter("decay rates must be finite and >= 0".into()));
        }
        if self.n_atoms == 0 {
            return Err(Error::InvalidParameter("n_atoms must be >= 1".into()));
        }
        Ok(())
    }
}

/// Gate parameters after adiabatic elimination and removal of the constant light shifts.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveParams {
    pub chi: f64,
    pub g_eff: f64,
    pub delta: f64,
    pub stark_c: f64,
    pub stark_g: f64,
    pub stark_e: f64,
    pub delta1_prime: f64,
    pub delta2_prime: f64,
    pub gamma_eff: f64,
}

impl EffectiveParams {
    /// Parameters of `H'_eff` given directly, with no light shifts or spontaneous decay.
    pub fn gate(chi: f64, g_eff: f64, delta: f64) -> Self {
        Self {
            chi,
            g_eff,
            delta,
            stark_c: 0.0,
            stark_g: 0.0,
            stark_e: 0.0,
            delta1_prime: delta,
            delta2_prime: delta,
            gamma_eff: 0.0,
        }
    }

    /// `α = −g_eff/δ`, the dressed-state displacement.
    pub fn alpha(&self) -> f64 {
        -self.g_eff / self.delta
    }

    pub fn gate_time(&self) -> Result<f64> {
        gate_time(self.delta, self.g_eff)
    }
}

/// Adiabatic elimination of the excited levels.
///
/// Every atom shifts the cavity by `Δ_c = (g²/2)(1/Δ₁ + 1/Δ₂)`, so the photon frame removed
/// from `δ'` rotates at `N Δ_c`.
pub fn derive_effective(cfg: &RamanConfig) -> Result<EffectiveParams> {
    cfg.validate()?;
    let (d1, d2) = (cfg.detuning1, cfg.detuning2);
    let g2 = cfg.g * cfg.g;
    let stark_c = 0.5 * g2 * (1.0 / d1 + 1.0 / d2);
    let stark_g = cfg.omega2 * cfg.omega2 / (4.0 * d2);
    let stark_e = cfg.omega1 * cfg.omega1 / (4.0 * d1);
    let cavity = cfg.n_atoms as f64 * stark_c;
    let delta1_prime = cfg.raman_detuning1 + cavity + stark_g - stark_e;
    let delta2_prime = cfg.raman_detuning2 + cavity + stark_e - stark_g;
    let gamma_1 = 0.5 * (cfg.gamma_1g + cfg.gamma_1e) * (cfg.omega1 / (2.0 * d1)).powi(2);
    let gamma_2 = 0.5 * (cfg.gamma_2g + cfg.gamma_2e) * (cfg.omega2 / (2.0 * d2)).powi(2);
    Ok(EffectiveParams {
        chi: g2 * (1.0 / d1 - 1.0 / d2),
        g_eff: cfg.g * cfg.omega1 / d1,
        delta: delta1_prime,
        stark_c,
        stark_g,
        stark_e,
        delta1_prime,
        delta2_prime,
        gamma_eff: 0.5 * (gamma_1 + gamma_2),
    })
}

/// Outcome of one algebraic condition.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionCheck {
    pub passed: bool,
    /// Relative mismatch between the two sides.
    pub mismatch: f64,
    pub tolerance: f64,
}

impl ConditionCheck {
    fn relative(lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs());
        let mismatch = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
        Self { passed: mismatch <= tolerance, mismatch, tolerance }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MsConditionReport {
    /// `δ'₁ = δ'₂`.
    pub detuning_match: ConditionCheck,
    /// `Ω₁/Ω₂ = Δ₁/Δ₂`.
    pub rabi_ratio: ConditionCheck,
    /// `max(|g|, |Ω_i|, |δ_i|) / min(|Δ_i|)`.
    pub adiabaticity_ratio: f64,
    pub adiabaticity_tolerance: f64,
    pub adiabatic: bool,
}

impl MsConditionReport {
    pub fn all_passed(&self) -> bool {
        self.detuning_match.passed && self.rabi_ratio.passed
    }
}

pub fn check_ms_conditions(cfg: &RamanConfig) -> MsConditionReport {
    let big = cfg.detuning1.abs().min(cfg.detuning2.abs());
    let small = [cfg.g, cfg.omega1, cfg.omega2, cfg.raman_detuning1, cfg.raman_detuning2]
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let adiabaticity_ratio = if big == 0.0 { f64::INFINITY } else { small / big };
    let detuning_match = match derive_effective(cfg) {
        Ok(eff) => ConditionCheck::relative(eff.delta1_prime, eff.delta2_prime, CONDITION_TOL),
        Err(_) => ConditionCheck { passed: false, mismatch: f64::INFINITY, tolerance: CONDITION_TOL },
    };
    MsConditionReport {
        detuning_match,
        // cross-multiplied so that Ω₂ = 0 is not singular
        rabi_ratio: ConditionCheck::relative(
            cfg.omega1 * cfg.detuning2,
            cfg.omega2 * cfg.detuning1,
            CONDITION_TOL,
        ),
        adiabaticity_ratio,
        adiabaticity_tolerance: ADIABATICITY_TOL,
        adiabatic: adiabaticity_ratio <= ADIABATICITY_TOL,
    }
}

/// `|δ| = 2√m g_eff`: the detuning that closes `m` phase-space loops at the gate time.
pub fn delta_for_loops(m: u32, g_eff: f64) -> Result<f64> {
    if m < 1 {
        return Err(Error::InvalidParameter("loop count m must be >= 1".into()));
    }
    if g_eff == 0.0 {
        return Err(Error::SingularParameter("g_eff = 0".into()));
    }
    Ok(2.0 * (m as f64).sqrt() * g_eff.abs())
}

/// `t_gate = π|δ| / (2 g_eff²)`.
pub fn gate_time(delta: f64, g_eff: f64) -> Result<f64> {
    if g_eff == 0.0 {
        return Err(Error::SingularParameter("g_eff = 0".into()));
    }
    Ok(PI * delta.abs() / (2.0 * g_eff * g_eff))
}

/// ⁸⁷Rb D1-line parameters (angular frequencies).
#[derive(Clone, Debug, PartialEq)]
pub struct Rb87Config {
    pub g: f64,
    pub kappa: f64,
    pub detuning1: f64,
    pub detuning2: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub delta: f64,
    /// Excited-state hyperfine splitting ω'₁₂.
    pub omega12: f64,
    /// Half the natural decay rate (2γ = 2π·5.75 MHz).
    pub gamma: f64,
}

impl Rb87Config {
    /// Builds the config from values in units of 2π·MHz.
    #[allow(clippy::too_many_arguments)]
    pub fn from_mhz(
        g: f64,
        kappa: f64,
        detuning1: f64,
        detuning2: f64,
        omega1: f64,
        omega2: f64,
        delta: f64,
    ) -> Self {
        Self {
            g: from_mhz(g),
            kappa: from_mhz(kappa),
            detuning1: from_mhz(detuning1),
            detuning2: from_mhz(detuning2),
            omega1: from_mhz(omega1),
            omega2: from_mhz(omega2),
            delta: from_mhz(delta),
            omega12: from_mhz(812.0),
            gamma: from_mhz(5.75 / 2.0),
        }
    }

    /// Fabry–Perot cavity set. The tabulated detunings are red detunings and enter negative.
    pub fn table1_set1() -> Self {
        Self::from_mhz(60.0, 1.5, -10000.0, -3980.0, -50.0, -17.6, 19.6)
    }

    /// Micro-resonator set, same sign convention as set 1.
    pub fn table1_set2() -> Self {
        Self::from_mhz(200.0, 0.1, -20000.0, -13977.0, -50.0, -33.9, 16.3)
    }

    /// Replaces Ω₂ by the value that balances the two Raman couplings.
    pub fn balanced(&self) -> Result<Self> {
        Ok(Self { omega2: balance_omega2(self)?, ..self.clone() })
    }

    fn check(&self) -> Result<()> {
        if self.detuning1 == 0.0 || self.detuning2 == 0.0 {
            return Err(Error::SingularParameter("one-photon detuning is zero".into()));
        }
        if self.detuning2 + self.omega12 == 0.0 {
            return Err(Error::SingularParameter("Δ₂ + ω'₁₂ = 0".into()));
        }
        if self.omega12 <= 0.0 {
            return Err(Error::InvalidParameter("ω'₁₂ must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rb87Derived {
    pub effective: EffectiveParams,
    /// Coupling of the `a|e⟩⟨g|` arm.
    pub g_eff_1: f64,
    /// Coupling of the `a|g⟩⟨e|` arm.
    pub g_eff_2: f64,
    /// `|g_eff_1 − g_eff_2| / max(|g_eff_1|, |g_eff_2|)`.
    pub coupling_mismatch: f64,
    /// Set when the mismatch exceeds [`CONDITION_TOL`].
    pub unbalanced: bool,
}

/// Effective couplings and dispersive shift including Clebsch–Gordan factors and the
/// off-resonant `F' = 1` level.
pub fn derive_rb87(cfg: &Rb87Config) -> Result<Rb87Derived> {
    cfg.check()?;
    let (g, d1, d2) = (cfg.g, cfg.detuning1, cfg.detuning2);
    let d2p = d2 + cfg.omega12;
    let sqrt6 = 6f64.sqrt();
    let g_eff_1 = g * cfg.omega1 / (sqrt6 * d1);
    let g_eff_2 = g * cfg.omega2 / (2.0 * sqrt6) * (1.0 / d2 + 1.0 / d2p);
    let chi = g * g * (1.0 / (4.0 * d2p) + 1.0 / (12.0 * d2) - 1.0 / (3.0 * d1));
    let check = ConditionCheck::relative(g_eff_1, g_eff_2, CONDITION_TOL);
    let mut effective = EffectiveParams::gate(chi, g_eff_1, cfg.delta);
    effective.gamma_eff = cfg.gamma * (cfg.omega1 / (2.0 * d1)).powi(2);
    Ok(Rb87Derived {
        effective,
        g_eff_1,
        g_eff_2,
        coupling_mismatch: check.mismatch,
        unbalanced: !check.passed,
    })
}

/// Ω₂ that makes `g_eff⁽¹⁾ = g_eff⁽²⁾`.
pub fn balance_omega2(cfg: &Rb87Config) -> Result<f64> {
    cfg.check()?;
    let sum = 1.0 / cfg.detuning2 + 1.0 / (cfg.detuning2 + cfg.omega12);
    if sum == 0.0 {
        return Err(Error::SingularParameter("1/Δ₂ + 1/(Δ₂ + ω'₁₂) = 0".into()));
    }
    Ok(2.0 * cfg.omega1 / (cfg.detuning1 * sum))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    /// Drive-induced spontaneous rate averaged over the two arms.
    pub gamma_eff: f64,
    /// Per-arm rates `γ̄_j Ω_j² / 4Δ_j²` with `γ̄_j` the mean of the arm's two branches.
    pub gamma_eff_arms: (f64, f64),
    /// `γ_eff · t_gate`.
    pub p_spont: f64,
    /// `2κ ⟨n⟩ t_gate` with the loop-averaged photon number `⟨n⟩ = 2 (g_eff/δ)²`; equals `2πκ/|δ|`.
    pub p_kappa_scale: f64,
}

pub fn diagnostics(cfg: &RamanConfig, eff: &EffectiveParams) -> Result<Diagnostics> {
    let gamma_1 = 0.5 * (cfg.gamma_1g + cfg.gamma_1e) * (cfg.omega1 / (2.0 * cfg.detuning1)).powi(2);
    let gamma_2 = 0.5 * (cfg.gamma_2g + cfg.gamma_2e) * (cfg.omega2 / (2.0 * cfg.detuning2)).powi(2);
    let gamma_eff = 0.5 * (gamma_1 + gamma_2);
    let t_gate = gate_time(eff.delta, eff.g_eff)?;
    let mean_photons = 2.0 * (eff.g_eff / eff.delta).powi(2);
    Ok(Diagnostics {
        gamma_eff,
        gamma_eff_arms: (gamma_1, gamma_2),
        p_spont: gamma_eff * t_gate,
        p_kappa_scale: 2.0 * cfg.kappa * mean_photons * t_gate,
    })
}
