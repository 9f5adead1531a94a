//! Hamiltonian builders: the four-level Raman model, the effective qubit–photon model, its
//! time-independent interaction-picture form, and the ⁸⁷Rb effective model.
//!
//! Level order per atom: `(g, e)` for qubits, `(g, e, r₁, r₂)` for the Raman model and
//! `(g, e, u)` for ⁸⁷Rb.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::params::{derive_rb87, EffectiveParams, RamanConfig, Rb87Config};
use crate::qops::{
    collective_spin, embed, fock_annihilate, transition, ComplexOperator, HilbertLayout, Matrix, Site, SpinAxis,
};

pub const G: usize = 0;
pub const E: usize = 1;
pub const R1: usize = 2;
pub const R2: usize = 3;
/// Leakage level of the ⁸⁷Rb model.
pub const U: usize = 2;

/// `H(t) = H₀ + Σ_k (A_k e^{−iω_k t} + A_k† e^{iω_k t})`.
#[derive(Clone, Debug)]
pub struct TimeDependentHamiltonian {
    static_part: ComplexOperator,
    oscillating: Vec<(ComplexOperator, f64)>,
}

impl TimeDependentHamiltonian {
    /// Fails if the static part is not Hermitian or layouts disagree. Terms sharing a
    /// frequency are merged.
    pub fn new(static_part: ComplexOperator, oscillating: Vec<(ComplexOperator, f64)>) -> Result<Self> {
        let scale = static_part.matrix().iter().map(|z| z.norm()).fold(1.0, f64::max);
        let dev = static_part.max_hermitian_deviation();
        if dev > 1e-12 * scale {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let mut merged: Vec<(ComplexOperator, f64)> = Vec::new();
        for (op, w) in oscillating {
            if op.layout() != static_part.layout() {
                return Err(Error::DimensionMismatch { expected: static_part.dim(), found: op.dim() });
            }
            if op.is_zero() {
                continue;
            }
            match merged.iter_mut().find(|(_, w2)| *w2 == w) {
                Some((acc, _)) => *acc = &*acc + &op,
                None => merged.push((op, w)),
            }
        }
        Ok(Self { static_part, oscillating: merged })
    }

    pub fn time_independent(h: ComplexOperator) -> Result<Self> {
        Self::new(h, Vec::new())
    }

    pub fn layout(&self) -> &HilbertLayout {
        self.static_part.layout()
    }

    pub fn dim(&self) -> usize {
        self.static_part.dim()
    }

    pub fn static_part(&self) -> &ComplexOperator {
        &self.static_part
    }

    pub fn oscillating_parts(&self) -> &[(ComplexOperator, f64)] {
        &self.oscillating
    }

    pub fn is_static(&self) -> bool {
        self.oscillating.is_empty()
    }

    /// Period `2π/|ω|` when every oscillating term has the same `|ω|`.
    pub fn period(&self) -> Option<f64> {
        let w = self.oscillating.first()?.1.abs();
        if w == 0.0 || self.oscillating.iter().any(|(_, v)| v.abs() != w) {
            return None;
        }
        Some(std::f64::consts::TAU / w)
    }

    /// Dense `H(t)`.
    pub fn at(&self, t: f64) -> Matrix {
        let mut h = self.static_part.matrix().clone();
        for (op, w) in &self.oscillating {
            let ph = C64::from_polar(1.0, -w * t);
            let m = op.matrix();
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    h[(i, j)] += ph * m[(i, j)] + (ph * m[(j, i)]).conj();
                }
            }
        }
        h
    }
}

fn check_levels(layout: &HilbertLayout, levels: usize, what: &str) -> Result<()> {
    if layout.atom_levels().iter().any(|&l| l != levels) {
        return Err(Error::InvalidDimension(format!("{what} needs {levels} levels per atom")));
    }
    Ok(())
}

fn photon_a(layout: &HilbertLayout) -> Result<ComplexOperator> {
    embed(&fock_annihilate(layout.n_max())?, Site::Photon, layout)
}

fn atom_op(layout: &HilbertLayout, atom: usize, i: usize, j: usize) -> Result<ComplexOperator> {
    embed(&transition(layout.atom_levels()[atom], i, j), Site::Atom(atom), layout)
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Four-level Raman Hamiltonian in the frame rotating with the bare level energies
/// shifted by the one-photon detunings.
pub fn build_full_raman(cfg: &RamanConfig, layout: &HilbertLayout) -> Result<TimeDependentHamiltonian> {
    check_levels(layout, 4, "the Raman model")?;
    cfg.validate()?;
    let a = photon_a(layout)?;
    let mut h0 = ComplexOperator::zeros(layout);
    let mut arm1 = ComplexOperator::zeros(layout);
    let mut arm2 = ComplexOperator::zeros(layout);
    for k in 0..layout.n_atoms() {
        h0 = &h0 - &atom_op(layout, k, R1, R1)?.scale(c(cfg.detuning1));
        h0 = &h0 - &atom_op(layout, k, R2, R2)?.scale(c(cfg.detuning2));
        // drive |r₁⟩⟨e| e^{iδ₁t/2} is the conjugate of |e⟩⟨r₁| e^{−iδ₁t/2}
        arm1 = &arm1 + &atom_op(layout, k, E, R1)?.scale(c(0.5 * cfg.omega1));
        arm1 = &arm1 + &(&a * &atom_op(layout, k, R1, G)?).scale(c(cfg.g));
        arm2 = &arm2 + &atom_op(layout, k, G, R2)?.scale(c(0.5 * cfg.omega2));
        arm2 = &arm2 + &(&a * &atom_op(layout, k, R2, E)?).scale(c(cfg.g));
    }
    TimeDependentHamiltonian::new(h0, vec![(arm1, 0.5 * cfg.raman_detuning1), (arm2, 0.5 * cfg.raman_detuning2)])
}

/// `χ a†a S_z + g_eff (e^{−iδt} a + e^{iδt} a†) S_x`.
pub fn build_effective(eff: &EffectiveParams, layout: &HilbertLayout) -> Result<TimeDependentHamiltonian> {
    check_levels(layout, 2, "the effective model")?;
    let a = photon_a(layout)?;
    let n = &a.adjoint() * &a;
    let sz = collective_spin(layout, SpinAxis::Z, (G, E))?;
    let sx = collective_spin(layout, SpinAxis::X, (G, E))?;
    TimeDependentHamiltonian::new((&n * &sz).scale(c(eff.chi)), vec![((&a * &sx).scale(c(eff.g_eff)), eff.delta)])
}

/// `H_I = χ a†a S_z + δ a†a + g_eff (a + a†) S_x`, the effective model seen from the frame
/// `U_I(t) = e^{−iδt a†a}`.
pub fn build_interaction_static(eff: &EffectiveParams, layout: &HilbertLayout) -> Result<ComplexOperator> {
    check_levels(layout, 2, "the effective model")?;
    if eff.delta == 0.0 {
        return Err(Error::SingularParameter("δ = 0".into()));
    }
    let a = photon_a(layout)?;
    let ad = a.adjoint();
    let n = &ad * &a;
    let sz = collective_spin(layout, SpinAxis::Z, (G, E))?;
    let sx = collective_spin(layout, SpinAxis::X, (G, E))?;
    let h = &(&(&n * &sz).scale(c(eff.chi)) + &n.scale(c(eff.delta))) + &(&(&a + &ad) * &sx).scale(c(eff.g_eff));
    Ok(h)
}

/// Effective ⁸⁷Rb model on `(g, e, u)` atoms: `χ a†a S_z` plus the two Raman arms
/// `(g_eff⁽¹⁾/2) a|e⟩⟨g| + (g_eff⁽²⁾/2) a|g⟩⟨e|` at frequency δ. The leakage level has no
/// Hamiltonian matrix elements.
pub fn build_rb87_effective(cfg: &Rb87Config, layout: &HilbertLayout) -> Result<TimeDependentHamiltonian> {
    check_levels(layout, 3, "the ⁸⁷Rb model")?;
    let d = derive_rb87(cfg)?;
    let a = photon_a(layout)?;
    let n = &a.adjoint() * &a;
    let sz = collective_spin(layout, SpinAxis::Z, (G, E))?;
    let mut arm = ComplexOperator::zeros(layout);
    for k in 0..layout.n_atoms() {
        let up = atom_op(layout, k, E, G)?.scale(c(0.5 * d.g_eff_1));
        let down = atom_op(layout, k, G, E)?.scale(c(0.5 * d.g_eff_2));
        arm = &arm + &(&a * &(&up + &down));
    }
    TimeDependentHamiltonian::new((&n * &sz).scale(c(d.effective.chi)), vec![(arm, cfg.delta)])
}
