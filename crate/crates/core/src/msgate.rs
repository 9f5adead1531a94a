//! Closed-form ideal Mølmer–Sørensen gate.
//!
//! `H_MS = g_eff (e^{−iδt} a + e^{iδt} a†) S_x` integrates exactly to
//! `U_MS(t) = exp(−i(α a† + α* a) S_x) · exp(iβ S_x²)` with
//! `α(t) = i (g_eff/δ)(1 − e^{iδt})` and `β(t) = (g_eff/δ)² (δt − sin δt)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonians::{E, G};
use crate::qops::{
    collective_spin, embed, expm_hermitian, fock_annihilate, ComplexOperator, HilbertLayout, Matrix, Site, SpinAxis,
    Vector, I, ONE, ZERO,
};

/// Phase-space loop of the bosonic mode driven by `H_MS`.
#[derive(Clone, Debug, PartialEq)]
pub struct MsTrajectory {
    pub g_eff: f64,
    pub delta: f64,
}

impl MsTrajectory {
    pub fn new(g_eff: f64, delta: f64) -> Result<Self> {
        if delta == 0.0 || !delta.is_finite() {
            return Err(Error::SingularParameter("δ = 0".into()));
        }
        Ok(Self { g_eff, delta })
    }

    /// `δ = 2√m g_eff`, so that the gate closes after `m` loops.
    pub fn with_loops(m: u32, g_eff: f64) -> Result<Self> {
        Self::new(g_eff, crate::params::delta_for_loops(m, g_eff)?)
    }

    /// Loop period `2π/|δ|`.
    pub fn tau(&self) -> f64 {
        TAU / self.delta.abs()
    }

    pub fn gate_time(&self) -> Result<f64> {
        crate::params::gate_time(self.delta, self.g_eff)
    }

    /// `(g_eff/δ)² π`, the area of one loop.
    pub fn area(&self) -> f64 {
        PI * (self.g_eff / self.delta).powi(2)
    }

    /// Number of loops completed by `t`, rounded to the nearest integer.
    pub fn loops(&self) -> Result<f64> {
        Ok((self.gate_time()? / self.tau()).round())
    }

    pub fn alpha_t(&self, t: f64) -> C64 {
        I * (self.g_eff / self.delta) * (ONE - C64::from_polar(1.0, self.delta * t))
    }

    pub fn beta_t(&self, t: f64) -> f64 {
        let x = self.delta * t;
        (self.g_eff / self.delta).powi(2) * (x - x.sin())
    }

    /// `U_MS(t)` on a qubit layout, factors multiplied in the order written above.
    pub fn u_ms(&self, t: f64, layout: &HilbertLayout) -> Result<ComplexOperator> {
        if layout.atom_levels().iter().any(|&l| l != 2) {
            return Err(Error::InvalidDimension("U_MS needs two-level atoms".into()));
        }
        let a = embed(&fock_annihilate(layout.n_max())?, Site::Photon, layout)?;
        let sx = collective_spin(layout, SpinAxis::X, (G, E))?;
        let alpha = self.alpha_t(t);
        let gen = &(&a.adjoint().scale(alpha) + &a.scale(alpha.conj())) * &sx;
        let displace = expm_hermitian(gen.matrix(), 1.0)?;
        let sx2 = &sx * &sx;
        let phase = expm_hermitian(sx2.matrix(), -self.beta_t(t))?;
        ComplexOperator::new(layout.clone(), displace * phase)
    }
}

/// Computational two-qubit state `|φ_i⟩`, `i = 1..4` for `|gg⟩, |ge⟩, |eg⟩, |ee⟩`.
pub fn computational_state(i: usize) -> Result<Vector> {
    if !(1..=4).contains(&i) {
        return Err(Error::InvalidParameter(format!("state index {i} outside 1..=4")));
    }
    let mut v = Vector::zeros(4);
    v[i - 1] = ONE;
    Ok(v)
}

/// Truth table of the ideal gate as a 4×4 matrix on `(gg, ge, eg, ee)`; column `i` is the
/// target `|Φ_i^{(±)}⟩` with `±` the sign of δ.
pub fn ideal_gate_map(delta_sign: f64) -> Matrix {
    let s = if delta_sign < 0.0 { -I } else { I };
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    #[rustfmt::skip]
    let m = Matrix::from_row_slice(4, 4, &[
        ONE,   ZERO,  ZERO,  s,
        ZERO,  ONE,   s,     ZERO,
        ZERO,  s,     ONE,   ZERO,
        s,     ZERO,  ZERO,  ONE,
    ]);
    m * h
}

/// `|Φ_i^{(±)}⟩`.
pub fn target_state(i: usize, delta_sign: f64) -> Result<Vector> {
    Ok(ideal_gate_map(delta_sign) * computational_state(i)?)
}

/// `e^{iβ S_x²}` for two qubits as a 4×4 matrix.
pub fn atomic_phase_gate(beta: f64) -> Matrix {
    let layout = HilbertLayout::qubits(2, 1).expect("static layout");
    let sx = collective_spin(&layout, SpinAxis::X, (G, E)).expect("qubit layout");
    let sx2 = crate::qops::partial_trace_photon((&sx * &sx).matrix(), &layout) * C64::new(0.5, 0.0);
    expm_hermitian(&sx2, -beta).expect("S_x² is Hermitian")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qops::{max_abs_diff, unitarity_defect, Ket};

    fn fidelity(a: &Vector, b: &Vector) -> f64 {
        a.dotc(b).norm_sqr()
    }

    #[test]
    fn alpha_examples() {
        let tr = MsTrajectory::new(1.0, 2.0).unwrap();
        assert_eq!(tr.alpha_t(0.0), ZERO);
        assert!(tr.alpha_t(TAU / 2.0).norm() < 1e-15);
        assert!((tr.alpha_t(PI / 2.0) - I).norm() < 1e-15);
        for k in 0..=7 {
            assert!(tr.alpha_t(k as f64 * tr.tau()).norm() <= 1e-12);
        }
        assert!(MsTrajectory::new(1.0, 0.0).is_err());
    }

    #[test]
    fn beta_examples() {
        for sign in [1.0, -1.0] {
            let tr = MsTrajectory::new(1.0, sign * 2.0).unwrap();
            assert_eq!(tr.beta_t(0.0), 0.0);
            assert!((tr.beta_t(tr.tau()) - sign * PI / 2.0).abs() < 1e-14);
            assert!((tr.beta_t(tr.tau()) - 2.0 * sign * tr.area()).abs() < 1e-14);
            for n in 1..5 {
                let expect = TAU * n as f64 * (tr.g_eff / tr.delta).powi(2) * sign;
                assert!((tr.beta_t(n as f64 * tr.tau()) - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn u_ms_identity_and_unitarity() {
        let layout = HilbertLayout::qubits(2, 12).unwrap();
        let tr = MsTrajectory::new(0.7, 1.9).unwrap();
        let u0 = tr.u_ms(0.0, &layout).unwrap();
        assert!(max_abs_diff(u0.matrix(), &Matrix::identity(layout.dim(), layout.dim())) < 1e-14);
        for t in [0.13, 1.0, 2.7, 5.5] {
            assert!(unitarity_defect(tr.u_ms(t, &layout).unwrap().matrix()) < 1e-10);
        }
    }

    #[test]
    fn truth_table_both_signs() {
        let layout = HilbertLayout::qubits(2, 10).unwrap();
        for sign in [1.0, -1.0] {
            let tr = MsTrajectory::new(1.0, sign * 2.0).unwrap();
            let u = tr.u_ms(tr.gate_time().unwrap(), &layout).unwrap();
            for i in 1..=4 {
                let psi = Ket::product(&layout, &computational_state(i).unwrap(), 0).unwrap();
                let out = u.matrix() * psi.vector();
                let target = Ket::product(&layout, &target_state(i, sign).unwrap(), 0).unwrap();
                assert!(fidelity(target.vector(), &out) >= 1.0 - 1e-9);
            }
        }
        // |gg⟩ → (|gg⟩ + i|ee⟩)/√2 for δ > 0
        let phi = target_state(1, 1.0).unwrap();
        assert!((phi[3] - I * FRAC_1_SQRT_2).norm() < 1e-15);
        let phi = target_state(2, 1.0).unwrap();
        assert!((phi[2] - I * FRAC_1_SQRT_2).norm() < 1e-15);
    }

    #[test]
    fn photon_returns_to_vacuum() {
        let layout = HilbertLayout::qubits(2, 12).unwrap();
        let tr = MsTrajectory::new(1.0, 3.1).unwrap();
        let rho_a = Matrix::from_fn(4, 4, |i, j| C64::new(0.25, 0.0) * if i == j { ONE } else { C64::new(0.3, 0.1 * (i as f64 - j as f64)) });
        let rho_a = (&rho_a + rho_a.adjoint()) * C64::new(0.5, 0.0);
        let vac = crate::qops::transition(layout.fock_dim(), 0, 0);
        let rho = rho_a.kronecker(&vac);
        for n in 1..4 {
            let u = tr.u_ms(n as f64 * tr.tau(), &layout).unwrap().into_matrix();
            let out = &u * rho.clone() * u.adjoint();
            // trace over atoms: photon populations
            let f = layout.fock_dim();
            for m in 0..f {
                let p: C64 = (0..4).map(|a| out[(a * f + m, a * f + m)]).sum();
                let want = if m == 0 { rho_a.trace() } else { ZERO };
                assert!((p - want).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn ideal_map_properties() {
        for sign in [1.0, -1.0] {
            let u = ideal_gate_map(sign);
            assert!(unitarity_defect(&u) < 1e-15);
            // e^{i sign π/2 S_x²} equals the table up to the global phase e^{iπ/4·sign}
            let v = atomic_phase_gate(sign * PI / 2.0);
            let phase = C64::from_polar(1.0, sign * PI / 4.0);
            assert!(max_abs_diff(&(u.clone() * phase), &v) < 1e-14);
            // atom exchange swaps ge and eg
            let swap = Matrix::from_fn(4, 4, |i, j| {
                let p = [0, 2, 1, 3];
                if p[j] == i { ONE } else { ZERO }
            });
            assert!(max_abs_diff(&(&swap * &u * &swap), &u) < 1e-15);
            // applied twice to |gg⟩ gives ±i|ee⟩
            let twice = &u * &u * computational_state(1).unwrap();
            assert!(twice[0].norm() < 1e-15);
            assert!((twice[3] - if sign > 0.0 { I } else { -I }).norm() < 1e-15);
        }
    }
}
