//! Four-level Raman dynamics against the effective two-level model far from resonance.

use cavity_ms::dynamics::{evolve_ket, IntegratorConfig};
use cavity_ms::fidelity::state_fidelity;
use cavity_ms::hamiltonians::{build_effective, build_full_raman};
use cavity_ms::msgate::computational_state;
use cavity_ms::params::{check_ms_conditions, derive_effective, RamanConfig};
use cavity_ms::qops::{HilbertLayout, Ket, Matrix, Vector};

const N_MAX: usize = 6;

/// Photon-traced density matrix on the `(g, e)` block of each atom.
fn qubit_block(v: &Vector, layout: &HilbertLayout) -> Matrix {
    let mut rho = Matrix::zeros(4, 4);
    for n in 0..=layout.n_max() {
        for x in 0..4 {
            let vx = v[layout.index(&[x / 2, x % 2], n)];
            for y in 0..4 {
                rho[(x, y)] += vx * v[layout.index(&[y / 2, y % 2], n)].conj();
            }
        }
    }
    rho
}

fn embed_qubits(phi: &Vector, layout: &HilbertLayout) -> Ket {
    let mut v = Vector::zeros(layout.dim());
    for a in 0..4 {
        v[layout.index(&[a / 2, a % 2], 0)] = phi[a];
    }
    Ket::new(layout.clone(), v).unwrap()
}

#[test]
fn effective_model_reproduces_raman_gate() {
    // Δ = 100 g, Ω₁/Ω₂ = Δ₁/Δ₂; both atoms shift the cavity by g²/Δ
    let (g, omega, big) = (1.0, 5.0, 100.0);
    let target = 0.1;
    let bare = target - 2.0 * g * g / big;
    let cfg = RamanConfig::new(g, (omega, omega), (big, big), (bare, bare));
    assert!(check_ms_conditions(&cfg).all_passed());
    let eff = derive_effective(&cfg).unwrap();
    assert!((eff.delta - target).abs() < 1e-12);
    assert_eq!(eff.chi, 0.0);
    let tg = eff.gate_time().unwrap();

    let four = HilbertLayout::uniform(2, 4, N_MAX).unwrap();
    let two = HilbertLayout::qubits(2, N_MAX).unwrap();
    let h_raman = build_full_raman(&cfg, &four).unwrap();
    let h_eff = build_effective(&eff, &two).unwrap();
    let ode = IntegratorConfig::for_kets(vec![tg]);

    // |φ₄⟩ and |φ₃⟩ mirror |φ₁⟩ and |φ₂⟩ under g ↔ e
    for i in [1, 2] {
        let phi = computational_state(i).unwrap();
        let raman = evolve_ket(&h_raman, &embed_qubits(&phi, &four), &ode).unwrap();
        let rho_raman = qubit_block(raman.states[0].vector(), &four);
        let effective = evolve_ket(&h_eff, &Ket::product(&two, &phi, 0).unwrap(), &ode).unwrap();
        let rho_eff = qubit_block(effective.states[0].vector(), &two);

        let f_raman = state_fidelity(&rho_raman, i, eff.delta.signum()).unwrap();
        let f_eff = state_fidelity(&rho_eff, i, eff.delta.signum()).unwrap();
        assert!(f_eff > 1.0 - 1e-4, "i={i}: effective {f_eff}");
        assert!(1.0 - f_raman <= 5e-3, "i={i}: raman infidelity {}", 1.0 - f_raman);
    }
}
