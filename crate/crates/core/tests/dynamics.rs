use cavity_ms::dynamics::{cavity_decay_ops, evolve_ket, evolve_rho, IntegratorConfig, LindbladModel};
use cavity_ms::fidelity::{state_fidelity_ket, state_fidelity_rho, ClosedChannel};
use cavity_ms::hamiltonians::{build_effective, build_interaction_static, TimeDependentHamiltonian};
use cavity_ms::msgate::{computational_state, MsTrajectory};
use cavity_ms::params::EffectiveParams;
use cavity_ms::qops::{HilbertLayout, Ket};

const TIMES: [f64; 5] = [0.4, 1.3, 2.2, 3.9, 6.1];

#[test]
fn closed_form_gate_matches_integration_at_all_times() {
    let layout = HilbertLayout::qubits(2, 20).unwrap();
    for delta in [2.0, -3.0] {
        let traj = MsTrajectory::new(1.0, delta).unwrap();
        let h = build_effective(&EffectiveParams::gate(0.0, 1.0, delta), &layout).unwrap();
        for i in 1..=4 {
            let psi = Ket::product(&layout, &computational_state(i).unwrap(), 0).unwrap();
            let run = evolve_ket(&h, &psi, &IntegratorConfig::for_kets(TIMES.to_vec())).unwrap();
            for (t, state) in TIMES.iter().zip(&run.states) {
                let exact = traj.u_ms(*t, &layout).unwrap().apply(&psi);
                let diff = (exact.vector() - state.vector()).norm();
                assert!(diff < 1e-6, "δ={delta} i={i} t={t}: {diff:e}");
            }
        }
    }
}

#[test]
fn interaction_frame_preserves_atomic_fidelities() {
    let layout = HilbertLayout::qubits(2, 24).unwrap();
    let eff = EffectiveParams::gate(0.3, 1.0, 4.0);
    let lab = build_effective(&eff, &layout).unwrap();
    let frame = ClosedChannel::new(&build_interaction_static(&eff, &layout).unwrap()).unwrap();
    for i in 1..=4 {
        let psi = Ket::product(&layout, &computational_state(i).unwrap(), 0).unwrap();
        let run = evolve_ket(&lab, &psi, &IntegratorConfig::for_kets(TIMES.to_vec())).unwrap();
        for (t, state) in TIMES.iter().zip(&run.states) {
            let a = state_fidelity_ket(state, i, 1.0).unwrap();
            let b = frame.state_fidelity(i, 0, *t, 1.0).unwrap();
            assert!((a - b).abs() < 1e-7, "i={i} t={t}: {a} vs {b}");
        }
    }
}

#[test]
fn photon_loss_commutes_with_the_frame_change() {
    let layout = HilbertLayout::qubits(2, 8).unwrap();
    let eff = EffectiveParams::gate(0.1, 1.0, 3.0);
    let ops = cavity_decay_ops(0.3, &layout).unwrap();
    let lab = LindbladModel::new(build_effective(&eff, &layout).unwrap(), ops.clone()).unwrap();
    let static_h = TimeDependentHamiltonian::time_independent(build_interaction_static(&eff, &layout).unwrap()).unwrap();
    let frame = LindbladModel::new(static_h, ops).unwrap();
    let rho0 = Ket::product(&layout, &computational_state(2).unwrap(), 0).unwrap().to_density();
    let cfg = IntegratorConfig::for_density(TIMES[..3].to_vec());
    let a = evolve_rho(&lab, &rho0, &cfg).unwrap();
    let b = evolve_rho(&frame, &rho0, &cfg).unwrap();
    for (x, y) in a.states.iter().zip(&b.states) {
        let (fx, fy) = (state_fidelity_rho(x, 2, 1.0).unwrap(), state_fidelity_rho(y, 2, 1.0).unwrap());
        assert!((fx - fy).abs() < 1e-6, "{fx} vs {fy}");
        assert!((x.trace() - 1.0).abs() < 1e-8);
    }
}
