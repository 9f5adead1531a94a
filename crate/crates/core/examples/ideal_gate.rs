//! Phase-space loops of the ideal gate and its truth table at the gate time.

use cavity_ms::fidelity::state_fidelity_ket;
use cavity_ms::msgate::{computational_state, MsTrajectory};
use cavity_ms::qops::{HilbertLayout, Ket};

fn main() -> cavity_ms::Result<()> {
    let layout = HilbertLayout::qubits(2, 20)?;
    for m in [1, 2, 4] {
        let traj = MsTrajectory::with_loops(m, 1.0)?;
        let tg = traj.gate_time()?;
        println!("m = {m}: delta = {:.4}, t_gate = {tg:.4}, beta(t_gate) = {:.6}", traj.delta, traj.beta_t(tg));
        for k in 0..=8 {
            let t = tg * k as f64 / 8.0;
            let a = traj.alpha_t(t);
            println!("  t = {t:7.4}  alpha = {:+.4} {:+.4}i  beta = {:.4}", a.re, a.im, traj.beta_t(t));
        }
    }

    let traj = MsTrajectory::new(1.0, 2.0)?;
    let u = traj.u_ms(traj.gate_time()?, &layout)?;
    for i in 1..=4 {
        let out = u.apply(&Ket::product(&layout, &computational_state(i)?, 0)?);
        println!("F_{i},0(t_gate) = {:.12}", state_fidelity_ket(&out, i, 1.0)?);
    }
    Ok(())
}
