//! Average gate fidelity with photon loss as a function of the detuning.

use cavity_ms::harness::scenarios::{cavity_decay_gate_fidelity, RunOptions};

fn main() -> cavity_ms::Result<()> {
    let opts = RunOptions::default();
    let kappa = 0.1;
    println!("kappa = {kappa} g_eff");
    for delta in [5.0, 10.0, 20.0, 40.0, 80.0] {
        let m = cavity_decay_gate_fidelity(kappa, delta, &opts)?;
        println!("delta = {delta:5.1}  max F = {:.6} at g_eff t = {:.3}", m.value, m.t);
    }
    Ok(())
}
