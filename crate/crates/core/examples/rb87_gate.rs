//! 87Rb parameters and the gate fidelity of the faster parameter set.

use cavity_ms::harness::scenarios::{rb87_max_gate_fidelity, RunOptions};
use cavity_ms::params::{derive_rb87, to_mhz, Rb87Config};

fn main() -> cavity_ms::Result<()> {
    for (name, cfg) in [("set 1", Rb87Config::table1_set1()), ("set 2", Rb87Config::table1_set2())] {
        let d = derive_rb87(&cfg)?;
        println!(
            "{name}: g_eff/2pi = {:.2} kHz, chi/2pi = {:.2} kHz, t_gate = {:.1} us",
            1e3 * to_mhz(d.effective.g_eff),
            1e3 * to_mhz(d.effective.chi),
            d.effective.gate_time()?
        );
    }
    let best = rb87_max_gate_fidelity(2, &RunOptions::default())?;
    println!("set 2: max F = {:.4} at t = {:.1} us", best.value, best.t);
    Ok(())
}
