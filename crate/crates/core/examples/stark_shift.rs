//! Maximum state fidelity under the cavity-induced Stark shift, exact and second order.
//! The second-order values leave [0, 1] once chi passes about 0.4.

use cavity_ms::harness::scenarios::{max_series_fidelity, max_state_fidelity, RunOptions};
use cavity_ms::params::EffectiveParams;

fn main() -> cavity_ms::Result<()> {
    let opts = RunOptions::default();
    println!("{:>5} {:>12} {:>12} {:>12} {:>12}", "chi", "exact i=1", "series i=1", "exact i=2", "series i=2");
    for k in 0..=10 {
        let chi = 0.05 * k as f64;
        let eff = EffectiveParams::gate(chi, 1.0, 4.0);
        let mut row = format!("{chi:5.2}");
        for i in [1, 2] {
            let exact = max_state_fidelity(&eff, i, 0, 40, &opts)?;
            let series = max_series_fidelity(&eff, i, 40, &opts)?;
            row += &format!(" {:12.8} {:12.8}", exact.value, series.value);
        }
        println!("{row}");
    }
    Ok(())
}
