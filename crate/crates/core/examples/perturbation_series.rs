//! Overlap series against the numerical Dyson oracle, and the alpha scaling of the second order.

use cavity_ms::perturbation::{alpha_scaling_probe, DysonOracle, StarkSeries};
use cavity_ms::params::EffectiveParams;
use cavity_ms::quad::QuadTol;

fn main() -> cavity_ms::Result<()> {
    let eff = EffectiveParams::gate(0.1, 1.0, 4.0);
    let series = StarkSeries::new(&eff, 40)?;
    let oracle = DysonOracle::new(&eff, 30, QuadTol::new(1e-12, 1e-10))?;
    let t = 0.9 * eff.gate_time()?;
    for i in 1..=4 {
        let s = series.eta(i, 0, t)?;
        let d2 = oracle.term(2, i, 0, t)?;
        println!(
            "i = {i}: eta0 = {:.6}, eta1 = {:.1e}, eta2 = {:+.3e}{:+.3e}i (Dyson {:+.3e}{:+.3e}i), |sum|^2 = {:.8}",
            s.eta0.norm(),
            s.eta1.norm(),
            s.eta2.re,
            s.eta2.im,
            d2.re,
            d2.im,
            s.fidelity()
        );
    }

    let alphas = [0.02, 0.03, 0.05, 0.07];
    for i in [1, 2] {
        let fit = alpha_scaling_probe(i, &alphas, 0.05, 2.0 * std::f64::consts::PI * 1.37, 30)?;
        println!("|eta2_{i},0| ~ alpha^{:.3}", fit.slope);
    }
    Ok(())
}
