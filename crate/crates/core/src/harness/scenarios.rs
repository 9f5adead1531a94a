use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dynamics::{block_without_level, cavity_decay_ops, effective_atomic_ops, rb87_ops, LindbladModel, PeriodicPropagator};
use crate::error::{Error, Result};
use crate::fidelity::{
    avg_gate_fidelity, max_stroboscopic, overlap_fidelity, ClosedChannel, IdealGate, MaxSearch, Maximum, OpenChannel,
};
use crate::hamiltonians::{build_effective, build_interaction_static, build_rb87_effective, TimeDependentHamiltonian, U};
use crate::integrate::StepControl;
use crate::params::{derive_rb87, to_mhz, EffectiveParams, RamanConfig, Rb87Config};
use crate::perturbation::{StarkSeries, DEFAULT_N_MAX};
use crate::qops::HilbertLayout;

use super::output::ScanResult;

/// Knobs shared by every scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    /// Points per sweep axis.
    pub points: usize,
    /// Relative tolerance of every ODE solve; the absolute tolerance is `rel_tol / 100`.
    pub rel_tol: f64,
    pub search: MaxSearch,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { points: 25, rel_tol: 1e-9, search: MaxSearch::default() }
    }
}

impl RunOptions {
    pub fn step_control(&self) -> StepControl {
        StepControl::new(self.rel_tol, 1e-2 * self.rel_tol)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::Config("a sweep needs at least 2 points".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Config(format!("tolerance {} must lie in (0, 1)", self.rel_tol)));
        }
        Ok(())
    }

    fn describe(&self) -> String {
        format!(
            "points {} rel_tol {:e} abs_tol {:e} coarse {} resolution {:e}",
            self.points,
            self.rel_tol,
            1e-2 * self.rel_tol,
            self.search.coarse_points,
            self.search.rel_resolution
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Fig3a,
    Fig3b,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Table1,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Fig3a,
        Scenario::Fig3b,
        Scenario::Fig4,
        Scenario::Fig5,
        Scenario::Fig6,
        Scenario::Fig7,
        Scenario::Fig8,
        Scenario::Table1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig3a => "fig3a",
            Scenario::Fig3b => "fig3b",
            Scenario::Fig4 => "fig4",
            Scenario::Fig5 => "fig5",
            Scenario::Fig6 => "fig6",
            Scenario::Fig7 => "fig7",
            Scenario::Fig8 => "fig8",
            Scenario::Table1 => "table1",
        }
    }

    /// x column, plotted y columns and whether x is drawn on a log axis.
    pub fn plot(self) -> Option<(&'static str, Vec<&'static str>, bool)> {
        match self {
            Scenario::Fig3a => Some(("g_eff_t", vec!["chi0_n0", "n0", "n1", "n2"], false)),
            Scenario::Fig3b => Some(("g_eff_t", vec!["chi0", "phi1", "phi4", "phi2"], false)),
            Scenario::Fig4 => Some(("chi", vec!["exact_1", "series_1", "exact_2", "series_2"], false)),
            Scenario::Fig5 => Some(("chi", vec!["delta2", "delta4", "delta8", "delta16"], false)),
            Scenario::Fig6 => Some(("delta", vec!["kappa0.1", "kappa1", "kappa10"], true)),
            Scenario::Fig7 => Some((
                "gamma",
                vec!["D100_d2", "D100_d50", "D100_d200", "D1000_d2", "D1000_d50", "D1000_d200"],
                true,
            )),
            Scenario::Fig8 => Some(("t_us", vec!["set1", "set2"], false)),
            Scenario::Table1 => None,
        }
    }

    pub fn run(self, opts: &RunOptions) -> Result<ScanResult> {
        opts.validate()?;
        let mut out = match self {
            Scenario::Fig3a => fig3a()?,
            Scenario::Fig3b => fig3b()?,
            Scenario::Fig4 => fig4(opts)?,
            Scenario::Fig5 => fig5(opts)?,
            Scenario::Fig6 => fig6(opts)?,
            Scenario::Fig7 => fig7(opts)?,
            Scenario::Fig8 => fig8(opts)?,
            Scenario::Table1 => table1()?,
        };
        let mut head = vec![
            format!("cavity-ms {}", env!("CARGO_PKG_VERSION")),
            format!("scenario {}", self.name()),
            opts.describe(),
        ];
        head.append(&mut out.provenance);
        out.provenance = head;
        Ok(out)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario {s:?}")))
    }
}

/// Photon cutoff that keeps the Fock tail negligible for a loop of radius `|g_eff/δ|`.
pub fn default_n_max(g_eff: f64, delta: f64) -> usize {
    3 + (8.0 * (g_eff / delta).abs()).ceil().min(40.0) as usize
}

pub fn drive_period(delta: f64) -> Result<f64> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::SingularParameter("δ = 0".into()));
    }
    Ok(2.0 * PI / delta.abs())
}

/// Drive period and the period boundaries covering `[lo, hi] · t_gate`.
pub fn gate_window(eff: &EffectiveParams, lo: f64, hi: f64) -> Result<(f64, u64, u64)> {
    let tau = drive_period(eff.delta)?;
    let tg = eff.gate_time()?;
    Ok((tau, (lo * tg / tau).floor() as u64, (hi * tg / tau).ceil().max(1.0) as u64))
}

fn fixed_target(eff: &EffectiveParams) -> IdealGate {
    IdealGate::Fixed { delta_sign: eff.delta.signum() }
}

/// Closed evolution under `H_I`.
pub fn closed_channel(eff: &EffectiveParams, n_max: usize) -> Result<ClosedChannel> {
    ClosedChannel::new(&build_interaction_static(eff, &HilbertLayout::qubits(2, n_max)?)?)
}

/// `max_t F_{i,n}(t)` over `[0.5, 1.5] t_gate`.
pub fn max_state_fidelity(eff: &EffectiveParams, i: usize, n: usize, n_max: usize, opts: &RunOptions) -> Result<Maximum> {
    let ch = closed_channel(eff, n_max)?;
    let (tau, lo, hi) = gate_window(eff, 0.5, 1.5)?;
    max_stroboscopic(|t| ch.state_fidelity(i, n, t, eff.delta.signum()), tau, lo, hi, opts.search)
}

/// `max_t |η⁽⁰⁾ + η⁽²⁾|²` for `|φ_i⟩|0⟩` over the same window.
pub fn max_series_fidelity(eff: &EffectiveParams, i: usize, n_max: usize, opts: &RunOptions) -> Result<Maximum> {
    let series = StarkSeries::new(eff, n_max)?;
    let (tau, lo, hi) = gate_window(eff, 0.5, 1.5)?;
    max_stroboscopic(|t| overlap_fidelity(&series, i, 0, t, 2), tau, lo, hi, opts.search)
}

/// Closed-system `max_t F̄(t)` against the truth table.
pub fn max_gate_fidelity_closed(eff: &EffectiveParams, n_max: usize, opts: &RunOptions) -> Result<Maximum> {
    let ch = closed_channel(eff, n_max)?;
    let ideal = fixed_target(eff).at(0.0);
    let (tau, lo, hi) = gate_window(eff, 0.5, 1.5)?;
    max_stroboscopic(|t| avg_gate_fidelity(&ch.sample(t)?, &ideal), tau, lo, hi, opts.search)
}

fn periods_for(t_max: f64, tau: f64) -> u64 {
    (t_max / tau).ceil() as u64 + 2
}

/// `H_I` with cavity decay `√κ a`. The dissipator is frame independent, so the generator is
/// static and the propagator steps by one drive period.
pub fn cavity_decay_channel(eff: &EffectiveParams, kappa: f64, n_max: usize, t_max: f64, opts: &RunOptions) -> Result<OpenChannel> {
    let layout = HilbertLayout::qubits(2, n_max)?;
    let h = TimeDependentHamiltonian::time_independent(build_interaction_static(eff, &layout)?)?;
    let model = LindbladModel::new(h, cavity_decay_ops(kappa, &layout)?)?;
    let tau = drive_period(eff.delta)?;
    OpenChannel::new(PeriodicPropagator::new(model.generator(), tau, opts.step_control(), periods_for(t_max, tau))?)
}

/// `H'_eff` with the effective spontaneous-emission operators of `cfg` and cavity decay
/// `cfg.kappa`; `eff` fixes χ, g_eff and δ of the Hamiltonian.
pub fn atomic_decay_channel(cfg: &RamanConfig, eff: &EffectiveParams, n_max: usize, t_max: f64, opts: &RunOptions) -> Result<OpenChannel> {
    let layout = HilbertLayout::qubits(2, n_max)?;
    let mut ops = effective_atomic_ops(cfg, &layout)?;
    ops.extend(cavity_decay_ops(cfg.kappa, &layout)?);
    let model = LindbladModel::new(build_effective(eff, &layout)?, ops)?;
    let tau = drive_period(eff.delta)?;
    OpenChannel::new(PeriodicPropagator::new(model.generator(), tau, opts.step_control(), periods_for(t_max, tau))?)
}

/// ⁸⁷Rb model with spontaneous emission and cavity decay, solved on the block with no atom
/// in the leakage level.
pub fn rb87_channel(cfg: &Rb87Config, n_max: usize, t_max: f64, opts: &RunOptions) -> Result<OpenChannel> {
    let layout = HilbertLayout::uniform(2, 3, n_max)?;
    let mut ops = rb87_ops(cfg, &layout)?;
    ops.extend(cavity_decay_ops(cfg.kappa, &layout)?);
    let model = LindbladModel::new(build_rb87_effective(cfg, &layout)?, ops)?;
    let gen = model.generator().restrict(&block_without_level(&layout, U))?;
    let tau = drive_period(cfg.delta)?;
    OpenChannel::new(PeriodicPropagator::new(gen, tau, opts.step_control(), periods_for(t_max, tau))?)
}

/// `max_t F̄(t)` of an open channel over the period boundaries `[lo, hi] · t_gate`.
pub fn max_gate_fidelity_open(ch: &OpenChannel, eff: &EffectiveParams, lo: f64, hi: f64, opts: &RunOptions) -> Result<Maximum> {
    let ideal = fixed_target(eff).at(0.0);
    let (tau, k_lo, k_hi) = gate_window(eff, lo, hi)?;
    max_stroboscopic(|t| avg_gate_fidelity(&ch.sample(t)?, &ideal), tau, k_lo, k_hi, opts.search)
}

/// Best gate fidelity with cavity decay only, χ = 0 and g_eff = 1.
pub fn cavity_decay_gate_fidelity(kappa: f64, delta: f64, opts: &RunOptions) -> Result<Maximum> {
    let eff = EffectiveParams::gate(0.0, 1.0, delta);
    let ch = cavity_decay_channel(&eff, kappa, default_n_max(1.0, delta), 1.5 * eff.gate_time()?, opts)?;
    max_gate_fidelity_open(&ch, &eff, 0.5, 1.5, opts)
}

/// Best gate fidelity with spontaneous emission only: g = Ω = 1, Δ₁ = Δ₂ = `big_delta`, equal
/// branch rates `gamma`, and δ = `delta_over_geff`·g_eff.
pub fn atomic_decay_gate_fidelity(gamma: f64, big_delta: f64, delta_over_geff: f64, opts: &RunOptions) -> Result<Maximum> {
    let cfg = RamanConfig::new(1.0, (1.0, 1.0), (big_delta, big_delta), (0.0, 0.0)).with_common_gamma(gamma);
    let g_eff = cfg.g * cfg.omega1 / cfg.detuning1;
    let eff = EffectiveParams::gate(0.0, g_eff, delta_over_geff * g_eff);
    let ch = atomic_decay_channel(&cfg, &eff, default_n_max(g_eff, eff.delta), 1.5 * eff.gate_time()?, opts)?;
    max_gate_fidelity_open(&ch, &eff, 0.5, 1.5, opts)
}

/// Photon cutoff of the ⁸⁷Rb runs.
pub const RB87_N_MAX: usize = 4;

/// Balanced ⁸⁷Rb parameter set and its channel, covering times up to `t_max`.
pub fn rb87_setup(set: u8, t_max: f64, opts: &RunOptions) -> Result<(Rb87Config, EffectiveParams, OpenChannel)> {
    let cfg = match set {
        1 => Rb87Config::table1_set1(),
        2 => Rb87Config::table1_set2(),
        _ => return Err(Error::Config(format!("unknown parameter set {set}"))),
    }
    .balanced()?;
    let eff = derive_rb87(&cfg)?.effective;
    let ch = rb87_channel(&cfg, RB87_N_MAX, t_max, opts)?;
    Ok((cfg, eff, ch))
}

/// `max_t F̄(t)` of a balanced ⁸⁷Rb set over `[0.3, 1.2] t_gate`, in μs.
pub fn rb87_max_gate_fidelity(set: u8, opts: &RunOptions) -> Result<Maximum> {
    let tg = rb87_gate_time(set)?;
    let (_, eff, ch) = rb87_setup(set, 1.2 * tg, opts)?;
    max_gate_fidelity_open(&ch, &eff, 0.3, 1.2, opts)
}

pub fn rb87_gate_time(set: u8) -> Result<f64> {
    let cfg = if set == 1 { Rb87Config::table1_set1() } else { Rb87Config::table1_set2() };
    derive_rb87(&cfg.balanced()?)?.effective.gate_time()
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1).max(1) as f64).collect()
}

pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

/// Evaluates `f` at every point in parallel, keeping order. A failing point becomes a row of
/// NaNs with `ok = 0` and is listed in the provenance.
pub(crate) fn sweep<T, F>(table: &mut ScanResult, points: &[T], f: F) -> Result<()>
where
    T: Sync + fmt::Debug,
    F: Fn(&T) -> Result<Vec<f64>> + Sync,
{
    let width = table.columns.len();
    let rows: Vec<(Vec<f64>, Option<String>)> = points
        .par_iter()
        .map(|p| match f(p) {
            Ok(mut row) => {
                row.push(1.0);
                (row, None)
            }
            Err(e) => {
                let mut row = vec![f64::NAN; width];
                row[width - 1] = 0.0;
                (row, Some(format!("failed at {p:?}: {e}")))
            }
        })
        .collect();
    for (row, err) in rows {
        if let Some(e) = err {
            table.note(e);
        }
        table.push(row)?;
    }
    Ok(())
}

const CURVE_POINTS: usize = 401;
const FIG3_N_MAX: usize = 40;

fn fidelity_curves(columns: &[&str], curves: &[(EffectiveParams, usize, usize)]) -> Result<ScanResult> {
    let mut table = ScanResult::new(columns);
    let chans = curves
        .iter()
        .map(|(eff, _, _)| closed_channel(eff, FIG3_N_MAX))
        .collect::<Result<Vec<_>>>()?;
    let span = 2.0 * curves[0].0.gate_time()?;
    let rows: Vec<Vec<f64>> = linspace(0.0, span, CURVE_POINTS)
        .into_par_iter()
        .map(|t| {
            let mut row = vec![t * curves[0].0.g_eff];
            for (ch, (eff, i, n)) in chans.iter().zip(curves) {
                row.push(ch.state_fidelity(*i, *n, t, eff.delta.signum())?);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    for r in rows {
        table.push(r)?;
    }
    table.note(format!("delta/g_eff 2, n_max {FIG3_N_MAX}"));
    Ok(table)
}

/// `F_{1,n}(t)` at δ = 2g_eff for χ = 0 and χ = 0.5 g_eff with n = 0, 1, 2.
pub fn fig3a() -> Result<ScanResult> {
    let ideal = EffectiveParams::gate(0.0, 1.0, 2.0);
    let eff = EffectiveParams::gate(0.5, 1.0, 2.0);
    fidelity_curves(
        &["g_eff_t", "chi0_n0", "n0", "n1", "n2"],
        &[(ideal, 1, 0), (eff.clone(), 1, 0), (eff.clone(), 1, 1), (eff, 1, 2)],
    )
}

/// `F_{i,0}(t)` at δ = 2g_eff, χ = 0.5 g_eff for i = 1, 4, 2 and the χ = 0 reference.
pub fn fig3b() -> Result<ScanResult> {
    let ideal = EffectiveParams::gate(0.0, 1.0, 2.0);
    let eff = EffectiveParams::gate(0.5, 1.0, 2.0);
    fidelity_curves(
        &["g_eff_t", "chi0", "phi1", "phi4", "phi2"],
        &[(ideal, 1, 0), (eff.clone(), 1, 0), (eff.clone(), 4, 0), (eff, 2, 0)],
    )
}

/// Exact and second-order maximal state fidelities versus χ at δ = 4g_eff.
pub fn fig4(opts: &RunOptions) -> Result<ScanResult> {
    let mut table = ScanResult::new(&["chi", "exact_1", "series_1", "t_exact_1", "exact_2", "series_2", "t_exact_2", "ok"]);
    sweep(&mut table, &linspace(0.0, 1.0, opts.points), |&chi| {
        let eff = EffectiveParams::gate(chi, 1.0, 4.0);
        let mut row = vec![chi];
        for i in [1, 2] {
            let exact = max_state_fidelity(&eff, i, 0, DEFAULT_N_MAX, opts)?;
            let series = max_series_fidelity(&eff, i, DEFAULT_N_MAX, opts)?;
            row.extend([exact.value, series.value, exact.t]);
        }
        Ok(row)
    })?;
    table.note(format!("delta/g_eff 4, n_max {DEFAULT_N_MAX}"));
    Ok(table)
}

const FIG5_N_MAX: usize = 30;

/// Closed-system maximal average gate fidelity versus χ for δ/g_eff = 2, 4, 8, 16.
pub fn fig5(opts: &RunOptions) -> Result<ScanResult> {
    let mut table = ScanResult::new(&["chi", "delta2", "delta4", "delta8", "delta16", "ok"]);
    sweep(&mut table, &linspace(0.0, 1.0, opts.points), |&chi| {
        let mut row = vec![chi];
        for delta in [2.0, 4.0, 8.0, 16.0] {
            row.push(max_gate_fidelity_closed(&EffectiveParams::gate(chi, 1.0, delta), FIG5_N_MAX, opts)?.value);
        }
        Ok(row)
    })?;
    table.note(format!("n_max {FIG5_N_MAX}"));
    Ok(table)
}

/// Maximal gate fidelity versus δ/g_eff with cavity decay κ/g_eff = 0.1, 1, 10.
pub fn fig6(opts: &RunOptions) -> Result<ScanResult> {
    let mut table = ScanResult::new(&["delta", "kappa0.1", "kappa1", "kappa10", "ok"]);
    sweep(&mut table, &logspace(5.0, 1280.0, opts.points), |&delta| {
        let mut row = vec![delta];
        for kappa in [0.1, 1.0, 10.0] {
            row.push(cavity_decay_gate_fidelity(kappa, delta, opts)?.value);
        }
        Ok(row)
    })?;
    table.note("chi 0, n_max 3 + ceil(8 g_eff/delta)");
    Ok(table)
}

/// Maximal average gate fidelity versus γ/g with Ω = g, for Δ/g = 100, 1000 and
/// δ/g_eff = 2, 50, 200.
pub fn fig7(opts: &RunOptions) -> Result<ScanResult> {
    let mut table = ScanResult::new(&[
        "gamma", "D100_d2", "D100_d50", "D100_d200", "D1000_d2", "D1000_d50", "D1000_d200", "ok",
    ]);
    sweep(&mut table, &logspace(1e-3, 1.0, opts.points), |&gamma| {
        let mut row = vec![gamma];
        for big in [100.0, 1000.0] {
            for d in [2.0, 50.0, 200.0] {
                row.push(atomic_decay_gate_fidelity(gamma, big, d, opts)?.value);
            }
        }
        Ok(row)
    })?;
    table.note("chi 0, kappa 0, n_max 3 + ceil(8 g_eff/delta)");
    Ok(table)
}

/// `F̄(t)` of both balanced ⁸⁷Rb sets, times in μs.
pub fn fig8(opts: &RunOptions) -> Result<ScanResult> {
    let t_end = 1.25 * rb87_gate_time(1)?;
    let times = linspace(0.0, t_end, 4 * opts.points + 1);
    let mut table = ScanResult::new(&["t_us", "set1", "set2"]);
    let mut cols = Vec::new();
    for set in [1, 2] {
        let (_, eff, ch) = rb87_setup(set, t_end.max(1.2 * rb87_gate_time(set)?), opts)?;
        let ideal = fixed_target(&eff).at(0.0);
        let f = times
            .par_iter()
            .map(|&t| avg_gate_fidelity(&ch.sample(t)?, &ideal))
            .collect::<Result<Vec<_>>>()?;
        let best = max_gate_fidelity_open(&ch, &eff, 0.3, 1.2, opts)?;
        table.note(format!("set{set} max fidelity {:.6} at {:.3} us", best.value, best.t));
        cols.push(f);
    }
    for (k, t) in times.iter().enumerate() {
        table.push(vec![*t, cols[0][k], cols[1][k]])?;
    }
    table.note(format!("balanced omega2, n_max {RB87_N_MAX}"));
    Ok(table)
}

/// Effective parameters of the two ⁸⁷Rb sets, tabulated and balanced Ω₂; frequencies in
/// kHz (`ν/2π`), times in μs.
pub fn table1() -> Result<ScanResult> {
    let mut table = ScanResult::new(&[
        "set",
        "g_eff_khz",
        "g_eff_2_khz",
        "chi_khz",
        "coupling_mismatch",
        "omega2_balanced_mhz",
        "gamma_eff_khz",
        "t_gate_us",
    ]);
    for (set, cfg) in [(1.0, Rb87Config::table1_set1()), (2.0, Rb87Config::table1_set2())] {
        let tab = derive_rb87(&cfg)?;
        let bal = cfg.balanced()?;
        let e = &tab.effective;
        table.push(vec![
            set,
            1e3 * to_mhz(tab.g_eff_1),
            1e3 * to_mhz(tab.g_eff_2),
            1e3 * to_mhz(e.chi),
            tab.coupling_mismatch,
            to_mhz(bal.omega2),
            1e3 * to_mhz(e.gamma_eff),
            e.gate_time()?,
        ])?;
    }
    Ok(table)
}
