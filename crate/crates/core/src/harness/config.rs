//! Plain `key = value` configuration files with the sections `[system]`, `[drive]`, `[decay]`,
//! `[scan]` and `[integrator]`.
//!
//! ```ini
//! [system]
//! model = raman          ; effective | raman | rb87
//! units = mhz            ; frequencies in 2π·MHz and times in μs, or `natural`
//! g = 1
//! omega1 = 0.3
//! omega2 = 0.3
//! detuning1 = 50
//! detuning2 = 50
//! raman_detuning1 = 0.02
//! raman_detuning2 = 0.02
//!
//! [drive]
//! state = 1
//! photons = 0
//!
//! [decay]
//! kappa = 0.001
//!
//! [scan]
//! parameter = kappa
//! start = 0
//! end = 0.01
//! points = 11
//! ```
//!
//! Keys:
//!
//! - `[system]`: `model`, `units`, `n_max`; `chi`, `g_eff`, `delta` for `effective`; `g`,
//!   `omega1`, `omega2`, `detuning1`, `detuning2`, `raman_detuning1`, `raman_detuning2` for
//!   `raman`; `set = 1|2` or `g`, `kappa`, `detuning1`, `detuning2`, `omega1`, `omega2`, `delta`
//!   for `rb87`, plus `balance` (default true, re-solves Ω₂ so both Raman arms match).
//! - `[drive]`: `state` (1..4), `photons`, `t_end` (default 1.5 t_gate), `points`.
//! - `[decay]`: `kappa`, and either `gamma` or `gamma_1g`, `gamma_1e`, `gamma_2g`, `gamma_2e`.
//! - `[scan]`: `scenario` (`custom` or a `reproduce` target), `parameter` (`chi`, `g_eff`,
//!   `delta`, `kappa`, `gamma`), `start`, `end`, `points`, `spacing` (`linear`|`log`),
//!   `metric` (`gate`|`state`), `window_start`, `window_end` (in units of t_gate).
//! - `[integrator]`: `rel_tol`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ini::Ini;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fidelity::{avg_gate_fidelity, max_over_time, max_stroboscopic, ClosedChannel, IdealGate, Maximum, OpenChannel};
use crate::params::{
    check_ms_conditions, derive_effective, derive_rb87, diagnostics, from_mhz, to_mhz, EffectiveParams, RamanConfig,
    Rb87Config,
};

use super::output::ScanResult;
use super::scenarios::{
    atomic_decay_channel, cavity_decay_channel, closed_channel, default_n_max, gate_window, linspace, logspace,
    rb87_channel, sweep, RunOptions, Scenario, RB87_N_MAX,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Units {
    /// Frequencies in units of 2π·MHz, times in μs.
    Mhz,
    /// Frequencies and times used as given.
    Natural,
}

impl Units {
    fn freq(self, v: f64) -> f64 {
        match self {
            Units::Mhz => from_mhz(v),
            Units::Natural => v,
        }
    }

    fn unfreq(self, v: f64) -> f64 {
        match self {
            Units::Mhz => to_mhz(v),
            Units::Natural => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SystemModel {
    Effective(EffectiveParams),
    Raman(RamanConfig),
    Rb87(Rb87Config),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriveConfig {
    /// Computational input `|φ_state⟩`.
    pub state: usize,
    pub photons: usize,
    /// End of `evolve`; defaults to 1.5 t_gate.
    pub t_end: Option<f64>,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParameter {
    Chi,
    GEff,
    Delta,
    Kappa,
    Gamma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    /// Average gate fidelity against the truth table.
    Gate,
    /// `F_{state, photons}`.
    State,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScanTarget {
    Custom { parameter: SweepParameter, start: f64, end: f64, spacing: Spacing },
    Named(Scenario),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanSpec {
    pub target: ScanTarget,
    pub points: usize,
    pub metric: Metric,
    /// Search window in units of t_gate.
    pub window: (f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub units: Units,
    pub model: SystemModel,
    pub n_max: Option<usize>,
    pub drive: DriveConfig,
    /// Cavity decay; overrides the ⁸⁷Rb κ when set.
    pub kappa: Option<f64>,
    /// `γ_1g, γ_1e, γ_2g, γ_2e`; overrides the ⁸⁷Rb γ (first entry) when set.
    pub gamma: Option<[f64; 4]>,
    pub scan: Option<ScanSpec>,
    pub run: RunOptions,
    /// SHA-256 of the file contents, hex.
    pub sha256: String,
}

/// Key lookup that records which keys were consumed, so unknown keys can be rejected.
struct Section<'a> {
    name: &'a str,
    map: BTreeMap<String, String>,
}

impl<'a> Section<'a> {
    fn new(ini: &Ini, name: &'a str) -> Self {
        let map = ini
            .section(Some(name))
            .map(|p| p.iter().map(|(k, v)| (k.to_string(), v.trim().to_string())).collect())
            .unwrap_or_default();
        Self { name, map }
    }

    fn text(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn num(&mut self, key: &str) -> Result<Option<f64>> {
        match self.text(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| Error::Config(format!("[{}] {key} = {v:?} is not a finite number", self.name))),
        }
    }

    fn req(&mut self, key: &str) -> Result<f64> {
        self.num(key)?.ok_or_else(|| Error::Config(format!("[{}] missing key {key}", self.name)))
    }

    fn count(&mut self, key: &str) -> Result<Option<usize>> {
        match self.text(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| Error::Config(format!("[{}] {key} = {v:?} is not a non-negative integer", self.name))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            Some(k) => Err(Error::Config(format!("[{}] unknown key {k}", self.name))),
            None => Ok(()),
        }
    }
}

const SECTIONS: [&str; 5] = ["system", "drive", "decay", "scan", "integrator"];

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for (name, props) in ini.iter() {
            match name {
                None if props.is_empty() => {}
                None => return Err(Error::Config("keys outside a section".into())),
                Some(s) if !SECTIONS.contains(&s) => return Err(Error::Config(format!("unknown section [{s}]"))),
                _ => {}
            }
        }
        let sha256 = Sha256::digest(text.as_bytes()).iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });

        let mut sys = Section::new(&ini, "system");
        let units = match sys.text("units").as_deref() {
            None | Some("mhz") => Units::Mhz,
            Some("natural") => Units::Natural,
            Some(u) => return Err(Error::Config(format!("[system] unknown units {u:?}"))),
        };
        let f = |s: &mut Section, k: &str| -> Result<f64> { Ok(units.freq(s.req(k)?)) };
        let model = match sys.text("model").as_deref() {
            Some("effective") => SystemModel::Effective(EffectiveParams::gate(
                f(&mut sys, "chi")?,
                f(&mut sys, "g_eff")?,
                f(&mut sys, "delta")?,
            )),
            Some("raman") => SystemModel::Raman(RamanConfig::new(
                f(&mut sys, "g")?,
                (f(&mut sys, "omega1")?, f(&mut sys, "omega2")?),
                (f(&mut sys, "detuning1")?, f(&mut sys, "detuning2")?),
                (f(&mut sys, "raman_detuning1")?, f(&mut sys, "raman_detuning2")?),
            )),
            Some("rb87") => {
                if units != Units::Mhz {
                    return Err(Error::Config("[system] the rb87 model takes units = mhz".into()));
                }
                let base = match sys.count("set")? {
                    Some(1) => Some(Rb87Config::table1_set1()),
                    Some(2) => Some(Rb87Config::table1_set2()),
                    Some(k) => return Err(Error::Config(format!("[system] unknown set {k}"))),
                    None => None,
                };
                let cfg = match base {
                    Some(c) => c,
                    None => Rb87Config::from_mhz(
                        sys.req("g")?,
                        sys.req("kappa")?,
                        sys.req("detuning1")?,
                        sys.req("detuning2")?,
                        sys.req("omega1")?,
                        sys.req("omega2")?,
                        sys.req("delta")?,
                    ),
                };
                let balance = match sys.text("balance").as_deref() {
                    None | Some("true") => true,
                    Some("false") => false,
                    Some(v) => return Err(Error::Config(format!("[system] balance = {v:?} is not a boolean"))),
                };
                SystemModel::Rb87(if balance { cfg.balanced()? } else { cfg })
            }
            Some(m) => return Err(Error::Config(format!("[system] unknown model {m:?}"))),
            None => return Err(Error::Config("[system] missing key model".into())),
        };
        let n_max = sys.count("n_max")?;
        sys.finish()?;

        let mut dr = Section::new(&ini, "drive");
        let drive = DriveConfig {
            state: dr.count("state")?.unwrap_or(1),
            photons: dr.count("photons")?.unwrap_or(0),
            t_end: dr.num("t_end")?,
            points: dr.count("points")?.unwrap_or(201),
        };
        dr.finish()?;
        if !(1..=4).contains(&drive.state) {
            return Err(Error::Config("[drive] state must be 1..4".into()));
        }
        if drive.points < 2 {
            return Err(Error::Config("[drive] points must be >= 2".into()));
        }

        let mut de = Section::new(&ini, "decay");
        let kappa = de.num("kappa")?.map(|k| units.freq(k));
        let common = de.num("gamma")?;
        let branches = ["gamma_1g", "gamma_1e", "gamma_2g", "gamma_2e"]
            .iter()
            .map(|k| de.num(k))
            .collect::<Result<Vec<_>>>()?;
        de.finish()?;
        let gamma = match (common, branches.iter().any(Option::is_some)) {
            (Some(_), true) => return Err(Error::Config("[decay] give gamma or the four branch rates, not both".into())),
            (Some(g), false) => Some([units.freq(g); 4]),
            (None, true) => Some([0, 1, 2, 3].map(|k| units.freq(branches[k].unwrap_or(0.0)))),
            (None, false) => None,
        };
        if kappa.is_some_and(|k| k < 0.0) || gamma.is_some_and(|g| g.iter().any(|x| *x < 0.0)) {
            return Err(Error::Config("[decay] rates must be >= 0".into()));
        }

        let mut it = Section::new(&ini, "integrator");
        let mut run = RunOptions::default();
        if let Some(r) = it.num("rel_tol")? {
            run.rel_tol = r;
        }
        it.finish()?;

        let mut sc = Section::new(&ini, "scan");
        let scan = if sc.map.is_empty() {
            None
        } else {
            let points = sc.count("points")?.unwrap_or(run.points);
            let metric = match sc.text("metric").as_deref() {
                None | Some("gate") => Metric::Gate,
                Some("state") => Metric::State,
                Some(m) => return Err(Error::Config(format!("[scan] unknown metric {m:?}"))),
            };
            let scenario = sc.text("scenario");
            let target = match scenario.as_deref() {
                None | Some("custom") => {
                    let parameter = match sc.text("parameter").as_deref() {
                        Some("chi") => SweepParameter::Chi,
                        Some("g_eff") => SweepParameter::GEff,
                        Some("delta") => SweepParameter::Delta,
                        Some("kappa") => SweepParameter::Kappa,
                        Some("gamma") => SweepParameter::Gamma,
                        Some(p) => return Err(Error::Config(format!("[scan] unknown parameter {p:?}"))),
                        None => return Err(Error::Config("[scan] missing key parameter".into())),
                    };
                    let spacing = match sc.text("spacing").as_deref() {
                        None | Some("linear") => Spacing::Linear,
                        Some("log") => Spacing::Log,
                        Some(s) => return Err(Error::Config(format!("[scan] unknown spacing {s:?}"))),
                    };
                    let (start, end) = (sc.req("start")?, sc.req("end")?);
                    if spacing == Spacing::Log && !(start > 0.0 && end > 0.0) {
                        return Err(Error::Config("[scan] log spacing needs a positive range".into()));
                    }
                    ScanTarget::Custom { parameter, start, end, spacing }
                }
                Some("rb87") => ScanTarget::Named(Scenario::Fig8),
                Some(s) => ScanTarget::Named(s.parse()?),
            };
            let default_window = if matches!(model, SystemModel::Rb87(_)) { (0.3, 1.2) } else { (0.5, 1.5) };
            let window = (
                sc.num("window_start")?.unwrap_or(default_window.0),
                sc.num("window_end")?.unwrap_or(default_window.1),
            );
            if points < 2 {
                return Err(Error::Config("[scan] points must be >= 2".into()));
            }
            if !(window.1 > window.0 && window.0 >= 0.0) {
                return Err(Error::Config("[scan] empty search window".into()));
            }
            Some(ScanSpec { target, points, metric, window })
        };
        sc.finish()?;
        run.validate()?;
        Ok(Self { units, model, n_max, drive, kappa, gamma, scan, run, sha256 })
    }

    /// Gate parameters of the configured model.
    pub fn effective(&self) -> Result<EffectiveParams> {
        match &self.model {
            SystemModel::Effective(e) => Ok(e.clone()),
            SystemModel::Raman(c) => derive_effective(c),
            SystemModel::Rb87(c) => Ok(derive_rb87(c)?.effective),
        }
    }

    /// Copy with one parameter replaced (value in config units).
    pub fn with_parameter(&self, p: SweepParameter, value: f64) -> Result<Self> {
        let mut out = self.clone();
        let v = self.units.freq(value);
        match (p, &mut out.model) {
            (SweepParameter::Kappa, _) => out.kappa = Some(v),
            (SweepParameter::Gamma, _) => out.gamma = Some([v; 4]),
            (SweepParameter::Chi, SystemModel::Effective(e)) => e.chi = v,
            (SweepParameter::GEff, SystemModel::Effective(e)) => e.g_eff = v,
            (SweepParameter::Delta, SystemModel::Effective(e)) => e.delta = v,
            (SweepParameter::Delta, SystemModel::Rb87(c)) => c.delta = v,
            (SweepParameter::Delta, SystemModel::Raman(c)) => {
                // shift both bare Raman detunings so that δ'₁ = v
                let shift = v - derive_effective(c)?.delta;
                c.raman_detuning1 += shift;
                c.raman_detuning2 += shift;
            }
            (q, _) => return Err(Error::Config(format!("parameter {q:?} cannot be swept for this model"))),
        }
        Ok(out)
    }

    pub fn delta_sign(&self) -> Result<f64> {
        Ok(self.effective()?.delta.signum())
    }

    fn has_decay(&self) -> bool {
        let rb = matches!(self.model, SystemModel::Rb87(_));
        rb || self.kappa.is_some_and(|k| k > 0.0) || self.gamma.is_some_and(|g| g.iter().any(|x| *x > 0.0))
    }

    /// Evolution of the configured system, valid up to `t_max`.
    pub fn prepare(&self, t_max: f64) -> Result<Prepared> {
        let eff = self.effective()?;
        let n_max = self.n_max.unwrap_or(match self.model {
            SystemModel::Rb87(_) => RB87_N_MAX,
            _ => default_n_max(eff.g_eff, eff.delta),
        });
        let kappa = self.kappa.unwrap_or(0.0);
        if !self.has_decay() {
            return Ok(Prepared::Closed { eff: eff.clone(), ch: closed_channel(&eff, n_max)? });
        }
        let ch = match &self.model {
            SystemModel::Rb87(c) => {
                let mut c = c.clone();
                if let Some(k) = self.kappa {
                    c.kappa = k;
                }
                if let Some(g) = self.gamma {
                    c.gamma = g[0];
                }
                rb87_channel(&c, n_max, t_max, &self.run)?
            }
            _ if self.gamma.is_none_or(|g| g.iter().all(|x| *x == 0.0)) => {
                cavity_decay_channel(&eff, kappa, n_max, t_max, &self.run)?
            }
            SystemModel::Raman(c) => {
                let [g1g, g1e, g2g, g2e] = self.gamma.unwrap_or_default();
                let mut c = c.clone().with_kappa(kappa);
                (c.gamma_1g, c.gamma_1e, c.gamma_2g, c.gamma_2e) = (g1g, g1e, g2g, g2e);
                atomic_decay_channel(&c, &eff, n_max, t_max, &self.run)?
            }
            SystemModel::Effective(_) => {
                return Err(Error::Config("spontaneous emission needs model = raman or rb87".into()));
            }
        };
        Ok(Prepared::Open { eff, ch })
    }
}

/// A ready-to-sample evolution.
pub enum Prepared {
    Closed { eff: EffectiveParams, ch: ClosedChannel },
    Open { eff: EffectiveParams, ch: OpenChannel },
}

impl Prepared {
    pub fn effective(&self) -> &EffectiveParams {
        match self {
            Prepared::Closed { eff, .. } | Prepared::Open { eff, .. } => eff,
        }
    }

    pub fn state_fidelity(&self, i: usize, n: usize, t: f64) -> Result<f64> {
        let sign = self.effective().delta.signum();
        match self {
            Prepared::Closed { ch, .. } => ch.state_fidelity(i, n, t, sign),
            Prepared::Open { ch, .. } if n == 0 => ch.state_fidelity(i, t, sign),
            Prepared::Open { .. } => Err(Error::Config("open-system runs start from the cavity vacuum".into())),
        }
    }

    pub fn gate_fidelity(&self, t: f64) -> Result<f64> {
        let ideal = IdealGate::Fixed { delta_sign: self.effective().delta.signum() }.at(t);
        let sample = match self {
            Prepared::Closed { ch, .. } => ch.sample(t)?,
            Prepared::Open { ch, .. } => ch.sample(t)?,
        };
        avg_gate_fidelity(&sample, &ideal)
    }
}

fn header(cfg: &Config, what: &str) -> Vec<String> {
    vec![
        format!("cavity-ms {}", env!("CARGO_PKG_VERSION")),
        format!("{what} config sha256 {}", cfg.sha256),
        format!("rel_tol {:e} abs_tol {:e}", cfg.run.rel_tol, 1e-2 * cfg.run.rel_tol),
    ]
}

/// Fidelities along `[0, t_end]`; times in config units.
pub fn evolve(cfg: &Config) -> Result<ScanResult> {
    let eff = cfg.effective()?;
    let t_end = match cfg.drive.t_end {
        Some(t) if t > 0.0 => t,
        Some(t) => return Err(Error::Config(format!("[drive] t_end = {t} must be > 0"))),
        None => 1.5 * eff.gate_time()?,
    };
    let prep = cfg.prepare(t_end)?;
    let (i, n) = (cfg.drive.state, cfg.drive.photons);
    let mut table = ScanResult::new(&["t", "state_fidelity", "gate_fidelity"]);
    table.provenance = header(cfg, "evolve");
    use rayon::prelude::*;
    let rows: Vec<Vec<f64>> = linspace(0.0, t_end, cfg.drive.points)
        .into_par_iter()
        .map(|t| Ok(vec![t, prep.state_fidelity(i, n, t)?, prep.gate_fidelity(t)?]))
        .collect::<Result<_>>()?;
    for r in rows {
        table.push(r)?;
    }
    Ok(table)
}

/// Best fidelity of the configured system over the search window.
pub fn best_fidelity(cfg: &Config, metric: Metric, window: (f64, f64)) -> Result<Maximum> {
    let eff = cfg.effective()?;
    let prep = cfg.prepare(window.1 * eff.gate_time()?)?;
    let (tau, lo, hi) = gate_window(&eff, window.0, window.1)?;
    let (i, n) = (cfg.drive.state, cfg.drive.photons);
    let f = |t: f64| match metric {
        Metric::Gate => prep.gate_fidelity(t),
        Metric::State => prep.state_fidelity(i, n, t),
    };
    if hi - lo > 2 {
        max_stroboscopic(f, tau, lo, hi, cfg.run.search)
    } else {
        let tg = eff.gate_time()?;
        max_over_time(f, window.0 * tg, window.1 * tg, cfg.run.search)
    }
}

/// Runs the `[scan]` section.
pub fn scan(cfg: &Config) -> Result<ScanResult> {
    let spec = cfg.scan.as_ref().ok_or_else(|| Error::Config("no [scan] section".into()))?;
    match spec.target {
        ScanTarget::Named(s) => Scenario::run(s, &RunOptions { points: spec.points, ..cfg.run.clone() }),
        ScanTarget::Custom { parameter, start, end, spacing } => {
            let values = match spacing {
                Spacing::Linear => linspace(start, end, spec.points),
                Spacing::Log => logspace(start, end, spec.points),
            };
            let name = format!("{parameter:?}").to_lowercase();
            let mut table = ScanResult::new(&[name.as_str(), "max_fidelity", "t_max", "ok"]);
            table.provenance = header(cfg, "scan");
            sweep(&mut table, &values, |&v| {
                let point = cfg.with_parameter(parameter, v)?;
                let m = best_fidelity(&point, spec.metric, spec.window)?;
                Ok(vec![v, m.value, m.t])
            })?;
            Ok(table)
        }
    }
}

/// Human-readable derived parameters.
pub fn describe_params(cfg: &Config) -> Result<String> {
    let u = cfg.units;
    let (fu, tu) = match u {
        Units::Mhz => ("2π·MHz", "μs"),
        Units::Natural => ("", ""),
    };
    let mut s = String::new();
    let eff = cfg.effective()?;
    let _ = writeln!(s, "g_eff        = {:.9e} {fu}", u.unfreq(eff.g_eff));
    let _ = writeln!(s, "chi          = {:.9e} {fu}", u.unfreq(eff.chi));
    let _ = writeln!(s, "delta        = {:.9e} {fu}", u.unfreq(eff.delta));
    let _ = writeln!(s, "alpha        = {:.9e}", eff.alpha());
    let tg = eff.gate_time()?;
    let _ = writeln!(s, "t_gate       = {:.9e} {tu}", tg);
    let _ = writeln!(s, "loops        = {:.9e}", (eff.delta / (2.0 * eff.g_eff)).powi(2));
    match &cfg.model {
        SystemModel::Effective(_) => {}
        SystemModel::Raman(c) => {
            let _ = writeln!(s, "stark_cavity = {:.9e} {fu}", u.unfreq(eff.stark_c));
            let _ = writeln!(s, "stark_g      = {:.9e} {fu}", u.unfreq(eff.stark_g));
            let _ = writeln!(s, "stark_e      = {:.9e} {fu}", u.unfreq(eff.stark_e));
            let _ = writeln!(s, "delta1_prime = {:.9e} {fu}", u.unfreq(eff.delta1_prime));
            let _ = writeln!(s, "delta2_prime = {:.9e} {fu}", u.unfreq(eff.delta2_prime));
            let rep = check_ms_conditions(c);
            let _ = writeln!(s, "detuning match     {} (mismatch {:.3e})", pass(rep.detuning_match.passed), rep.detuning_match.mismatch);
            let _ = writeln!(s, "rabi ratio         {} (mismatch {:.3e})", pass(rep.rabi_ratio.passed), rep.rabi_ratio.mismatch);
            let _ = writeln!(s, "adiabaticity ratio {:.3e} ({})", rep.adiabaticity_ratio, pass(rep.adiabatic));
            let mut c = c.clone();
            if let Some([a, b, d, e]) = cfg.gamma {
                (c.gamma_1g, c.gamma_1e, c.gamma_2g, c.gamma_2e) = (a, b, d, e);
            }
            c.kappa = cfg.kappa.unwrap_or(0.0);
            let d = diagnostics(&c, &eff)?;
            let _ = writeln!(s, "gamma_eff    = {:.9e} {fu}", u.unfreq(d.gamma_eff));
            let _ = writeln!(s, "p_spont      = {:.9e}", d.p_spont);
            let _ = writeln!(s, "p_kappa      = {:.9e}", d.p_kappa_scale);
        }
        SystemModel::Rb87(c) => {
            let d = derive_rb87(c)?;
            let _ = writeln!(s, "g_eff_1      = {:.9e} {fu}", u.unfreq(d.g_eff_1));
            let _ = writeln!(s, "g_eff_2      = {:.9e} {fu}", u.unfreq(d.g_eff_2));
            let _ = writeln!(s, "mismatch     = {:.3e}{}", d.coupling_mismatch, if d.unbalanced { " (unbalanced)" } else { "" });
            let _ = writeln!(s, "omega2       = {:.9e} {fu}", u.unfreq(c.omega2));
            let _ = writeln!(s, "gamma_eff    = {:.9e} {fu}", u.unfreq(d.effective.gamma_eff));
        }
    }
    Ok(s)
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}
