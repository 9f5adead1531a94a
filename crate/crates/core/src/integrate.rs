//! Adaptive Dormand–Prince 5(4) integrator for complex vector ODEs, with the fourth-order
//! continuous extension used to report states at arbitrary output times.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Step-size control settings.
#[derive(Clone, Debug, PartialEq)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the step; `f64::INFINITY` for none.
    pub max_step: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, max_step: f64::INFINITY, max_steps: 50_000_000 }
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be > 0".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidParameter("max_step must be > 0".into()));
        }
        Ok(())
    }
}

/// States at the requested output times plus step statistics.
#[derive(Clone, Debug)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<C64>>,
    pub accepted: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates `dy/dt = f(t, y)` from `t0` and returns `y` at every entry of `times`
/// (nondecreasing, all `≥ t0`).
pub fn integrate<F>(mut rhs: F, t0: f64, y0: &[C64], times: &[f64], ctl: &StepControl) -> Result<Solution>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    ctl.validate()?;
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("output times must be nondecreasing".into()));
    }
    if times.first().is_some_and(|&t| t < t0) {
        return Err(Error::InvalidParameter("output time before start time".into()));
    }
    let n = y0.len();
    let mut sol = Solution { times: times.to_vec(), states: Vec::with_capacity(times.len()), accepted: 0, rejected: 0 };
    let mut next_out = 0;
    while next_out < times.len() && times[next_out] == t0 {
        sol.states.push(y0.to_vec());
        next_out += 1;
    }
    if next_out == times.len() {
        return Ok(sol);
    }
    let t_end = *times.last().unwrap();

    let mut y = y0.to_vec();
    let mut k: [Vec<C64>; 7] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]);
    let mut tmp = vec![C64::new(0.0, 0.0); n];
    let mut y_new = vec![C64::new(0.0, 0.0); n];
    let mut t = t0;
    rhs(t, &y, &mut k[0]);
    let mut h = initial_step(&mut rhs, t, &y, &k[0], ctl, t_end - t0, &mut tmp);
    let mut steps = 0usize;

    while next_out < times.len() {
        if steps >= ctl.max_steps {
            return Err(Error::TooManySteps(ctl.max_steps));
        }
        steps += 1;
        h = h.min(ctl.max_step).min(t_end - t);
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h });
        }

        stage(&mut tmp, &y, h, &[(A21, &k[0])]);
        rhs(t + C2 * h, &tmp, &mut k[1]);
        stage(&mut tmp, &y, h, &[(A31, &k[0]), (A32, &k[1])]);
        rhs(t + C3 * h, &tmp, &mut k[2]);
        stage(&mut tmp, &y, h, &[(A41, &k[0]), (A42, &k[1]), (A43, &k[2])]);
        rhs(t + C4 * h, &tmp, &mut k[3]);
        stage(&mut tmp, &y, h, &[(A51, &k[0]), (A52, &k[1]), (A53, &k[2]), (A54, &k[3])]);
        rhs(t + C5 * h, &tmp, &mut k[4]);
        stage(&mut tmp, &y, h, &[(A61, &k[0]), (A62, &k[1]), (A63, &k[2]), (A64, &k[3]), (A65, &k[4])]);
        rhs(t + h, &tmp, &mut k[5]);
        stage(&mut y_new, &y, h, &[(A71, &k[0]), (A73, &k[2]), (A74, &k[3]), (A75, &k[4]), (A76, &k[5])]);
        rhs(t + h, &y_new, &mut k[6]);

        let mut err2 = 0.0;
        for i in 0..n {
            let e = h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            let sc = ctl.abs_tol + ctl.rel_tol * y[i].norm().max(y_new[i].norm());
            err2 += (e.norm() / sc).powi(2);
        }
        let err = (err2 / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            sol.rejected += 1;
            h *= 0.2;
            continue;
        }
        if err > 1.0 {
            sol.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            continue;
        }

        let t_new = t + h;
        // Outputs inside (t, t_new] from the continuous extension.
        while next_out < times.len() && (times[next_out] <= t_new || t_new >= t_end) {
            let theta = ((times[next_out] - t) / h).clamp(0.0, 1.0);
            let th1 = 1.0 - theta;
            let out: Vec<C64> = (0..n)
                .map(|i| {
                    let r2 = y_new[i] - y[i];
                    let r3 = h * k[0][i] - r2;
                    let r4 = r2 - h * k[6][i] - r3;
                    let r5 = h
                        * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
                    y[i] + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)))
                })
                .collect();
            sol.states.push(out);
            next_out += 1;
        }

        std::mem::swap(&mut y, &mut y_new);
        k.swap(0, 6);
        t = t_new;
        sol.accepted += 1;
        let fac = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
        h *= fac;
    }
    Ok(sol)
}

fn stage(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &Vec<C64>)]) {
    out.copy_from_slice(y);
    for &(a, k) in terms {
        let ha = h * a;
        for (o, &ki) in out.iter_mut().zip(k.iter()) {
            *o += ha * ki;
        }
    }
}

fn rms_scaled(v: &[C64], y: &[C64], ctl: &StepControl) -> f64 {
    let s: f64 = v
        .iter()
        .zip(y)
        .map(|(a, b)| (a.norm() / (ctl.abs_tol + ctl.rel_tol * b.norm())).powi(2))
        .sum();
    (s / v.len().max(1) as f64).sqrt()
}

/// Starting step from the local Lipschitz estimate (Hairer–Nørsett–Wanner, II.4).
fn initial_step<F>(rhs: &mut F, t: f64, y: &[C64], f0: &[C64], ctl: &StepControl, span: f64, tmp: &mut [C64]) -> f64
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let d0 = rms_scaled(y, y, ctl);
    let d1 = rms_scaled(f0, y, ctl);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span).min(ctl.max_step);
    let y1: Vec<C64> = y.iter().zip(f0).map(|(&a, &b)| a + h0 * b).collect();
    rhs(t + h0, &y1, tmp);
    let diff: Vec<C64> = tmp.iter().zip(f0).map(|(&a, &b)| a - b).collect();
    let d2 = rms_scaled(&diff, y, ctl) / h0;
    let m = d1.max(d2);
    let h1 = if m <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / m).powf(0.2) };
    (100.0 * h0).min(h1).min(span).min(ctl.max_step)
}
