//! Gate and state fidelities of two atomic qubits.
//!
//! The average gate fidelity of a channel `E` against a unitary `U` is
//! `F̄ = (Σ_k tr(U σ_k U† E(σ_k)) + 16) / 80`, with `σ_k` running over the 16 two-qubit Pauli
//! products. Channels are obtained by propagating `σ_k ⊗ |0⟩⟨0|` and tracing out the photons.
//! For atoms with a third level the Paulis act on `(g, e)` only, and anything found outside the
//! qubit block counts as loss.

use rayon::prelude::*;

use crate::dynamics::PeriodicPropagator;
use crate::error::{Error, Result};
use crate::hamiltonians::{E, G};
use crate::msgate::{atomic_phase_gate, computational_state, ideal_gate_map, target_state, MsTrajectory};
use crate::perturbation::StarkSeries;
use crate::qops::{DensityOperator, HilbertLayout, Ket, Matrix, SpectralPropagator, Vector, I, ONE, ZERO};
use crate::C64;

/// `σ_a ⊗ σ_b` for `a, b ∈ (I, X, Y, Z)`, `a` major, on `(gg, ge, eg, ee)`.
pub fn pauli_products() -> Vec<Matrix> {
    let single = [
        Matrix::identity(2, 2),
        Matrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        Matrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        Matrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ];
    let mut out = Vec::with_capacity(16);
    for a in &single {
        for b in &single {
            out.push(a.kronecker(b));
        }
    }
    out
}

/// Images `E(σ_k)` of the 16 Pauli products at one time.
#[derive(Clone, Debug)]
pub struct ChannelSample {
    pub t: f64,
    pub outputs: Vec<Matrix>,
}

impl ChannelSample {
    /// `tr E(I⊗I)`, which is 4 for a trace-preserving channel.
    pub fn identity_trace(&self) -> f64 {
        self.outputs[0].trace().re
    }

    /// `E(ρ)` for any atomic operator, by linearity.
    pub fn apply(&self, rho: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(4, 4);
        for (p, img) in pauli_products().iter().zip(&self.outputs) {
            // coefficient tr(σ ρ)/4
            let c = (p * rho).trace() / 4.0;
            out += img * c;
        }
        out
    }
}

/// Comparison unitary for the average gate fidelity.
#[derive(Clone, Debug, PartialEq)]
pub enum IdealGate {
    /// The truth table, `e^{i sign(δ) (π/2) S_x²}` up to a global phase, at every time.
    Fixed { delta_sign: f64 },
    /// The atomic factor `e^{iβ(t) S_x²}` of the ideal propagator at the same time.
    Trajectory(MsTrajectory),
}

impl IdealGate {
    pub fn at(&self, t: f64) -> Matrix {
        match self {
            IdealGate::Fixed { delta_sign } => ideal_gate_map(*delta_sign),
            IdealGate::Trajectory(tr) => atomic_phase_gate(tr.beta_t(t)),
        }
    }
}

/// Nielsen's average gate fidelity.
pub fn avg_gate_fidelity(sample: &ChannelSample, ideal: &Matrix) -> Result<f64> {
    if sample.outputs.len() != 16 {
        return Err(Error::DimensionMismatch { expected: 16, found: sample.outputs.len() });
    }
    if ideal.nrows() != 4 || ideal.ncols() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: ideal.nrows() });
    }
    let mut sum = 0.0;
    for (p, img) in pauli_products().iter().zip(&sample.outputs) {
        if img.nrows() != 4 || img.ncols() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, found: img.nrows() });
        }
        sum += (ideal * p * ideal.adjoint() * img).trace().re;
    }
    Ok((sum + 16.0) / 80.0)
}

/// `⟨Φ_i^{(±)}| ρ_atoms |Φ_i^{(±)}⟩` for a 4×4 atomic operator.
pub fn state_fidelity(rho_atoms: &Matrix, i: usize, delta_sign: f64) -> Result<f64> {
    if rho_atoms.nrows() != 4 || rho_atoms.ncols() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho_atoms.nrows() });
    }
    let phi = target_state(i, delta_sign)?;
    Ok(phi.dotc(&(rho_atoms * &phi)).re)
}

/// Qubit-block part of the photon-traced state for any two-atom layout.
pub fn qubit_reduced(rho: &Matrix, layout: &HilbertLayout) -> Result<Matrix> {
    let map = QubitMap::new(layout, (0..layout.dim()).collect())?;
    Ok(map.reduce(rho))
}

/// State fidelity of a ket on a two-atom layout.
pub fn state_fidelity_ket(psi: &Ket, i: usize, delta_sign: f64) -> Result<f64> {
    let rho = psi.vector() * psi.vector().adjoint();
    state_fidelity(&qubit_reduced(&rho, psi.layout())?, i, delta_sign)
}

/// State fidelity of a density operator on a two-atom layout.
pub fn state_fidelity_rho(rho: &DensityOperator, i: usize, delta_sign: f64) -> Result<f64> {
    state_fidelity(&qubit_reduced(rho.matrix(), rho.layout())?, i, delta_sign)
}

/// `|η⁽⁰⁾ + … + η⁽ᵏ⁾|²` with `order = k ≤ 2`.
pub fn overlap_fidelity(series: &StarkSeries, i: usize, n: usize, t: f64, order: usize) -> Result<f64> {
    let s = series.eta(i, n, t)?;
    let total = match order {
        0 => s.eta0,
        1 => s.eta0 + s.eta1,
        2 => s.sum(),
        _ => return Err(Error::InvalidParameter(format!("series order {order} not available"))),
    };
    Ok(total.norm_sqr())
}

/// Where each retained basis state sits in the two-qubit ⊗ photon space.
#[derive(Clone, Debug)]
struct QubitMap {
    /// `(qubit index, photon)` per retained state, `None` outside the qubit block.
    slots: Vec<Option<(usize, usize)>>,
}

impl QubitMap {
    fn new(layout: &HilbertLayout, basis: Vec<usize>) -> Result<Self> {
        if layout.n_atoms() != 2 {
            return Err(Error::InvalidDimension("fidelities are defined for two atoms".into()));
        }
        let slots = basis
            .iter()
            .map(|&b| {
                let (atoms, n) = layout.split(b);
                match (atoms[0], atoms[1]) {
                    (x, y) if (x == G || x == E) && (y == G || y == E) => Some((2 * x + y, n)),
                    _ => None,
                }
            })
            .collect();
        Ok(Self { slots })
    }

    /// Photon trace restricted to the qubit block.
    fn reduce(&self, rho: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(4, 4);
        for (p, sp) in self.slots.iter().enumerate() {
            let Some((a, n)) = sp else { continue };
            for (q, sq) in self.slots.iter().enumerate() {
                if let Some((b, m)) = sq {
                    if n == m {
                        out[(*a, *b)] += rho[(p, q)];
                    }
                }
            }
        }
        out
    }

    /// `σ ⊗ |0⟩⟨0|` on the retained basis.
    fn embed_vacuum(&self, sigma: &Matrix) -> Matrix {
        let d = self.slots.len();
        let mut out = Matrix::zeros(d, d);
        for (p, sp) in self.slots.iter().enumerate() {
            let Some((a, 0)) = sp else { continue };
            for (q, sq) in self.slots.iter().enumerate() {
                if let Some((b, 0)) = sq {
                    out[(p, q)] = sigma[(*a, *b)];
                }
            }
        }
        out
    }
}

/// Closed two-atom evolution under a static Hamiltonian, by eigendecomposition.
#[derive(Clone, Debug)]
pub struct ClosedChannel {
    layout: HilbertLayout,
    prop: SpectralPropagator,
    map: QubitMap,
}

impl ClosedChannel {
    pub fn new(h: &crate::qops::ComplexOperator) -> Result<Self> {
        let layout = h.layout().clone();
        let map = QubitMap::new(&layout, (0..layout.dim()).collect())?;
        Ok(Self { prop: SpectralPropagator::new(h.matrix())?, layout, map })
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    /// `e^{−iHt}|φ_i⟩|n⟩`.
    pub fn evolve(&self, i: usize, n: usize, t: f64) -> Result<Vector> {
        let psi = Ket::product(&self.layout, &computational_state(i)?, n)?;
        Ok(self.prop.apply(t, psi.vector()))
    }

    /// `F_{i,n}(t)`.
    pub fn state_fidelity(&self, i: usize, n: usize, t: f64, delta_sign: f64) -> Result<f64> {
        let v = self.evolve(i, n, t)?;
        state_fidelity(&self.map.reduce(&(&v * v.adjoint())), i, delta_sign)
    }

    pub fn sample(&self, t: f64) -> Result<ChannelSample> {
        // A_n[x, a] = ⟨x, n| e^{−iHt} |a, 0⟩, E(σ) = Σ_n A_n σ A_n†
        let cols: Vec<Vector> = (1..=4).map(|i| self.evolve(i, 0, t)).collect::<Result<_>>()?;
        let f = self.layout.fock_dim();
        let blocks: Vec<Matrix> = (0..f)
            .map(|n| Matrix::from_fn(4, 4, |x, a| cols[a][self.layout.index(&[x / 2, x % 2], n)]))
            .collect();
        let outputs = pauli_products()
            .iter()
            .map(|p| {
                let mut acc = Matrix::zeros(4, 4);
                for b in &blocks {
                    acc += b * p * b.adjoint();
                }
                acc
            })
            .collect();
        Ok(ChannelSample { t, outputs })
    }
}

/// Open evolution built on a [`PeriodicPropagator`]; times are reached by whole periods
/// followed by direct integration inside the last period.
#[derive(Clone, Debug)]
pub struct OpenChannel {
    prop: PeriodicPropagator,
    map: QubitMap,
    /// Column k holds `vec(σ_k ⊗ |0⟩⟨0|)`.
    inputs: Matrix,
}

impl OpenChannel {
    pub fn new(prop: PeriodicPropagator) -> Result<Self> {
        let gen = prop.generator();
        let map = QubitMap::new(gen.layout(), gen.basis().to_vec())?;
        let d = gen.dim();
        let mut inputs = Matrix::zeros(d * d, 16);
        for (k, p) in pauli_products().iter().enumerate() {
            inputs.column_mut(k).copy_from_slice(map.embed_vacuum(p).as_slice());
        }
        Ok(Self { prop, map, inputs })
    }

    pub fn propagator(&self) -> &PeriodicPropagator {
        &self.prop
    }

    fn split_time(&self, t: f64) -> Result<(u64, f64)> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("time {t} must be finite and >= 0")));
        }
        let tau = self.prop.period();
        let k = (t / tau + 1e-12).floor();
        Ok((k as u64, (t - k * tau).max(0.0)))
    }

    /// Evolved `vec` columns for the given inputs at time `t`.
    fn evolve_columns(&self, inputs: &Matrix, t: f64, hermitian: bool) -> Result<Vec<Matrix>> {
        let (k, rest) = self.split_time(t)?;
        let advanced = self.prop.advance(inputs, k)?;
        let d = self.prop.generator().dim();
        let tol = 1e-12 * self.prop.period();
        (0..inputs.ncols())
            .into_par_iter()
            .map(|c| {
                let col: Vec<C64> = advanced.column(c).iter().copied().collect();
                if rest <= tol {
                    Ok(Matrix::from_vec(d, d, col))
                } else {
                    Ok(self.prop.within_period(&col, &[rest], hermitian)?.remove(0))
                }
            })
            .collect()
    }

    pub fn sample(&self, t: f64) -> Result<ChannelSample> {
        let outs = self.evolve_columns(&self.inputs, t, true)?;
        Ok(ChannelSample { t, outputs: outs.iter().map(|m| self.map.reduce(m)).collect() })
    }

    /// `F_{i,0}(t)` for the vacuum input `|φ_i⟩|0⟩`.
    pub fn state_fidelity(&self, i: usize, t: f64, delta_sign: f64) -> Result<f64> {
        let phi = computational_state(i)?;
        let rho0 = self.map.embed_vacuum(&(&phi * phi.adjoint()));
        let d = rho0.nrows();
        let input = Matrix::from_column_slice(d * d, 1, rho0.as_slice());
        let out = self.evolve_columns(&input, t, true)?;
        state_fidelity(&self.map.reduce(&out[0]), i, delta_sign)
    }
}

/// Coarse grid plus golden-section refinement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxSearch {
    pub coarse_points: usize,
    /// Final bracket width as a fraction of the window.
    pub rel_resolution: f64,
}

impl Default for MaxSearch {
    fn default() -> Self {
        Self { coarse_points: 200, rel_resolution: 1e-4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Maximum {
    pub t: f64,
    pub value: f64,
}

/// Maximum of `metric` over `[start, end]`. The coarse grid is evaluated in parallel.
pub fn max_over_time<F>(metric: F, start: f64, end: f64, search: MaxSearch) -> Result<Maximum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(end > start) || !start.is_finite() || !end.is_finite() {
        return Err(Error::EmptyWindow { start, end });
    }
    let n = search.coarse_points.max(3);
    let grid: Vec<f64> = (0..n).map(|k| start + (end - start) * k as f64 / (n - 1) as f64).collect();
    let values: Vec<f64> = grid.par_iter().map(|&t| metric(t)).collect::<Result<_>>()?;
    let best = values
        .iter()
        .enumerate()
        .fold(0, |b, (k, v)| if *v > values[b] { k } else { b });
    let mut out = Maximum { t: grid[best], value: values[best] };
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(n - 1)]);
    let width = search.rel_resolution * (end - start);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = metric(x1)?;
    let mut f2 = metric(x2)?;
    while b - a > width {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = metric(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = metric(x2)?;
        }
    }
    for (t, v) in [(x1, f1), (x2, f2)] {
        if v > out.value {
            out = Maximum { t, value: v };
        }
    }
    Ok(out)
}

/// Maximum of a metric whose fast structure repeats with period `tau`, over the period
/// boundaries `k τ` with `k ∈ [k_lo, k_hi]` and then continuously within one period on either
/// side of the best boundary. Needed when the window spans far more periods than coarse points.
pub fn max_stroboscopic<F>(metric: F, tau: f64, k_lo: u64, k_hi: u64, search: MaxSearch) -> Result<Maximum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(tau > 0.0) || k_hi < k_lo {
        return Err(Error::EmptyWindow { start: k_lo as f64 * tau, end: k_hi as f64 * tau });
    }
    let span = k_hi - k_lo;
    let step = (span / search.coarse_points.max(2) as u64).max(1);
    let ks: Vec<u64> = (0..=span / step).map(|j| k_lo + j * step).collect();
    let values: Vec<f64> = ks.par_iter().map(|&k| metric(k as f64 * tau)).collect::<Result<_>>()?;
    let mut best = ks
        .iter()
        .zip(&values)
        .fold((ks[0], values[0]), |b, (&k, &v)| if v > b.1 { (k, v) } else { b });
    if step > 1 {
        // integer ternary search inside the coarse bracket
        let (mut a, mut b) = (best.0.saturating_sub(step).max(k_lo), (best.0 + step).min(k_hi));
        let eval = |k: u64| metric(k as f64 * tau);
        while b - a > 3 {
            let x1 = a + (b - a) / 3;
            let x2 = b - (b - a) / 3;
            if eval(x1)? >= eval(x2)? {
                b = x2;
            } else {
                a = x1;
            }
        }
        for k in a..=b {
            let v = eval(k)?;
            if v > best.1 {
                best = (k, v);
            }
        }
    }
    let center = best.0 as f64 * tau;
    let fine = MaxSearch { coarse_points: 64, rel_resolution: search.rel_resolution };
    let m = max_over_time(&metric, (center - tau).max(0.0), center + tau, fine)?;
    Ok(if m.value >= best.1 { m } else { Maximum { t: center, value: best.1 } })
}
