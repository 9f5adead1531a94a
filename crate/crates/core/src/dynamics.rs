//! Schrödinger and Lindblad propagation.
//!
//! The master equation is
//! `dρ/dt = −i[H(t), ρ] + Σ_C (2CρC† − C†Cρ − ρC†C)`,
//! i.e. the factor 2 belongs to the convention and a collapse operator `√κ a` describes
//! field-amplitude decay at rate κ. It is evaluated as
//! `−i(H_nh ρ − ρ H_nh†) + 2 Σ_C CρC†` with `H_nh = H − i Σ_C C†C`.

use nalgebra::{DMatrixView, DMatrixViewMut};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonians::{TimeDependentHamiltonian, E, G, U};
use crate::integrate::{integrate, StepControl};
use crate::params::{RamanConfig, Rb87Config};
use crate::qops::{
    embed, fock_annihilate, hermitian_part, matmul, transition, ComplexOperator, DensityOperator, HilbertLayout, Ket, Matrix,
    Site, Vector, ONE, TRUNCATION_THRESHOLD, ZERO,
};

/// Tolerances and output grid for one propagation.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub output_times: Vec<f64>,
}

impl IntegratorConfig {
    /// Defaults for state vectors: 1e-8 relative, 1e-10 absolute.
    pub fn for_kets(output_times: Vec<f64>) -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-10, max_step: f64::INFINITY, output_times }
    }

    /// Defaults for density operators: 1e-7 relative, 1e-9 absolute.
    pub fn for_density(output_times: Vec<f64>) -> Self {
        Self { rel_tol: 1e-7, abs_tol: 1e-9, max_step: f64::INFINITY, output_times }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter("integrator tolerances must be > 0".into()));
        }
        if self.output_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("output times must be nondecreasing".into()));
        }
        if self.output_times.first().is_some_and(|&t| t < 0.0) {
            return Err(Error::InvalidParameter("output times must be >= 0".into()));
        }
        Ok(())
    }

    pub fn step_control(&self) -> StepControl {
        StepControl::new(self.rel_tol, self.abs_tol).with_max_step(self.max_step)
    }
}

/// Hamiltonian plus collapse operators.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    hamiltonian: TimeDependentHamiltonian,
    collapse_ops: Vec<ComplexOperator>,
}

impl LindbladModel {
    /// Zero collapse operators are dropped.
    pub fn new(hamiltonian: TimeDependentHamiltonian, collapse_ops: Vec<ComplexOperator>) -> Result<Self> {
        for c in &collapse_ops {
            if c.layout() != hamiltonian.layout() {
                return Err(Error::DimensionMismatch { expected: hamiltonian.dim(), found: c.dim() });
            }
        }
        let collapse_ops = collapse_ops.into_iter().filter(|c| !c.is_zero()).collect();
        Ok(Self { hamiltonian, collapse_ops })
    }

    pub fn closed(hamiltonian: TimeDependentHamiltonian) -> Self {
        Self { hamiltonian, collapse_ops: Vec::new() }
    }

    pub fn hamiltonian(&self) -> &TimeDependentHamiltonian {
        &self.hamiltonian
    }

    pub fn collapse_ops(&self) -> &[ComplexOperator] {
        &self.collapse_ops
    }

    pub fn layout(&self) -> &HilbertLayout {
        self.hamiltonian.layout()
    }

    pub fn generator(&self) -> Generator {
        let h = &self.hamiltonian;
        let dim = h.dim();
        let jumps: Vec<Matrix> = self.collapse_ops.iter().map(|c| c.matrix().clone()).collect();
        let mut gamma = Matrix::zeros(dim, dim);
        for j in &jumps {
            gamma += j.adjoint() * j;
        }
        Generator {
            layout: self.layout().clone(),
            basis: (0..dim).collect(),
            h0: h.static_part().matrix().clone(),
            osc: h.oscillating_parts().iter().map(|(op, w)| (op.matrix().clone(), *w)).collect(),
            jumps,
            gamma,
        }
    }
}

/// Dense matrices of a [`LindbladModel`], possibly restricted to an invariant block of the
/// product basis.
#[derive(Clone, Debug)]
pub struct Generator {
    layout: HilbertLayout,
    /// Product-basis indices of the retained states, in order.
    basis: Vec<usize>,
    h0: Matrix,
    osc: Vec<(Matrix, f64)>,
    jumps: Vec<Matrix>,
    /// `Σ C†C`.
    gamma: Matrix,
}

impl Generator {
    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    /// Product-basis index of every retained state.
    pub fn basis(&self) -> &[usize] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn jump_count(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_static(&self) -> bool {
        self.osc.is_empty()
    }

    /// Common period of the oscillating terms, if any.
    pub fn period(&self) -> Option<f64> {
        let w = self.osc.first()?.1.abs();
        if w == 0.0 || self.osc.iter().any(|(_, v)| v.abs() != w) {
            return None;
        }
        Some(std::f64::consts::TAU / w)
    }

    /// Whether `Σ C†C` equals the Γ used in `H_nh`, i.e. whether trace is conserved.
    pub fn is_trace_preserving(&self) -> bool {
        let mut s = Matrix::zeros(self.dim(), self.dim());
        for j in &self.jumps {
            s += j.adjoint() * j;
        }
        let scale = self.gamma.iter().map(|z| z.norm()).fold(1e-300, f64::max);
        (s - &self.gamma).iter().all(|z| z.norm() <= 1e-12 * scale)
    }

    /// Restriction to the product-basis states `keep`. Requires that neither the Hamiltonian,
    /// the jump operators nor `Σ C†C` map the discarded states into the retained ones, so that
    /// the retained block of ρ obeys a closed equation. Jumps out of the block only remove
    /// trace.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let dim = self.dim();
        if keep.iter().any(|&k| k >= dim) || keep.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("restriction indices must be increasing and in range".into()));
        }
        let drop: Vec<usize> = (0..dim).filter(|k| keep.binary_search(k).is_err()).collect();
        let leaks_in = |m: &Matrix| keep.iter().any(|&r| drop.iter().any(|&c| m[(r, c)] != ZERO));
        let couples = |m: &Matrix| leaks_in(m) || leaks_in(&m.adjoint());
        if couples(&self.h0) || self.osc.iter().any(|(m, _)| couples(m)) || couples(&self.gamma) {
            return Err(Error::InvalidParameter("Hamiltonian couples the block to the rest".into()));
        }
        if self.jumps.iter().any(leaks_in) {
            return Err(Error::InvalidParameter("a jump operator feeds the block from outside".into()));
        }
        let sub = |m: &Matrix| Matrix::from_fn(keep.len(), keep.len(), |i, j| m[(keep[i], keep[j])]);
        Ok(Self {
            layout: self.layout.clone(),
            basis: keep.iter().map(|&k| self.basis[k]).collect(),
            h0: sub(&self.h0),
            osc: self.osc.iter().map(|(m, w)| (sub(m), *w)).collect(),
            jumps: self.jumps.iter().map(sub).filter(|m| m.iter().any(|z| *z != ZERO)).collect(),
            gamma: sub(&self.gamma),
        })
    }

    pub fn hamiltonian_at(&self, t: f64) -> Matrix {
        let mut h = self.h0.clone();
        add_oscillating(&mut h, &self.osc, t);
        h
    }

    fn h_nh_at(&self, t: f64, out: &mut Matrix) {
        out.copy_from(&self.h0);
        *out -= &self.gamma * C64::new(0.0, 1.0);
        add_oscillating(out, &self.osc, t);
    }

    /// Superoperator of the static part acting on column-major `vec(ρ)`.
    pub fn static_superoperator(&self) -> Result<Matrix> {
        if !self.is_static() {
            return Err(Error::InvalidParameter("generator is time dependent".into()));
        }
        let d = self.dim();
        let id = Matrix::identity(d, d);
        let mut hn = Matrix::zeros(d, d);
        self.h_nh_at(0.0, &mut hn);
        let mi = C64::new(0.0, -1.0);
        let mut l = (id.kronecker(&hn) - hn.conjugate().kronecker(&id)) * mi;
        for j in &self.jumps {
            l += j.conjugate().kronecker(j) * C64::new(2.0, 0.0);
        }
        Ok(l)
    }

    /// Propagates a density operator (or any operator, the equation being linear). With
    /// `hermitian` set the input must be Hermitian and the right-hand side is formed as
    /// `M + M†`, which keeps every stage exactly Hermitian.
    pub fn propagate_operator(
        &self,
        rho0: &Matrix,
        t0: f64,
        times: &[f64],
        ctl: &StepControl,
        hermitian: bool,
    ) -> Result<Vec<Matrix>> {
        let d = self.dim();
        if rho0.nrows() != d || rho0.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: rho0.nrows() });
        }
        let mut n = Matrix::zeros(d, d);
        let sparse: Vec<Vec<(usize, usize, C64)>> = self.jumps.iter().map(triplets).collect();
        let static_nh = triplets(&(&self.h0 - &self.gamma * C64::new(0.0, 1.0)));
        let osc: Vec<_> = self.osc.iter().map(|(m, w)| (triplets(m), triplets(&m.adjoint()), *w)).collect();
        let i = C64::new(0.0, 1.0);
        let two = C64::new(2.0, 0.0);
        let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
            let rho = DMatrixView::from_slice(y, d, d);
            let mut out = DMatrixViewMut::from_slice(dy, d, d);
            // n = i ρ H_nh†, accumulated column by column
            n.fill(ZERO);
            let mut add_cols = |terms: &[(usize, usize, C64)], f: C64| {
                for &(r, c, a) in terms {
                    let coeff = i * (f * a).conj();
                    let (src, mut dst) = (rho.column(c), n.column_mut(r));
                    dst.axpy(coeff, &src, ONE);
                }
            };
            add_cols(&static_nh, ONE);
            for (m, md, w) in &osc {
                let ph = C64::from_polar(1.0, -w * t);
                add_cols(m, ph);
                add_cols(md, ph.conj());
            }
            if hermitian {
                // −iH_nhρ = (iρH_nh†)† for Hermitian ρ
                out.copy_from(&n);
                out += n.adjoint();
            } else {
                out.copy_from(&n);
                let mut add_rows = |terms: &[(usize, usize, C64)], f: C64| {
                    for &(r, c, a) in terms {
                        let coeff = -i * f * a;
                        for k in 0..d {
                            out[(r, k)] += coeff * rho[(c, k)];
                        }
                    }
                };
                add_rows(&static_nh, ONE);
                for (m, md, w) in &osc {
                    let ph = C64::from_polar(1.0, -w * t);
                    add_rows(m, ph);
                    add_rows(md, ph.conj());
                }
            }
            for j in &sparse {
                for &(r, c, a) in j {
                    let a2 = two * a;
                    for &(r2, c2, b) in j {
                        out[(r, r2)] += a2 * rho[(c, c2)] * b.conj();
                    }
                }
            }
        };
        let sol = integrate(rhs, t0, rho0.as_slice(), times, ctl)?;
        Ok(sol.states.into_iter().map(|s| Matrix::from_vec(d, d, s)).collect())
    }

    /// Schrödinger propagation with `H(t)`; collapse operators are ignored.
    pub fn propagate_ket(&self, psi0: &Vector, t0: f64, times: &[f64], ctl: &StepControl) -> Result<Vec<Vector>> {
        let d = self.dim();
        if psi0.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: psi0.len() });
        }
        let mut h = Matrix::zeros(d, d);
        let mi = C64::new(0.0, -1.0);
        let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
            h.copy_from(&self.h0);
            add_oscillating(&mut h, &self.osc, t);
            let psi = DMatrixView::from_slice(y, d, 1);
            let mut out = DMatrixViewMut::from_slice(dy, d, 1);
            out.gemm(mi, &h, &psi, ZERO);
        };
        let sol = integrate(rhs, t0, psi0.as_slice(), times, ctl)?;
        Ok(sol.states.into_iter().map(Vector::from_vec).collect())
    }

    /// Population of the top two Fock levels in an operator on the retained basis.
    pub fn fock_tail(&self, rho: &Matrix) -> f64 {
        let f = self.layout.fock_dim();
        self.basis.iter().enumerate().filter(|(_, &b)| b % f + 2 >= f).map(|(k, _)| rho[(k, k)].re.abs()).sum()
    }
}

/// Nonzero entries of a jump operator; these are products of a ladder operator and an atomic
/// transition, so `Σ JρJ†` costs far less than two dense products.
fn triplets(m: &Matrix) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if m[(r, c)] != ZERO {
                out.push((r, c, m[(r, c)]));
            }
        }
    }
    out
}

fn add_oscillating(h: &mut Matrix, osc: &[(Matrix, f64)], t: f64) {
    for (m, w) in osc {
        let ph = C64::from_polar(1.0, -w * t);
        let n = m.nrows();
        for j in 0..n {
            for i in 0..n {
                h[(i, j)] += ph * m[(i, j)] + (ph * m[(j, i)]).conj();
            }
        }
    }
}

/// States at the output times plus run diagnostics.
#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    /// Largest population seen in the top two Fock levels.
    pub max_fock_tail: f64,
    /// Set when `max_fock_tail` exceeds [`TRUNCATION_THRESHOLD`].
    pub truncation_limited: bool,
    /// Largest `|‖ψ‖ − 1|` or `|tr ρ − tr ρ₀|` over the outputs.
    pub max_norm_drift: f64,
}

/// `|Ψ(t)⟩` for a normalised initial state.
pub fn evolve_ket(h: &TimeDependentHamiltonian, psi0: &Ket, cfg: &IntegratorConfig) -> Result<Trajectory<Ket>> {
    cfg.validate()?;
    if psi0.layout() != h.layout() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: psi0.vector().len() });
    }
    let norm = psi0.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!("initial state norm {norm}")));
    }
    let gen = LindbladModel::closed(h.clone()).generator();
    let states = gen.propagate_ket(psi0.vector(), 0.0, &cfg.output_times, &cfg.step_control())?;
    let mut traj = Trajectory {
        times: cfg.output_times.clone(),
        states: Vec::with_capacity(states.len()),
        max_fock_tail: 0.0,
        truncation_limited: false,
        max_norm_drift: 0.0,
    };
    for v in states {
        let k = Ket::new(h.layout().clone(), v)?;
        traj.max_fock_tail = traj.max_fock_tail.max(k.fock_tail_population());
        traj.max_norm_drift = traj.max_norm_drift.max((k.norm() - 1.0).abs());
        traj.states.push(k);
    }
    traj.truncation_limited = traj.max_fock_tail > TRUNCATION_THRESHOLD;
    Ok(traj)
}

/// Tolerated negative eigenvalue before a run is declared unphysical.
pub const POSITIVITY_TOL: f64 = 1e-6;

/// `ρ(t)` under the master equation.
pub fn evolve_rho(
    model: &LindbladModel,
    rho0: &DensityOperator,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<DensityOperator>> {
    cfg.validate()?;
    if rho0.layout() != model.layout() {
        return Err(Error::DimensionMismatch { expected: model.layout().dim(), found: rho0.matrix().nrows() });
    }
    let gen = model.generator();
    let start = hermitian_part(rho0.matrix());
    let tr0 = rho0.trace();
    let states = gen.propagate_operator(&start, 0.0, &cfg.output_times, &cfg.step_control(), true)?;
    let mut traj = Trajectory {
        times: cfg.output_times.clone(),
        states: Vec::with_capacity(states.len()),
        max_fock_tail: 0.0,
        truncation_limited: false,
        max_norm_drift: 0.0,
    };
    for (m, &t) in states.into_iter().zip(&cfg.output_times) {
        let rho = DensityOperator::new_unchecked(model.layout().clone(), hermitian_part(&m))?;
        let min = rho.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::Positivity { min_eigenvalue: min, t });
        }
        traj.max_fock_tail = traj.max_fock_tail.max(rho.fock_tail_population());
        traj.max_norm_drift = traj.max_norm_drift.max((rho.trace() - tr0).abs());
        traj.states.push(rho);
    }
    traj.truncation_limited = traj.max_fock_tail > TRUNCATION_THRESHOLD;
    Ok(traj)
}

/// `√κ a`, or nothing for κ = 0.
pub fn cavity_decay_ops(kappa: f64, layout: &HilbertLayout) -> Result<Vec<ComplexOperator>> {
    if kappa < 0.0 || !kappa.is_finite() {
        return Err(Error::InvalidParameter("κ must be finite and >= 0".into()));
    }
    if kappa == 0.0 {
        return Ok(Vec::new());
    }
    Ok(vec![embed(&fock_annihilate(layout.n_max())?, Site::Photon, layout)?.scale(C64::new(kappa.sqrt(), 0.0))])
}

/// `√γ (c_a a|to⟩⟨from_a| + c_d |to⟩⟨from_d|)` on atom `k`.
#[allow(clippy::too_many_arguments)]
fn mixed_op(
    layout: &HilbertLayout,
    k: usize,
    rate: f64,
    photon_coeff: f64,
    photon_from: usize,
    drive_coeff: f64,
    drive_from: usize,
    to: usize,
) -> Result<ComplexOperator> {
    let levels = layout.atom_levels()[k];
    let a = embed(&fock_annihilate(layout.n_max())?, Site::Photon, layout)?;
    let p = embed(&transition(levels, to, photon_from), Site::Atom(k), layout)?;
    let d = embed(&transition(levels, to, drive_from), Site::Atom(k), layout)?;
    let op = &(&a * &p).scale(C64::new(photon_coeff, 0.0)) + &d.scale(C64::new(drive_coeff, 0.0));
    Ok(op.scale(C64::new(rate.sqrt(), 0.0)))
}

/// Effective spontaneous-emission operators `C_{1g}, C_{1e}, C_{2g}, C_{2e}` of every atom,
/// time independent in the frame of `H'_eff`. Operators with zero rate are omitted.
pub fn effective_atomic_ops(cfg: &RamanConfig, layout: &HilbertLayout) -> Result<Vec<ComplexOperator>> {
    cfg.validate()?;
    if layout.atom_levels().iter().any(|&l| l != 2) {
        return Err(Error::InvalidDimension("effective atomic decay needs two-level atoms".into()));
    }
    let (d1, d2) = (cfg.detuning1, cfg.detuning2);
    let mut ops = Vec::new();
    for k in 0..layout.n_atoms() {
        let table = [
            (cfg.gamma_1g, cfg.g / d1, G, cfg.omega1 / (2.0 * d1), E, G),
            (cfg.gamma_1e, cfg.g / d1, G, cfg.omega1 / (2.0 * d1), E, E),
            (cfg.gamma_2g, cfg.g / d2, E, cfg.omega2 / (2.0 * d2), G, G),
            (cfg.gamma_2e, cfg.g / d2, E, cfg.omega2 / (2.0 * d2), G, E),
        ];
        for (rate, cp, pf, cd, df, to) in table {
            if rate > 0.0 {
                ops.push(mixed_op(layout, k, rate, cp, pf, cd, df, to)?);
            }
        }
    }
    Ok(ops)
}

/// One row of the ⁸⁷Rb decay table: `√(w γ) (c_a a|to⟩⟨from_a| + c_d |to⟩⟨from_d|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rb87Channel {
    pub name: &'static str,
    /// Branching weight `w` multiplying γ under the square root.
    pub weight: f64,
    pub photon_coeff: f64,
    pub photon_from: usize,
    pub drive_coeff: f64,
    pub drive_from: usize,
    pub to: usize,
}

/// The nine decay channels per atom of the ⁸⁷Rb model.
pub fn rb87_channels(cfg: &Rb87Config) -> Vec<Rb87Channel> {
    let (g, d1, d2) = (cfg.g, cfg.detuning1, cfg.detuning2);
    let w = d2 + cfg.omega12;
    let (s2, s3, s6) = (2f64.sqrt(), 3f64.sqrt(), 6f64.sqrt());
    let ch = |name, weight, photon_coeff, photon_from, drive_coeff, drive_from, to| Rb87Channel {
        name,
        weight,
        photon_coeff,
        photon_from,
        drive_coeff,
        drive_from,
        to,
    };
    let o1 = cfg.omega1 / (2.0 * s2 * d1);
    let o2 = cfg.omega2 / (2.0 * s2 * d2);
    let o2p = cfg.omega2 / (2.0 * s6 * w);
    vec![
        ch("C1g", 1.0 / 3.0, g / (s3 * d1), G, o1, E, G),
        ch("C1e", 1.0 / 2.0, g / (s3 * d1), G, o1, E, E),
        ch("C2g", 1.0 / 2.0, g / (2.0 * s3 * d2), E, o2, G, G),
        ch("C2e", 1.0 / 12.0, g / (2.0 * s3 * d2), E, o2, G, E),
        ch("C2'g", 1.0 / 6.0, g / (2.0 * w), E, o2p, G, G),
        ch("C2'e", 1.0 / 4.0, g / (2.0 * w), E, o2p, G, E),
        ch("C1u", 5.0 / 6.0, g / (2.0 * s3 * d1), G, o1, E, U),
        ch("C2u", 17.0 / 12.0, g / (2.0 * s3 * d2), E, o2, G, U),
        ch("C2'u", 19.0 / 12.0, g / (2.0 * w), E, o2p, G, U),
    ]
}

/// Nine collapse operators per `(g, e, u)` atom; nothing ever leaves `|u⟩`.
pub fn rb87_ops(cfg: &Rb87Config, layout: &HilbertLayout) -> Result<Vec<ComplexOperator>> {
    if layout.atom_levels().iter().any(|&l| l != 3) {
        return Err(Error::InvalidDimension("the ⁸⁷Rb model needs (g, e, u) atoms".into()));
    }
    if cfg.gamma < 0.0 {
        return Err(Error::InvalidParameter("γ must be >= 0".into()));
    }
    let mut ops = Vec::new();
    if cfg.gamma == 0.0 {
        return Ok(ops);
    }
    for k in 0..layout.n_atoms() {
        for c in rb87_channels(cfg) {
            ops.push(mixed_op(
                layout,
                k,
                c.weight * cfg.gamma,
                c.photon_coeff,
                c.photon_from,
                c.drive_coeff,
                c.drive_from,
                c.to,
            )?);
        }
    }
    Ok(ops)
}

/// Product-basis indices with no atom in `leak_level`.
pub fn block_without_level(layout: &HilbertLayout, leak_level: usize) -> Vec<usize> {
    (0..layout.dim()).filter(|&k| !layout.split(k).0.contains(&leak_level)).collect()
}

/// `e^{A}` for a general complex matrix by scaling and squaring of the Taylor series.
pub fn expm_general(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let norm1 = (0..n).map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let s = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a * C64::new(0.5f64.powi(s), 0.0);
    let mut result = Matrix::identity(n, n);
    let mut term = Matrix::identity(n, n);
    for k in 1..40 {
        term = matmul(&term, &scaled) * C64::new(1.0 / k as f64, 0.0);
        result += &term;
        let tn = term.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if tn < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = matmul(&result, &result);
    }
    result
}

/// One-period propagator `P` of a periodic (or static) master equation acting on
/// column-major `vec(ρ)`, with cached powers `P^{2^b}` for long runs.
#[derive(Clone, Debug)]
pub struct PeriodicPropagator {
    gen: Generator,
    period: f64,
    powers: Vec<Matrix>,
    ctl: StepControl,
}

impl PeriodicPropagator {
    /// Builds `P` for `period`, which must be the generator's own period unless the generator
    /// is static. `ctl` sets the accuracy of both the one-period map and sub-period steps.
    /// Powers are cached up to `max_periods`.
    pub fn new(gen: Generator, period: f64, ctl: StepControl, max_periods: u64) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::InvalidParameter("period must be > 0".into()));
        }
        let d = gen.dim();
        let p = match gen.period() {
            _ if gen.is_static() => expm_general(&(gen.static_superoperator()? * C64::new(period, 0.0))),
            Some(own) if ((own - period) / own).abs() < 1e-12 => {
                let mut p = Matrix::zeros(d * d, d * d);
                let mut unit = Matrix::zeros(d, d);
                for col in 0..d * d {
                    unit[(col % d, col / d)] = ONE;
                    let out = gen.propagate_operator(&unit, 0.0, &[period], &ctl, false)?;
                    p.column_mut(col).copy_from_slice(out[0].as_slice());
                    unit[(col % d, col / d)] = ZERO;
                }
                p
            }
            _ => return Err(Error::InvalidParameter("generator is not periodic with the requested period".into())),
        };
        let trace_preserving = gen.is_trace_preserving();
        let mut powers = vec![p];
        let mut reach = 1u64;
        while reach.saturating_mul(2) <= max_periods.max(1) {
            let last = powers.last().unwrap();
            let mut next = matmul(last, last);
            if trace_preserving {
                project_trace_preserving(&mut next, d);
            }
            powers.push(next);
            reach *= 2;
        }
        if trace_preserving {
            project_trace_preserving(&mut powers[0], d);
        }
        Ok(Self { gen, period, powers, ctl })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn generator(&self) -> &Generator {
        &self.gen
    }

    pub fn one_period(&self) -> &Matrix {
        &self.powers[0]
    }

    /// Applies `P^n` to every column of `states` (each a `vec(ρ)`).
    pub fn advance(&self, states: &Matrix, n: u64) -> Result<Matrix> {
        let mut out = states.clone();
        let mut rest = n;
        let mut b = 0;
        while rest > 0 {
            if rest & 1 == 1 {
                let p = self
                    .powers
                    .get(b)
                    .ok_or_else(|| Error::InvalidParameter(format!("{n} periods exceed the cached powers")))?;
                out = matmul(p, &out);
            }
            rest >>= 1;
            b += 1;
        }
        Ok(out)
    }

    /// Evolves one `vec(ρ)` column by a fraction `s ∈ [0, period]` for each of `offsets`
    /// (nondecreasing), starting at a whole number of periods.
    pub fn within_period(&self, state: &[C64], offsets: &[f64], hermitian: bool) -> Result<Vec<Matrix>> {
        let d = self.gen.dim();
        let rho = Matrix::from_column_slice(d, d, state);
        self.gen.propagate_operator(&rho, 0.0, offsets, &self.ctl, hermitian)
    }
}

/// Makes `tr(P(X)) = tr(X)` exact for every `X` by correcting along `vec(I)/d`.
fn project_trace_preserving(p: &mut Matrix, d: usize) {
    let n = d * d;
    for col in 0..n {
        let tr: C64 = (0..d).map(|i| p[(i * d + i, col)]).sum();
        let want = if col % d == col / d { ONE } else { ZERO };
        let corr = (want - tr) / d as f64;
        for i in 0..d {
            p[(i * d + i, col)] += corr;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::build_effective;
    use crate::params::EffectiveParams;
    use crate::qops::max_abs_diff;

    fn grid(t_end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
    }

    #[test]
    fn zero_hamiltonian_keeps_state() {
        let layout = HilbertLayout::qubits(2, 2).unwrap();
        let h = TimeDependentHamiltonian::time_independent(ComplexOperator::zeros(&layout)).unwrap();
        let psi = Ket::basis(&layout, &[0, 1], 1);
        let traj = evolve_ket(&h, &psi, &IntegratorConfig::for_kets(grid(3.0, 5))).unwrap();
        for s in &traj.states {
            assert!((s.vector() - psi.vector()).norm() < 1e-14);
        }
    }

    #[test]
    fn free_cavity_decay_is_exponential() {
        let layout = HilbertLayout::qubits(1, 3).unwrap();
        let kappa = 0.35;
        let h = TimeDependentHamiltonian::time_independent(ComplexOperator::zeros(&layout)).unwrap();
        let model = LindbladModel::new(h, cavity_decay_ops(kappa, &layout).unwrap()).unwrap();
        let rho0 = Ket::basis(&layout, &[0], 1).to_density();
        let times = grid(4.0, 8);
        let traj = evolve_rho(&model, &rho0, &IntegratorConfig::for_density(times.clone()).with_tolerances(1e-10, 1e-12))
            .unwrap();
        let n_op = {
            let a = embed(&fock_annihilate(3).unwrap(), Site::Photon, &layout).unwrap();
            &a.adjoint() * &a
        };
        for (t, rho) in times.iter().zip(&traj.states) {
            let n = (n_op.matrix() * rho.matrix()).trace().re;
            assert!((n - (-2.0 * kappa * t).exp()).abs() < 1e-8);
            assert!((rho.trace() - 1.0).abs() < 1e-8);
            // ⟨n⟩ decays at 2κ
            if *t > 0.0 {
                let rate = -n.ln() / t;
                assert!((rate - 2.0 * kappa).abs() < 1e-6);
            }
            // mixture of |0⟩ and |1⟩ with weight e^{−2κt} on |1⟩
            let p1 = (-2.0 * kappa * t).exp();
            assert!((rho.purity() - (p1 * p1 + (1.0 - p1).powi(2))).abs() < 1e-8);
        }
        assert!(cavity_decay_ops(0.0, &layout).unwrap().is_empty());
        assert!(cavity_decay_ops(-1.0, &layout).is_err());
    }

    #[test]
    fn closed_density_matches_ket() {
        let layout = HilbertLayout::qubits(2, 6).unwrap();
        let h = build_effective(&EffectiveParams::gate(0.3, 1.0, 2.0), &layout).unwrap();
        let psi = Ket::basis(&layout, &[0, 0], 0);
        let times = grid(3.0, 6);
        let kets = evolve_ket(&h, &psi, &IntegratorConfig::for_kets(times.clone()).with_tolerances(1e-11, 1e-13)).unwrap();
        let rhos = evolve_rho(
            &LindbladModel::closed(h),
            &psi.to_density(),
            &IntegratorConfig::for_density(times).with_tolerances(1e-11, 1e-13),
        )
        .unwrap();
        for (k, r) in kets.states.iter().zip(&rhos.states) {
            assert!(max_abs_diff(k.to_density().matrix(), r.matrix()) < 1e-7);
        }
    }

    #[test]
    fn effective_atomic_ops_drive_rate() {
        // photon terms removed: Σ C†C from the drive parts gives 2·γΩ²/4Δ² per atom, the
        // factor 2 coming from the two branches of each arm
        let (gamma, omega, delta) = (0.3, 1.0, 50.0);
        let cfg = RamanConfig::new(0.0, (omega, omega), (delta, delta), (0.0, 0.0)).with_common_gamma(gamma);
        let layout = HilbertLayout::qubits(1, 1).unwrap();
        let ops = effective_atomic_ops(&cfg, &layout).unwrap();
        assert_eq!(ops.len(), 4);
        let mut total = Matrix::zeros(layout.dim(), layout.dim());
        for c in &ops {
            total += c.matrix().adjoint() * c.matrix();
        }
        let per_level = gamma * omega * omega / (4.0 * delta * delta);
        for k in 0..layout.dim() {
            assert!((total[(k, k)].re - 2.0 * per_level).abs() < 1e-15);
        }
        let lossless = RamanConfig::new(1.0, (omega, omega), (delta, delta), (0.0, 0.0));
        assert!(effective_atomic_ops(&lossless, &layout).unwrap().is_empty());
    }

    #[test]
    fn rb87_coefficient_audit() {
        // (name, weight, photon factor × Δ/g, drive factor × Δ/Ω), tabulated by hand
        let cfg = Rb87Config::table1_set1();
        let w = cfg.detuning2 + cfg.omega12;
        let r3 = 3f64.sqrt();
        let r2 = 2f64.sqrt();
        let r6 = 6f64.sqrt();
        let hand = [
            ("C1g", 1.0 / 3.0, 1.0 / r3, cfg.detuning1, 1.0 / (2.0 * r2), cfg.detuning1, cfg.omega1),
            ("C1e", 0.5, 1.0 / r3, cfg.detuning1, 1.0 / (2.0 * r2), cfg.detuning1, cfg.omega1),
            ("C2g", 0.5, 1.0 / (2.0 * r3), cfg.detuning2, 1.0 / (2.0 * r2), cfg.detuning2, cfg.omega2),
            ("C2e", 0.25 / 3.0, 1.0 / (2.0 * r3), cfg.detuning2, 1.0 / (2.0 * r2), cfg.detuning2, cfg.omega2),
            ("C2'g", 1.0 / 6.0, 0.5, w, 1.0 / (2.0 * r6), w, cfg.omega2),
            ("C2'e", 0.25, 0.5, w, 1.0 / (2.0 * r6), w, cfg.omega2),
            ("C1u", 5.0 / 6.0, 1.0 / (2.0 * r3), cfg.detuning1, 1.0 / (2.0 * r2), cfg.detuning1, cfg.omega1),
            ("C2u", 17.0 / 12.0, 1.0 / (2.0 * r3), cfg.detuning2, 1.0 / (2.0 * r2), cfg.detuning2, cfg.omega2),
            ("C2'u", 19.0 / 12.0, 0.5, w, 1.0 / (2.0 * r6), w, cfg.omega2),
        ];
        let chans = rb87_channels(&cfg);
        for (c, h) in chans.iter().zip(hand) {
            assert_eq!(c.name, h.0);
            assert!((c.weight - h.1).abs() < 1e-15);
            assert!((c.photon_coeff - h.2 * cfg.g / h.3).abs() < 1e-15 * c.photon_coeff.abs().max(1e-300) * 10.0);
            assert!((c.drive_coeff - h.4 * h.6 / h.5).abs() < 1e-14 * c.drive_coeff.abs());
        }
        // total branching out of r₁ (arm-1 weights) is 1/3 + 1/2 + 5/6 = 5/3 of γ
        let arm1: f64 = chans.iter().filter(|c| c.name.starts_with("C1")).map(|c| c.weight).sum();
        assert!((arm1 - 5.0 / 3.0).abs() < 1e-15);
        // nothing leaves |u⟩
        let layout = HilbertLayout::uniform(2, 3, 1).unwrap();
        for op in rb87_ops(&cfg, &layout).unwrap() {
            for col in 0..layout.dim() {
                if layout.split(col).0.contains(&U) {
                    for row in 0..layout.dim() {
                        if op.matrix()[(row, col)] != ZERO {
                            assert!(layout.split(row).0.contains(&U));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn restriction_checks_and_block_dynamics() {
        let cfg = Rb87Config::table1_set1().balanced().unwrap();
        let layout = HilbertLayout::uniform(2, 3, 2).unwrap();
        let h = crate::hamiltonians::build_rb87_effective(&cfg, &layout).unwrap();
        let mut ops = rb87_ops(&cfg, &layout).unwrap();
        ops.extend(cavity_decay_ops(cfg.kappa, &layout).unwrap());
        let model = LindbladModel::new(h, ops).unwrap();
        let full = model.generator();
        let keep = block_without_level(&layout, U);
        let block = full.restrict(&keep).unwrap();
        assert_eq!(block.dim(), 4 * 3);
        assert!(!block.is_trace_preserving());
        assert!(full.is_trace_preserving());

        // the restricted block evolves exactly like the block of the full evolution
        let psi = Ket::basis(&layout, &[G, E], 0);
        let rho = psi.to_density().into_matrix();
        let ctl = StepControl::new(1e-10, 1e-13);
        let t = [3.0, 7.0];
        let a = full.propagate_operator(&rho, 0.0, &t, &ctl, true).unwrap();
        let sub = Matrix::from_fn(keep.len(), keep.len(), |i, j| rho[(keep[i], keep[j])]);
        let b = block.propagate_operator(&sub, 0.0, &t, &ctl, true).unwrap();
        for (x, y) in a.iter().zip(&b) {
            let xs = Matrix::from_fn(keep.len(), keep.len(), |i, j| x[(keep[i], keep[j])]);
            assert!(max_abs_diff(&xs, y) < 1e-9);
            // leaked population is monotone and equals the lost block trace
            let leaked: f64 = (0..layout.dim()).filter(|k| !keep.contains(k)).map(|k| x[(k, k)].re).sum();
            assert!((leaked - (1.0 - y.trace().re)).abs() < 1e-9);
            assert!(leaked >= 0.0);
        }
        // restricting onto states fed from outside is rejected
        let only_u: Vec<usize> = (0..layout.dim()).filter(|k| !keep.contains(k)).collect();
        assert!(full.restrict(&only_u).is_err());
    }

    #[test]
    fn leaked_population_nondecreasing() {
        let cfg = Rb87Config::table1_set1().balanced().unwrap();
        let layout = HilbertLayout::uniform(2, 3, 1).unwrap();
        let h = crate::hamiltonians::build_rb87_effective(&cfg, &layout).unwrap();
        let model = LindbladModel::new(h, rb87_ops(&cfg, &layout).unwrap()).unwrap();
        let rho0 = Ket::basis(&layout, &[E, G], 0).to_density();
        let times = grid(20.0, 10);
        let traj = evolve_rho(&model, &rho0, &IntegratorConfig::for_density(times)).unwrap();
        let mut prev = 0.0;
        for r in &traj.states {
            let u: f64 = (0..layout.dim()).filter(|&k| layout.split(k).0.contains(&U)).map(|k| r.matrix()[(k, k)].re).sum();
            assert!(u >= prev - 1e-12);
            prev = u;
        }
        assert!(prev > 0.0);
    }

    #[test]
    fn expm_general_matches_spectral_for_hermitian() {
        let layout = HilbertLayout::qubits(2, 3).unwrap();
        let h = build_effective(&EffectiveParams::gate(0.4, 1.0, 2.0), &layout).unwrap().at(0.3);
        let u = expm_general(&(&h * C64::new(0.0, -1.7)));
        let v = crate::qops::expm_hermitian(&h, 1.7).unwrap();
        assert!(max_abs_diff(&u, &v) < 1e-12);
    }

    #[test]
    fn periodic_propagator_matches_direct_integration() {
        let layout = HilbertLayout::qubits(2, 3).unwrap();
        let eff = EffectiveParams::gate(0.2, 1.0, 6.0);
        let h = build_effective(&eff, &layout).unwrap();
        let model = LindbladModel::new(h, cavity_decay_ops(0.3, &layout).unwrap()).unwrap();
        let gen = model.generator();
        let tau = gen.period().unwrap();
        let ctl = StepControl::new(1e-11, 1e-13);
        let prop = PeriodicPropagator::new(gen.clone(), tau, ctl.clone(), 16).unwrap();
        let rho = Ket::basis(&layout, &[0, 1], 0).to_density().into_matrix();
        let vec0 = Matrix::from_column_slice(rho.len(), 1, rho.as_slice());
        let after = prop.advance(&vec0, 13).unwrap();
        let partial = prop.within_period(after.as_slice(), &[0.4 * tau], true).unwrap();
        let direct = gen.propagate_operator(&rho, 0.0, &[13.0 * tau, 13.4 * tau], &ctl, true).unwrap();
        let p13 = Matrix::from_column_slice(rho.nrows(), rho.nrows(), after.as_slice());
        assert!(max_abs_diff(&p13, &direct[0]) < 1e-8);
        assert!(max_abs_diff(&partial[0], &direct[1]) < 1e-8);
        assert!((p13.trace().re - 1.0).abs() < 1e-12);

        // static generator: the map is the superoperator exponential
        let hs = TimeDependentHamiltonian::time_independent(
            crate::hamiltonians::build_interaction_static(&eff, &layout).unwrap(),
        )
        .unwrap();
        let ms = LindbladModel::new(hs, cavity_decay_ops(0.3, &layout).unwrap()).unwrap();
        let gs = ms.generator();
        let ps = PeriodicPropagator::new(gs.clone(), tau, ctl.clone(), 4).unwrap();
        let d1 = gs.propagate_operator(&rho, 0.0, &[3.0 * tau], &ctl, true).unwrap();
        let s1 = ps.advance(&vec0, 3).unwrap();
        assert!(max_abs_diff(&Matrix::from_column_slice(rho.nrows(), rho.nrows(), s1.as_slice()), &d1[0]) < 1e-8);
        assert!(ps.advance(&vec0, 100).is_err());
    }
}
