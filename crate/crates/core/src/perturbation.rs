//! Perturbative treatment of the ac Stark term `H_AS = χ a†a S_z` for two atoms.
//!
//! The unperturbed Hamiltonian `H'_MS = δ a†a + g_eff (a + a†) S_x` is diagonal in the dressed
//! basis `|j, n⟩⟩ = |S=1, S_x=j⟩ D(jα)|n⟩` (plus the singlet `|S=0⟩|n⟩`) with
//! `α = −g_eff/δ` and `E_jn = δ(n − (jα)²)`. In the interaction picture of `H'_MS` the Stark
//! term becomes `H_II(t) = e^{iH'_MS t} H_AS e^{−iH'_MS t}`, and the overlap of the evolved state
//! with the ideal gate output is expanded in powers of χ:
//! `η_{i,n}(t) = ⟨Φ_i|⟨n| e^{iδt a†a} e^{−iH'_MS t} V_II(t) |φ_i⟩|n⟩ = η⁽⁰⁾ + η⁽¹⁾ + η⁽²⁾ + …`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use nalgebra::SymmetricEigen;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::msgate::{computational_state, target_state};
use crate::params::EffectiveParams;
use crate::qops::{fock_annihilate, Matrix, Vector, I, ONE, ZERO};
use crate::quad::{self, QuadTol};

/// Default photon cutoff for the series.
pub const DEFAULT_N_MAX: usize = 40;

/// Largest tolerated ratio between the top-two-photon coefficients and the largest coefficient.
pub const TAIL_TOL: f64 = 1e-10;

/// Below this `|ΔE|·t` the analytic limits of the time integrals are used.
pub const DEGENERATE_THRESHOLD: f64 = 1e-6;

/// Spin sector of a dressed state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sector {
    /// `|S=1, S_x=j⟩`, `j ∈ {−1, 0, 1}`.
    Triplet(i8),
    /// `|S=0, S_x=0⟩`, never displaced.
    Singlet,
}

impl Sector {
    pub const ALL: [Sector; 4] = [Sector::Triplet(1), Sector::Triplet(0), Sector::Triplet(-1), Sector::Singlet];

    /// The `S_x` eigenvalue, which also sets the displacement `jα`.
    pub fn j(self) -> i8 {
        match self {
            Sector::Triplet(j) => j,
            Sector::Singlet => 0,
        }
    }

    /// The spin state on `(gg, ge, eg, ee)`, with `S_z|e⟩ = +½|e⟩`.
    pub fn spin_state(self) -> Vector {
        let h = 0.5;
        let r = FRAC_1_SQRT_2;
        let v = match self {
            Sector::Triplet(1) => [h, h, h, h],
            Sector::Triplet(-1) => [h, -h, -h, h],
            Sector::Triplet(_) => [-r, 0.0, 0.0, r],
            Sector::Singlet => [0.0, r, -r, 0.0],
        };
        Vector::from_iterator(4, v.iter().map(|&x| C64::new(x, 0.0)))
    }
}

/// Label of a dressed eigenstate of `H'_MS`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DressedIndex {
    pub sector: Sector,
    pub n: usize,
}

/// `⟨m|D(α)|n⟩` for real α, from the associated Laguerre closed form.
pub fn d_mn(m: usize, n: usize, alpha: f64) -> f64 {
    let x = alpha * alpha;
    let (lo, hi) = if m >= n { (n, m) } else { (m, n) };
    let k = hi - lo;
    // √(lo!/hi!) |α|^k in logarithms
    let log_ratio: f64 = (lo + 1..=hi).map(|q| (q as f64).ln()).sum::<f64>();
    let magnitude = if alpha == 0.0 {
        if k == 0 { 1.0 } else { 0.0 }
    } else {
        (-0.5 * log_ratio + k as f64 * alpha.abs().ln()).exp()
    };
    let sign_alpha = if alpha < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
    // (−α*)^k for m < n
    let sign_swap = if m < n && k % 2 == 1 { -1.0 } else { 1.0 };
    magnitude * sign_alpha * sign_swap * (-0.5 * x).exp() * laguerre(lo, k as f64, x)
}

/// Associated Laguerre polynomial `L_n^{(a)}(x)` by the three-term recurrence.
pub fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `e^{iθ} − 1` without cancellation for small θ.
fn expm1i(theta: f64) -> C64 {
    let s = (0.5 * theta).sin();
    C64::new(-2.0 * s * s, theta.sin())
}

/// `∫_0^t e^{ixs} ds`.
pub fn phase_integral(x: f64, t: f64) -> C64 {
    if x == 0.0 {
        C64::new(t, 0.0)
    } else {
        expm1i(x * t) / (I * x)
    }
}

/// `∫_0^t s^p e^{ias} ds / t^{p+1}` for `p ∈ {1, 2}`.
fn moment(p: i32, a: f64, t: f64) -> C64 {
    let z = I * (a * t);
    if z.norm() < 0.5 {
        // Σ z^k / (k! (k + p + 1))
        let mut term = ONE;
        let mut sum = ZERO;
        for k in 0..30 {
            sum += term / (k as f64 + p as f64 + 1.0);
            term *= z / (k as f64 + 1.0);
        }
        return sum;
    }
    let e = z.exp();
    match p {
        1 => e / z - expm1i(a * t) / (z * z),
        _ => e / z - e * 2.0 / (z * z) + (e - 1.0) * 2.0 / (z * z * z),
    }
}

/// `J(a, b) = ∫_0^t dt' e^{iat'} ∫_0^{t'} dt'' e^{ibt''}`, with the analytic limit for
/// `|b|·t` below [`DEGENERATE_THRESHOLD`].
pub fn phase_double_integral(a: f64, b: f64, t: f64) -> C64 {
    if (b * t).abs() < DEGENERATE_THRESHOLD {
        // first order in b of ∫ e^{iat'} (t' + ib t'²/2) dt'
        return moment(1, a, t) * (t * t) + I * (0.5 * b) * moment(2, a, t) * (t * t * t);
    }
    (phase_integral(a + b, t) - phase_integral(a, t)) / (I * b)
}

/// The dressed eigenbasis of `H'_MS` on a truncated Fock space.
#[derive(Clone, Debug)]
pub struct DressedBasis {
    pub alpha: f64,
    pub delta: f64,
    pub n_max: usize,
    /// Sector-major labels, in the column order of `change`.
    pub labels: Vec<DressedIndex>,
    pub energies: Vec<f64>,
    /// Columns are the dressed states in the product basis `(atoms, photon)` with photon
    /// fastest; unitary up to truncation.
    pub change: Matrix,
}

/// Dressed basis for `eff.g_eff`, `eff.delta`.
pub fn dressed_basis(eff: &EffectiveParams, n_max: usize) -> Result<DressedBasis> {
    if eff.delta == 0.0 || !eff.delta.is_finite() {
        return Err(Error::SingularParameter("δ = 0".into()));
    }
    let alpha = eff.alpha();
    let f = n_max + 1;
    let mut labels = Vec::with_capacity(4 * f);
    let mut energies = Vec::with_capacity(4 * f);
    let mut change = Matrix::zeros(4 * f, 4 * f);
    for sector in Sector::ALL {
        let spin = sector.spin_state();
        let shift = sector.j() as f64 * alpha;
        for n in 0..f {
            let col = labels.len();
            labels.push(DressedIndex { sector, n });
            energies.push(eff.delta * (n as f64 - shift * shift));
            for (s, amp) in spin.iter().enumerate() {
                if *amp == ZERO {
                    continue;
                }
                for m in 0..f {
                    change[(s * f + m, col)] = amp * d_mn(m, n, shift);
                }
            }
        }
    }
    Ok(DressedBasis { alpha, delta: eff.delta, n_max, labels, energies, change })
}

/// `η⁽⁰⁾, η⁽¹⁾, η⁽²⁾` at one `(i, n, t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapSeries {
    pub i: usize,
    pub n: usize,
    pub t: f64,
    pub eta0: C64,
    pub eta1: C64,
    pub eta2: C64,
}

impl OverlapSeries {
    pub fn sum(&self) -> C64 {
        self.eta0 + self.eta1 + self.eta2
    }

    /// `|η⁽⁰⁾ + η⁽¹⁾ + η⁽²⁾|²`.
    pub fn fidelity(&self) -> f64 {
        self.sum().norm_sqr()
    }
}

/// Series evaluator for fixed `(χ, g_eff, δ)` and photon cutoff.
#[derive(Clone, Debug)]
pub struct StarkSeries {
    eff: EffectiveParams,
    basis: DressedBasis,
    /// `H_AS` in the dressed basis.
    h_as: Matrix,
}

impl StarkSeries {
    pub fn new(eff: &EffectiveParams, n_max: usize) -> Result<Self> {
        if eff.delta < 0.0 {
            return Err(Error::InvalidParameter("the overlap series assumes δ > 0".into()));
        }
        let basis = dressed_basis(eff, n_max)?;
        let f = n_max + 1;
        let dim = 4 * f;
        let spins: Vec<Vector> = Sector::ALL.iter().map(|s| s.spin_state()).collect();
        let sz = Matrix::from_diagonal(&Vector::from_vec(vec![
            C64::new(-1.0, 0.0),
            ZERO,
            ZERO,
            C64::new(1.0, 0.0),
        ]));
        // padding for the one photon sum that is not closed form
        let pad = f + 30;
        let mut h_as = Matrix::zeros(dim, dim);
        for (sa, &a) in Sector::ALL.iter().enumerate() {
            for (sb, &b) in Sector::ALL.iter().enumerate() {
                let spin = spins[sa].dotc(&(&sz * &spins[sb]));
                if spin.norm() < 1e-15 {
                    continue;
                }
                let (ja, jb) = (a.j() as f64 * basis.alpha, b.j() as f64 * basis.alpha);
                for m in 0..f {
                    for n in 0..f {
                        // ⟨m|D(−ja) a†a D(jb)|n⟩
                        let photon = if ja == 0.0 {
                            m as f64 * d_mn(m, n, jb)
                        } else if jb == 0.0 {
                            n as f64 * d_mn(m, n, -ja)
                        } else {
                            (0..pad).map(|p| d_mn(m, p, -ja) * p as f64 * d_mn(p, n, jb)).sum()
                        };
                        h_as[(sa * f + m, sb * f + n)] = spin * (eff.chi * photon);
                    }
                }
            }
        }
        Ok(Self { eff: eff.clone(), basis, h_as })
    }

    pub fn basis(&self) -> &DressedBasis {
        &self.basis
    }

    pub fn params(&self) -> &EffectiveParams {
        &self.eff
    }

    /// `H_AS` in the dressed basis (time independent part of `H_II`).
    pub fn h_as(&self) -> &Matrix {
        &self.h_as
    }

    /// `⟨⟨bra|H_II(t)|ket⟩⟩`.
    pub fn h_ii_matrix_element(&self, bra: DressedIndex, ket: DressedIndex, t: f64) -> C64 {
        let (k, kp) = (self.position(bra), self.position(ket));
        let phase = (self.basis.energies[k] - self.basis.energies[kp]) * t;
        self.h_as[(k, kp)] * C64::from_polar(1.0, phase)
    }

    fn position(&self, idx: DressedIndex) -> usize {
        let s = Sector::ALL.iter().position(|&s| s == idx.sector).expect("sector");
        s * (self.basis.n_max + 1) + idx.n
    }

    /// Dressed coefficients of `|φ_i⟩|n⟩` and `|Φ_i⟩|n⟩`, with the truncation check.
    fn coefficients(&self, i: usize, n: usize) -> Result<(Vector, Vector)> {
        let f = self.basis.n_max + 1;
        if n + 2 >= f {
            return Err(Error::Truncation(format!("photon number {n} too close to the cutoff {}", self.basis.n_max)));
        }
        let input = computational_state(i)?;
        let target = target_state(i, 1.0)?;
        let mut c = Vector::zeros(4 * f);
        let mut b = Vector::zeros(4 * f);
        for (s, sector) in Sector::ALL.iter().enumerate() {
            let spin = sector.spin_state();
            let (ci, bi) = (spin.dotc(&input), spin.dotc(&target));
            let shift = -(sector.j() as f64) * self.basis.alpha;
            for m in 0..f {
                let d = d_mn(m, n, shift);
                c[s * f + m] = ci * d;
                b[s * f + m] = bi * d;
            }
        }
        for v in [&c, &b] {
            let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let tail = (0..4)
                .flat_map(|s| [s * f + f - 1, s * f + f - 2])
                .map(|k| v[k].norm())
                .fold(0.0, f64::max);
            if tail > TAIL_TOL * peak {
                return Err(Error::Truncation(format!(
                    "dressed coefficients not converged: tail {tail:e} at n_max = {}",
                    self.basis.n_max
                )));
            }
        }
        Ok((c, b))
    }

    /// All three orders at once.
    pub fn eta(&self, i: usize, n: usize, t: f64) -> Result<OverlapSeries> {
        let (c, b) = self.coefficients(i, n)?;
        let e = &self.basis.energies;
        let dim = e.len();
        let frame = C64::from_polar(1.0, self.eff.delta * n as f64 * t);
        // w_k = b_k* e^{−iE_k t}
        let w: Vec<C64> = (0..dim).map(|k| b[k].conj() * C64::from_polar(1.0, -e[k] * t)).collect();
        let wk: Vec<usize> = (0..dim).filter(|&k| w[k] != ZERO).collect();
        let ck: Vec<usize> = (0..dim).filter(|&k| c[k] != ZERO).collect();

        let eta0: C64 = wk.iter().map(|&k| w[k] * c[k]).sum();

        let mut eta1 = ZERO;
        for &k in &wk {
            for &kp in &ck {
                let h = self.h_as[(k, kp)];
                if h != ZERO {
                    eta1 += w[k] * h * phase_integral(e[k] - e[kp], t) * c[kp];
                }
            }
        }

        // second order: J(E_k − E_k', E_k' − E_k'') = (I(E_k − E_k'') − I(E_k − E_k'))/(i(E_k' − E_k''))
        let mut eta2 = ZERO;
        for &k in &wk {
            let i_kk2: Vec<C64> = ck.iter().map(|&k2| phase_integral(e[k] - e[k2], t)).collect();
            for kp in 0..dim {
                let h1 = self.h_as[(k, kp)];
                if h1 == ZERO {
                    continue;
                }
                let i_kkp = phase_integral(e[k] - e[kp], t);
                let mut inner = ZERO;
                for (q, &k2) in ck.iter().enumerate() {
                    let h2 = self.h_as[(kp, k2)];
                    if h2 == ZERO {
                        continue;
                    }
                    let bgap = e[kp] - e[k2];
                    let j = if (bgap * t).abs() < DEGENERATE_THRESHOLD {
                        phase_double_integral(e[k] - e[kp], bgap, t)
                    } else {
                        (i_kk2[q] - i_kkp) / (I * bgap)
                    };
                    inner += h2 * j * c[k2];
                }
                eta2 += w[k] * h1 * inner;
            }
        }

        Ok(OverlapSeries { i, n, t, eta0: frame * eta0, eta1: -I * frame * eta1, eta2: -frame * eta2 })
    }

    pub fn eta0(&self, i: usize, n: usize, t: f64) -> Result<C64> {
        Ok(self.eta(i, n, t)?.eta0)
    }

    pub fn eta1(&self, i: usize, n: usize, t: f64) -> Result<C64> {
        Ok(self.eta(i, n, t)?.eta1)
    }

    /// Closed form of `η⁽¹⁾_{1,n}` (and `η⁽¹⁾_{4,n} = −η⁽¹⁾_{1,n}`, zero for `i = 2, 3`), with
    /// the frame phase `e^{iδnt}`.
    pub fn eta1_closed(&self, i: usize, n: usize, t: f64) -> Result<C64> {
        let sign = match i {
            1 => 1.0,
            4 => -1.0,
            2 | 3 => return Ok(ZERO),
            _ => return Err(Error::InvalidParameter(format!("state index {i} outside 1..=4"))),
        };
        let (delta, alpha) = (self.basis.delta, self.basis.alpha);
        let e0n = delta * n as f64;
        let mut sum = ZERO;
        for m in 0..=self.basis.n_max {
            let e1m = delta * (m as f64 - alpha * alpha);
            let kernel = d_mn(m, n, alpha).powi(2) + d_mn(m, n, -alpha).powi(2);
            // (e^{−iE_{1m}t} − e^{−iE_{0n}t}) / (E_{0n} − E_{1m}) = i e^{−iE_{0n}t} I(E_{0n} − E_{1m})
            let frac = C64::from_polar(1.0, -e0n * t) * phase_integral(e0n - e1m, t) * I;
            sum += frac * kernel;
        }
        let pre = sign * n as f64 * self.eff.chi / (2.0 * 2f64.sqrt());
        Ok(C64::from_polar(1.0, delta * n as f64 * t) * sum * pre)
    }

    /// `Y_lmn(t) = ∫_0^t dt' ∫_0^{t'} dt'' e^{−i(E_{0l} − E_{1m})t'} e^{i(E_{0l} − E_{1n})t''}`.
    pub fn y_lmn(&self, l: usize, m: usize, n: usize, t: f64) -> C64 {
        let (delta, a2) = (self.basis.delta, self.basis.alpha * self.basis.alpha);
        let e0l = delta * l as f64;
        let (e1m, e1n) = (delta * (m as f64 - a2), delta * (n as f64 - a2));
        phase_double_integral(e1m - e0l, e0l - e1n, t)
    }

    /// `η⁽²⁾_{i,0}(t)` from the closed vacuum formula with `Y_lmn`; `η⁽²⁾_{4,0} = η⁽²⁾_{1,0}` and
    /// `η⁽²⁾_{3,0} = η⁽²⁾_{2,0}` by construction.
    pub fn eta2_vacuum(&self, i: usize, t: f64) -> Result<C64> {
        let parity = match i {
            1 | 4 => 1.0,
            2 | 3 => -1.0,
            _ => return Err(Error::InvalidParameter(format!("state index {i} outside 1..=4"))),
        };
        let alpha = self.basis.alpha;
        let nm = self.basis.n_max;
        let d0: Vec<f64> = (0..=nm).map(|m| d_mn(m, 0, alpha)).collect();
        if d0[nm].abs() > TAIL_TOL * d0[0].abs() {
            return Err(Error::Truncation(format!("vacuum series not converged at n_max = {nm}")));
        }
        let a2 = alpha * alpha;
        let mut sum = ZERO;
        for l in 1..=nm {
            let lsign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let factor_l = 1.0 + parity * lsign;
            if factor_l == 0.0 {
                continue;
            }
            let dl: Vec<f64> = (0..=nm).map(|m| d_mn(l, m, alpha)).collect();
            for m in 0..=nm {
                let am = d0[m] * dl[m];
                if am == 0.0 {
                    continue;
                }
                let phase = C64::from_polar(1.0, -self.basis.delta * (m as f64 - a2) * t);
                for n in 0..=nm {
                    let sign = if (m + n) % 2 == 0 { 1.0 } else { -1.0 };
                    let coeff = (l * l) as f64 * sign * factor_l * am * d0[n] * dl[n];
                    if coeff == 0.0 {
                        continue;
                    }
                    sum += phase * self.y_lmn(l, m, n, t) * coeff;
                }
            }
        }
        Ok(sum * C64::from_polar(1.0, -FRAC_PI_4) * (-self.eff.chi * self.eff.chi / 4.0))
    }
}

/// Numerical Dyson oracle: `H'_MS` diagonalised numerically on a truncated Fock space and
/// the time-ordered integrals done by adaptive quadrature.
#[derive(Clone, Debug)]
pub struct DysonOracle {
    delta: f64,
    n_max: usize,
    values: Vec<f64>,
    vectors: Matrix,
    /// `H_AS` in the numerical eigenbasis.
    h_as: Matrix,
    tol: QuadTol,
}

impl DysonOracle {
    pub fn new(eff: &EffectiveParams, n_max: usize, tol: QuadTol) -> Result<Self> {
        let a = fock_annihilate(n_max)?;
        let n_op = a.adjoint() * &a;
        let x = &a + a.adjoint();
        let half = C64::new(0.5, 0.0);
        // single-atom σ_x/2 and σ_z/2 on (g, e)
        let sx1 = Matrix::from_row_slice(2, 2, &[ZERO, half, half, ZERO]);
        let sz1 = Matrix::from_row_slice(2, 2, &[-half, ZERO, ZERO, half]);
        let id2 = Matrix::identity(2, 2);
        let sx = sx1.kronecker(&id2) + id2.kronecker(&sx1);
        let sz = sz1.kronecker(&id2) + id2.kronecker(&sz1);
        let h_ms = Matrix::identity(4, 4).kronecker(&n_op) * C64::new(eff.delta, 0.0)
            + sx.kronecker(&x) * C64::new(eff.g_eff, 0.0);
        let h_as = sz.kronecker(&n_op) * C64::new(eff.chi, 0.0);
        let eig = SymmetricEigen::new(h_ms);
        let vectors = eig.eigenvectors;
        let h_as = vectors.adjoint() * h_as * &vectors;
        Ok(Self { delta: eff.delta, n_max, values: eig.eigenvalues.iter().copied().collect(), vectors, h_as, tol })
    }

    fn product_ket(&self, atomic: &Vector, n: usize) -> Vector {
        let f = self.n_max + 1;
        let mut v = Vector::zeros(4 * f);
        for s in 0..4 {
            v[s * f + n] = atomic[s];
        }
        v
    }

    /// The `k`-th order term (`k ∈ {0, 1, 2}`) of `η_{i,n}(t)`.
    pub fn term(&self, k: usize, i: usize, n: usize, t: f64) -> Result<C64> {
        if n + 2 > self.n_max {
            return Err(Error::Truncation(format!("photon number {n} too close to the cutoff {}", self.n_max)));
        }
        let c = self.vectors.adjoint() * self.product_ket(&computational_state(i)?, n);
        let b = self.vectors.adjoint() * self.product_ket(&target_state(i, self.delta.signum())?, n);
        let lam = &self.values;
        let dim = lam.len();
        let frame = C64::from_polar(1.0, self.delta * n as f64 * t);
        let w: Vec<C64> = (0..dim).map(|q| frame * b[q].conj() * C64::from_polar(1.0, -lam[q] * t)).collect();
        // H_II(s) v in the eigenbasis
        let h_ii_apply = |s: f64, v: &Vector| -> Vector {
            let rotated = Vector::from_fn(dim, |q, _| v[q] * C64::from_polar(1.0, -lam[q] * s));
            let mut out = &self.h_as * rotated;
            for q in 0..dim {
                out[q] *= C64::from_polar(1.0, lam[q] * s);
            }
            out
        };
        let wv = Vector::from_vec(w.clone());
        match k {
            0 => Ok(wv.iter().zip(c.iter()).map(|(a, b)| a * b).sum()),
            1 => {
                let est = quad::integrate(|s| dot(&wv, &h_ii_apply(s, &c)), 0.0, t, self.tol)?;
                Ok(-I * est.value)
            }
            2 => {
                let mut failure = None;
                let est = quad::integrate(
                    |s1| {
                        // row vector (w H_II(s1))_q = Σ_p w_p e^{iλ_p s1} H_pq e^{−iλ_q s1}
                        let left = {
                            let scaled = Vector::from_fn(dim, |p, _| w[p] * C64::from_polar(1.0, lam[p] * s1));
                            let mut r = self.h_as.transpose() * scaled;
                            for q in 0..dim {
                                r[q] *= C64::from_polar(1.0, -lam[q] * s1);
                            }
                            r
                        };
                        match quad::integrate(|s2| dot(&left, &h_ii_apply(s2, &c)), 0.0, s1, self.tol) {
                            Ok(e) => e.value,
                            Err(err) => {
                                failure.get_or_insert(err);
                                ZERO
                            }
                        }
                    },
                    0.0,
                    t,
                    self.tol,
                )?;
                if let Some(err) = failure {
                    return Err(err);
                }
                Ok(-est.value)
            }
            _ => Err(Error::InvalidParameter(format!("Dyson order {k} not supported"))),
        }
    }
}

/// Bilinear `Σ a_q b_q`.
fn dot(a: &Vector, b: &Vector) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Log-log slope of `|η⁽²⁾_{i,0}|` against `|α|` at fixed `χ/δ` and `δt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Fits `ln|η⁽²⁾_{i,0}| = slope·ln|α| + c` over `alphas` with `δ = 1`, `g_eff = |α|`,
/// `χ = chi_over_delta` and `t = delta_t`.
pub fn alpha_scaling_probe(
    i: usize,
    alphas: &[f64],
    chi_over_delta: f64,
    delta_t: f64,
    n_max: usize,
) -> Result<ScalingFit> {
    if alphas.len() < 2 {
        return Err(Error::DegenerateFit("need at least two α values".into()));
    }
    let mut pts = Vec::with_capacity(alphas.len());
    for &a in alphas {
        if !(a > 0.0 && a <= 0.5) {
            return Err(Error::InvalidParameter(format!("α = {a} outside (0, 0.5]")));
        }
        let eff = EffectiveParams::gate(chi_over_delta, a, 1.0);
        let eta2 = StarkSeries::new(&eff, n_max)?.eta2_vacuum(i, delta_t)?;
        if eta2.norm() == 0.0 || !eta2.norm().is_finite() {
            return Err(Error::DegenerateFit(format!("|η⁽²⁾| = {} at α = {a}", eta2.norm())));
        }
        pts.push((a.ln(), eta2.norm().ln()));
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0 / n, acc.1 + p.1 / n));
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all α values coincide".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(ScalingFit { slope, intercept: my - slope * mx })
}
