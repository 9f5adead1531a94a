//! Dense operator algebra on truncated `atoms ⊗ photon` Hilbert spaces.
//!
//! Every composite operator uses one fixed tensor ordering: atom 1 ⊗ atom 2 ⊗ … ⊗ photon,
//! with atom 1 the slowest-varying index and the photon number the fastest. All builders go
//! through [`embed`], so the ordering lives in exactly one place ([`HilbertLayout::index`]).

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<C64>;
pub type Vector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Population above which the top Fock levels flag a run as truncation-limited.
pub const TRUNCATION_THRESHOLD: f64 = 1e-6;

/// Shape of a truncated `atoms ⊗ photon` space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HilbertLayout {
    atom_levels: Vec<usize>,
    fock_dim: usize,
}

impl HilbertLayout {
    pub fn new(atom_levels: Vec<usize>, n_max: usize) -> Result<Self> {
        if atom_levels.is_empty() {
            return Err(Error::InvalidDimension("layout needs at least one atom".into()));
        }
        if let Some(&l) = atom_levels.iter().find(|&&l| l < 2) {
            return Err(Error::InvalidDimension(format!("atom with {l} levels")));
        }
        if n_max < 1 {
            return Err(Error::InvalidDimension(format!("n_max = {n_max}, need n_max >= 1")));
        }
        Ok(Self { atom_levels, fock_dim: n_max + 1 })
    }

    /// `n_atoms` identical atoms with `levels` levels each.
    pub fn uniform(n_atoms: usize, levels: usize, n_max: usize) -> Result<Self> {
        Self::new(vec![levels; n_atoms], n_max)
    }

    /// Two-level atoms with levels ordered `(g, e)`.
    pub fn qubits(n_atoms: usize, n_max: usize) -> Result<Self> {
        Self::uniform(n_atoms, 2, n_max)
    }

    pub fn n_atoms(&self) -> usize {
        self.atom_levels.len()
    }

    pub fn atom_levels(&self) -> &[usize] {
        &self.atom_levels
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn n_max(&self) -> usize {
        self.fock_dim - 1
    }

    /// Dimension of the atomic factor alone.
    pub fn atom_dim(&self) -> usize {
        self.atom_levels.iter().product()
    }

    pub fn dim(&self) -> usize {
        self.atom_dim() * self.fock_dim
    }

    /// Same atoms, different photon truncation.
    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        Self::new(self.atom_levels.clone(), n_max)
    }

    /// Flat index of the product basis state `|atoms⟩|photon⟩`.
    pub fn index(&self, atoms: &[usize], photon: usize) -> usize {
        debug_assert_eq!(atoms.len(), self.n_atoms());
        debug_assert!(photon < self.fock_dim);
        let atomic = atoms
            .iter()
            .zip(&self.atom_levels)
            .fold(0, |acc, (&s, &l)| {
                debug_assert!(s < l);
                acc * l + s
            });
        atomic * self.fock_dim + photon
    }

    /// Inverse of [`index`](Self::index).
    pub fn split(&self, index: usize) -> (Vec<usize>, usize) {
        let photon = index % self.fock_dim;
        let mut atomic = index / self.fock_dim;
        let mut atoms = vec![0; self.n_atoms()];
        for (slot, &l) in atoms.iter_mut().zip(&self.atom_levels).rev() {
            *slot = atomic % l;
            atomic /= l;
        }
        (atoms, photon)
    }
}

/// Tensor factor addressed by [`embed`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Site {
    /// Zero-based atom index.
    Atom(usize),
    Photon,
}

/// Dense operator on a [`HilbertLayout`].
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexOperator {
    layout: HilbertLayout,
    matrix: Matrix,
}

impl ComplexOperator {
    pub fn new(layout: HilbertLayout, matrix: Matrix) -> Result<Self> {
        let dim = layout.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: matrix.nrows() });
        }
        Ok(Self { layout, matrix })
    }

    pub fn zeros(layout: &HilbertLayout) -> Self {
        let dim = layout.dim();
        Self { layout: layout.clone(), matrix: Matrix::zeros(dim, dim) }
    }

    pub fn identity(layout: &HilbertLayout) -> Self {
        let dim = layout.dim();
        Self { layout: layout.clone(), matrix: Matrix::identity(dim, dim) }
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self { layout: self.layout.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { layout: self.layout.clone(), matrix: &self.matrix * c }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// `max |A - A†|` over all entries.
    pub fn max_hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.matrix)
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|z| *z == ZERO)
    }

    /// `e^{-iHt}` of this (Hermitian) operator.
    pub fn expm_hermitian(&self, t: f64) -> Result<Self> {
        Ok(Self { layout: self.layout.clone(), matrix: expm_hermitian(&self.matrix, t)? })
    }

    pub fn apply(&self, ket: &Ket) -> Ket {
        assert_eq!(self.layout, ket.layout, "layout mismatch");
        Ket { layout: self.layout.clone(), vector: &self.matrix * &ket.vector }
    }
}

impl Add for &ComplexOperator {
    type Output = ComplexOperator;
    fn add(self, rhs: Self) -> ComplexOperator {
        assert_eq!(self.layout, rhs.layout, "layout mismatch");
        ComplexOperator { layout: self.layout.clone(), matrix: &self.matrix + &rhs.matrix }
    }
}

impl Sub for &ComplexOperator {
    type Output = ComplexOperator;
    fn sub(self, rhs: Self) -> ComplexOperator {
        assert_eq!(self.layout, rhs.layout, "layout mismatch");
        ComplexOperator { layout: self.layout.clone(), matrix: &self.matrix - &rhs.matrix }
    }
}

impl Mul for &ComplexOperator {
    type Output = ComplexOperator;
    fn mul(self, rhs: Self) -> ComplexOperator {
        assert_eq!(self.layout, rhs.layout, "layout mismatch");
        ComplexOperator { layout: self.layout.clone(), matrix: &self.matrix * &rhs.matrix }
    }
}

/// State vector on a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    layout: HilbertLayout,
    vector: Vector,
}

impl Ket {
    pub fn new(layout: HilbertLayout, vector: Vector) -> Result<Self> {
        if vector.len() != layout.dim() {
            return Err(Error::DimensionMismatch { expected: layout.dim(), found: vector.len() });
        }
        Ok(Self { layout, vector })
    }

    /// Product basis state `|atoms⟩|photon⟩`.
    pub fn basis(layout: &HilbertLayout, atoms: &[usize], photon: usize) -> Self {
        let mut vector = Vector::zeros(layout.dim());
        vector[layout.index(atoms, photon)] = ONE;
        Self { layout: layout.clone(), vector }
    }

    /// `|atomic⟩ ⊗ |photon⟩` from an atomic state vector.
    pub fn product(layout: &HilbertLayout, atomic: &Vector, photon: usize) -> Result<Self> {
        if atomic.len() != layout.atom_dim() {
            return Err(Error::DimensionMismatch { expected: layout.atom_dim(), found: atomic.len() });
        }
        if photon >= layout.fock_dim() {
            return Err(Error::InvalidLevel { index: photon, levels: layout.fock_dim() });
        }
        let mut vector = Vector::zeros(layout.dim());
        for (a, &c) in atomic.iter().enumerate() {
            vector[a * layout.fock_dim() + photon] = c;
        }
        Ok(Self { layout: layout.clone(), vector })
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn vector(&self) -> &Vector {
        &self.vector
    }

    pub fn into_vector(self) -> Vector {
        self.vector
    }

    pub fn norm(&self) -> f64 {
        self.vector.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> C64 {
        self.vector.dotc(&other.vector)
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            layout: self.layout.clone(),
            matrix: &self.vector * self.vector.adjoint(),
        }
    }

    /// Population in the top two Fock levels.
    pub fn fock_tail_population(&self) -> f64 {
        let f = self.layout.fock_dim();
        self.vector
            .iter()
            .enumerate()
            .filter(|(k, _)| k % f + 2 >= f)
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }
}

/// Density operator on a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    layout: HilbertLayout,
    matrix: Matrix,
}

impl DensityOperator {
    /// Validates Hermiticity (1e-10), unit trace (1e-8) and positivity (min eigenvalue ≥ -1e-8).
    pub fn new(layout: HilbertLayout, matrix: Matrix) -> Result<Self> {
        let rho = Self::new_unchecked(layout, matrix)?;
        let dev = hermitian_deviation(&rho.matrix);
        if dev > 1e-10 {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidParameter(format!("density operator trace {tr}")));
        }
        let min = rho.min_eigenvalue();
        if min < -1e-8 {
            return Err(Error::Positivity { min_eigenvalue: min, t: 0.0 });
        }
        Ok(rho)
    }

    /// Dimension check only; used for propagated operators that need not be states.
    pub fn new_unchecked(layout: HilbertLayout, matrix: Matrix) -> Result<Self> {
        let dim = layout.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: matrix.nrows() });
        }
        Ok(Self { layout, matrix })
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = hermitian_part(&self.matrix);
        SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Population in the top two Fock levels.
    pub fn fock_tail_population(&self) -> f64 {
        let f = self.layout.fock_dim();
        (0..self.matrix.nrows()).filter(|k| k % f + 2 >= f).map(|k| self.matrix[(k, k)].re).sum()
    }

    pub fn partial_trace_photon(&self) -> Matrix {
        partial_trace_photon(&self.matrix, &self.layout)
    }
}

pub fn hermitian_deviation(m: &Matrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn hermitian_part(m: &Matrix) -> Matrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// `|i⟩⟨j|` on a `levels`-dimensional site.
pub fn transition(levels: usize, i: usize, j: usize) -> Matrix {
    let mut m = Matrix::zeros(levels, levels);
    m[(i, j)] = ONE;
    m
}

/// Truncated photon annihilation operator, `⟨n-1|a|n⟩ = √n`.
pub fn fock_annihilate(n_max: usize) -> Result<Matrix> {
    if n_max < 1 {
        return Err(Error::InvalidDimension(format!("n_max = {n_max}, need n_max >= 1")));
    }
    let mut a = Matrix::zeros(n_max + 1, n_max + 1);
    for n in 1..=n_max {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(a)
}

/// `D(α) = exp(α a† − α* a)` on the truncated space, by exponentiating the truncated generator.
///
/// Accurate only where `|α|² ≪ n_max`; the entries close to the truncation edge are not
/// those of the infinite-dimensional operator.
pub fn displacement(alpha: C64, n_max: usize) -> Result<Matrix> {
    let a = fock_annihilate(n_max)?;
    let generator = a.adjoint() * alpha - &a * alpha.conj();
    // exp(G) = exp(-i H) with the Hermitian H = iG
    expm_hermitian(&(generator * I), 1.0)
}

/// Component of a collective spin operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpinAxis {
    X,
    Y,
    Z,
}

/// `S_axis = ½ Σ_i σ_axis^{(i)}` on the `(g, e)` pair of levels of every atom, identity on the
/// photon. `S_z` has `|e⟩` as its `+½` state.
pub fn collective_spin(
    layout: &HilbertLayout,
    axis: SpinAxis,
    qubit_levels: (usize, usize),
) -> Result<ComplexOperator> {
    let (g, e) = qubit_levels;
    let mut total = ComplexOperator::zeros(layout);
    for (site, &levels) in layout.atom_levels().iter().enumerate() {
        for &idx in &[g, e] {
            if idx >= levels {
                return Err(Error::InvalidLevel { index: idx, levels });
            }
        }
        let local = match axis {
            SpinAxis::X => (transition(levels, e, g) + transition(levels, g, e)) * C64::new(0.5, 0.0),
            SpinAxis::Y => (transition(levels, e, g) - transition(levels, g, e)) * C64::new(0.0, -0.5),
            SpinAxis::Z => (transition(levels, e, e) - transition(levels, g, g)) * C64::new(0.5, 0.0),
        };
        total = &total + &embed(&local, Site::Atom(site), layout)?;
    }
    Ok(total)
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` on the given site.
pub fn embed(op: &Matrix, site: Site, layout: &HilbertLayout) -> Result<ComplexOperator> {
    let local_dim = match site {
        Site::Atom(k) => *layout
            .atom_levels()
            .get(k)
            .ok_or_else(|| Error::InvalidDimension(format!("atom {k} outside layout")))?,
        Site::Photon => layout.fock_dim(),
    };
    if op.nrows() != local_dim || op.ncols() != local_dim {
        return Err(Error::DimensionMismatch { expected: local_dim, found: op.nrows() });
    }
    let mut factors: Vec<Matrix> =
        layout.atom_levels().iter().map(|&l| Matrix::identity(l, l)).collect();
    factors.push(Matrix::identity(layout.fock_dim(), layout.fock_dim()));
    let slot = match site {
        Site::Atom(k) => k,
        Site::Photon => layout.n_atoms(),
    };
    factors[slot] = op.clone();
    let matrix = factors
        .iter()
        .skip(1)
        .fold(factors[0].clone(), |acc, f| acc.kronecker(f));
    ComplexOperator::new(layout.clone(), matrix)
}

/// Embeds an atomic operator (dimension `layout.atom_dim()`) as `A ⊗ I_photon`.
pub fn embed_atomic(op: &Matrix, layout: &HilbertLayout) -> Result<ComplexOperator> {
    if op.nrows() != layout.atom_dim() || op.ncols() != layout.atom_dim() {
        return Err(Error::DimensionMismatch { expected: layout.atom_dim(), found: op.nrows() });
    }
    let f = layout.fock_dim();
    ComplexOperator::new(layout.clone(), op.kronecker(&Matrix::identity(f, f)))
}

/// `A ⊗ |n⟩⟨m|` for an atomic operator `A`.
pub fn atomic_with_photon(op: &Matrix, layout: &HilbertLayout, n: usize, m: usize) -> Result<Matrix> {
    if op.nrows() != layout.atom_dim() {
        return Err(Error::DimensionMismatch { expected: layout.atom_dim(), found: op.nrows() });
    }
    let f = layout.fock_dim();
    Ok(op.kronecker(&transition(f, n, m)))
}

/// Traces out the photon factor of an operator on `layout`, returning an atomic operator.
pub fn partial_trace_photon(m: &Matrix, layout: &HilbertLayout) -> Matrix {
    let f = layout.fock_dim();
    let da = layout.atom_dim();
    Matrix::from_fn(da, da, |a, b| (0..f).map(|n| m[(a * f + n, b * f + n)]).sum())
}

/// Hermitian eigendecomposition kept around for repeated evaluation of `e^{-iHt}`.
#[derive(Clone, Debug)]
pub struct SpectralPropagator {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SpectralPropagator {
    pub fn new(h: &Matrix) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::DimensionMismatch { expected: h.nrows(), found: h.ncols() });
        }
        let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let dev = hermitian_deviation(h);
        if dev > 1e-10 * scale {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let eig = SymmetricEigen::new(hermitian_part(h));
        Ok(Self { values: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors })
    }

    /// `e^{-iHt}`.
    pub fn at(&self, t: f64) -> Matrix {
        let phases: Vec<C64> = self.values.iter().map(|&e| C64::from_polar(1.0, -e * t)).collect();
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        scaled * self.vectors.adjoint()
    }

    /// `e^{-iHt} v` without forming the full propagator.
    pub fn apply(&self, t: f64, v: &Vector) -> Vector {
        let mut coeffs = self.vectors.adjoint() * v;
        for (c, &e) in coeffs.iter_mut().zip(&self.values) {
            *c *= C64::from_polar(1.0, -e * t);
        }
        &self.vectors * coeffs
    }
}

/// `e^{-iHt}` for Hermitian `H` via eigendecomposition.
pub fn expm_hermitian(h: &Matrix, t: f64) -> Result<Matrix> {
    Ok(SpectralPropagator::new(h)?.at(t))
}

/// Largest entry of `U†U − I`.
pub fn unitarity_defect(u: &Matrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - Matrix::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Dense product. Large products go through four real products, which use the blocked `f64`
/// kernel and run several times faster than the generic complex loop.
pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    if a.nrows() * a.ncols() * b.ncols() < 1 << 15 {
        return a * b;
    }
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, C64::new)
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn split_matmul_matches_complex_product() {
        let a = Matrix::from_fn(70, 50, |i, j| C64::new((i as f64 * 0.3 - j as f64).sin(), (i * j) as f64 * 1e-3));
        let b = Matrix::from_fn(50, 40, |i, j| C64::new((i + 2 * j) as f64 * 0.01, (j as f64).cos()));
        assert!(max_abs_diff(&matmul(&a, &b), &(&a * &b)) < 1e-12);
    }

    /// Taylor series of exp(G)|0⟩ summed directly, independent of the eigensolver.
    fn displaced_vacuum_series(alpha: f64, n_max: usize) -> Vector {
        let a = fock_annihilate(n_max).unwrap();
        let g = a.adjoint() * C64::new(alpha, 0.0) - &a * C64::new(alpha, 0.0);
        let mut term = Vector::zeros(n_max + 1);
        term[0] = ONE;
        let mut sum = term.clone();
        for k in 1..80 {
            term = &g * term / C64::new(k as f64, 0.0);
            sum += &term;
        }
        sum
    }

    /// exp(-iHt) via scaling and squaring of a Taylor series.
    fn expm_taylor(h: &Matrix, t: f64) -> Matrix {
        let n = h.nrows();
        let a = h * C64::new(0.0, -t);
        let norm = a.iter().map(|z| z.norm()).sum::<f64>();
        let s = (norm.max(1.0).log2().ceil() as i32 + 2).max(0);
        let scaled = &a / C64::new(2f64.powi(s), 0.0);
        let mut term = Matrix::identity(n, n);
        let mut sum = term.clone();
        for k in 1..40 {
            term = &term * &scaled / C64::new(k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    fn random_hermitian(n: usize, seed: u64) -> Matrix {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m = Matrix::from_fn(n, n, |_, _| C64::new(next(), next()));
        hermitian_part(&m)
    }

    #[test]
    fn annihilation_ladder() {
        let a = fock_annihilate(4).unwrap();
        let mut one = Vector::zeros(5);
        one[1] = ONE;
        let out = &a * &one;
        assert!(close(out[0], ONE, 1e-15));
        let mut vac = Vector::zeros(5);
        vac[0] = ONE;
        assert!((&a * vac).norm() == 0.0);
        assert!(close(a[(2, 3)], C64::new(3f64.sqrt(), 0.0), 1e-15));
        assert!(matches!(fock_annihilate(0), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn truncated_commutator_is_identity_below_edge() {
        let n_max = 8;
        let a = fock_annihilate(n_max).unwrap();
        let c = &a * a.adjoint() - a.adjoint() * &a;
        for i in 0..n_max {
            for j in 0..n_max {
                let expect = if i == j { ONE } else { ZERO };
                assert!(close(c[(i, j)], expect, 1e-14));
            }
        }
    }

    #[test]
    fn displacement_examples() {
        let d0 = displacement(ZERO, 10).unwrap();
        assert!(max_abs_diff(&d0, &Matrix::identity(11, 11)) < 1e-14);

        let d = displacement(C64::new(0.5, 0.0), 30).unwrap();
        let oracle = displaced_vacuum_series(0.5, 30);
        // frozen from the series oracle: e^{-0.125}
        assert!((d[(0, 0)].re - 0.882496902584595).abs() < 1e-12);
        for m in 0..10 {
            assert!(close(d[(m, 0)], oracle[m], 1e-10));
        }

        let p = displacement(C64::new(0.3, 0.0), 20).unwrap();
        let q = displacement(C64::new(-0.3, 0.0), 20).unwrap();
        assert!(max_abs_diff(&(p * q), &Matrix::identity(21, 21)) < 1e-10);
    }

    #[test]
    fn displacement_is_unitary_in_safe_regime() {
        for &(re, im) in &[(0.5, 0.0), (0.3, -0.9), (1.2, 0.4)] {
            let alpha = C64::new(re, im);
            let n_max = ((alpha.norm_sqr() * 4.0).ceil() as usize).max(8);
            assert!(unitarity_defect(&displacement(alpha, n_max).unwrap()) < 1e-8);
        }
    }

    #[test]
    fn collective_spin_examples() {
        let layout = HilbertLayout::qubits(2, 1).unwrap();
        let sx = collective_spin(&layout, SpinAxis::X, (0, 1)).unwrap();
        let mut ev: Vec<f64> = SymmetricEigen::new(sx.matrix().clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // each eigenvalue doubled by the photon factor
        let expect = [-1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }

        let single = HilbertLayout::qubits(1, 1).unwrap();
        let sz = collective_spin(&single, SpinAxis::Z, (0, 1)).unwrap();
        let g = Ket::basis(&single, &[0], 0);
        let out = sz.apply(&g);
        assert!(close(out.vector()[0], C64::new(-0.5, 0.0), 1e-15));

        // [S_x, S_z] = -i S_y against an S_y built from explicit transitions
        let sz2 = collective_spin(&layout, SpinAxis::Z, (0, 1)).unwrap();
        let mut sy = ComplexOperator::zeros(&layout);
        for k in 0..2 {
            let local = transition(2, 1, 0) * C64::new(0.0, -0.5) + transition(2, 0, 1) * C64::new(0.0, 0.5);
            sy = &sy + &embed(&local, Site::Atom(k), &layout).unwrap();
        }
        let lhs = sx.commutator(&sz2);
        let rhs = sy.scale(-I);
        assert!(max_abs_diff(lhs.matrix(), rhs.matrix()) < 1e-15);

        assert!(matches!(
            collective_spin(&layout, SpinAxis::X, (0, 2)),
            Err(Error::InvalidLevel { .. })
        ));
    }

    #[test]
    fn embed_examples() {
        let layout = HilbertLayout::qubits(2, 2).unwrap();
        let id = embed(&Matrix::identity(2, 2), Site::Atom(0), &layout).unwrap();
        assert_eq!(id, ComplexOperator::identity(&layout));

        let a = embed(&fock_annihilate(2).unwrap(), Site::Photon, &layout).unwrap();
        let n = &a.adjoint() * &a;
        let one = Ket::basis(&layout, &[0, 0], 1);
        assert!(close(one.inner(&n.apply(&one)), ONE, 1e-15));

        let raise2 = embed(&transition(2, 1, 0), Site::Atom(1), &layout).unwrap();
        let out = raise2.apply(&Ket::basis(&layout, &[0, 0], 0));
        assert_eq!(out, Ket::basis(&layout, &[0, 1], 0));

        assert!(matches!(
            embed(&Matrix::identity(3, 3), Site::Atom(0), &layout),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn layout_index_roundtrip() {
        let layout = HilbertLayout::new(vec![3, 2, 4], 5).unwrap();
        for k in 0..layout.dim() {
            let (atoms, n) = layout.split(k);
            assert_eq!(layout.index(&atoms, n), k);
        }
        assert_eq!(layout.index(&[1, 0, 0], 0), 2 * 4 * 6);
    }

    #[test]
    fn partial_trace_examples() {
        let layout = HilbertLayout::qubits(1, 1).unwrap();
        let atomic = nalgebra::dvector![C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let rho = Ket::product(&layout, &atomic, 0).unwrap().to_density();
        let reduced = rho.partial_trace_photon();
        assert!(max_abs_diff(&reduced, &(&atomic * atomic.adjoint())) < 1e-15);

        // (|g0⟩ + |e1⟩)/√2 → I/2
        let mut v = Vector::zeros(4);
        v[layout.index(&[0], 0)] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v[layout.index(&[1], 1)] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let bell = Ket::new(layout.clone(), v).unwrap().to_density();
        let mixed = bell.partial_trace_photon();
        assert!(max_abs_diff(&mixed, &(Matrix::identity(2, 2) * C64::new(0.5, 0.0))) < 1e-15);
    }

    #[test]
    fn partial_trace_matches_index_oracle() {
        let layout = HilbertLayout::new(vec![2, 3], 3).unwrap();
        let rho = random_hermitian(layout.dim(), 7);
        let reduced = partial_trace_photon(&rho, &layout);
        let da = layout.atom_dim();
        let mut oracle = Matrix::zeros(da, da);
        for i in 0..layout.dim() {
            for j in 0..layout.dim() {
                let (ai, ni) = layout.split(i);
                let (aj, nj) = layout.split(j);
                if ni == nj {
                    let r = ai[0] * 3 + ai[1];
                    let c = aj[0] * 3 + aj[1];
                    oracle[(r, c)] += rho[(i, j)];
                }
            }
        }
        assert!(max_abs_diff(&reduced, &oracle) < 1e-12);
        assert!((reduced.trace() - rho.trace()).norm() < 1e-13);
    }

    #[test]
    fn expm_examples() {
        let z = Matrix::zeros(3, 3);
        assert!(max_abs_diff(&expm_hermitian(&z, 1.3).unwrap(), &Matrix::identity(3, 3)) < 1e-15);

        let w = [0.3, -1.2, 2.5];
        let h = Matrix::from_diagonal(&Vector::from_iterator(3, w.iter().map(|&x| C64::new(x, 0.0))));
        let u = expm_hermitian(&h, 0.7).unwrap();
        for (k, &x) in w.iter().enumerate() {
            assert!(close(u[(k, k)], C64::from_polar(1.0, -x * 0.7), 1e-14));
        }

        let h = random_hermitian(6, 42);
        let u = expm_hermitian(&h, 2.3).unwrap();
        assert!(max_abs_diff(&u, &expm_taylor(&h, 2.3)) < 1e-10);
        assert!(unitarity_defect(&u) < 1e-10);

        let mut bad = Matrix::zeros(2, 2);
        bad[(0, 1)] = ONE;
        assert!(matches!(expm_hermitian(&bad, 1.0), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn density_operator_validation() {
        let layout = HilbertLayout::qubits(1, 1).unwrap();
        let rho = Ket::basis(&layout, &[1], 0).to_density();
        assert!(DensityOperator::new(layout.clone(), rho.matrix().clone()).is_ok());
        let doubled = rho.matrix() * C64::new(2.0, 0.0);
        assert!(DensityOperator::new(layout.clone(), doubled).is_err());
        let mut neg = Matrix::zeros(4, 4);
        neg[(0, 0)] = C64::new(1.5, 0.0);
        neg[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(matches!(DensityOperator::new(layout, neg), Err(Error::Positivity { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn embed_preserves_hermiticity_and_addition(
                re in proptest::collection::vec(-1.0f64..1.0, 9),
                im in proptest::collection::vec(-1.0f64..1.0, 9),
                site in 0usize..3,
            ) {
                let layout = HilbertLayout::new(vec![3, 3], 2).unwrap();
                let site = if site == 2 { Site::Photon } else { Site::Atom(site) };
                let m = Matrix::from_fn(3, 3, |i, j| C64::new(re[3 * i + j], im[3 * i + j]));
                let h = hermitian_part(&m);
                let eh = embed(&h, site, &layout).unwrap();
                prop_assert!(eh.max_hermitian_deviation() < 1e-15);
                let sum = embed(&(&m + &h), site, &layout).unwrap();
                let parts = &embed(&m, site, &layout).unwrap() + &eh;
                prop_assert!(max_abs_diff(sum.matrix(), parts.matrix()) < 1e-14);
            }

            #[test]
            fn expm_is_unitary(seed in 0u64..1000, t in -5.0f64..5.0) {
                let h = random_hermitian(7, seed);
                prop_assert!(unitarity_defect(&expm_hermitian(&h, t).unwrap()) <= 1e-10);
            }

            #[test]
            fn partial_trace_keeps_trace(seed in 0u64..1000) {
                let layout = HilbertLayout::qubits(2, 3).unwrap();
                let rho = random_hermitian(layout.dim(), seed);
                let red = partial_trace_photon(&rho, &layout);
                prop_assert!((red.trace() - rho.trace()).norm() <= 1e-13);
            }
        }
    }
}
