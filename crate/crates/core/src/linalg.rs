//! Dense operator kernel.
//!
//! Every operator is a `DMatrix<Complex64>`; a real scalar field is modelled by
//! keeping imaginary parts at zero, so one code path serves both fields.
//! Hermitian eigendecompositions and SVDs come from `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol::Tolerances;

pub type C64 = Complex64;
pub type Operator = DMatrix<C64>;
pub type Vector = DVector<C64>;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> Operator {
    Operator::identity(n, n)
}

/// Builds a real operator from row-major entries.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> Operator {
    assert_eq!(entries.len(), rows * cols, "entry count must be rows*cols");
    Operator::from_fn(rows, cols, |i, j| c(entries[i * cols + j]))
}

pub fn real_diag(values: &[f64]) -> Operator {
    let n = values.len();
    Operator::from_fn(n, n, |i, j| if i == j { c(values[i]) } else { C64::default() })
}

pub fn real_vector(values: &[f64]) -> Vector {
    Vector::from_iterator(values.len(), values.iter().map(|&v| c(v)))
}

pub fn is_finite(m: &Operator) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_finite(m: &Operator, what: &'static str) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn ensure_square(m: &Operator, what: &str) -> Result<()> {
    if m.is_square() && m.nrows() > 0 {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what} must be square and non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Conjugate transpose.
pub fn adjoint(m: &Operator) -> Operator {
    m.adjoint()
}

/// `(M + M*) / 2`.
pub fn hermitian_part(m: &Operator) -> Operator {
    (m + m.adjoint()) * c(0.5)
}

/// Singular values (unordered) of `m`; empty for a matrix with a zero dimension.
pub fn singular_values(m: &Operator) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Largest singular value.
pub fn spectral_norm(m: &Operator) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

/// Number of singular values above `rel · σ_max`.
pub fn numerical_rank(m: &Operator, rel: f64) -> usize {
    let sv = singular_values(m);
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel * top).count()
}

/// Smallest gap between the retained and discarded singular values, relative
/// to `σ_max`: `(σ_r − σ_{r+1}) / σ_max`. Returns 1 for a zero matrix.
pub fn rank_gap(m: &Operator, rel: f64) -> f64 {
    let mut sv = singular_values(m);
    sv.sort_by(|a, b| b.total_cmp(a));
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 1.0;
    }
    let r = sv.iter().filter(|&&s| s > rel * top).count();
    let kept = sv[r - 1] / top;
    let dropped = sv.get(r).map_or(0.0, |s| s / top);
    kept - dropped
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Operator,
}

impl Eigen {
    pub fn of(m: &Operator) -> Self {
        let n = m.nrows();
        let sym = SymmetricEigen::new(hermitian_part(m));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| sym.eigenvalues[a].total_cmp(&sym.eigenvalues[b]));
        let values = order.iter().map(|&i| sym.eigenvalues[i]).collect();
        let vectors = Operator::from_fn(n, n, |r, j| sym.eigenvectors[(r, order[j])]);
        Self { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Reassembles `E · diag(g(λ)) · E*`.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> Operator {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let factor = c(g(self.values[j]));
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= factor);
        }
        scaled * self.vectors.adjoint()
    }

    /// Columns of `E` selected by `keep(λ)`.
    pub fn columns_where(&self, keep: impl Fn(f64) -> bool) -> (Operator, Vec<f64>) {
        let idx: Vec<usize> = (0..self.values.len()).filter(|&j| keep(self.values[j])).collect();
        let cols = Operator::from_fn(self.vectors.nrows(), idx.len(), |r, j| self.vectors[(r, idx[j])]);
        (cols, idx.iter().map(|&j| self.values[j]).collect())
    }
}

pub fn lambda_min(m: &Operator) -> f64 {
    Eigen::of(m).min()
}

pub fn lambda_max(m: &Operator) -> f64 {
    Eigen::of(m).max()
}

/// A square operator known to be Hermitian.
///
/// The stored matrix is the exact Hermitian part of the input; the spectral
/// norm of the discarded skew part is kept as `deviation`.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    matrix: Operator,
    deviation: f64,
}

impl HermitianOperator {
    pub fn new(m: Operator, tol: &Tolerances) -> Result<Self> {
        ensure_square(&m, "Hermitian operator")?;
        ensure_finite(&m, "Hermitian operator")?;
        let deviation = spectral_norm(&(&m - m.adjoint()));
        if deviation > tol.herm {
            return Err(Error::NotHermitian { deviation, tol: tol.herm });
        }
        Ok(Self { matrix: hermitian_part(&m), deviation })
    }

    /// Builds from `A·A*`, which is Hermitian by construction.
    pub fn gram(a: &Operator) -> Self {
        let m = a * a.adjoint();
        Self { matrix: hermitian_part(&m), deviation: 0.0 }
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: identity(n), deviation: 0.0 }
    }

    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }

    pub fn into_matrix(self) -> Operator {
        self.matrix
    }

    pub fn deviation(&self) -> f64 {
        self.deviation
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigen(&self) -> Eigen {
        Eigen::of(&self.matrix)
    }

    pub fn min_eig(&self) -> f64 {
        self.eigen().min()
    }

    pub fn max_eig(&self) -> f64 {
        self.eigen().max()
    }
}

/// A Hermitian operator with no eigenvalue below `−tol.psd`.
#[derive(Debug, Clone)]
pub struct PositiveOperator {
    base: HermitianOperator,
    min_eig: f64,
}

impl PositiveOperator {
    pub fn new(base: HermitianOperator, tol: &Tolerances) -> Result<Self> {
        let min_eig = base.min_eig();
        if min_eig < -tol.psd {
            return Err(Error::NotPositive { min_eig, tol: tol.psd });
        }
        Ok(Self { base, min_eig })
    }

    /// Membership in the invertible positive cone: `λ_min ≥ tol.pd`.
    pub fn strictly(base: HermitianOperator, tol: &Tolerances) -> Result<Self> {
        let min_eig = base.min_eig();
        if min_eig < tol.pd {
            return Err(Error::NotPositiveDefinite { min_eig, tol: tol.pd });
        }
        Ok(Self { base, min_eig })
    }

    pub fn from_matrix(m: Operator, tol: &Tolerances) -> Result<Self> {
        Self::new(HermitianOperator::new(m, tol)?, tol)
    }

    pub fn identity(n: usize) -> Self {
        Self { base: HermitianOperator::identity(n), min_eig: 1.0 }
    }

    pub fn hermitian(&self) -> &HermitianOperator {
        &self.base
    }

    pub fn matrix(&self) -> &Operator {
        self.base.matrix()
    }

    pub fn min_eig(&self) -> f64 {
        self.min_eig
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }
}

/// A subspace of `C^n` given by an orthonormal basis (columns).
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: Operator,
}

impl Subspace {
    /// Accepts a basis whose columns are already orthonormal within `tol.eq`.
    pub fn from_orthonormal(basis: Operator, tol: &Tolerances) -> Result<Self> {
        if basis.nrows() == 0 || basis.ncols() == 0 || basis.ncols() > basis.nrows() {
            return Err(Error::InvalidSubspace(format!(
                "basis must be n x d with 1 <= d <= n, got {}x{}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        ensure_finite(&basis, "subspace basis")?;
        let gram = basis.adjoint() * &basis;
        let defect = spectral_norm(&(gram - identity(basis.ncols())));
        if defect > tol.eq {
            return Err(Error::InvalidSubspace(format!(
                "basis columns are not orthonormal (defect {defect:e})"
            )));
        }
        Ok(Self { basis })
    }

    /// Orthonormal basis of the column span of `vectors`.
    pub fn span(vectors: &Operator, tol: &Tolerances) -> Result<Self> {
        let basis = range_basis(vectors, tol.rank);
        if basis.ncols() == 0 {
            return Err(Error::InvalidSubspace("span of the given vectors is {0}".into()));
        }
        Ok(Self { basis })
    }

    /// The coordinate subspace spanned by `e_i` for `i` in `indices`.
    pub fn coordinate(n: usize, indices: &[usize]) -> Self {
        let basis = Operator::from_fn(n, indices.len(), |r, j| if r == indices[j] { c(1.0) } else { C64::default() });
        Self { basis }
    }

    pub fn whole(n: usize) -> Self {
        Self { basis: identity(n) }
    }

    pub fn basis(&self) -> &Operator {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// Orthonormal basis (possibly empty) of the range of `m`.
pub fn range_basis(m: &Operator, rel: f64) -> Operator {
    let n = m.nrows();
    if n == 0 || m.ncols() == 0 {
        return Operator::zeros(n, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Operator::zeros(n, 0);
    }
    let idx: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&j| svd.singular_values[j] > rel * top)
        .collect();
    Operator::from_fn(n, idx.len(), |r, j| u[(r, idx[j])])
}

/// Orthogonal projection onto the range of `m` (zero when the range is trivial).
pub fn range_projection(m: &Operator, rel: f64) -> Operator {
    let q = range_basis(m, rel);
    &q * q.adjoint()
}

/// `P = Q Q*` for the subspace basis `Q`.
pub fn projection(w: &Subspace) -> HermitianOperator {
    HermitianOperator::gram(w.basis())
}

/// The unique positive square root; eigenvalues in `(−tol.psd, 0)` are clamped to zero.
pub fn psd_sqrt(p: &PositiveOperator) -> PositiveOperator {
    let root = p.hermitian().eigen().map(|l| l.max(0.0).sqrt());
    let base = HermitianOperator { matrix: hermitian_part(&root), deviation: 0.0 };
    let min_eig = p.min_eig().max(0.0).sqrt();
    PositiveOperator { base, min_eig }
}

/// Square root of a matrix expected to be Hermitian PSD.
pub fn sqrt_psd_matrix(m: &Operator, tol: &Tolerances) -> Result<Operator> {
    let p = PositiveOperator::from_matrix(m.clone(), tol)?;
    Ok(psd_sqrt(&p).matrix().clone())
}

/// Moore–Penrose pseudo-inverse via SVD, discarding singular values at or
/// below `tol.rank · σ_max`.
pub fn pseudo_inverse(m: &Operator, tol: &Tolerances) -> Operator {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Operator::zeros(cols, rows);
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut out = Operator::zeros(cols, rows);
    if top == 0.0 {
        return out;
    }
    for (j, &s) in svd.singular_values.iter().enumerate() {
        if s > tol.rank * top {
            let vj = v_t.row(j).adjoint();
            let uj = u.column(j).adjoint();
            out += (vj * uj) * c(1.0 / s);
        }
    }
    out
}

/// Inverse of an invertible Hermitian operator through its eigendecomposition.
pub fn hermitian_inverse(h: &HermitianOperator, tol: &Tolerances) -> Result<Operator> {
    let eig = h.eigen();
    let scale = eig.values.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    let smallest = eig.values.iter().fold(f64::INFINITY, |a, l| a.min(l.abs()));
    if scale == 0.0 || smallest <= tol.rank * scale {
        return Err(Error::NotInvertible { rcond: if scale == 0.0 { 0.0 } else { smallest / scale } });
    }
    Ok(hermitian_part(&eig.map(|l| 1.0 / l)))
}

/// Inverse of a general square operator, refused when `σ_min ≤ tol.rank · σ_max`.
pub fn checked_inverse(m: &Operator, tol: &Tolerances) -> Result<Operator> {
    ensure_square(m, "operator to invert")?;
    let rcond = inverse_condition(m);
    if rcond <= tol.rank {
        return Err(Error::NotInvertible { rcond });
    }
    m.clone().try_inverse().ok_or(Error::NotInvertible { rcond })
}

/// `σ_min / σ_max`, zero for a singular or zero matrix.
pub fn inverse_condition(m: &Operator) -> f64 {
    let sv = singular_values(m);
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    sv.iter().copied().fold(f64::INFINITY, f64::min) / top
}

/// Result of [`pencil_min`].
#[derive(Debug, Clone)]
pub struct PencilMin {
    pub value: f64,
    /// Unit vector attaining the infimum.
    pub witness: Vector,
}

/// Result of [`pencil_max`]; unboundedness is a value, not an error.
#[derive(Debug, Clone)]
pub enum PencilBound {
    Finite { value: f64, witness: Vector },
    /// `range(S) ⊄ range(G)`; the witness lies in `ker G` with `⟨Sf,f⟩ > 0`.
    Unbounded { witness: Vector },
}

impl PencilBound {
    pub fn value(&self) -> Option<f64> {
        match self {
            PencilBound::Finite { value, .. } => Some(*value),
            PencilBound::Unbounded { .. } => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, PencilBound::Finite { .. })
    }
}

fn require_psd(h: &HermitianOperator, tol: &Tolerances) -> Result<Eigen> {
    let eig = h.eigen();
    if eig.min() < -tol.psd {
        return Err(Error::NotPositiveSemidefinite { min_eig: eig.min() });
    }
    Ok(eig)
}

fn scale_columns(m: &Operator, factors: &[f64]) -> Operator {
    let mut out = m.clone();
    for (j, &f) in factors.iter().enumerate() {
        out.column_mut(j).iter_mut().for_each(|z| *z *= c(f));
    }
    out
}

/// `inf { ⟨Sf,f⟩ / ⟨Gf,f⟩ : ⟨Gf,f⟩ > 0 }` for PSD `S`, `G`.
///
/// With `W`/`Z` orthonormal bases of `range(G)`/`ker(G)`, the component of `f`
/// in `ker G` is eliminated exactly through the Schur complement
/// `S_WW − S_WZ S_ZZ⁺ S_ZW`, leaving a definite pencil against `W*GW`.
pub fn pencil_min(s: &HermitianOperator, g: &HermitianOperator, tol: &Tolerances) -> Result<PencilMin> {
    if s.dim() != g.dim() {
        return Err(Error::DimensionMismatch(format!("pencil {}x{} vs {}x{}", s.dim(), s.dim(), g.dim(), g.dim())));
    }
    require_psd(s, tol)?;
    let g_eig = require_psd(g, tol)?;
    let top = g_eig.max();
    if top <= tol.psd {
        return Err(Error::ZeroDenominator);
    }
    let cut = tol.rank * top;
    let (w, mu) = g_eig.columns_where(|l| l > cut);
    let (z, _) = g_eig.columns_where(|l| l <= cut);

    let sm = s.matrix();
    let mut schur = w.adjoint() * sm * &w;
    let mut elim = Operator::zeros(z.ncols(), w.ncols());
    if z.ncols() > 0 {
        // S_ZZ can be pure round-off when ker G lies in ker S, so its
        // pseudo-inverse is cut relative to ‖S‖ rather than to itself.
        let szz = Eigen::of(&(z.adjoint() * sm * &z));
        let s_cut = tol.rank * lambda_max(sm).max(0.0);
        let (vz, lz) = szz.columns_where(|l| l > s_cut);
        let inv: Vec<f64> = lz.iter().map(|l| 1.0 / l).collect();
        let szz_pinv = scale_columns(&vz, &inv) * vz.adjoint();
        let szw = z.adjoint() * sm * &w;
        elim = -(szz_pinv * &szw);
        schur += szw.adjoint() * &elim;
    }
    let inv_sqrt: Vec<f64> = mu.iter().map(|m| 1.0 / m.sqrt()).collect();
    let d = real_diag(&inv_sqrt);
    let reduced = &d * schur * &d;
    let eig = Eigen::of(&reduced);
    let x = &d * eig.vectors.column(0);
    let mut witness = &w * &x + &z * (&elim * &x);
    let norm = witness.norm();
    if norm > 0.0 {
        witness /= c(norm);
    }
    Ok(PencilMin { value: eig.min().max(0.0), witness })
}

/// Smallest `B` with `S ⪯ B·G`, or [`PencilBound::Unbounded`] when
/// `range(S) ⊄ range(G)`.
pub fn pencil_max(s: &HermitianOperator, g: &HermitianOperator, tol: &Tolerances) -> Result<PencilBound> {
    if s.dim() != g.dim() {
        return Err(Error::DimensionMismatch(format!("pencil {}x{} vs {}x{}", s.dim(), s.dim(), g.dim(), g.dim())));
    }
    let s_eig = require_psd(s, tol)?;
    let g_eig = require_psd(g, tol)?;
    let s_top = s_eig.max().max(0.0);
    let g_top = g_eig.max();
    let n = s.dim();
    if g_top <= tol.psd {
        if s_top <= tol.psd {
            return Ok(PencilBound::Finite { value: 0.0, witness: Vector::zeros(n) });
        }
        let witness = s_eig.vectors.column(n - 1).into_owned();
        return Ok(PencilBound::Unbounded { witness });
    }
    let cut = tol.rank * g_top;
    let (w, mu) = g_eig.columns_where(|l| l > cut);
    let (z, _) = g_eig.columns_where(|l| l <= cut);
    let sm = s.matrix();
    if z.ncols() > 0 {
        let szz = Eigen::of(&(z.adjoint() * sm * &z));
        if szz.max() > tol.rank * s_top {
            let witness = &z * szz.vectors.column(z.ncols() - 1);
            return Ok(PencilBound::Unbounded { witness });
        }
    }
    let inv_sqrt: Vec<f64> = mu.iter().map(|m| 1.0 / m.sqrt()).collect();
    let d = real_diag(&inv_sqrt);
    let reduced = &d * (w.adjoint() * sm * &w) * &d;
    let eig = Eigen::of(&reduced);
    let k = eig.values.len() - 1;
    let mut witness = scale_columns(&w, &inv_sqrt) * eig.vectors.column(k);
    let norm = witness.norm();
    if norm > 0.0 {
        witness /= c(norm);
    }
    Ok(PencilBound::Finite { value: eig.max().max(0.0), witness })
}

/// `range(V) ⊆ range(K)`, decided by comparing numerical ranks of `K` and `[K | V]`.
pub fn range_contained(v: &Operator, k: &Operator, tol: &Tolerances) -> Result<bool> {
    if v.nrows() != k.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "range test needs equal row counts, got {} and {}",
            v.nrows(),
            k.nrows()
        )));
    }
    let mut joined = Operator::zeros(k.nrows(), k.ncols() + v.ncols());
    joined.columns_mut(0, k.ncols()).copy_from(k);
    joined.columns_mut(k.ncols(), v.ncols()).copy_from(v);
    Ok(numerical_rank(&joined, tol.rank) == numerical_rank(k, tol.rank))
}

/// `‖AB − BA‖`.
pub fn commutation_defect(a: &Operator, b: &Operator) -> Result<f64> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "commutator of {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(spectral_norm(&(a * b - b * a)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionCommutationReport {
    /// `‖P_M T* − P_M T* P_{TM}‖`.
    pub general_defect: f64,
    /// `‖P_{TM} T − T P_M‖`, evaluated only when `T` is unitary.
    pub unitary_defect: Option<f64>,
    pub holds: bool,
}

/// Checks `P_M T* = P_M T* P_{TM}` and, for unitary `T`, `P_{TM} T = T P_M`.
pub fn projection_commutation_check(m: &Subspace, t: &Operator, tol: &Tolerances) -> Result<ProjectionCommutationReport> {
    let n = m.ambient_dim();
    if t.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!("T must be {n}x{n}")));
    }
    let p_m = projection(m).into_matrix();
    let p_tm = range_projection(&(t * m.basis()), tol.rank);
    let t_adj = t.adjoint();
    let general_defect = spectral_norm(&(&p_m * &t_adj - &p_m * &t_adj * &p_tm));
    let unitary = spectral_norm(&(&t_adj * t - identity(n))) <= tol.eq;
    let unitary_defect = unitary.then(|| spectral_norm(&(&p_tm * t - t * &p_m)));
    let holds = general_defect <= tol.eq && unitary_defect.is_none_or(|d| d <= tol.eq);
    Ok(ProjectionCommutationReport { general_defect, unitary_defect, holds })
}
