//! Controlled K-g-fusion frame families and their operators.
//!
//! A family assigns to every atom `x` a subspace `F(x)` with orthonormal basis
//! `Q_x` (n×d), a local operator `L_x` (k×d) that represents `Λ_x` in the
//! coordinates of `Q_x`, and a weight `v(x)`. The ambient action of
//! `Λ_x P_F(x)` is therefore `L_x Q_x*`.

use crate::error::{Error, Result};
use crate::linalg::{
    c, ensure_finite, ensure_square, identity, pencil_min, psd_sqrt, spectral_norm, Eigen, HermitianOperator,
    Operator, PositiveOperator, Subspace, Vector,
};
use crate::measure::{MeasureSpace, WeightFunction};
use crate::tol::Tolerances;

/// One atom's subspace and local operator.
#[derive(Debug, Clone)]
pub struct AtomComponent {
    subspace: Subspace,
    local: Operator,
}

impl AtomComponent {
    pub fn new(subspace: Subspace, local: Operator) -> Result<Self> {
        if local.nrows() == 0 || local.ncols() != subspace.dim() {
            return Err(Error::DimensionMismatch(format!(
                "local operator is {}x{} but the subspace has dimension {}",
                local.nrows(),
                local.ncols(),
                subspace.dim()
            )));
        }
        ensure_finite(&local, "local operator")?;
        Ok(Self { subspace, local })
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    pub fn local(&self) -> &Operator {
        &self.local
    }

    /// `Λ_x P_F(x)` as a k×n matrix.
    pub fn ambient_action(&self) -> Operator {
        &self.local * self.subspace.basis().adjoint()
    }
}

#[derive(Debug, Clone)]
pub struct FrameFamily {
    dim: usize,
    measure: MeasureSpace,
    weights: WeightFunction,
    components: Vec<AtomComponent>,
}

impl FrameFamily {
    pub fn new(measure: MeasureSpace, weights: WeightFunction, components: Vec<AtomComponent>) -> Result<Self> {
        if components.len() != measure.len() || weights.len() != measure.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} atoms, {} weights, {} components",
                measure.len(),
                weights.len(),
                components.len()
            )));
        }
        let dim = components[0].subspace.ambient_dim();
        if let Some(i) = components.iter().position(|c| c.subspace.ambient_dim() != dim) {
            return Err(Error::DimensionMismatch(format!("atom {i} lives in a different ambient space")));
        }
        Ok(Self { dim, measure, weights, components })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn measure(&self) -> &MeasureSpace {
        &self.measure
    }

    pub fn weights(&self) -> &WeightFunction {
        &self.weights
    }

    pub fn components(&self) -> &[AtomComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn with_weights(&self, weights: WeightFunction) -> Result<Self> {
        Self::new(self.measure.clone(), weights, self.components.clone())
    }

    /// `(μ_x · v(x)², component)` in atom order.
    pub(crate) fn weighted(&self) -> impl Iterator<Item = (f64, f64, &AtomComponent)> {
        self.measure
            .masses()
            .zip(self.weights.values().iter().copied())
            .zip(self.components.iter())
            .map(|((mu, v), comp)| (mu, v, comp))
    }
}

/// Controllers `T, U ∈ GB⁺(H)`, the target `K`, and the tolerance policy.
#[derive(Debug, Clone)]
pub struct ControlContext {
    t: PositiveOperator,
    u: PositiveOperator,
    k: Operator,
    tol: Tolerances,
}

impl ControlContext {
    pub fn new(t: Operator, u: Operator, k: Operator, tol: Tolerances) -> Result<Self> {
        ensure_square(&k, "K")?;
        ensure_finite(&k, "K")?;
        let n = k.nrows();
        if t.shape() != (n, n) || u.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("T, U and K must all be {n}x{n}")));
        }
        let t = PositiveOperator::strictly(HermitianOperator::new(t, &tol)?, &tol)?;
        let u = PositiveOperator::strictly(HermitianOperator::new(u, &tol)?, &tol)?;
        Ok(Self { t, u, k, tol })
    }

    /// `T = U = K = I`.
    pub fn identity(n: usize, tol: Tolerances) -> Self {
        Self { t: PositiveOperator::identity(n), u: PositiveOperator::identity(n), k: identity(n), tol }
    }

    pub fn with_target(&self, k: Operator) -> Result<Self> {
        if k.shape() != self.k.shape() {
            return Err(Error::DimensionMismatch("new target has the wrong shape".into()));
        }
        ensure_finite(&k, "K")?;
        Ok(Self { k, ..self.clone() })
    }

    /// Same target, with `T = U = I`.
    pub fn uncontrolled(&self) -> Self {
        let n = self.dim();
        Self { t: PositiveOperator::identity(n), u: PositiveOperator::identity(n), ..self.clone() }
    }

    pub fn with_tolerances(&self, tol: Tolerances) -> Self {
        Self { tol, ..self.clone() }
    }

    pub fn t(&self) -> &Operator {
        self.t.matrix()
    }

    pub fn u(&self) -> &Operator {
        self.u.matrix()
    }

    pub fn k(&self) -> &Operator {
        &self.k
    }

    pub fn tol(&self) -> &Tolerances {
        &self.tol
    }

    pub fn dim(&self) -> usize {
        self.k.nrows()
    }
}

/// `S_C` as computed, with its Hermitian diagnostics.
#[derive(Debug, Clone)]
pub struct FrameOperatorResult {
    operator: Operator,
    herm_deviation: f64,
    hermitian: Option<HermitianOperator>,
    tol: Tolerances,
}

impl FrameOperatorResult {
    pub(crate) fn from_operator(operator: Operator, tol: Tolerances) -> Self {
        let herm_deviation = spectral_norm(&(&operator - operator.adjoint()));
        let hermitian = HermitianOperator::new(operator.clone(), &tol).ok();
        Self { operator, herm_deviation, hermitian, tol }
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn herm_deviation(&self) -> f64 {
        self.herm_deviation
    }

    /// The Hermitian part, refused when the deviation exceeds `tol.herm`.
    pub fn hermitian(&self) -> Result<&HermitianOperator> {
        self.hermitian.as_ref().ok_or(Error::NonHermitianFrameOperator {
            deviation: self.herm_deviation,
            tol: self.tol.herm,
        })
    }

    pub fn tol(&self) -> &Tolerances {
        &self.tol
    }

    pub fn dim(&self) -> usize {
        self.operator.nrows()
    }
}

fn check_dims(fam: &FrameFamily, ctx: &ControlContext) -> Result<()> {
    if fam.dim() != ctx.dim() {
        return Err(Error::DimensionMismatch(format!(
            "family lives in dimension {} but controllers are {}x{}",
            fam.dim(),
            ctx.dim(),
            ctx.dim()
        )));
    }
    Ok(())
}

/// `(Λ_x P_F(x) T)* (Λ_x P_F(x) U) = T* P Λ*Λ P U` for one atom.
fn atom_block(comp: &AtomComponent, t: &Operator, u: &Operator) -> Operator {
    let lam = comp.ambient_action();
    let lu = &lam * u;
    let lt = &lam * t;
    lt.adjoint() * lu
}

/// `S_C = Σ_x μ_x v(x)² T* P_F(x) Λ_x* Λ_x P_F(x) U`, accumulated in atom order.
pub fn frame_operator(fam: &FrameFamily, ctx: &ControlContext) -> Result<FrameOperatorResult> {
    check_dims(fam, ctx)?;
    let n = fam.dim();
    let mut s = Operator::zeros(n, n);
    for (mu, v, comp) in fam.weighted() {
        s += atom_block(comp, ctx.t(), ctx.u()) * c(mu * v * v);
    }
    Ok(FrameOperatorResult::from_operator(s, ctx.tol))
}

/// `Σ_x μ_x v(x)² ⟨Λ_x P_F(x) U f, Λ_x P_F(x) T f⟩`, which must be real.
pub fn frame_functional(fam: &FrameFamily, ctx: &ControlContext, f: &Vector) -> Result<f64> {
    check_dims(fam, ctx)?;
    if f.len() != fam.dim() {
        return Err(Error::DimensionMismatch(format!("vector of length {} in dimension {}", f.len(), fam.dim())));
    }
    let uf = ctx.u() * f;
    let tf = ctx.t() * f;
    let mut total = c(0.0);
    for (mu, v, comp) in fam.weighted() {
        let lam = comp.ambient_action();
        total += (&lam * &tf).dotc(&(&lam * &uf)) * c(mu * v * v);
    }
    let scale = f.norm_squared();
    if total.im.abs() > ctx.tol.herm * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NonRealFunctional { imag: total.im });
    }
    Ok(total.re)
}

/// Optimal constants in `A‖K*f‖² ≤ ⟨S_C f,f⟩ ≤ B‖f‖²`.
///
/// `lower` is the exact infimum and may exceed `upper` when `‖K‖ < 1`;
/// [`BoundsCertificate::frame_bounds`] returns an ordered pair.
#[derive(Debug, Clone)]
pub struct BoundsCertificate {
    pub lower: f64,
    pub upper: f64,
    pub lower_witness: Vector,
    pub upper_witness: Vector,
    pub is_frame: bool,
    /// `λ_min(S_C − A·KK*)`.
    pub lower_margin: f64,
    /// `B − λ_max(S_C)`.
    pub upper_margin: f64,
}

impl BoundsCertificate {
    /// A valid ordered pair `(min(A, B), B)`.
    pub fn frame_bounds(&self) -> (f64, f64) {
        (self.lower.min(self.upper), self.upper)
    }
}

/// Computes and certifies the optimal frame bounds of `S` against target `K`.
pub fn optimal_bounds(s: &FrameOperatorResult, k: &Operator) -> Result<BoundsCertificate> {
    let tol = *s.tol();
    let h = s.hermitian()?;
    if k.shape() != (h.dim(), h.dim()) {
        return Err(Error::DimensionMismatch("K does not match the frame operator".into()));
    }
    let eig = h.eigen();
    if eig.min() < -tol.psd {
        return Err(Error::NotPositiveSemidefinite { min_eig: eig.min() });
    }
    let upper = eig.max();
    let upper_witness = eig.vectors.column(h.dim() - 1).into_owned();
    let gram = HermitianOperator::gram(k);
    let pm = pencil_min(h, &gram, &tol).map_err(|e| match e {
        Error::ZeroDenominator => Error::ZeroOperator,
        other => other,
    })?;
    let lower = pm.value;

    let lower_margin = Eigen::of(&(h.matrix() - gram.matrix() * c(lower))).min();
    let upper_margin = upper - eig.max();
    let slack = tol.certificate_slack();
    if lower_margin < -slack {
        return Err(Error::CertificateFailed(format!(
            "lambda_min(S - A KK*) = {lower_margin:e} at A = {lower:e}"
        )));
    }
    Ok(BoundsCertificate {
        lower,
        upper,
        lower_witness: pm.witness,
        upper_witness,
        is_frame: lower > tol.pd,
        lower_margin,
        upper_margin,
    })
}

/// Frame operator plus certificate against `ctx.k()`.
pub fn is_controlled_k_g_fusion_frame(fam: &FrameFamily, ctx: &ControlContext) -> Result<(bool, BoundsCertificate)> {
    let s = frame_operator(fam, ctx)?;
    let cert = optimal_bounds(&s, ctx.k())?;
    Ok((cert.is_frame, cert))
}

/// An element of the discretized `L²(X, K)`: one length-n block per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub blocks: Vec<Vector>,
}

impl CoefficientVector {
    /// `Σ_x μ_x ⟨φ(x), ψ(x)⟩`.
    pub fn inner(&self, other: &CoefficientVector, measure: &MeasureSpace) -> Result<crate::linalg::C64> {
        if self.blocks.len() != other.blocks.len() || self.blocks.len() != measure.len() {
            return Err(Error::DimensionMismatch("coefficient vectors on different atom sets".into()));
        }
        Ok(measure
            .masses()
            .zip(self.blocks.iter().zip(&other.blocks))
            .map(|(mu, (a, b))| b.dotc(a) * c(mu))
            .sum())
    }
}

/// Strict-mode analysis operator `T_C* g = {v(x) (T* P Λ*Λ P U)^{1/2} g}`.
#[derive(Debug, Clone)]
pub struct AnalysisOperator {
    roots: Vec<Operator>,
    weights: Vec<f64>,
    masses: Vec<f64>,
    dim: usize,
}

/// Builds the analysis operator; every block must be Hermitian PSD.
pub fn analysis_operator(fam: &FrameFamily, ctx: &ControlContext) -> Result<AnalysisOperator> {
    check_dims(fam, ctx)?;
    let tol = ctx.tol();
    let mut roots = Vec::with_capacity(fam.len());
    for (atom, comp) in fam.components().iter().enumerate() {
        let block = atom_block(comp, ctx.t(), ctx.u());
        let herm = HermitianOperator::new(block, tol).map_err(|e| Error::NonPositiveBlock { atom, reason: e.to_string() })?;
        let pos = PositiveOperator::new(herm, tol).map_err(|e| Error::NonPositiveBlock { atom, reason: e.to_string() })?;
        roots.push(psd_sqrt(&pos).matrix().clone());
    }
    Ok(AnalysisOperator {
        roots,
        weights: fam.weights().values().to_vec(),
        masses: fam.measure().masses().collect(),
        dim: fam.dim(),
    })
}

impl AnalysisOperator {
    pub fn roots(&self) -> &[Operator] {
        &self.roots
    }

    pub fn analyze(&self, g: &Vector) -> CoefficientVector {
        let blocks = self.roots.iter().zip(&self.weights).map(|(r, &v)| (r * g) * c(v)).collect();
        CoefficientVector { blocks }
    }

    /// `T_C Φ = Σ_x μ_x v(x) R_x Φ(x)`, the adjoint of [`Self::analyze`].
    pub fn synthesize(&self, phi: &CoefficientVector) -> Result<Vector> {
        if phi.blocks.len() != self.roots.len() {
            return Err(Error::DimensionMismatch("coefficient vector has the wrong atom count".into()));
        }
        let mut out = Vector::zeros(self.dim);
        for ((r, b), (&v, &mu)) in self.roots.iter().zip(&phi.blocks).zip(self.weights.iter().zip(&self.masses)) {
            out += (r.adjoint() * b) * c(mu * v);
        }
        Ok(out)
    }

    /// `T_C T_C*` as a matrix.
    pub fn frame_operator(&self) -> Operator {
        self.compose(self)
    }

    /// `T_C(self) ∘ T_C*(other) = Σ_x μ_x v_self(x) v_other(x) R_x^self R_x^other`.
    pub fn compose(&self, other: &AnalysisOperator) -> Operator {
        let mut out = Operator::zeros(self.dim, self.dim);
        for (i, (a, b)) in self.roots.iter().zip(&other.roots).enumerate() {
            out += (a.adjoint() * b) * c(self.masses[i] * self.weights[i] * other.weights[i]);
        }
        out
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{real_diag, real_matrix, real_vector};
    use crate::measure::counting_measure;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn coord(n: usize, i: usize, local: f64) -> AtomComponent {
        AtomComponent::new(Subspace::coordinate(n, &[i]), real_matrix(1, 1, &[local])).unwrap()
    }

    fn parseval() -> FrameFamily {
        FrameFamily::new(
            counting_measure(2).unwrap(),
            WeightFunction::constant(2, 1.0).unwrap(),
            vec![coord(2, 0, 1.0), coord(2, 1, 1.0)],
        )
        .unwrap()
    }

    fn ctx(t: Operator, u: Operator, k: Operator) -> ControlContext {
        ControlContext::new(t, u, k, tol()).unwrap()
    }

    fn close(a: &Operator, b: &Operator, eps: f64) -> bool {
        spectral_norm(&(a - b)) <= eps
    }

    #[test]
    fn frame_operator_examples() {
        let s = frame_operator(&parseval(), &ControlContext::identity(2, tol())).unwrap();
        assert!(close(s.operator(), &identity(2), 0.0));
        let s = frame_operator(&parseval(), &ctx(real_diag(&[2.0, 2.0]), identity(2), identity(2))).unwrap();
        assert!(close(s.operator(), &real_diag(&[2.0, 2.0]), 0.0));

        let one = FrameFamily::new(
            counting_measure(1).unwrap(),
            WeightFunction::constant(1, 1.0).unwrap(),
            vec![AtomComponent::new(Subspace::whole(2), real_diag(&[1.0, 2.0])).unwrap()],
        )
        .unwrap();
        let s = frame_operator(&one, &ControlContext::identity(2, tol())).unwrap();
        assert!(close(s.operator(), &real_diag(&[1.0, 4.0]), 1e-15));
        assert_eq!(s.herm_deviation(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let err = frame_operator(&parseval(), &ControlContext::identity(3, tol())).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
        let bad = AtomComponent::new(Subspace::whole(2), real_matrix(1, 1, &[1.0]));
        assert!(bad.is_err());
    }

    #[test]
    fn functional_examples() {
        let id = ControlContext::identity(2, tol());
        assert!((frame_functional(&parseval(), &id, &real_vector(&[3.0, 4.0])).unwrap() - 25.0).abs() < 1e-12);
        let t2 = ctx(real_diag(&[2.0, 2.0]), identity(2), identity(2));
        assert!((frame_functional(&parseval(), &t2, &real_vector(&[1.0, 0.0])).unwrap() - 2.0).abs() < 1e-12);
        let one = FrameFamily::new(
            counting_measure(1).unwrap(),
            WeightFunction::constant(1, 1.0).unwrap(),
            vec![AtomComponent::new(Subspace::whole(2), real_diag(&[1.0, 2.0])).unwrap()],
        )
        .unwrap();
        assert!((frame_functional(&one, &id, &real_vector(&[1.0, 1.0])).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn functional_flags_non_real() {
        // T and U do not commute with the block: the quadratic form picks up an imaginary part.
        let fam = FrameFamily::new(
            counting_measure(1).unwrap(),
            WeightFunction::constant(1, 1.0).unwrap(),
            vec![coord(2, 0, 1.0)],
        )
        .unwrap();
        let t = real_matrix(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let cx = ctx(t, identity(2), identity(2));
        let f = Vector::from_vec(vec![crate::linalg::C64::new(1.0, 0.0), crate::linalg::C64::new(0.0, 1.0)]);
        assert!(matches!(frame_functional(&fam, &cx, &f), Err(Error::NonRealFunctional { .. })));
    }

    #[test]
    fn bounds_examples() {
        let t = tol();
        let s = FrameOperatorResult::from_operator(identity(2), t);
        let cert = optimal_bounds(&s, &identity(2)).unwrap();
        assert!((cert.lower - 1.0).abs() < 1e-14 && (cert.upper - 1.0).abs() < 1e-14);

        let s = FrameOperatorResult::from_operator(real_diag(&[1.0, 4.0]), t);
        let cert = optimal_bounds(&s, &identity(2)).unwrap();
        assert!((cert.lower - 1.0).abs() < 1e-14 && (cert.upper - 4.0).abs() < 1e-14);

        let s = FrameOperatorResult::from_operator(identity(2), t);
        let cert = optimal_bounds(&s, &real_diag(&[1.0, 0.0])).unwrap();
        assert!((cert.lower - 1.0).abs() < 1e-14 && (cert.upper - 1.0).abs() < 1e-14);
        assert!(cert.lower_witness[1].norm() < 1e-12);
    }

    #[test]
    fn bounds_refuse_non_hermitian() {
        let s = FrameOperatorResult::from_operator(real_matrix(2, 2, &[1.0, 1.0, 0.0, 1.0]), tol());
        assert!(matches!(optimal_bounds(&s, &identity(2)), Err(Error::NonHermitianFrameOperator { .. })));
        let s = FrameOperatorResult::from_operator(real_diag(&[1.0, -1.0]), tol());
        assert!(matches!(optimal_bounds(&s, &identity(2)), Err(Error::NotPositiveSemidefinite { .. })));
        let s = FrameOperatorResult::from_operator(identity(2), tol());
        assert!(matches!(optimal_bounds(&s, &Operator::zeros(2, 2)), Err(Error::ZeroOperator)));
    }

    #[test]
    fn frame_predicate_examples() {
        let (ok, cert) = is_controlled_k_g_fusion_frame(&parseval(), &ControlContext::identity(2, tol())).unwrap();
        assert!(ok);
        assert_eq!(cert.frame_bounds(), (cert.lower, cert.upper));

        let deficient = FrameFamily::new(
            counting_measure(2).unwrap(),
            WeightFunction::constant(2, 1.0).unwrap(),
            vec![coord(2, 0, 1.0), coord(2, 0, 1.0)],
        )
        .unwrap();
        let (ok, _) = is_controlled_k_g_fusion_frame(&deficient, &ControlContext::identity(2, tol())).unwrap();
        assert!(!ok);
        let k = ControlContext::identity(2, tol()).with_target(real_diag(&[1.0, 0.0])).unwrap();
        let (ok, cert) = is_controlled_k_g_fusion_frame(&deficient, &k).unwrap();
        assert!(ok);
        assert!((cert.lower - 2.0).abs() < 1e-14);
    }

    #[test]
    fn analysis_on_parseval() {
        let a = analysis_operator(&parseval(), &ControlContext::identity(2, tol())).unwrap();
        assert!(close(&a.frame_operator(), &identity(2), 1e-10));
    }

    #[test]
    fn analysis_diagonal_controllers() {
        let fam = FrameFamily::new(
            counting_measure(3).unwrap(),
            WeightFunction::new(vec![1.0, 0.5, 2.0]).unwrap(),
            vec![coord(2, 0, 1.5), coord(2, 1, -2.0), coord(2, 0, 0.3)],
        )
        .unwrap();
        let cx = ctx(real_diag(&[2.0, 3.0]), real_diag(&[0.5, 4.0]), identity(2));
        let a = analysis_operator(&fam, &cx).unwrap();
        let s = frame_operator(&fam, &cx).unwrap();
        assert!(close(&a.frame_operator(), s.operator(), 1e-10));

        // synthesis is the adjoint of analysis in the weighted block inner product
        let g = real_vector(&[0.7, -1.1]);
        let h = real_vector(&[-0.2, 0.9]);
        let phi = a.analyze(&g);
        let lhs = a.synthesize(&phi).unwrap().dotc(&h);
        let rhs = phi.inner(&a.analyze(&h), fam.measure()).unwrap();
        assert!((lhs.conj() - rhs).norm() < 1e-12 || (lhs - rhs).norm() < 1e-12);
        // ⟨T_C Φ, h⟩ = ⟨S_C g, h⟩
        let sg = s.operator() * &g;
        assert!((a.synthesize(&phi).unwrap() - sg).norm() < 1e-12);
    }

    #[test]
    fn analysis_rejects_non_hermitian_block() {
        let fam = FrameFamily::new(
            counting_measure(1).unwrap(),
            WeightFunction::constant(1, 1.0).unwrap(),
            vec![coord(2, 0, 1.0)],
        )
        .unwrap();
        let cx = ctx(real_matrix(2, 2, &[2.0, 1.0, 1.0, 2.0]), identity(2), identity(2));
        assert!(matches!(analysis_operator(&fam, &cx), Err(Error::NonPositiveBlock { atom: 0, .. })));
    }

    #[test]
    fn controllers_must_be_positive_definite() {
        let err = ControlContext::new(real_diag(&[1.0, 0.0]), identity(2), identity(2), tol()).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
        let err = ControlContext::new(real_matrix(2, 2, &[1.0, 1.0, 0.0, 1.0]), identity(2), identity(2), tol())
            .unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
    }
}
