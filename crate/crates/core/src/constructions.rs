//! Building new frames from old ones: invertible transforms, target changes,
//! the `K S_C⁻¹ K*` construction and the canonical dual.
//!
//! Every builder recomputes the optimal bounds of what it built and records
//! them next to the envelope predicted by the corresponding inequality chain.

use crate::error::{Error, Result};
use crate::frames::{
    analysis_operator, frame_operator, is_controlled_k_g_fusion_frame, optimal_bounds, AtomComponent,
    BoundsCertificate, ControlContext, FrameFamily, FrameOperatorResult,
};
use crate::gen::{Field, Sampler};
use crate::linalg::{
    c, checked_inverse, commutation_defect, hermitian_inverse, identity, lambda_min, pencil_max,
    pseudo_inverse, range_basis, range_contained, spectral_norm, Eigen, HermitianOperator, Operator, PencilBound,
    Subspace,
};
use crate::tol::Tolerances;

/// Which construction produced a [`TransformedFamily`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    /// `(V F(x), Λ_x P_F(x) V*)` with target `V K V*`.
    InvertibleTransform,
    /// The base family recovered from a transformed one, target `V⁻¹ K V`.
    InverseTransform,
    /// `(K S⁻¹ F(x), Λ_x P_F(x) S⁻¹ K*)` with target `K`.
    KConstruction,
    /// The K = I case of [`Construction::KConstruction`].
    CanonicalDual,
}

#[derive(Debug, Clone)]
pub struct TransformedFamily {
    pub family: FrameFamily,
    /// Controllers unchanged, target replaced by the new one.
    pub context: ControlContext,
    pub construction: Construction,
    pub source: FrameFamily,
    /// The operator that moved the subspaces (`V`, `V⁻¹` or `K S⁻¹`).
    pub operator: Operator,
    /// `(A_env, B_env)` predicted from the source bounds.
    pub envelope: (f64, f64),
    pub source_bounds: BoundsCertificate,
    pub frame_operator: FrameOperatorResult,
    pub bounds: BoundsCertificate,
}

impl TransformedFamily {
    /// `A_env ≤ A′ + tol.eq` and `B′ ≤ B_env + tol.eq`.
    pub fn envelope_holds(&self) -> bool {
        let eq = self.context.tol().eq;
        self.envelope.0 <= self.bounds.lower + eq && self.bounds.upper <= self.envelope.1 + eq
    }
}

/// Moves every subspace by `W` and composes the local operators with `W*`
/// on the right, keeping the ambient action `Λ_x P_F(x) W*` exact.
fn move_family(fam: &FrameFamily, w: &Operator, tol: &Tolerances) -> Result<FrameFamily> {
    let w_adj = w.adjoint();
    let components = fam
        .components()
        .iter()
        .map(|comp| {
            let q = comp.subspace().basis();
            let moved = range_basis(&(w * q), tol.rank);
            if moved.ncols() != q.ncols() {
                return Err(Error::NotInvertible { rcond: 0.0 });
            }
            let local = comp.local() * q.adjoint() * &w_adj * &moved;
            AtomComponent::new(Subspace::from_orthonormal(moved, tol)?, local)
        })
        .collect::<Result<Vec<_>>>()?;
    FrameFamily::new(fam.measure().clone(), fam.weights().clone(), components)
}

fn require_commuting(
    a: &Operator,
    left: &'static str,
    ctx: &ControlContext,
) -> Result<()> {
    let eq = ctx.tol().eq;
    for (ctrl, right) in [(ctx.t(), "T"), (ctx.u(), "U")] {
        let defect = commutation_defect(a, ctrl)?;
        if defect > eq {
            return Err(Error::CommutationViolated { left, right, defect });
        }
    }
    Ok(())
}

fn check_square(v: &Operator, n: usize, what: &str) -> Result<()> {
    if v.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!("{what} must be {n}x{n}, got {:?}", v.shape())));
    }
    Ok(())
}

/// The family `(V F(x), Λ_x P_F(x) V*, v)` as a controlled `V K V*` frame.
pub fn transform_by_invertible(fam: &FrameFamily, ctx: &ControlContext, v: &Operator) -> Result<TransformedFamily> {
    let tol = *ctx.tol();
    check_square(v, ctx.dim(), "V")?;
    checked_inverse(v, &tol)?;
    require_commuting(&v.adjoint(), "V*", ctx)?;

    let (_, source_bounds) = is_controlled_k_g_fusion_frame(fam, ctx)?;
    let family = move_family(fam, v, &tol)?;
    let context = ctx.with_target(v * ctx.k() * v.adjoint())?;
    let s = frame_operator(&family, &context)?;
    let bounds = optimal_bounds(&s, context.k())?;
    let norm2 = spectral_norm(v).powi(2);
    Ok(TransformedFamily {
        envelope: (source_bounds.lower / norm2, source_bounds.upper * norm2),
        family,
        context,
        construction: Construction::InvertibleTransform,
        source: fam.clone(),
        operator: v.clone(),
        source_bounds,
        frame_operator: s,
        bounds,
    })
}

/// Given the transformed family `Γ = (V F(x), Λ_x P_F(x) V*)` that is a
/// controlled K-frame, recovers the base family and certifies it against
/// `V⁻¹ K V` with envelope `(A/‖V‖², B‖V⁻¹‖²)`.
pub fn inverse_transform_check(fam_gamma: &FrameFamily, ctx: &ControlContext, v: &Operator) -> Result<TransformedFamily> {
    let tol = *ctx.tol();
    check_square(v, ctx.dim(), "V")?;
    let v_inv = checked_inverse(v, &tol)?;
    require_commuting(&v_inv.adjoint(), "(V^-1)*", ctx)?;

    let (_, source_bounds) = is_controlled_k_g_fusion_frame(fam_gamma, ctx)?;
    let family = move_family(fam_gamma, &v_inv, &tol)?;
    let context = ctx.with_target(&v_inv * ctx.k() * v)?;
    let s = frame_operator(&family, &context)?;
    let bounds = optimal_bounds(&s, context.k())?;
    Ok(TransformedFamily {
        envelope: (
            source_bounds.lower / spectral_norm(v).powi(2),
            source_bounds.upper * spectral_norm(&v_inv).powi(2),
        ),
        family,
        context,
        construction: Construction::InverseTransform,
        source: fam_gamma.clone(),
        operator: v_inv,
        source_bounds,
        frame_operator: s,
        bounds,
    })
}

/// Frame bounds derived for a new target, with the PSD margin that certifies them.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedBounds {
    /// `None` when the lower inequality is vacuous (zero target).
    pub lower: Option<f64>,
    pub upper: f64,
    /// Smallest slack of the lower inequality over the checked set.
    pub lower_margin: f64,
}

fn sandwich_margin(s: &HermitianOperator, lower: f64, g: &Operator) -> f64 {
    lambda_min(&(s.matrix() - g * g.adjoint() * c(lower)))
}

/// Bounds `(A/‖K‖², B)` of a controlled g-fusion frame viewed as a K-frame.
pub fn weaken_to_k_frame(s: &FrameOperatorResult, k: &Operator) -> Result<DerivedBounds> {
    let tol = *s.tol();
    let h = s.hermitian()?;
    check_square(k, h.dim(), "K")?;
    let cert = optimal_bounds(s, &identity(h.dim()))?;
    if !cert.is_frame {
        return Err(Error::NotAFrame);
    }
    let norm = spectral_norm(k);
    if norm == 0.0 {
        return Err(Error::ZeroOperator);
    }
    let lower = cert.lower / (norm * norm);
    let lower_margin = sandwich_margin(h, lower, k);
    if lower_margin < -tol.certificate_slack() {
        return Err(Error::CertificateFailed(format!("A/|K|^2 sandwich margin {lower_margin:e}")));
    }
    Ok(DerivedBounds { lower: Some(lower), upper: cert.upper, lower_margin })
}

/// Bounds `(A/‖K†‖², B)` of a controlled K-frame restricted to `range(K)`.
///
/// The lower inequality is checked on an orthonormal basis of `range(K)` and
/// on `samples` seeded random vectors of `range(K)`.
pub fn restrict_to_range(fam: &FrameFamily, ctx: &ControlContext, samples: usize, seed: u64) -> Result<DerivedBounds> {
    let tol = *ctx.tol();
    let s = frame_operator(fam, ctx)?;
    let h = s.hermitian()?;
    let range = range_basis(ctx.k(), tol.rank);
    if range.ncols() == 0 {
        return Ok(DerivedBounds { lower: None, upper: h.max_eig(), lower_margin: 0.0 });
    }
    let cert = optimal_bounds(&s, ctx.k())?;
    if !cert.is_frame {
        return Err(Error::NotAFrame);
    }
    let pinv_norm = spectral_norm(&pseudo_inverse(ctx.k(), &tol));
    let lower = cert.lower / (pinv_norm * pinv_norm);

    let mut sampler = Sampler::new(seed);
    let mut probes: Vec<_> = range.column_iter().map(|col| col.into_owned()).collect();
    for _ in 0..samples {
        let g = sampler.gaussian_matrix(range.ncols(), 1, Field::Complex);
        probes.push(&range * g.column(0));
    }
    let mut lower_margin = f64::INFINITY;
    for f in &probes {
        let norm2 = f.norm_squared();
        let form = f.dotc(&(h.matrix() * f)).re;
        lower_margin = lower_margin.min((form - lower * norm2) / norm2);
    }
    if lower_margin < -tol.certificate_slack() {
        return Err(Error::CertificateFailed(format!("range restriction margin {lower_margin:e}")));
    }
    Ok(DerivedBounds { lower: Some(lower), upper: cert.upper, lower_margin })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DouglasReport {
    /// Minimal `λ` with `VV* ⪯ λ KK*`.
    pub lambda: f64,
    /// `λ_min(λ KK* − VV*)`.
    pub psd_margin: f64,
    /// Bounds `(A/λ, B)` for the target `V`.
    pub bounds: DerivedBounds,
}

/// Transfers a controlled K-frame to a target `V` with `range(V) ⊆ range(K)`.
pub fn douglas_transfer(fam: &FrameFamily, ctx: &ControlContext, v: &Operator) -> Result<DouglasReport> {
    let tol = *ctx.tol();
    check_square(v, ctx.dim(), "V")?;
    if !range_contained(v, ctx.k(), &tol)? {
        return Err(Error::RangeNotContained);
    }
    let vv = HermitianOperator::gram(v);
    let kk = HermitianOperator::gram(ctx.k());
    let lambda = match pencil_max(&vv, &kk, &tol)? {
        PencilBound::Finite { value, .. } => value,
        PencilBound::Unbounded { .. } => return Err(Error::RangeNotContained),
    };
    let psd_margin = lambda_min(&(kk.matrix() * c(lambda) - vv.matrix()));
    if psd_margin < -tol.certificate_slack() {
        return Err(Error::CertificateFailed(format!("lambda KK* - VV* margin {psd_margin:e}")));
    }
    let s = frame_operator(fam, ctx)?;
    let h = s.hermitian()?;
    if lambda <= tol.pd {
        return Ok(DouglasReport {
            lambda,
            psd_margin,
            bounds: DerivedBounds { lower: None, upper: h.max_eig(), lower_margin: 0.0 },
        });
    }
    let cert = optimal_bounds(&s, ctx.k())?;
    let lower = cert.lower / lambda;
    let lower_margin = sandwich_margin(h, lower, v);
    if lower_margin < -tol.certificate_slack() {
        return Err(Error::CertificateFailed(format!("A/lambda sandwich margin {lower_margin:e}")));
    }
    Ok(DouglasReport { lambda, psd_margin, bounds: DerivedBounds { lower: Some(lower), upper: cert.upper, lower_margin } })
}

/// Inverse of the frame operator of a controlled g-fusion frame, with its certificate.
fn invert_frame_operator(fam: &FrameFamily, ctx: &ControlContext) -> Result<(FrameOperatorResult, BoundsCertificate, Operator)> {
    let tol = *ctx.tol();
    let s = frame_operator(fam, ctx)?;
    let cert = optimal_bounds(&s, &identity(ctx.dim()))?;
    if !cert.is_frame {
        return Err(Error::NotAFrame);
    }
    let inv = hermitian_inverse(s.hermitian()?, &tol)?;
    Ok((s, cert, inv))
}

/// The family `(K S⁻¹ F(x), Λ_x P_F(x) S⁻¹ K*, v)` with frame operator `K S⁻¹ K*`.
pub fn canonical_k_construction(fam: &FrameFamily, ctx: &ControlContext) -> Result<TransformedFamily> {
    let tol = *ctx.tol();
    let k = ctx.k();
    checked_inverse(k, &tol)?;
    let (s, cert, s_inv) = invert_frame_operator(fam, ctx)?;
    let v = k * &s_inv;
    require_commuting(&(&s_inv * k.adjoint()), "S^-1 K*", ctx)?;

    let family = move_family(fam, &v, &tol)?;
    let gamma = frame_operator(&family, ctx)?;
    let expected = k * &s_inv * k.adjoint();
    let norm_k = spectral_norm(k);
    let defect = spectral_norm(&(gamma.operator() - &expected));
    let allowed = tol.eq * norm_k * norm_k / s.hermitian()?.min_eig();
    if defect > allowed {
        return Err(Error::CertificateFailed(format!(
            "constructed frame operator differs from K S^-1 K* by {defect:e} (allowed {allowed:e})"
        )));
    }
    let bounds = optimal_bounds(&gamma, k)?;
    let (a, b) = (cert.lower, cert.upper);
    Ok(TransformedFamily {
        family,
        context: ctx.clone(),
        construction: Construction::KConstruction,
        source: fam.clone(),
        operator: v,
        envelope: (a / (b * b), b * norm_k * norm_k / (a * a)),
        source_bounds: cert,
        frame_operator: gamma,
        bounds,
    })
}

/// The canonical dual `(S⁻¹ F(x), Λ_x P_F(x) S⁻¹, v)`, with frame operator `S⁻¹`
/// and bounds inside `[1/B, 1/A]`.
pub fn canonical_dual(fam: &FrameFamily, ctx: &ControlContext) -> Result<TransformedFamily> {
    let ctx = ctx.with_target(identity(ctx.dim()))?;
    let mut dual = canonical_k_construction(fam, &ctx)?;
    dual.construction = Construction::CanonicalDual;
    dual.envelope = (1.0 / dual.source_bounds.upper, 1.0 / dual.source_bounds.lower);
    Ok(dual)
}

#[derive(Debug, Clone)]
pub struct PairReport {
    /// `T_C′ T_C* = Σ μ v_Γ v_Λ R^Γ R^Λ`, playing the role of `K*`.
    pub composite: Operator,
    /// Bessel bound of `Λ` (`λ_max` of its frame operator).
    pub bessel_lambda: f64,
    /// Bessel bound of `Γ`.
    pub bessel_gamma: f64,
    /// `Λ` against target `K`.
    pub lambda_bounds: BoundsCertificate,
    /// `Γ` against target `K*`.
    pub gamma_bounds: BoundsCertificate,
    /// `A_Λ ≥ 1/D_Γ` and `A_Γ ≥ 1/B_Λ`, both within `tol.eq`.
    pub holds: bool,
}

/// Certifies a pair of strict-mode families whose synthesis operators
/// compose to `K*`.
pub fn pairwise_k_frame_check(fam_lambda: &FrameFamily, fam_gamma: &FrameFamily, ctx: &ControlContext) -> Result<PairReport> {
    let tol = *ctx.tol();
    let (ml, mg) = (fam_lambda.measure(), fam_gamma.measure());
    if ml.len() != mg.len() {
        return Err(Error::MeasureMismatch(format!("{} atoms vs {} atoms", ml.len(), mg.len())));
    }
    if let Some(i) = ml.masses().zip(mg.masses()).position(|(a, b)| (a - b).abs() > tol.eq * a.abs().max(b.abs())) {
        return Err(Error::MeasureMismatch(format!("atom {i} has different masses")));
    }
    let t_lambda = analysis_operator(fam_lambda, ctx)?;
    let t_gamma = analysis_operator(fam_gamma, ctx)?;
    let composite = t_gamma.compose(&t_lambda);

    let s_lambda = FrameOperatorResult::from_operator(t_lambda.frame_operator(), tol);
    let s_gamma = FrameOperatorResult::from_operator(t_gamma.frame_operator(), tol);
    let bessel_lambda = s_lambda.hermitian()?.max_eig();
    let bessel_gamma = s_gamma.hermitian()?.max_eig();
    let lambda_bounds = optimal_bounds(&s_lambda, &composite.adjoint())?;
    let gamma_bounds = optimal_bounds(&s_gamma, &composite)?;
    let holds = lambda_bounds.lower >= 1.0 / bessel_gamma - tol.eq && gamma_bounds.lower >= 1.0 / bessel_lambda - tol.eq;
    Ok(PairReport { composite, bessel_lambda, bessel_gamma, lambda_bounds, gamma_bounds, holds })
}

#[derive(Debug, Clone)]
pub struct ControlEquivalenceReport {
    pub controlled: BoundsCertificate,
    pub uncontrolled: BoundsCertificate,
    /// Defects of `(S_gF, T)`, `(K, T)`, `(K, U)`.
    pub defects: [f64; 3],
    /// `(A_c/‖TU‖, B_c·‖(TU)^{-1/2}‖²)`, a lower bound on `A_u` and an upper
    /// bound on `B_u`; present when `T`, `U` and `S_gF` commute pairwise.
    pub envelope: Option<(f64, f64)>,
    pub tol_eq: f64,
}

impl ControlEquivalenceReport {
    pub fn agree(&self) -> bool {
        self.controlled.is_frame == self.uncontrolled.is_frame
    }

    pub fn envelope_holds(&self) -> Option<bool> {
        let eq = self.tol_eq;
        self.envelope.map(|(a, b)| a <= self.uncontrolled.lower + eq && self.uncontrolled.upper <= b + eq)
    }
}

/// Evaluates the controlled and uncontrolled frame predicates under the
/// commutation hypotheses that make them equivalent.
pub fn controlled_uncontrolled_equivalence_check(fam: &FrameFamily, ctx: &ControlContext) -> Result<ControlEquivalenceReport> {
    let tol = *ctx.tol();
    let plain = ctx.uncontrolled();
    let s_gf = frame_operator(fam, &plain)?;
    let defects = [
        commutation_defect(s_gf.operator(), ctx.t())?,
        commutation_defect(ctx.k(), ctx.t())?,
        commutation_defect(ctx.k(), ctx.u())?,
    ];
    let names = ["S_gF T = T S_gF", "K T = T K", "K U = U K"];
    for (defect, which) in defects.iter().zip(names) {
        if *defect > tol.eq {
            return Err(Error::HypothesisViolated { which, defect: *defect });
        }
    }
    let controlled = optimal_bounds(&frame_operator(fam, ctx)?, ctx.k())?;
    let uncontrolled = optimal_bounds(&s_gf, ctx.k())?;
    if controlled.is_frame != uncontrolled.is_frame {
        return Err(Error::EquivalenceViolation(format!(
            "controlled lower bound {:e}, uncontrolled lower bound {:e}",
            controlled.lower, uncontrolled.lower
        )));
    }
    let commuting = commutation_defect(ctx.t(), ctx.u())? <= tol.eq && commutation_defect(s_gf.operator(), ctx.u())? <= tol.eq;
    let envelope = commuting.then(|| {
        let tu = ctx.t() * ctx.u();
        let eig = Eigen::of(&tu);
        (controlled.lower / eig.max(), controlled.upper / eig.min())
    });
    Ok(ControlEquivalenceReport { controlled, uncontrolled, defects, envelope, tol_eq: tol.eq })
}
