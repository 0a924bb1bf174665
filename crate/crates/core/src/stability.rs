//! Quotient-operator criteria and perturbation bounds for canonical duals.

use crate::constructions::{canonical_dual, transform_by_invertible};
use crate::error::{Error, Result};
use crate::frames::{frame_operator, optimal_bounds, ControlContext, FrameFamily, FrameOperatorResult};
use crate::linalg::{
    commutation_defect, hermitian_inverse, identity, numerical_rank, pencil_max, psd_sqrt, range_contained,
    Eigen, HermitianOperator, Operator, PositiveOperator,
};
use crate::tol::Tolerances;

/// Boundedness of the quotient `[K* / S^{1/2}]`, i.e. of `S^{1/2} f ↦ K* f`.
#[derive(Debug, Clone)]
pub struct QuotientReport {
    pub bounded: bool,
    /// Minimal `B` with `KK* ⪯ B·S`; `None` when unbounded.
    pub b_min: Option<f64>,
    pub range_ok: bool,
    /// The optimal lower frame bound of `S` against `K`, when `K ≠ 0`.
    pub frame_lower: Option<f64>,
}

fn rank_summary(s: &Operator, k: &Operator, tol: &Tolerances) -> String {
    format!(
        "rank(S) = {}, rank(K) = {}",
        numerical_rank(s, tol.rank),
        numerical_rank(k, tol.rank)
    )
}

/// Decides whether `[K* / S^{1/2}]` is bounded and cross-checks the answer
/// against the frame predicate of `S` for target `K`.
pub fn quotient_bound(k: &Operator, s: &FrameOperatorResult) -> Result<QuotientReport> {
    let tol = *s.tol();
    let h = s.hermitian()?;
    if k.shape() != (h.dim(), h.dim()) {
        return Err(Error::DimensionMismatch("K does not match the frame operator".into()));
    }
    let kk = HermitianOperator::gram(k);
    let pencil = pencil_max(&kk, h, &tol)?;
    let range_ok = range_contained(k, h.matrix(), &tol)?;
    let b_min = pencil.value();
    if pencil.is_finite() != range_ok {
        return Err(Error::EquivalenceViolation(format!(
            "pencil finite = {}, range contained = {range_ok}; {}",
            pencil.is_finite(),
            rank_summary(h.matrix(), k, &tol)
        )));
    }
    let frame_lower = if kk.max_eig() > tol.psd {
        let cert = optimal_bounds(s, k)?;
        if cert.is_frame != range_ok {
            return Err(Error::EquivalenceViolation(format!(
                "frame = {}, quotient bounded = {range_ok}; {}",
                cert.is_frame,
                rank_summary(h.matrix(), k, &tol)
            )));
        }
        Some(cert.lower)
    } else {
        None
    };
    Ok(QuotientReport { bounded: range_ok, b_min, range_ok, frame_lower })
}

/// The three predicates for an invertible `V` whose adjoint commutes with the controllers.
#[derive(Debug, Clone)]
pub struct ThreeEquivalenceReport {
    /// Optimal lower bound of the transformed family against `VK`.
    pub transformed_lower: f64,
    /// Minimal `B` for `[(VK)* / S^{1/2} V*]`.
    pub quotient_sqrt_form: Option<f64>,
    /// Minimal `B` for `[(VK)* / (V S V*)^{1/2}]`.
    pub quotient_conjugated_form: Option<f64>,
    /// `(i)`, `(ii)`, `(iii)`.
    pub predicates: [bool; 3],
}

impl ThreeEquivalenceReport {
    pub fn agree(&self) -> bool {
        self.predicates.iter().all(|&p| p == self.predicates[0])
    }
}

pub fn three_equivalences(fam: &FrameFamily, ctx: &ControlContext, v: &Operator) -> Result<ThreeEquivalenceReport> {
    let tol = *ctx.tol();
    let transformed = transform_by_invertible(fam, ctx, v)?;
    let vk = v * ctx.k();
    let cert_i = optimal_bounds(&transformed.frame_operator, &vk)?;

    let s = frame_operator(fam, ctx)?;
    let root = psd_sqrt(&PositiveOperator::new(s.hermitian()?.clone(), &tol)?);
    let x = root.matrix() * v.adjoint();
    let g2 = HermitianOperator::new(x.adjoint() * &x, &tol)?;
    let conj = PositiveOperator::from_matrix(v * s.hermitian()?.matrix() * v.adjoint(), &tol)?;
    let y = psd_sqrt(&conj);
    let g3 = HermitianOperator::new(y.matrix().adjoint() * y.matrix(), &tol)?;

    let target = HermitianOperator::gram(&vk);
    let ii = pencil_max(&target, &g2, &tol)?;
    let iii = pencil_max(&target, &g3, &tol)?;
    let predicates = [cert_i.is_frame, ii.is_finite(), iii.is_finite()];
    let report = ThreeEquivalenceReport {
        transformed_lower: cert_i.lower,
        quotient_sqrt_form: ii.value(),
        quotient_conjugated_form: iii.value(),
        predicates,
    };
    if !report.agree() {
        return Err(Error::EquivalenceViolation(format!(
            "predicates {predicates:?}; {}",
            rank_summary(s.operator(), &vk, &tol)
        )));
    }
    Ok(report)
}

/// `‖S₁ − S₂‖ = max |eig(S₁ − S₂)|` for two Hermitian frame operators.
pub fn frame_operator_distance(s1: &FrameOperatorResult, s2: &FrameOperatorResult) -> Result<f64> {
    let (h1, h2) = (s1.hermitian()?, s2.hermitian()?);
    if h1.dim() != h2.dim() {
        return Err(Error::DimensionMismatch("frame operators of different dimensions".into()));
    }
    Ok(hermitian_norm(&(h1.matrix() - h2.matrix())))
}

fn hermitian_norm(m: &Operator) -> f64 {
    let eig = Eigen::of(m);
    eig.min().abs().max(eig.max().abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityVariant {
    /// Compares the quadratic forms of the two canonical duals.
    Functional,
    /// Compares `S₁⁻¹` and `S₂⁻¹` directly.
    Operator,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub variant: StabilityVariant,
    /// `‖S₁ − S₂‖`.
    pub d: f64,
    pub a1: f64,
    pub a2: f64,
    /// Distance between the dual frame operators.
    pub lhs: f64,
    /// `D / (A₁A₂)`.
    pub rhs: f64,
    pub holds: bool,
    /// `‖S₁⁻¹‖`, `‖S₁ − S₂‖`, `‖S₂⁻¹‖`.
    pub chain: [f64; 3],
    /// `lhs ≤ ‖S₁⁻¹‖‖S₁ − S₂‖‖S₂⁻¹‖ ≤ rhs`, each within `tol.eq`.
    pub chain_holds: bool,
}

/// Bounds the distance between the canonical duals of two controlled g-fusion
/// frames by `‖S₁ − S₂‖ / (A₁A₂)`.
pub fn dual_stability_check(
    fam1: &FrameFamily,
    fam2: &FrameFamily,
    ctx: &ControlContext,
    variant: StabilityVariant,
) -> Result<StabilityReport> {
    let tol = *ctx.tol();
    let ctx = ctx.with_target(identity(ctx.dim()))?;
    let s1 = frame_operator(fam1, &ctx)?;
    let s2 = frame_operator(fam2, &ctx)?;
    let c1 = optimal_bounds(&s1, ctx.k())?;
    let c2 = optimal_bounds(&s2, ctx.k())?;
    if !(c1.is_frame && c2.is_frame) {
        return Err(Error::NotAFrame);
    }
    let inv1 = hermitian_inverse(s1.hermitian()?, &tol)?;
    let inv2 = hermitian_inverse(s2.hermitian()?, &tol)?;
    for (inv, left) in [(&inv1, "S_1^-1"), (&inv2, "S_2^-1")] {
        for (ctrl, right) in [(ctx.t(), "T"), (ctx.u(), "U")] {
            let defect = commutation_defect(inv, ctrl)?;
            if defect > tol.eq {
                return Err(Error::CommutationViolated { left, right, defect });
            }
        }
    }

    let d = frame_operator_distance(&s1, &s2)?;
    let lhs = match variant {
        StabilityVariant::Functional => {
            let d1 = canonical_dual(fam1, &ctx)?;
            let d2 = canonical_dual(fam2, &ctx)?;
            frame_operator_distance(&d1.frame_operator, &d2.frame_operator)?
        }
        StabilityVariant::Operator => hermitian_norm(&(&inv1 - &inv2)),
    };
    let (a1, a2) = (c1.lower, c2.lower);
    let rhs = d / (a1 * a2);
    let chain = [hermitian_norm(&inv1), d, hermitian_norm(&inv2)];
    let product = chain[0] * chain[1] * chain[2];
    let chain_holds = lhs <= product + tol.eq && product <= rhs + tol.eq;
    Ok(StabilityReport { variant, d, a1, a2, lhs, rhs, holds: lhs <= rhs + tol.eq, chain, chain_holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::AtomComponent;
    use crate::linalg::{real_diag, real_matrix, spectral_norm, Subspace};
    use crate::measure::{counting_measure, WeightFunction};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn coord(n: usize, i: usize, local: f64) -> AtomComponent {
        AtomComponent::new(Subspace::coordinate(n, &[i]), real_matrix(1, 1, &[local])).unwrap()
    }

    fn family(comps: Vec<AtomComponent>) -> FrameFamily {
        let n = comps.len();
        FrameFamily::new(counting_measure(n).unwrap(), WeightFunction::constant(n, 1.0).unwrap(), comps).unwrap()
    }

    fn parseval() -> FrameFamily {
        family(vec![coord(2, 0, 1.0), coord(2, 1, 1.0)])
    }

    fn result(m: Operator) -> FrameOperatorResult {
        FrameOperatorResult::from_operator(m, tol())
    }

    #[test]
    fn quotient_examples() {
        let r = quotient_bound(&identity(2), &result(real_diag(&[2.0, 2.0]))).unwrap();
        assert!(r.bounded && r.range_ok);
        assert!((r.b_min.unwrap() - 0.5).abs() < 1e-14);

        let r = quotient_bound(&real_diag(&[0.0, 1.0]), &result(real_diag(&[1.0, 0.0]))).unwrap();
        assert!(!r.bounded && r.b_min.is_none());
        assert_eq!(r.frame_lower, Some(0.0));

        let s = real_matrix(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let root = crate::linalg::sqrt_psd_matrix(&s, &tol()).unwrap();
        let r = quotient_bound(&root, &result(s)).unwrap();
        assert!((r.b_min.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_equivalences_examples() {
        let ctx = ControlContext::identity(2, tol());
        let r = three_equivalences(&parseval(), &ctx, &identity(2)).unwrap();
        assert_eq!(r.predicates, [true; 3]);

        let r = three_equivalences(&parseval(), &ctx, &real_diag(&[2.0, 2.0])).unwrap();
        assert_eq!(r.predicates, [true; 3]);
        assert!((r.quotient_sqrt_form.unwrap() - 1.0).abs() < 1e-12);
        assert!((r.quotient_conjugated_form.unwrap() - 1.0).abs() < 1e-12);
        assert!((r.transformed_lower - 1.0).abs() < 1e-12);

        let deficient = family(vec![coord(2, 0, 1.0), coord(2, 0, 1.0)]);
        let r = three_equivalences(&deficient, &ctx, &identity(2)).unwrap();
        assert_eq!(r.predicates, [false; 3]);
    }

    #[test]
    fn distance_examples() {
        let a = result(identity(2));
        assert_eq!(frame_operator_distance(&a, &a).unwrap(), 0.0);
        let b = result(real_diag(&[2.0, 2.0]));
        assert!((frame_operator_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        let c = result(real_matrix(2, 2, &[1.0, 2.0, 2.0, -3.0]));
        let z = result(Operator::zeros(2, 2));
        let dist = frame_operator_distance(&c, &z).unwrap();
        assert!((dist - spectral_norm(c.operator())).abs() < 1e-12);
    }

    #[test]
    fn stability_scalar_equality() {
        let ctx = ControlContext::identity(1, tol());
        let one = |w: f64| {
            FrameFamily::new(
                counting_measure(1).unwrap(),
                WeightFunction::constant(1, w).unwrap(),
                vec![coord(1, 0, 1.0)],
            )
            .unwrap()
        };
        for variant in [StabilityVariant::Functional, StabilityVariant::Operator] {
            let r = dual_stability_check(&one(1.0), &one(1.5f64.sqrt()), &ctx, variant).unwrap();
            assert!((r.d - 0.5).abs() < 1e-14);
            assert!((r.a2 - 1.5).abs() < 1e-14);
            assert!((r.lhs - 1.0 / 3.0).abs() < 1e-10);
            assert!((r.rhs - 1.0 / 3.0).abs() < 1e-10);
            assert!(r.holds && r.chain_holds);

            let r = dual_stability_check(&one(1.0), &one(1.0), &ctx, variant).unwrap();
            assert_eq!(r.d, 0.0);
            assert!(r.lhs.abs() < 1e-15 && r.holds);
        }
    }

    #[test]
    fn stability_requires_frames() {
        let ctx = ControlContext::identity(2, tol());
        let deficient = family(vec![coord(2, 0, 1.0), coord(2, 0, 1.0)]);
        assert!(matches!(
            dual_stability_check(&parseval(), &deficient, &ctx, StabilityVariant::Operator),
            Err(Error::NotAFrame)
        ));
    }
}
