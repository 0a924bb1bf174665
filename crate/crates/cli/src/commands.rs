use kgfusion::linalg::{lambda_max, lambda_min, spectral_norm, Operator};
use kgfusion::stability::StabilityVariant;
use kgfusion::{
    analysis_operator, canonical_dual, canonical_k_construction, controlled_uncontrolled_equivalence_check,
    douglas_transfer, dual_stability_check, frame_operator, generate, inverse_transform_check,
    is_controlled_k_g_fusion_frame, optimal_bounds, pairwise_k_frame_check, quotient_bound, restrict_to_range,
    three_equivalences, transform_by_invertible, weaken_to_k_frame, ControllerMode, Error, Field, GenSpec, KMode,
    Sampler, Tolerances,
};
use serde_json::json;

use crate::report::{certificate, derived, matrix, transformed, Outcome};
use crate::scenario::Loaded;

pub type CmdResult = Result<Outcome, Error>;

fn need<'a, T>(x: &'a Option<T>, what: &str) -> Result<&'a T, Error> {
    x.as_ref().ok_or_else(|| Error::InvalidSpec(format!("scenario has no {what}")))
}

pub fn check_frame(s: &Loaded) -> CmdResult {
    let (ok, cert) = is_controlled_k_g_fusion_frame(&s.family, &s.context)?;
    Ok(Outcome::new(ok, json!({ "certificate": certificate(&cert) }))
        .line(format!("frame: {ok}"))
        .line(format!("optimal bounds A = {:.12e}, B = {:.12e}", cert.lower, cert.upper)))
}

pub fn frame_operator_cmd(s: &Loaded) -> CmdResult {
    let op = frame_operator(&s.family, &s.context)?;
    let herm = op.herm_deviation();
    let eig = op.hermitian().map(|h| h.eigen().values).ok();
    Ok(Outcome::new(true, json!({ "frame_operator": matrix(op.operator()), "herm_deviation": herm, "eigenvalues": eig }))
        .line(format!("frame operator {0}x{0}, Hermitian deviation {herm:.3e}", op.dim())))
}

pub fn bounds(s: &Loaded) -> CmdResult {
    let op = frame_operator(&s.family, &s.context)?;
    let cert = optimal_bounds(&op, s.context.k())?;
    Ok(Outcome::new(true, json!({ "certificate": certificate(&cert) }))
        .line(format!("A = {:.12e} (margin {:.3e})", cert.lower, cert.lower_margin))
        .line(format!("B = {:.12e}", cert.upper))
        .line(format!("frame: {}", cert.is_frame)))
}

pub fn analysis(s: &Loaded) -> CmdResult {
    let a = analysis_operator(&s.family, &s.context)?;
    let op = frame_operator(&s.family, &s.context)?;
    let defect = spectral_norm(&(a.frame_operator() - op.operator()));
    let ok = defect <= s.context.tol().eq;
    let roots: Vec<_> = a.roots().iter().map(matrix).collect();
    Ok(Outcome::new(ok, json!({ "factorization_defect": defect, "roots": roots, "masses": a.masses() }))
        .line(format!("strict-mode analysis operator over {} atoms", a.roots().len()))
        .line(format!("|T T* - S| = {defect:.3e}")))
}

pub fn dual(s: &Loaded) -> CmdResult {
    let d = canonical_dual(&s.family, &s.context)?;
    let ok = d.envelope_holds();
    Ok(Outcome::new(ok, transformed(&d))
        .line(format!("dual bounds ({:.12e}, {:.12e})", d.bounds.lower, d.bounds.upper))
        .line(format!("envelope ({:.12e}, {:.12e}) holds: {ok}", d.envelope.0, d.envelope.1)))
}

pub fn k_construct(s: &Loaded) -> CmdResult {
    let g = canonical_k_construction(&s.family, &s.context)?;
    let ok = g.envelope_holds();
    Ok(Outcome::new(ok, transformed(&g))
        .line(format!("constructed bounds ({:.12e}, {:.12e})", g.bounds.lower, g.bounds.upper))
        .line(format!("envelope ({:.12e}, {:.12e}) holds: {ok}", g.envelope.0, g.envelope.1)))
}

pub fn transform(s: &Loaded, inverse: bool) -> CmdResult {
    let v = need(&s.v, "V")?;
    let t = if inverse {
        inverse_transform_check(&s.family, &s.context, v)?
    } else {
        transform_by_invertible(&s.family, &s.context, v)?
    };
    let ok = t.envelope_holds();
    Ok(Outcome::new(ok, transformed(&t))
        .line(format!("transformed bounds ({:.12e}, {:.12e})", t.bounds.lower, t.bounds.upper))
        .line(format!("envelope ({:.12e}, {:.12e}) holds: {ok}", t.envelope.0, t.envelope.1)))
}

pub fn weaken(s: &Loaded) -> CmdResult {
    let op = frame_operator(&s.family, &s.context)?;
    let d = weaken_to_k_frame(&op, s.context.k())?;
    Ok(Outcome::new(true, json!({ "bounds": derived(&d) }))
        .line(format!("K-frame bounds ({:?}, {:.12e})", d.lower, d.upper)))
}

pub fn restrict(s: &Loaded, samples: usize, seed: u64) -> CmdResult {
    let d = restrict_to_range(&s.family, &s.context, samples, seed)?;
    Ok(Outcome::new(true, json!({ "bounds": derived(&d), "samples": samples, "seed": seed }))
        .line(format!("bounds on range(K): ({:?}, {:.12e}), margin {:.3e}", d.lower, d.upper, d.lower_margin)))
}

pub fn douglas(s: &Loaded) -> CmdResult {
    let v = need(&s.v, "V")?;
    match douglas_transfer(&s.family, &s.context, v) {
        Ok(r) => Ok(Outcome::new(true, json!({
            "range_contained": true,
            "lambda": r.lambda,
            "psd_margin": r.psd_margin,
            "bounds": derived(&r.bounds),
        }))
        .line(format!("lambda = {:.12e}, bounds ({:?}, {:.12e})", r.lambda, r.bounds.lower, r.bounds.upper))),
        Err(Error::RangeNotContained) => Ok(Outcome::new(false, json!({ "range_contained": false, "lambda": null }))
            .line("range(V) is not contained in range(K)")),
        Err(e) => Err(e),
    }
}

pub fn quotient(s: &Loaded) -> CmdResult {
    let op = frame_operator(&s.family, &s.context)?;
    let q = quotient_bound(s.context.k(), &op)?;
    Ok(Outcome::new(q.bounded, json!({
        "bounded": q.bounded,
        "b_min": q.b_min,
        "range_contained": q.range_ok,
        "frame_lower": q.frame_lower,
    }))
    .line(if q.bounded { format!("bounded, B = {:.12e}", q.b_min.unwrap_or(f64::NAN)) } else { "unbounded".into() }))
}

pub fn equivalences(s: &Loaded) -> CmdResult {
    let n = s.context.dim();
    let v = s.v.clone().unwrap_or_else(|| Operator::identity(n, n));
    let three = three_equivalences(&s.family, &s.context, &v)?;
    let cu = match controlled_uncontrolled_equivalence_check(&s.family, &s.context) {
        Ok(r) => json!({
            "controlled": certificate(&r.controlled),
            "uncontrolled": certificate(&r.uncontrolled),
            "defects": r.defects,
            "envelope": r.envelope,
            "envelope_holds": r.envelope_holds(),
        }),
        Err(e @ Error::HypothesisViolated { .. }) => json!({ "skipped": e.to_string() }),
        Err(e) => return Err(e),
    };
    let holds = three.predicates[0];
    Ok(Outcome::new(holds, json!({
        "predicates": three.predicates,
        "transformed_lower": three.transformed_lower,
        "quotient_sqrt_form": three.quotient_sqrt_form,
        "quotient_conjugated_form": three.quotient_conjugated_form,
        "controlled_uncontrolled": cu,
    }))
    .line(format!("predicates {:?}", three.predicates)))
}

pub fn pair_check(s: &Loaded) -> CmdResult {
    let g = need(&s.second, "second family")?;
    let r = pairwise_k_frame_check(&s.family, g, &s.context)?;
    Ok(Outcome::new(r.holds, json!({
        "composite": matrix(&r.composite),
        "bessel_lambda": r.bessel_lambda,
        "bessel_gamma": r.bessel_gamma,
        "lambda_bounds": certificate(&r.lambda_bounds),
        "gamma_bounds": certificate(&r.gamma_bounds),
        "holds": r.holds,
    }))
    .line(format!("lower bounds {:.12e} and {:.12e}, holds: {}", r.lambda_bounds.lower, r.gamma_bounds.lower, r.holds)))
}

pub fn stability(s: &Loaded, variant: StabilityVariant) -> CmdResult {
    let g = need(&s.second, "second family")?;
    let r = dual_stability_check(&s.family, g, &s.context, variant)?;
    Ok(Outcome::new(r.holds, json!({
        "variant": format!("{:?}", r.variant).to_lowercase(),
        "d": r.d,
        "a1": r.a1,
        "a2": r.a2,
        "lhs": r.lhs,
        "rhs": r.rhs,
        "holds": r.holds,
        "chain": r.chain,
        "chain_holds": r.chain_holds,
    }))
    .line(format!("D = {:.12e}", r.d))
    .line(format!("lhs = {:.15e}, rhs = {:.15e}, holds: {}", r.lhs, r.rhs, r.holds)))
}

/// Seeded property suites over generated instances. Each instance runs every
/// suite; the report lists the seeds that failed.
pub fn sweep(count: usize, seed: u64, tol: Tolerances) -> CmdResult {
    let modes = [ControllerMode::Identity, ControllerMode::CommutingDiagonal, ControllerMode::PolynomialOfCommonHermitian];
    let names = ["bounds_sandwich", "transform_envelope", "dual_identity", "quotient_consistency"];
    let mut passed = [0usize; 4];
    let mut failures = Vec::new();
    for i in 0..count {
        let inst_seed = seed.wrapping_add(i as u64);
        let mut s = Sampler::new(inst_seed);
        let dim = s.int(2, 6);
        let mode = modes[i % 3];
        let mut spec = GenSpec::new(inst_seed, dim, s.int(dim, dim + 6));
        spec.subspace_dims = (1, dim.min(3));
        spec.local_dims = (1, 3);
        spec.controller_mode = mode;
        spec.aligned = mode != ControllerMode::Identity;
        spec.field = if i % 2 == 0 { Field::Complex } else { Field::Real };
        spec.k_mode = if i % 4 == 3 { KMode::RankDeficient(1) } else { KMode::Invertible };
        let inst = generate(&spec, tol)?;
        let checks = sweep_instance(&inst, &mut s);
        for (j, ok) in checks.iter().enumerate() {
            match ok {
                Ok(true) => passed[j] += 1,
                Ok(false) => failures.push(json!({ "seed": inst_seed, "suite": names[j] })),
                Err(e) => failures.push(json!({ "seed": inst_seed, "suite": names[j], "error": e.to_string() })),
            }
        }
    }
    let suites: serde_json::Map<_, _> = names.iter().zip(passed).map(|(n, p)| (n.to_string(), json!(p))).collect();
    let mut out = Outcome::new(failures.is_empty(), json!({ "instances": count, "seed": seed, "passed": suites, "failures": failures }));
    for (n, p) in names.iter().zip(passed) {
        out = out.line(format!("{n}: {p}/{count}"));
    }
    Ok(out)
}

fn sweep_instance(inst: &kgfusion::Instance, s: &mut Sampler) -> [Result<bool, Error>; 4] {
    let (fam, ctx) = (&inst.family, &inst.context);
    let tol = *ctx.tol();
    let slack = tol.certificate_slack();
    let sandwich = (|| {
        let op = frame_operator(fam, ctx)?;
        let cert = optimal_bounds(&op, ctx.k())?;
        let h = op.operator();
        let low = lambda_min(&(h - ctx.k() * ctx.k().adjoint() * kgfusion::linalg::c(cert.lower)));
        Ok(low >= -slack && lambda_max(h) <= cert.upper + slack)
    })();
    let envelope = (|| {
        let n = ctx.dim();
        let d: Vec<f64> = s.uniform_vec(n, 0.5, 2.0);
        let v = &inst.eigenbasis * kgfusion::linalg::real_diag(&d) * inst.eigenbasis.adjoint();
        Ok(transform_by_invertible(fam, ctx, &v)?.envelope_holds())
    })();
    let dual = (|| {
        let op = frame_operator(fam, ctx)?;
        let d = canonical_dual(fam, ctx)?;
        let inv = kgfusion::linalg::hermitian_inverse(op.hermitian()?, &tol)?;
        Ok(spectral_norm(&(d.frame_operator.operator() - inv)) <= tol.eq)
    })();
    let quotient = (|| {
        let op = frame_operator(fam, ctx)?;
        let q = quotient_bound(ctx.k(), &op)?;
        Ok(q.bounded == optimal_bounds(&op, ctx.k())?.is_frame)
    })();
    [sandwich, envelope, dual, quotient]
}
