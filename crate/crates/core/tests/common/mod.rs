//! Oracles and instance builders shared by the integration tests.
//!
//! The oracles deliberately avoid the crate's own kernels: eigenvalues come
//! straight from nalgebra and sums are written out as loops.

#![allow(dead_code)]

use kgfusion::gen::{generate, ControllerMode, Field, GenSpec, Instance, KMode, Sampler};
use kgfusion::linalg::{c, Operator, C64};
use kgfusion::{ControlContext, FrameFamily, Tolerances};
use nalgebra::SymmetricEigen;

pub fn eigenvalues(m: &Operator) -> Vec<f64> {
    let h = (m + m.adjoint()) * c(0.5);
    let mut v: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eig(m: &Operator) -> f64 {
    eigenvalues(m)[0]
}

pub fn max_eig(m: &Operator) -> f64 {
    *eigenvalues(m).last().unwrap()
}

pub fn norm(m: &Operator) -> f64 {
    m.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

/// Largest `A ∈ [0, ‖S‖/λ⁺_min(G)]` with `λ_min(S − A·G) ≥ −tol_psd`, by bisection.
pub fn bisection_pencil_min(s: &Operator, g: &Operator, tol_psd: f64, rel_rank: f64) -> f64 {
    let ge = eigenvalues(g);
    let top = *ge.last().unwrap();
    let smallest_positive = ge.iter().copied().filter(|&l| l > rel_rank * top).fold(f64::INFINITY, f64::min);
    let ok = |a: f64| min_eig(&(s - g * c(a))) >= -tol_psd;
    let (mut lo, mut hi) = (0.0, max_eig(s) / smallest_positive);
    if ok(hi) {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn loop_product(a: &Operator, b: &Operator) -> Operator {
    let (n, m, p) = (a.nrows(), a.ncols(), b.ncols());
    let mut out = Operator::zeros(n, p);
    for j in 0..p {
        for k in 0..m {
            let bk = b[(k, j)];
            for i in 0..n {
                out[(i, j)] += a[(i, k)] * bk;
            }
        }
    }
    out
}

fn loop_adjoint(a: &Operator) -> Operator {
    let mut out = Operator::zeros(a.ncols(), a.nrows());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out[(j, i)] = a[(i, j)].conj();
        }
    }
    out
}

/// `Σ_x μ_x v(x)² (Λ_x P_x T)* (Λ_x P_x U)` written as explicit loops, one
/// atom at a time, in the same association order as the library kernel.
pub fn loop_frame_operator(fam: &FrameFamily, t: &Operator, u: &Operator) -> Operator {
    let n = fam.dim();
    let mut s = Operator::zeros(n, n);
    let masses: Vec<f64> = fam.measure().masses().collect();
    for (x, comp) in fam.components().iter().enumerate() {
        let v = fam.weights().values()[x];
        let lam = loop_product(comp.local(), &loop_adjoint(comp.subspace().basis()));
        let lu = loop_product(&lam, u);
        let lt = loop_product(&lam, t);
        let block = loop_product(&loop_adjoint(&lt), &lu);
        let w = C64::new(masses[x] * v * v, 0.0);
        for j in 0..n {
            for i in 0..n {
                s[(i, j)] += block[(i, j)] * w;
            }
        }
    }
    s
}

/// `Σ_x μ_x v(x)² Q_x (L_x* L_x) Q_x*`, the uncontrolled frame operator.
pub fn direct_uncontrolled(fam: &FrameFamily) -> Operator {
    let n = fam.dim();
    let mut s = Operator::zeros(n, n);
    for ((mu, v), comp) in fam.measure().masses().zip(fam.weights().values()).zip(fam.components()) {
        let q = comp.subspace().basis();
        let gram = comp.local().adjoint() * comp.local();
        s += q * gram * q.adjoint() * c(mu * v * v);
    }
    s
}

pub const MODES: [ControllerMode; 3] =
    [ControllerMode::Identity, ControllerMode::CommutingDiagonal, ControllerMode::PolynomialOfCommonHermitian];

/// A seeded spec for which the frame operator is Hermitian: generic families
/// under identity controllers, eigenbasis-aligned families otherwise.
pub fn admissible_spec(seed: u64, mode: ControllerMode, k_mode: KMode) -> GenSpec {
    let mut s = Sampler::new(seed ^ 0x9e37_79b9_7f4a_7c15);
    let dim = s.int(2, 8);
    let atom_count = s.int(dim, (dim + 8).min(64));
    let k_mode = match k_mode {
        KMode::RankDeficient(_) => KMode::RankDeficient(s.int(1, dim - 1)),
        other => other,
    };
    GenSpec {
        seed,
        dim,
        atom_count,
        subspace_dims: (1, dim.min(3)),
        local_dims: (1, 3),
        controller_mode: mode,
        k_mode,
        field: if seed.is_multiple_of(2) { Field::Complex } else { Field::Real },
        aligned: mode != ControllerMode::Identity,
    }
}

pub fn admissible(seed: u64, mode: ControllerMode, k_mode: KMode) -> Instance {
    generate(&admissible_spec(seed, mode, k_mode), Tolerances::default()).expect("generator accepts its own specs")
}

/// `Ua diag(s) Ub*` with `s ∈ [0.5, 2)`.
pub fn well_conditioned(s: &mut Sampler, n: usize, field: Field) -> Operator {
    let a = s.unitary(n, field);
    let b = s.unitary(n, field);
    let sv = s.uniform_vec(n, 0.5, 2.0);
    a * kgfusion::linalg::real_diag(&sv) * b.adjoint()
}

/// An invertible operator whose adjoint commutes with the instance's controllers.
pub fn commuting_invertible(s: &mut Sampler, inst: &Instance) -> Operator {
    let n = inst.context.dim();
    if inst.context.t() == &Operator::identity(n, n) && inst.context.u() == &Operator::identity(n, n) {
        return well_conditioned(s, n, Field::Complex);
    }
    let e = &inst.eigenbasis;
    let mut d = Operator::zeros(n, n);
    for i in 0..n {
        let r = s.uniform(0.5, 2.0);
        let phase = s.uniform(0.0, std::f64::consts::TAU);
        d[(i, i)] = C64::from_polar(r, phase);
    }
    e * d * e.adjoint()
}

pub fn context_with(inst: &Instance, k: Operator) -> ControlContext {
    inst.context.with_target(k).unwrap()
}
