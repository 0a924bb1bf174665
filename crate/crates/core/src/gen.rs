//! Seeded random instances for property sweeps.
//!
//! All randomness flows through ChaCha8 seeded from a `u64`, drawn in a fixed
//! order, so a [`GenSpec`] determines its instance bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{AtomComponent, ControlContext, FrameFamily};
use crate::linalg::{c, identity, real_diag, Operator, Subspace, Vector, C64};
use crate::measure::{MeasureSpace, WeightFunction};
use crate::tol::Tolerances;

/// Identifies the random stream; bump whenever draws change order or distribution.
pub const RNG_VERSION: &str = "chacha8/rand-0.9/kgfusion-gen-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Real,
    #[default]
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerMode {
    Identity,
    /// Positive diagonal `T` and `U`.
    CommutingDiagonal,
    /// `T = p(M)`, `U = q(M)` for one Hermitian `M` and positive quadratics `p`, `q`.
    PolynomialOfCommonHermitian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KMode {
    Identity,
    Invertible,
    /// Exactly `r` nonzero singular values.
    RankDeficient(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub seed: u64,
    pub dim: usize,
    pub atom_count: usize,
    /// Inclusive range of subspace dimensions.
    pub subspace_dims: (usize, usize),
    /// Inclusive range of local (codomain) dimensions.
    pub local_dims: (usize, usize),
    pub controller_mode: ControllerMode,
    pub k_mode: KMode,
    #[serde(default)]
    pub field: Field,
    /// Build subspaces, local operators and `K` from the controllers'
    /// eigenbasis so every per-atom block commutes with `T` and `U`.
    /// Local dimensions are raised to the subspace dimension when needed.
    #[serde(default)]
    pub aligned: bool,
}

impl GenSpec {
    pub fn new(seed: u64, dim: usize, atom_count: usize) -> Self {
        Self {
            seed,
            dim,
            atom_count,
            subspace_dims: (1, dim),
            local_dims: (1, dim),
            controller_mode: ControllerMode::Identity,
            k_mode: KMode::Identity,
            field: Field::Complex,
            aligned: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.dim == 0 || self.atom_count == 0 {
            return bad("dim and atom_count must be positive".into());
        }
        let (lo, hi) = self.subspace_dims;
        if lo == 0 || lo > hi || hi > self.dim {
            return bad(format!("subspace_dims ({lo}, {hi}) must satisfy 1 <= min <= max <= dim"));
        }
        let (lo, hi) = self.local_dims;
        if lo == 0 || lo > hi {
            return bad(format!("local_dims ({lo}, {hi}) must satisfy 1 <= min <= max"));
        }
        if let KMode::RankDeficient(r) = self.k_mode {
            if r >= self.dim {
                return bad(format!("rank_deficient({r}) needs r < dim = {}", self.dim));
            }
        }
        Ok(())
    }
}

/// A generated family with its controllers and the eigenbasis they share.
#[derive(Debug, Clone)]
pub struct Instance {
    pub family: FrameFamily,
    pub context: ControlContext,
    /// Unitary `E` diagonalizing both controllers (`I` in the diagonal modes).
    pub eigenbasis: Operator,
}

/// Seeded source of scalars and structured matrices.
pub struct Sampler {
    rng: ChaCha8Rng,
}

fn project(m: Operator, field: Field) -> Operator {
    match field {
        Field::Complex => m,
        Field::Real => m.map(|z| c(z.re)),
    }
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.random_range(lo..=hi)
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn scalar(&mut self, field: Field) -> C64 {
        match field {
            Field::Real => c(self.gaussian()),
            Field::Complex => {
                let re = self.gaussian();
                C64::new(re, self.gaussian())
            }
        }
    }

    /// Entries i.i.d. standard Gaussian, drawn column by column.
    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize, field: Field) -> Operator {
        let mut m = Operator::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m[(i, j)] = self.scalar(field);
            }
        }
        m
    }

    pub fn gaussian_vector(&mut self, n: usize, field: Field) -> Vector {
        self.gaussian_matrix(n, 1, field).column(0).into_owned()
    }

    /// An `n×d` matrix with orthonormal columns (QR of a Gaussian matrix).
    pub fn orthonormal(&mut self, n: usize, d: usize, field: Field) -> Operator {
        let g = self.gaussian_matrix(n, d, field);
        project(g.qr().q(), field)
    }

    pub fn unitary(&mut self, n: usize, field: Field) -> Operator {
        self.orthonormal(n, n, field)
    }

    pub fn uniform_vec(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.uniform(lo, hi)).collect()
    }

    /// `E diag(values) E*`.
    pub fn diagonal_in(e: &Operator, values: &[f64]) -> Operator {
        e * real_diag(values) * e.adjoint()
    }

    /// Positive definite `W diag(λ) W*` with `λ ∈ [lo, hi)`.
    pub fn positive_definite(&mut self, n: usize, lo: f64, hi: f64, field: Field) -> Operator {
        let w = self.unitary(n, field);
        let values = self.uniform_vec(n, lo, hi);
        Self::diagonal_in(&w, &values)
    }

    /// `k` distinct indices from `0..n`, the first being `first`.
    pub fn subset(&mut self, n: usize, k: usize, first: usize) -> Vec<usize> {
        let mut pool: Vec<usize> = (0..n).filter(|&i| i != first).collect();
        let mut out = vec![first];
        while out.len() < k {
            let j = self.int(0, pool.len() - 1);
            out.push(pool.swap_remove(j));
        }
        out
    }
}

fn controllers(s: &mut Sampler, spec: &GenSpec) -> (Operator, Operator, Operator) {
    let n = spec.dim;
    match spec.controller_mode {
        ControllerMode::Identity => (identity(n), identity(n), identity(n)),
        ControllerMode::CommutingDiagonal => {
            let t = s.uniform_vec(n, 0.5, 2.0);
            let u = s.uniform_vec(n, 0.5, 2.0);
            (real_diag(&t), real_diag(&u), identity(n))
        }
        ControllerMode::PolynomialOfCommonHermitian => {
            let e = s.unitary(n, spec.field);
            let m = s.uniform_vec(n, -1.0, 1.0);
            let m = Sampler::diagonal_in(&e, &m);
            let mut quadratic = || {
                let a0 = s.uniform(0.5, 1.5);
                let a2 = s.uniform(0.1, 1.0);
                let shift = s.uniform(-1.0, 1.0);
                let centered = &m - identity(n) * c(shift);
                identity(n) * c(a0) + (&centered * &centered) * c(a2)
            };
            let t = quadratic();
            let u = quadratic();
            (t, u, e)
        }
    }
}

fn target(s: &mut Sampler, spec: &GenSpec, e: &Operator) -> Operator {
    let n = spec.dim;
    let rank = match spec.k_mode {
        KMode::Identity => return identity(n),
        KMode::Invertible => n,
        KMode::RankDeficient(r) => r,
    };
    let mut sv = s.uniform_vec(n, 0.5, 2.0);
    sv.iter_mut().skip(rank).for_each(|x| *x = 0.0);
    if spec.aligned {
        Sampler::diagonal_in(e, &sv)
    } else {
        let a = s.unitary(n, spec.field);
        let b = s.unitary(n, spec.field);
        a * real_diag(&sv) * b.adjoint()
    }
}

fn component(s: &mut Sampler, spec: &GenSpec, e: &Operator, atom: usize, tol: &Tolerances) -> Result<AtomComponent> {
    let n = spec.dim;
    let d = s.int(spec.subspace_dims.0, spec.subspace_dims.1);
    let mut k = s.int(spec.local_dims.0, spec.local_dims.1);
    let (basis, local) = if spec.aligned {
        k = k.max(d);
        let idx = s.subset(n, d, atom % n);
        let cols = Operator::from_fn(n, d, |r, j| e[(r, idx[j])]);
        let rot = s.unitary(d, spec.field);
        let w = s.orthonormal(k, d, spec.field);
        let scales = s.uniform_vec(d, 0.5, 1.5);
        // Q = E_S R and L = W diag(s) R, so L Q* = W diag(s) E_S*.
        (cols * &rot, w * real_diag(&scales) * rot)
    } else {
        let q = s.orthonormal(n, d, spec.field);
        let l = s.gaussian_matrix(k, d, spec.field);
        (q, l)
    };
    AtomComponent::new(Subspace::from_orthonormal(basis, tol)?, local)
}

/// Builds the instance described by `spec`.
pub fn generate(spec: &GenSpec, tol: Tolerances) -> Result<Instance> {
    spec.validate()?;
    let mut s = Sampler::new(spec.seed);
    let (t, u, e) = controllers(&mut s, spec);
    let k = target(&mut s, spec, &e);
    let masses = s.uniform_vec(spec.atom_count, 0.5, 1.5);
    let weights = s.uniform_vec(spec.atom_count, 0.5, 1.5);
    let components = (0..spec.atom_count)
        .map(|i| component(&mut s, spec, &e, i, &tol))
        .collect::<Result<Vec<_>>>()?;
    let measure = MeasureSpace::discrete(masses.into_iter().enumerate().map(|(i, m)| (format!("x{i}"), m)))?;
    let family = FrameFamily::new(measure, WeightFunction::new(weights)?, components)?;
    let context = ControlContext::new(t, u, k, tol)?;
    Ok(Instance { family, context, eigenbasis: e })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutation_defect, numerical_rank};

    fn spec(mode: ControllerMode) -> GenSpec {
        GenSpec { controller_mode: mode, ..GenSpec::new(7, 4, 6) }
    }

    #[test]
    fn identity_controllers_exact() {
        let inst = generate(&spec(ControllerMode::Identity), Tolerances::default()).unwrap();
        assert_eq!(inst.context.t(), &identity(4));
        assert_eq!(inst.context.u(), &identity(4));
    }

    #[test]
    fn same_seed_same_instance() {
        let s = GenSpec { k_mode: KMode::Invertible, ..spec(ControllerMode::PolynomialOfCommonHermitian) };
        let a = generate(&s, Tolerances::default()).unwrap();
        let b = generate(&s, Tolerances::default()).unwrap();
        assert_eq!(a.context.t(), b.context.t());
        assert_eq!(a.context.k(), b.context.k());
        for (x, y) in a.family.components().iter().zip(b.family.components()) {
            assert_eq!(x.subspace().basis(), y.subspace().basis());
            assert_eq!(x.local(), y.local());
        }
        assert_eq!(a.family.weights(), b.family.weights());
    }

    #[test]
    fn diagonal_controllers_commute_exactly() {
        let inst = generate(&spec(ControllerMode::CommutingDiagonal), Tolerances::default()).unwrap();
        assert_eq!(commutation_defect(inst.context.t(), inst.context.u()).unwrap(), 0.0);
    }

    #[test]
    fn polynomial_controllers_commute() {
        let inst = generate(&spec(ControllerMode::PolynomialOfCommonHermitian), Tolerances::default()).unwrap();
        assert!(commutation_defect(inst.context.t(), inst.context.u()).unwrap() < 1e-13);
    }

    #[test]
    fn rank_deficient_target() {
        for r in 0..4 {
            let s = GenSpec { k_mode: KMode::RankDeficient(r), ..spec(ControllerMode::Identity) };
            let inst = generate(&s, Tolerances::default()).unwrap();
            assert_eq!(numerical_rank(inst.context.k(), 1e-10), r);
        }
    }

    #[test]
    fn real_field_has_no_imaginary_parts() {
        let s = GenSpec { field: Field::Real, k_mode: KMode::Invertible, ..spec(ControllerMode::PolynomialOfCommonHermitian) };
        let inst = generate(&s, Tolerances::default()).unwrap();
        assert!(inst.context.t().iter().all(|z| z.im == 0.0));
        assert!(inst.family.components().iter().all(|c| c.local().iter().all(|z| z.im == 0.0)));
    }

    #[test]
    fn invalid_specs() {
        let mut s = GenSpec::new(1, 3, 2);
        s.subspace_dims = (2, 4);
        assert!(matches!(generate(&s, Tolerances::default()), Err(Error::InvalidSpec(_))));
        let s = GenSpec { k_mode: KMode::RankDeficient(3), ..GenSpec::new(1, 3, 2) };
        assert!(generate(&s, Tolerances::default()).is_err());
        assert!(generate(&GenSpec::new(1, 0, 2), Tolerances::default()).is_err());
    }

    #[test]
    fn spec_serde_round_trip() {
        let s = GenSpec { k_mode: KMode::RankDeficient(2), aligned: true, ..spec(ControllerMode::CommutingDiagonal) };
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"rank_deficient\":2"));
        assert_eq!(serde_json::from_str::<GenSpec>(&json).unwrap(), s);
    }
}
