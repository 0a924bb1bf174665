//! Scenario files: the JSON description of a family, its controllers and
//! the extra operands some commands need.
//!
//! Matrices are lists of rows. An entry is either a number or a `[re, im]`
//! pair. Controllers and the target accept the string `"identity"`.

use kgfusion::gen::{GenSpec, Instance};
use kgfusion::linalg::{Operator, C64};
use kgfusion::measure::{discretize_interval, MeasureSpace, WeightFunction};
use kgfusion::{generate, AtomComponent, ControlContext, FrameFamily, Subspace, Tolerances};
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<kgfusion::Error> for InputError {
    fn from(e: kgfusion::Error) -> Self {
        InputError(e.to_string())
    }
}

type Result<T> = std::result::Result<T, InputError>;

fn bad(msg: impl Into<String>) -> InputError {
    InputError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> C64 {
        match self {
            Entry::Real(re) => C64::new(re, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix(pub Vec<Vec<Entry>>);

impl Matrix {
    /// Writes real entries as plain numbers and the rest as pairs.
    pub fn from_operator(m: &Operator) -> Self {
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .map(|j| {
                        let z = m[(i, j)];
                        if z.im == 0.0 {
                            Entry::Real(z.re)
                        } else {
                            Entry::Complex([z.re, z.im])
                        }
                    })
                    .collect()
            })
            .collect();
        Matrix(rows)
    }

    pub fn to_operator(&self, what: &str) -> Result<Operator> {
        let rows = self.0.len();
        let cols = self.0.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(bad(format!("{what}: empty matrix")));
        }
        if self.0.iter().any(|r| r.len() != cols) {
            return Err(bad(format!("{what}: ragged rows")));
        }
        let m = Operator::from_fn(rows, cols, |i, j| self.0[i][j].value());
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(bad(format!("{what}: non-finite entry")));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Named(String),
    Matrix(Matrix),
}

impl Default for OperatorSpec {
    fn default() -> Self {
        OperatorSpec::Named("identity".into())
    }
}

impl OperatorSpec {
    fn resolve(&self, n: usize, what: &str) -> Result<Operator> {
        let m = match self {
            OperatorSpec::Named(name) if name == "identity" => Operator::identity(n, n),
            OperatorSpec::Named(name) => return Err(bad(format!("{what}: unknown operator \"{name}\""))),
            OperatorSpec::Matrix(m) => m.to_operator(what)?,
        };
        if m.shape() != (n, n) {
            return Err(bad(format!("{what}: expected {n}x{n}, got {}x{}", m.nrows(), m.ncols())));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarField {
    Real,
    #[default]
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub label: String,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureSpec {
    Counting(usize),
    Atoms(Vec<AtomSpec>),
    Interval { a: f64, b: f64, n: usize },
}

impl MeasureSpec {
    fn build(&self) -> Result<MeasureSpace> {
        Ok(match self {
            MeasureSpec::Counting(n) => kgfusion::counting_measure(*n)?,
            MeasureSpec::Atoms(atoms) => MeasureSpace::discrete(atoms.iter().map(|a| (a.label.clone(), a.mu)))?,
            MeasureSpec::Interval { a, b, n } => discretize_interval(*a, *b, *n)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Constant(f64),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    /// Orthonormal basis of the subspace, one column per basis vector.
    pub subspace: Matrix,
    /// The local operator in the coordinates of that basis.
    pub local: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub measure: MeasureSpec,
    pub weights: WeightSpec,
    pub components: Vec<ComponentSpec>,
}

impl FamilySpec {
    pub fn from_family(fam: &FrameFamily) -> Self {
        let measure = MeasureSpec::Atoms(
            fam.measure().atoms().iter().map(|a| AtomSpec { label: a.label.clone(), mu: a.mu }).collect(),
        );
        let components = fam
            .components()
            .iter()
            .map(|c| ComponentSpec {
                subspace: Matrix::from_operator(c.subspace().basis()),
                local: Matrix::from_operator(c.local()),
            })
            .collect();
        FamilySpec { measure, weights: WeightSpec::Values(fam.weights().values().to_vec()), components }
    }

    fn build(&self, n: usize, tol: &Tolerances) -> Result<FrameFamily> {
        let measure = self.measure.build()?;
        let weights = match &self.weights {
            WeightSpec::Constant(v) => WeightFunction::constant(measure.len(), *v)?,
            WeightSpec::Values(v) => WeightFunction::new(v.clone())?,
        };
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let q = c.subspace.to_operator(&format!("component {i} subspace"))?;
                if q.nrows() != n {
                    return Err(bad(format!("component {i}: subspace basis has {} rows, expected {n}", q.nrows())));
                }
                let subspace = Subspace::from_orthonormal(q, tol)?;
                let local = c.local.to_operator(&format!("component {i} local operator"))?;
                Ok(AtomComponent::new(subspace, local)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FrameFamily::new(measure, weights, components)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub scalar_field: ScalarField,
    pub dim: usize,
    /// The family; may be omitted when `gen` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    #[serde(default, rename = "T")]
    pub t: OperatorSpec,
    #[serde(default, rename = "U")]
    pub u: OperatorSpec,
    #[serde(default, rename = "K")]
    pub k: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    /// Generator spec; used to build family and controllers when `family` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen: Option<GenSpec>,
    #[serde(default, rename = "V", skip_serializing_if = "Option::is_none")]
    pub v: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second: Option<FamilySpec>,
    /// Generator version that produced the scenario, informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng_version: Option<String>,
}

/// A scenario with every matrix resolved and checked.
pub struct Loaded {
    pub family: FrameFamily,
    pub context: ControlContext,
    pub v: Option<Operator>,
    pub second: Option<FrameFamily>,
}

impl Scenario {
    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    /// The explicit scenario describing a generated instance.
    pub fn from_instance(spec: &GenSpec, inst: &Instance) -> Self {
        let ctx = &inst.context;
        Scenario {
            scalar_field: match spec.field {
                kgfusion::Field::Real => ScalarField::Real,
                kgfusion::Field::Complex => ScalarField::Complex,
            },
            dim: ctx.dim(),
            family: Some(FamilySpec::from_family(&inst.family)),
            t: OperatorSpec::Matrix(Matrix::from_operator(ctx.t())),
            u: OperatorSpec::Matrix(Matrix::from_operator(ctx.u())),
            k: OperatorSpec::Matrix(Matrix::from_operator(ctx.k())),
            tolerances: Some(*ctx.tol()),
            gen: Some(spec.clone()),
            v: None,
            second: None,
            rng_version: Some(kgfusion::RNG_VERSION.to_string()),
        }
    }

    /// Tolerances from the file, overridden by `overrides` where set.
    pub fn tolerances(&self, overrides: &TolOverrides) -> Tolerances {
        Self::tolerances_from(self.tolerances.unwrap_or_default(), overrides)
    }

    pub fn tolerances_from(mut tol: Tolerances, overrides: &TolOverrides) -> Tolerances {
        if let Some(x) = overrides.psd {
            tol.psd = x;
        }
        if let Some(x) = overrides.herm {
            tol.herm = x;
        }
        if let Some(x) = overrides.eq {
            tol.eq = x;
        }
        if let Some(x) = overrides.rank {
            tol.rank = x;
        }
        tol
    }

    pub fn load(&self, tol: Tolerances) -> Result<Loaded> {
        let n = self.dim;
        if n == 0 {
            return Err(bad("dim must be positive"));
        }
        let (family, context) = match (&self.family, &self.gen) {
            (Some(f), _) => {
                let family = f.build(n, &tol)?;
                let t = self.t.resolve(n, "T")?;
                let u = self.u.resolve(n, "U")?;
                let k = self.k.resolve(n, "K")?;
                (family, ControlContext::new(t, u, k, tol)?)
            }
            (None, Some(spec)) => {
                if spec.dim != n {
                    return Err(bad(format!("gen.dim {} differs from dim {n}", spec.dim)));
                }
                let inst = generate(spec, tol)?;
                (inst.family, inst.context)
            }
            (None, None) => return Err(bad("scenario needs either `family` or `gen`")),
        };
        if self.scalar_field == ScalarField::Real {
            let complex = family
                .components()
                .iter()
                .flat_map(|c| c.subspace().basis().iter().chain(c.local().iter()))
                .chain(context.t().iter().chain(context.u()).chain(context.k()))
                .any(|z| z.im != 0.0);
            if complex {
                return Err(bad("scalar_field is real but an entry has a nonzero imaginary part"));
            }
        }
        let v = self.v.as_ref().map(|m| OperatorSpec::Matrix(m.clone()).resolve(n, "V")).transpose()?;
        let second = self.second.as_ref().map(|f| f.build(n, &tol)).transpose()?;
        Ok(Loaded { family, context, v, second })
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct TolOverrides {
    pub psd: Option<f64>,
    pub herm: Option<f64>,
    pub eq: Option<f64>,
    pub rank: Option<f64>,
}
