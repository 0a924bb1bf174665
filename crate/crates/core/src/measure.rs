//! Finite measure spaces: exact discrete measures and midpoint quadrature.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub label: String,
    pub mu: f64,
    /// Sample point for atoms produced by quadrature.
    pub point: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureKind {
    Discrete,
    /// Composite midpoint rule on `[a, b]` with `n` cells.
    Midpoint { a: f64, b: f64, n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpace {
    atoms: Vec<Atom>,
    kind: MeasureKind,
}

impl MeasureSpace {
    /// A discrete measure from `(label, mass)` pairs.
    pub fn discrete<S: Into<String>>(atoms: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|(label, mu)| Atom { label: label.into(), mu, point: None })
            .collect();
        Self::from_atoms(atoms, MeasureKind::Discrete)
    }

    fn from_atoms(atoms: Vec<Atom>, kind: MeasureKind) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("at least one atom is required".into()));
        }
        if let Some(a) = atoms.iter().find(|a| !(a.mu.is_finite() && a.mu > 0.0)) {
            return Err(Error::InvalidMeasure(format!("atom {:?} has non-positive mass {}", a.label, a.mu)));
        }
        Ok(Self { atoms, kind })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn masses(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.mu)
    }

    /// Sum of the atom masses in list order.
    pub fn total_mass(&self) -> f64 {
        self.masses().sum()
    }

    /// `Σ μ_x g(x)` in atom order.
    pub fn integrate(&self, g: impl Fn(&Atom) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.mu * g(a)).sum()
    }
}

/// Composite midpoint rule on `[a, b]`: atoms at `a + (i + ½)h`, each of mass `h = (b − a)/n`.
pub fn discretize_interval(a: f64, b: f64, n: usize) -> Result<MeasureSpace> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidInterval { a, b });
    }
    if n == 0 {
        return Err(Error::InvalidMeasure("quadrature needs n >= 1 cells".into()));
    }
    let h = (b - a) / n as f64;
    let atoms = (0..n)
        .map(|i| {
            let x = a + (i as f64 + 0.5) * h;
            Atom { label: format!("{x}"), mu: h, point: Some(x) }
        })
        .collect();
    MeasureSpace::from_atoms(atoms, MeasureKind::Midpoint { a, b, n })
}

/// `n` atoms of unit mass labelled `0..n`.
pub fn counting_measure(n: usize) -> Result<MeasureSpace> {
    MeasureSpace::discrete((0..n).map(|i| (i.to_string(), 1.0)))
}

/// Positive weight `v(x)` per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    values: Vec<f64>,
}

impl WeightFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidWeight(format!("weight {i} is {v}, must be positive and finite")));
        }
        Ok(Self { values })
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    /// Evaluates `v` on each atom of `measure`.
    pub fn from_fn(measure: &MeasureSpace, v: impl Fn(&Atom) -> f64) -> Result<Self> {
        Self::new(measure.atoms().iter().map(v).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Multiplies every weight by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * factor).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_atoms() {
        let m = discretize_interval(0.0, 1.0, 1).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.atoms()[0].point, Some(0.5));
        assert_eq!(m.atoms()[0].mu, 1.0);

        let m = discretize_interval(0.0, 1.0, 2).unwrap();
        let pts: Vec<f64> = m.atoms().iter().map(|a| a.point.unwrap()).collect();
        assert_eq!(pts, vec![0.25, 0.75]);
        assert!(m.masses().all(|mu| mu == 0.5));
    }

    #[test]
    fn invalid_interval() {
        assert!(matches!(discretize_interval(1.0, 1.0, 4), Err(Error::InvalidInterval { .. })));
        assert!(matches!(discretize_interval(2.0, 1.0, 4), Err(Error::InvalidInterval { .. })));
        assert!(discretize_interval(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn midpoint_is_second_order() {
        let exact = 2.0 / std::f64::consts::PI;
        let err = |n: usize| {
            let m = discretize_interval(0.0, 1.0, n).unwrap();
            (m.integrate(|a| (std::f64::consts::PI * a.point.unwrap()).sin()) - exact).abs()
        };
        for n in [4, 8, 16, 32] {
            let ratio = err(n) / err(2 * n);
            assert!((3.5..=4.5).contains(&ratio), "n={n} ratio={ratio}");
        }
    }

    #[test]
    fn total_mass_dyadic_is_exact() {
        for (a, b) in [(0.0, 1.0), (-2.0, 3.0), (0.25, 0.75)] {
            for n in [1, 2, 4, 8, 64, 1024] {
                assert_eq!(discretize_interval(a, b, n).unwrap().total_mass(), b - a);
            }
        }
    }

    #[test]
    fn total_mass_general_n() {
        for n in [3, 7, 10, 49, 100] {
            let m = discretize_interval(0.0, 1.0, n).unwrap();
            assert!((m.total_mass() - 1.0).abs() <= 1e-14, "n={n}");
        }
    }

    #[test]
    fn refinement_halves_mesh() {
        let coarse = discretize_interval(-1.0, 2.0, 6).unwrap();
        let fine = discretize_interval(-1.0, 2.0, 12).unwrap();
        assert_eq!(fine.atoms()[0].mu * 2.0, coarse.atoms()[0].mu);
        assert!(fine.masses().all(|m| m > 0.0));
    }

    #[test]
    fn counting() {
        let m = counting_measure(3).unwrap();
        assert_eq!(m.len(), 3);
        assert!(m.masses().all(|mu| mu == 1.0));
        assert_eq!(counting_measure(1).unwrap().len(), 1);
        assert!(counting_measure(0).is_err());
    }

    #[test]
    fn weights_validated() {
        assert!(WeightFunction::new(vec![1.0, 0.0]).is_err());
        assert!(WeightFunction::new(vec![1.0, f64::NAN]).is_err());
        assert!(WeightFunction::new(vec![1.0, 2.0]).is_ok());
        assert!(MeasureSpace::discrete([("a", -1.0)]).is_err());
    }
}
