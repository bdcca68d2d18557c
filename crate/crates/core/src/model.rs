//! Problem instances: coefficients, power-law loss terms, initial data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Loss term `F(z) = kappa * z^p` with `kappa > 0`, `p > 1`.
///
/// Every member of the family vanishes together with its derivative at the
/// origin and has `F(z)/z = kappa * z^(p-1)` strictly increasing and unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct NonlinearitySpec<T = f64> {
    pub kappa: T,
    pub p: T,
}

impl<T: Real> NonlinearitySpec<T> {
    pub fn new(kappa: T, p: T) -> Self {
        Self { kappa, p }
    }

    /// `z^2`.
    pub fn quadratic() -> Self {
        Self::new(T::one(), T::lit(2.0))
    }

    /// `(F(z), F'(z))` for `z >= 0`.
    pub fn eval(&self, z: T) -> Result<(T, T)> {
        if !(z >= T::zero()) {
            return Err(Error::Domain(format!("loss evaluated at negative density {z}")));
        }
        Ok((self.value(z), self.derivative(z)))
    }

    /// `F(z)`; negative arguments are treated as 0.
    #[inline]
    pub fn value(&self, z: T) -> T {
        if z <= T::zero() {
            T::zero()
        } else {
            self.kappa * z.powf(self.p)
        }
    }

    /// `F'(z)`; negative arguments are treated as 0.
    #[inline]
    pub fn derivative(&self, z: T) -> T {
        if z <= T::zero() {
            T::zero()
        } else {
            self.kappa * self.p * z.powf(self.p - T::one())
        }
    }

    /// `F(z)/z`, extended by its limit 0 at the origin.
    #[inline]
    pub fn ratio(&self, z: T) -> T {
        if z <= T::zero() {
            T::zero()
        } else {
            self.kappa * z.powf(self.p - T::one())
        }
    }

    fn violations(&self, name: &str, out: &mut Vec<String>) {
        if !(self.kappa > T::zero()) || !self.kappa.is_finite() {
            out.push(format!("{name}: amplitude kappa must be positive (got {})", self.kappa));
        }
        if !(self.p > T::one()) || !self.p.is_finite() {
            out.push(format!("{name}: exponent must exceed 1 (got {})", self.p));
        }
    }
}

/// `(F(z), F'(z))` of a loss term. Fails on negative `z`.
pub fn eval_loss<T: Real>(spec: &NonlinearitySpec<T>, zeta: T) -> Result<(T, T)> {
    spec.eval(zeta)
}

/// Coefficients of the two-species system with Stefan fronts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ModelParams<T = f64> {
    pub d1: T,
    pub d2: T,
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
    pub mu: T,
    pub rho: T,
    #[serde(rename = "F_spec")]
    pub f_spec: NonlinearitySpec<T>,
    #[serde(rename = "G_spec")]
    pub g_spec: NonlinearitySpec<T>,
}

impl<T: Real> ModelParams<T> {
    /// The reference instance: unit diffusion and mortality, cooperation 2,
    /// quadratic losses, `mu = rho = 1`.
    pub fn reference() -> Self {
        let one = T::one();
        let two = T::lit(2.0);
        Self {
            d1: one,
            d2: one,
            a: one,
            b: two,
            c: two,
            d: one,
            mu: one,
            rho: one,
            f_spec: NonlinearitySpec::quadratic(),
            g_spec: NonlinearitySpec::quadratic(),
        }
    }

    /// `bc - ad`; positive exactly when the cooperative coupling can sustain
    /// a positive equilibrium.
    pub fn cooperation_margin(&self) -> T {
        self.b * self.c - self.a * self.d
    }

    /// Spatially homogeneous right-hand side.
    #[inline]
    pub fn reaction(&self, u: T, v: T) -> (T, T) {
        (
            -self.a * u + self.b * v - self.f_spec.value(u),
            self.c * u - self.d * v - self.g_spec.value(v),
        )
    }

    /// Same system with mortality rates shifted, as appears in the
    /// linearisation at the positive equilibrium.
    pub fn with_shifted_mortality(&self, da: T, dd: T) -> Self {
        Self {
            a: self.a + da,
            d: self.d + dd,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.contains(needle))
    }
}

/// Lists every violated standing assumption. Never fails.
pub fn validate<T: Real>(params: &ModelParams<T>, require_h: bool) -> ValidationReport {
    let mut report = ValidationReport::default();
    let scalars = [
        ("d1", params.d1),
        ("d2", params.d2),
        ("a", params.a),
        ("b", params.b),
        ("c", params.c),
        ("d", params.d),
        ("mu", params.mu),
    ];
    for (name, value) in scalars {
        if !(value > T::zero()) || !value.is_finite() {
            report.violations.push(format!("{name} must be positive (got {value})"));
        }
    }
    // rho = 0 lets only the second species push the fronts
    if !(params.rho >= T::zero()) || !params.rho.is_finite() {
        report
            .violations
            .push(format!("rho must be nonnegative (got {})", params.rho));
    }
    params.f_spec.violations("F_spec", &mut report.violations);
    params.g_spec.violations("G_spec", &mut report.violations);
    for (name, spec) in [("F_spec", &params.f_spec), ("G_spec", &params.g_spec)] {
        if spec.p > T::one() && spec.p < T::lit(2.0) {
            report.warnings.push(format!(
                "{name}: exponent {} lies in (1,2); the loss is not twice differentiable at 0",
                spec.p
            ));
        }
    }
    if require_h {
        let margin = params.cooperation_margin();
        if !(margin > T::zero()) {
            report.violations.push(format!("bc−ad ≤ 0 (bc−ad = {margin})"));
        }
    }
    report
}

/// Initial densities sampled on a uniform grid over `[-h0, h0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct InitialData<T = f64> {
    pub h0: T,
    pub u0: Vec<T>,
    pub v0: Vec<T>,
}

impl<T: Real> InitialData<T> {
    /// Node positions, exactly symmetric about the origin.
    pub fn nodes(&self) -> Vec<T> {
        symmetric_nodes(self.h0, self.u0.len())
    }

    /// Checks vanishing endpoint values and interior positivity.
    pub fn check(&self) -> Result<()> {
        let n = self.u0.len();
        if !(self.h0 > T::zero()) {
            return Err(Error::Domain("h0 must be positive".into()));
        }
        if n < 3 || self.v0.len() != n {
            return Err(Error::Domain(
                "u0 and v0 need the same number of nodes (at least 3)".into(),
            ));
        }
        for (name, values) in [("u0", &self.u0), ("v0", &self.v0)] {
            if values[0] != T::zero() || values[n - 1] != T::zero() {
                return Err(Error::Domain(format!("{name} must vanish at ±h0")));
            }
            if let Some(i) = values[1..n - 1].iter().position(|&x| !(x > T::zero())) {
                return Err(Error::Domain(format!(
                    "{name} must be positive at interior node {}",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Piecewise-linear value at `x`, zero outside `[-h0, h0]`.
    pub fn sample(&self, x: T) -> (T, T) {
        let n = self.u0.len();
        if x <= -self.h0 || x >= self.h0 || n < 2 {
            return (T::zero(), T::zero());
        }
        let spacing = T::lit(2.0) * self.h0 / T::from_count(n - 1);
        let x0 = -self.h0;
        (
            crate::linalg::interp_uniform(x0, spacing, &self.u0, x),
            crate::linalg::interp_uniform(x0, spacing, &self.v0, x),
        )
    }

    pub fn sup_norms(&self) -> (T, T) {
        (crate::real::max_abs(&self.u0), crate::real::max_abs(&self.v0))
    }
}

pub(crate) fn symmetric_nodes<T: Real>(half_width: T, n: usize) -> Vec<T> {
    let last = n.saturating_sub(1).max(1);
    let denom = T::from_count(last);
    (0..n)
        .map(|i| {
            let k = 2.0 * i as f64 - last as f64;
            half_width * T::lit(k) / denom
        })
        .collect()
}

/// Cosine bump `amp * cos(pi x / (2 h0))` on `n` uniform nodes.
pub fn make_initial_preset<T: Real>(
    h0: T,
    amp_u: T,
    amp_v: T,
    n: usize,
) -> Result<InitialData<T>> {
    if !(h0 > T::zero()) || !(amp_u > T::zero()) || !(amp_v > T::zero()) {
        return Err(Error::Domain(
            "preset needs positive half-width and amplitudes".into(),
        ));
    }
    if n < 3 {
        return Err(Error::Domain("preset needs at least 3 nodes".into()));
    }
    let nodes = symmetric_nodes(h0, n);
    let shape: Vec<T> = nodes
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if i == 0 || i == n - 1 {
                T::zero()
            } else {
                (T::pi() * x / (T::lit(2.0) * h0)).cos()
            }
        })
        .collect();
    Ok(InitialData {
        h0,
        u0: shape.iter().map(|&s| amp_u * s).collect(),
        v0: shape.iter().map(|&s| amp_v * s).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = ModelParams<f64>;

    #[test]
    fn reference_is_valid() {
        let report = validate(&P::reference(), true);
        assert!(report.is_valid(), "{report:?}");
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn weak_cooperation_violates_h() {
        let mut p = P::reference();
        p.b = 0.5;
        p.c = 0.5;
        let report = validate(&p, true);
        assert!(report.mentions("bc−ad ≤ 0"), "{report:?}");
        assert!(report.mentions("-0.75"));
        assert!(validate(&p, false).is_valid());
    }

    #[test]
    fn linear_loss_is_rejected() {
        let mut p = P::reference();
        p.f_spec.p = 1.0;
        let report = validate(&p, true);
        assert!(report.mentions("exponent must exceed 1"));
    }

    #[test]
    fn every_bad_field_is_reported() {
        let mut p = P::reference();
        p.d1 = 0.0;
        p.mu = -1.0;
        p.g_spec.kappa = 0.0;
        let report = validate(&p, false);
        assert_eq!(report.violations.len(), 3, "{report:?}");
    }

    #[test]
    fn subquadratic_exponent_warns() {
        let mut p = P::reference();
        p.g_spec.p = 1.5;
        let report = validate(&p, true);
        assert!(report.is_valid());
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn loss_values() {
        let sq = NonlinearitySpec::<f64>::quadratic();
        assert_eq!(eval_loss(&sq, 0.0).unwrap(), (0.0, 0.0));
        assert_eq!(eval_loss(&sq, 3.0).unwrap(), (9.0, 6.0));
        let cubic = NonlinearitySpec::new(2.0, 3.0);
        assert_eq!(eval_loss(&cubic, 1.0).unwrap(), (2.0, 6.0));
        assert!(matches!(eval_loss(&sq, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn presets() {
        let d = make_initial_preset(1.0, 0.5, 0.5, 5).unwrap();
        assert_eq!(d.u0[0], 0.0);
        assert_eq!(d.u0[4], 0.0);
        assert_eq!(d.u0[2], 0.5);
        d.check().unwrap();

        let d = make_initial_preset(2.0, 1.0, 1.0, 3).unwrap();
        assert_eq!(d.nodes(), vec![-2.0, 0.0, 2.0]);
        assert_eq!(d.u0, vec![0.0, 1.0, 0.0]);

        let d = make_initial_preset(0.5, 0.1, 0.2, 5).unwrap();
        d.check().unwrap();
        assert!(d.u0[1..4].iter().all(|&x| x > 0.0));
        assert_ne!(d.u0, d.v0);

        assert!(make_initial_preset(0.0, 1.0, 1.0, 5).is_err());
        assert!(make_initial_preset(1.0, -1.0, 1.0, 5).is_err());
        assert!(make_initial_preset(1.0, 1.0, 1.0, 2).is_err());
    }

    #[test]
    fn zero_stefan_weight_is_admissible() {
        assert!(validate(&P { rho: 0.0, ..P::reference() }, true).is_valid());
        let report = validate(&P { rho: -0.1, ..P::reference() }, true);
        assert!(report.mentions("rho must be nonnegative"));
    }

    #[test]
    fn json_field_names() {
        let json = serde_json::to_value(P::reference()).unwrap();
        for key in ["d1", "d2", "a", "b", "c", "d", "mu", "rho", "F_spec", "G_spec"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["F_spec"]["kappa"], 1.0);
        let back: P = serde_json::from_value(json).unwrap();
        assert_eq!(back, P::reference());
    }

    #[test]
    fn single_precision_instance() {
        let p = ModelParams::<f32>::reference();
        assert!(validate(&p, true).is_valid());
        assert_eq!(p.f_spec.eval(3.0f32).unwrap(), (9.0, 6.0));
    }
}
