//! Built-in nonlinearities with analytically derived constants.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ConvexityCert, NonlinearSpec, VectorField};
use crate::error::{Error, Result};
use crate::rng::Kronecker;

/// Selection of a built-in nonlinearity. Serializes to the experiment-config
/// shape {"name": ..., "params": {...}}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum Builtin {
    /// f(u) = u^3 - lambda u, scalar. C = lambda^2/4, K = lambda.
    CubicScalar { lambda: f64 },
    /// f(u) = (|u|^2 - 1) u on R^2. C = 1/4, K = 1.
    GinzburgLandau,
    /// f(u) = u^p for odd integer p. C = K = 0.
    PolynomialOdd { p: u32 },
    /// f(u) = |u|^(p-1) u, scalar, growth p chosen against dimension d.
    SupercriticalMonotone { p: f64, d: usize },
}

impl Builtin {
    pub fn build(&self) -> Result<NonlinearSpec> {
        builtin(self)
    }
}

pub fn builtin(which: &Builtin) -> Result<NonlinearSpec> {
    match *which {
        Builtin::CubicScalar { lambda } => cubic_scalar(lambda),
        Builtin::GinzburgLandau => ginzburg_landau(),
        Builtin::PolynomialOdd { p } => polynomial_odd(p),
        Builtin::SupercriticalMonotone { p, d } => supercritical_monotone(p, d),
    }
}

struct CubicScalarField {
    lambda: f64,
}

impl VectorField for CubicScalarField {
    fn components(&self) -> usize {
        1
    }
    fn eval(&self, u: &[f64], out: &mut [f64]) {
        out[0] = u[0] * u[0] * u[0] - self.lambda * u[0];
    }
    fn jacobian(&self, u: &[f64], out: &mut [f64]) {
        out[0] = 3.0 * u[0] * u[0] - self.lambda;
    }
}

/// f(u) = u^3 - lambda u. f(u) u = u^4 - lambda u^2 >= -lambda^2/4 and
/// f'(u) = 3u^2 - lambda >= -lambda.
pub fn cubic_scalar(lambda: f64) -> Result<NonlinearSpec> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::config("nonlinearity.params.lambda", format!("must be >= 0, got {lambda}")));
    }
    let spec = NonlinearSpec::new(
        format!("cubic_scalar({lambda})"),
        Arc::new(CubicScalarField { lambda }),
        lambda * lambda / 4.0,
        lambda,
        3.0,
        1.0 + lambda,
    )?;
    let psi: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> = Arc::new(|u: &[f64]| {
        let z: f64 = u.iter().map(|x| x * x).sum();
        z * z * z
    });
    let (c1, c2) = fit_convexity(&spec, &psi, 20.0);
    Ok(spec
        .with_fprime_cert(3.0 * (lambda.sqrt() + 1.0).powi(2) + lambda + 3.0)
        .with_convexity_cert(ConvexityCert { psi, c1, c2 }))
}

struct GinzburgLandauField;

impl VectorField for GinzburgLandauField {
    fn components(&self) -> usize {
        2
    }
    fn eval(&self, u: &[f64], out: &mut [f64]) {
        let z = u[0] * u[0] + u[1] * u[1] - 1.0;
        out[0] = z * u[0];
        out[1] = z * u[1];
    }
    fn jacobian(&self, u: &[f64], out: &mut [f64]) {
        let z = u[0] * u[0] + u[1] * u[1] - 1.0;
        out[0] = z + 2.0 * u[0] * u[0];
        out[1] = 2.0 * u[0] * u[1];
        out[2] = 2.0 * u[1] * u[0];
        out[3] = z + 2.0 * u[1] * u[1];
    }
}

/// f(u) = (|u|^2 - 1) u on R^2. f(u).u = (|u|^2-1)|u|^2 >= -1/4;
/// sym f' = (|u|^2-1) I + 2 u u^T >= -I.
pub fn ginzburg_landau() -> Result<NonlinearSpec> {
    let spec = NonlinearSpec::new(
        "ginzburg_landau",
        Arc::new(GinzburgLandauField),
        0.25,
        1.0,
        3.0,
        2.0,
    )?;
    let psi: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> = Arc::new(|u: &[f64]| {
        let z: f64 = u.iter().map(|x| x * x).sum();
        z * z * z
    });
    let (c1, c2) = fit_convexity(&spec, &psi, 20.0);
    Ok(spec
        .with_fprime_cert(12.0)
        .with_convexity_cert(ConvexityCert { psi, c1, c2 }))
}

struct PolynomialOddField {
    p: u32,
}

impl VectorField for PolynomialOddField {
    fn components(&self) -> usize {
        1
    }
    fn eval(&self, u: &[f64], out: &mut [f64]) {
        out[0] = u[0].powi(self.p as i32);
    }
    fn jacobian(&self, u: &[f64], out: &mut [f64]) {
        out[0] = self.p as f64 * u[0].powi(self.p as i32 - 1);
    }
}

/// f(u) = u^p for odd p: u^(p+1) >= 0 and p u^(p-1) >= 0 give C = K = 0.
pub fn polynomial_odd(p: u32) -> Result<NonlinearSpec> {
    if p % 2 == 0 || p < 1 {
        return Err(Error::config("nonlinearity.params.p", format!("exponent must be odd and >= 1, got {p}")));
    }
    let pf = p as f64;
    let spec = NonlinearSpec::new(
        format!("polynomial_odd({p})"),
        Arc::new(PolynomialOddField { p }),
        0.0,
        0.0,
        pf.max(1.0),
        1.0,
    )?;
    let psi_p = p;
    let psi: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> = Arc::new(move |u: &[f64]| u[0].abs().powi(2 * psi_p as i32));
    Ok(spec
        .with_fprime_cert(pf)
        .with_convexity_cert(ConvexityCert { psi, c1: 1.0, c2: 1.0 }))
}

struct SupercriticalField {
    p: f64,
}

impl VectorField for SupercriticalField {
    fn components(&self) -> usize {
        1
    }
    fn eval(&self, u: &[f64], out: &mut [f64]) {
        out[0] = u[0].abs().powf(self.p - 1.0) * u[0];
    }
    fn jacobian(&self, u: &[f64], out: &mut [f64]) {
        out[0] = self.p * u[0].abs().powf(self.p - 1.0);
    }
}

/// f(u) = |u|^(p-1) u, scalar and strictly monotone; `d` records the space
/// dimension the growth is measured against (p > 1 + 4/(d-4) is the
/// supercritical regime for d > 4).
pub fn supercritical_monotone(p: f64, d: usize) -> Result<NonlinearSpec> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::config("nonlinearity.params.p", format!("growth must exceed 1, got {p}")));
    }
    if d < 1 {
        return Err(Error::config("nonlinearity.params.d", "dimension must be >= 1"));
    }
    let spec = NonlinearSpec::new(
        format!("supercritical_monotone(p={p},d={d})"),
        Arc::new(SupercriticalField { p }),
        0.0,
        0.0,
        p,
        1.0,
    )?;
    let pe = p;
    let psi: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> = Arc::new(move |u: &[f64]| u[0].abs().powf(2.0 * pe));
    Ok(spec
        .with_fprime_cert(p)
        .with_convexity_cert(ConvexityCert { psi, c1: 1.0, c2: 1.0 }))
}

/// Sampled envelope fit of the convexity sandwich constants, with a 10%
/// safety margin. Deterministic (fixed internal offset sequence).
fn fit_convexity(
    spec: &NonlinearSpec,
    psi: &Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    radius: f64,
) -> (f64, f64) {
    let k = spec.k;
    let mut seq = Kronecker::new(k, 0x5EED);
    let mut point = vec![0.0; k];
    let mut f = vec![0.0; k];
    let mut c1: f64 = 1e-12;
    let mut c2: f64 = f64::INFINITY;
    for _ in 0..4000 {
        seq.next_point(&mut point);
        let u: Vec<f64> = point.iter().map(|x| (2.0 * x - 1.0) * radius).collect();
        spec.eval(&u, &mut f);
        let fsq: f64 = f.iter().map(|x| x * x).sum();
        let usq: f64 = u.iter().map(|x| x * x).sum();
        let p = psi(&u);
        c1 = c1.max(fsq / (p + usq + 1.0));
        let denom = p - 1.0 - usq;
        if denom > 1e-9 {
            c2 = c2.min(fsq / denom);
        }
    }
    if !c2.is_finite() {
        c2 = 1.0;
    }
    (c1 * 1.1, (c2 * 0.9).max(1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cubic_constants_are_exact_minimizers() {
        // min of u^4 - u^2 is -1/4; min of 3u^2 - 1 is -1.
        let f = cubic_scalar(1.0).unwrap();
        assert_relative_eq!(f.dissipativity, 0.25);
        assert_relative_eq!(f.monotonicity_defect, 1.0);
        assert_relative_eq!(f.growth_exponent, 3.0);
    }

    #[test]
    fn ginzburg_landau_monotonicity_defect_is_one() {
        let f = ginzburg_landau().unwrap();
        assert_relative_eq!(f.monotonicity_defect, 1.0);
        // at u = 0 the Jacobian is -I
        let mut j = [0.0; 4];
        f.jacobian(&[0.0, 0.0], &mut j);
        assert_relative_eq!(j[0], -1.0);
        assert_relative_eq!(j[3], -1.0);
        assert_relative_eq!(j[1], 0.0);
    }

    #[test]
    fn quintic_is_unconditionally_monotone() {
        let f = polynomial_odd(5).unwrap();
        assert_relative_eq!(f.dissipativity, 0.0);
        assert_relative_eq!(f.monotonicity_defect, 0.0);
        assert_relative_eq!(f.growth_exponent, 5.0);
        let mut out = [0.0];
        f.eval(&[2.0], &mut out);
        assert_relative_eq!(out[0], 32.0);
    }

    #[test]
    fn even_polynomial_is_rejected() {
        assert!(polynomial_odd(4).is_err());
    }

    #[test]
    fn builtin_dispatch_matches_direct_constructors() {
        let a = Builtin::CubicScalar { lambda: 2.0 }.build().unwrap();
        assert_relative_eq!(a.dissipativity, 1.0);
        assert_relative_eq!(a.monotonicity_defect, 2.0);
        let b = Builtin::SupercriticalMonotone { p: 4.9, d: 5 }.build().unwrap();
        assert_relative_eq!(b.growth_exponent, 4.9);
    }

    #[test]
    fn builtin_selection_round_trips_through_json() {
        let b = Builtin::CubicScalar { lambda: 1.5 };
        let s = serde_json::to_string(&b).unwrap();
        assert!(s.contains("\"name\":\"cubic_scalar\""));
        let back: Builtin = serde_json::from_str(&s).unwrap();
        assert_eq!(b, back);
    }
}
