//! Admissible nonlinearities: dissipative (f(u).u >= -C), monotone up to a
//! defect (f'(u) >= -K in the quadratic-form sense), polynomial growth.

mod approx;
pub mod builtins;
mod certify;
mod field_ops;

pub use approx::{approximate, ApproxSpec};
pub use builtins::{builtin, Builtin};
pub use certify::{verify_constants, CertReport, Margin};
pub use field_ops::{
    apply_pointwise, eval_on_field, eval_on_field_with_factor, f_l2_sq, fu_dot_u_abs,
    grad_quadratic_form, ibp_pair, jac_quadratic_form,
};

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Pointwise vector field R^k -> R^k with Jacobian.
pub trait VectorField: Send + Sync {
    fn components(&self) -> usize;
    fn eval(&self, u: &[f64], out: &mut [f64]);
    /// Row-major k x k Jacobian at u.
    fn jacobian(&self, u: &[f64], out: &mut [f64]);
}

/// Certified convexity sandwich: C2 (Psi(u) - 1 - |u|^2) <= |f(u)|^2 <= C1 (Psi(u) + |u|^2 + 1)
/// for a convex Psi.
#[derive(Clone)]
pub struct ConvexityCert {
    pub psi: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub c1: f64,
    pub c2: f64,
}

impl fmt::Debug for ConvexityCert {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvexityCert")
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .finish()
    }
}

/// A nonlinearity together with its certified constants.
#[derive(Clone)]
pub struct NonlinearSpec {
    pub k: usize,
    /// C in f(u).u >= -C.
    pub dissipativity: f64,
    /// K in f'(u) >= -K.
    pub monotonicity_defect: f64,
    /// Growth exponent p in |f(u)| <= C_g (1 + |u|^p).
    pub growth_exponent: f64,
    pub growth_constant: f64,
    /// Optional C with |f'(u)| <= C (1 + |f(u)| + |u|).
    pub fprime_cert: Option<f64>,
    pub convexity_cert: Option<ConvexityCert>,
    pub name: String,
    func: Arc<dyn VectorField>,
}

impl fmt::Debug for NonlinearSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearSpec")
            .field("name", &self.name)
            .field("k", &self.k)
            .field("C", &self.dissipativity)
            .field("K", &self.monotonicity_defect)
            .field("p", &self.growth_exponent)
            .finish()
    }
}

impl NonlinearSpec {
    pub fn new(
        name: impl Into<String>,
        func: Arc<dyn VectorField>,
        dissipativity: f64,
        monotonicity_defect: f64,
        growth_exponent: f64,
        growth_constant: f64,
    ) -> Result<Self> {
        if dissipativity < 0.0 || monotonicity_defect < 0.0 {
            return Err(Error::Argument("certified constants C, K must be nonnegative".into()));
        }
        if growth_exponent < 1.0 {
            return Err(Error::Argument(format!(
                "growth exponent must be >= 1, got {growth_exponent}"
            )));
        }
        Ok(NonlinearSpec {
            k: func.components(),
            dissipativity,
            monotonicity_defect,
            growth_exponent,
            growth_constant,
            fprime_cert: None,
            convexity_cert: None,
            name: name.into(),
            func,
        })
    }

    pub fn with_fprime_cert(mut self, c: f64) -> Self {
        self.fprime_cert = Some(c);
        self
    }

    pub fn with_convexity_cert(mut self, cert: ConvexityCert) -> Self {
        self.convexity_cert = Some(cert);
        self
    }

    pub fn eval(&self, u: &[f64], out: &mut [f64]) {
        self.func.eval(u, out)
    }

    pub fn jacobian(&self, u: &[f64], out: &mut [f64]) {
        self.func.jacobian(u, out)
    }

    pub fn eval_vec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        self.eval(u, &mut out);
        out
    }

    /// Linear nonlinearity f(u) = A u (test and oracle use).
    pub fn linear(a: nalgebra::DMatrix<f64>) -> Result<Self> {
        let k = a.nrows();
        if a.ncols() != k {
            return Err(Error::Argument("linear nonlinearity needs a square matrix".into()));
        }
        let sym = (&a + a.transpose()).scale(0.5);
        let eig = sym.symmetric_eigenvalues();
        let min_eig = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let defect = (-min_eig).max(0.0);
        let norm = a.norm();
        let func = Arc::new(LinearField { a });
        // f(u).u >= min_eig |u|^2; on all of R^k that is only bounded below
        // when min_eig >= 0, so the certified C is 0 in that case.
        let c = if min_eig >= 0.0 { 0.0 } else { f64::INFINITY };
        let mut spec = NonlinearSpec {
            k,
            dissipativity: if c.is_finite() { c } else { 0.0 },
            monotonicity_defect: defect,
            growth_exponent: 1.0,
            growth_constant: norm,
            fprime_cert: Some(norm),
            convexity_cert: None,
            name: "linear".into(),
            func,
        };
        if !c.is_finite() {
            // Indefinite linear maps are still usable numerically; the
            // dissipativity certificate is simply not claimed.
            spec.dissipativity = 0.0;
        }
        Ok(spec)
    }
}

struct LinearField {
    a: nalgebra::DMatrix<f64>,
}

impl VectorField for LinearField {
    fn components(&self) -> usize {
        self.a.nrows()
    }

    fn eval(&self, u: &[f64], out: &mut [f64]) {
        let k = self.components();
        for i in 0..k {
            let mut acc = 0.0;
            for j in 0..k {
                acc += self.a[(i, j)] * u[j];
            }
            out[i] = acc;
        }
    }

    fn jacobian(&self, _u: &[f64], out: &mut [f64]) {
        let k = self.components();
        for i in 0..k {
            for j in 0..k {
                out[i * k + j] = self.a[(i, j)];
            }
        }
    }
}
