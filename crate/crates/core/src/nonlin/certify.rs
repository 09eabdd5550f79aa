//! Empirical certification of nonlinearity constants by deterministic
//! sampling over a ball.

use nalgebra::DMatrix;

use super::NonlinearSpec;
use crate::error::{Error, Result};
use crate::rng::Kronecker;

/// Minimum margin of one certified inequality together with the sample point
/// attaining it. A certified inequality holds on the sample set iff its
/// margin is >= -tol.
#[derive(Debug, Clone)]
pub struct Margin {
    pub value: f64,
    pub witness: Vec<f64>,
}

impl Margin {
    fn tracking() -> Self {
        Margin {
            value: f64::INFINITY,
            witness: Vec::new(),
        }
    }

    fn update(&mut self, value: f64, u: &[f64]) {
        if value < self.value {
            self.value = value;
            self.witness = u.to_vec();
        }
    }
}

/// Result of `verify_constants`.
#[derive(Debug, Clone)]
pub struct CertReport {
    /// min over samples of f(u).u + C
    pub dissipativity: Margin,
    /// min over samples of (lowest eigenvalue of sym f'(u)) + K
    pub monotonicity: Margin,
    /// min over samples of C_g (1 + |u|^p) - |f(u)|
    pub growth: Margin,
    /// min over samples of C_fp (1 + |f(u)| + |u|) - |f'(u)| (spectral norm)
    pub fprime: Option<Margin>,
    /// min over samples of |f(u)|^2 - C2 (Psi(u) - 1 - |u|^2)
    pub convexity_lower: Option<Margin>,
    /// min over samples of C1 (Psi(u) + |u|^2 + 1) - |f(u)|^2
    pub convexity_upper: Option<Margin>,
    /// max over samples of |f(u)| / (1 + |u|^p): the tightest growth
    /// constant supported by the sample set.
    pub fitted_growth_constant: f64,
    pub pass: bool,
    pub tol: f64,
    pub seed: u64,
    pub n_samples: usize,
    pub box_radius: f64,
}

/// Check every certified inequality of `spec` on a deterministic sample set:
/// a low-discrepancy sequence over the ball |u| <= M, the coordinate axes
/// and the origin. Report-only; never fails on content.
pub fn verify_constants(
    spec: &NonlinearSpec,
    box_radius: f64,
    samples: usize,
    seed: u64,
) -> Result<CertReport> {
    if !(box_radius.is_finite() && box_radius > 0.0) {
        return Err(Error::Argument(format!("box radius must be positive, got {box_radius}")));
    }
    if samples < 1 {
        return Err(Error::Argument("need at least one sample".into()));
    }
    let k = spec.k;
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(samples + 8 * k + 1);
    points.push(vec![0.0; k]);
    for axis in 0..k {
        for j in 1..=4 {
            let r = box_radius * j as f64 / 4.0;
            for sign in [-1.0, 1.0] {
                let mut u = vec![0.0; k];
                u[axis] = sign * r;
                points.push(u);
            }
        }
    }
    let mut seq = Kronecker::new(k, seed);
    let mut raw = vec![0.0; k];
    let mut guard = 0usize;
    while points.len() < samples + 8 * k + 1 {
        seq.next_point(&mut raw);
        let u: Vec<f64> = raw.iter().map(|x| (2.0 * x - 1.0) * box_radius).collect();
        let r2: f64 = u.iter().map(|x| x * x).sum();
        if r2 <= box_radius * box_radius {
            points.push(u);
        }
        guard += 1;
        if guard > 400 * samples + 10_000 {
            break;
        }
    }

    let c = spec.dissipativity;
    let kk = spec.monotonicity_defect;
    let p = spec.growth_exponent;
    let cg = spec.growth_constant;

    let mut dis = Margin::tracking();
    let mut mono = Margin::tracking();
    let mut growth = Margin::tracking();
    let mut fprime = spec.fprime_cert.map(|_| Margin::tracking());
    let mut conv_lo = spec.convexity_cert.as_ref().map(|_| Margin::tracking());
    let mut conv_hi = spec.convexity_cert.as_ref().map(|_| Margin::tracking());

    let mut f = vec![0.0; k];
    let mut jac = vec![0.0; k * k];
    let mut scale: f64 = 0.0;
    let mut fitted_cg: f64 = 0.0;

    for u in &points {
        spec.eval(u, &mut f);
        spec.jacobian(u, &mut jac);
        let unorm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let fnorm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        let fu: f64 = f.iter().zip(u).map(|(a, b)| a * b).sum();

        dis.update(fu + c, u);

        let min_eig = if k == 1 {
            jac[0]
        } else {
            let m = DMatrix::from_row_slice(k, k, &jac);
            let sym = (&m + m.transpose()).scale(0.5);
            sym.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
        };
        mono.update(min_eig + kk, u);

        let bound = cg * (1.0 + unorm.powf(p));
        growth.update(bound - fnorm, u);
        fitted_cg = fitted_cg.max(fnorm / (1.0 + unorm.powf(p)));
        scale = scale.max(fu.abs()).max(bound).max(min_eig.abs());

        if let (Some(m), Some(cfp)) = (fprime.as_mut(), spec.fprime_cert) {
            let jnorm = if k == 1 {
                jac[0].abs()
            } else {
                DMatrix::from_row_slice(k, k, &jac).norm()
            };
            let lim = cfp * (1.0 + fnorm + unorm);
            m.update(lim - jnorm, u);
            scale = scale.max(lim);
        }
        if let Some(cert) = &spec.convexity_cert {
            let psi = (cert.psi)(u);
            let fsq = fnorm * fnorm;
            let usq = unorm * unorm;
            if let Some(m) = conv_lo.as_mut() {
                m.update(fsq - cert.c2 * (psi - 1.0 - usq), u);
            }
            if let Some(m) = conv_hi.as_mut() {
                m.update(cert.c1 * (psi + usq + 1.0) - fsq, u);
            }
            scale = scale.max(fsq).max(cert.c1 * (psi + usq + 1.0).abs());
        }
    }

    let tol = 1e-9 * (1.0 + scale);
    let mut pass = dis.value >= -tol && mono.value >= -tol && growth.value >= -tol;
    if let Some(m) = &fprime {
        pass &= m.value >= -tol;
    }
    if let Some(m) = &conv_lo {
        pass &= m.value >= -tol;
    }
    if let Some(m) = &conv_hi {
        pass &= m.value >= -tol;
    }

    Ok(CertReport {
        dissipativity: dis,
        monotonicity: mono,
        growth,
        fprime,
        convexity_lower: conv_lo,
        convexity_upper: conv_hi,
        fitted_growth_constant: fitted_cg,
        pass,
        tol,
        seed,
        n_samples: points.len(),
        box_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlin::builtins::{cubic_scalar, ginzburg_landau};

    #[test]
    fn cubic_with_exact_constants_passes() {
        let spec = cubic_scalar(1.0).unwrap();
        let rep = verify_constants(&spec, 10.0, 500, 1).unwrap();
        assert!(rep.pass, "margins: {:?}", rep);
        assert!(rep.dissipativity.value >= 0.0);
        assert!(rep.monotonicity.value >= 0.0);
    }

    #[test]
    fn understated_defect_fails_with_witness_near_zero() {
        let mut spec = cubic_scalar(1.0).unwrap();
        spec.monotonicity_defect = 0.5; // claim K = 0.5, true defect is 1 at u = 0
        let rep = verify_constants(&spec, 10.0, 500, 1).unwrap();
        assert!(!rep.pass);
        assert!(rep.monotonicity.value < -rep.tol);
        assert!(rep.monotonicity.witness[0].abs() < 0.5, "witness {:?}", rep.monotonicity.witness);
    }

    #[test]
    fn ginzburg_landau_with_sampled_convexity_passes() {
        let spec = ginzburg_landau().unwrap();
        assert!(spec.convexity_cert.is_some());
        let rep = verify_constants(&spec, 10.0, 500, 7).unwrap();
        assert!(rep.pass, "{:?}", rep);
    }

    #[test]
    fn rejects_degenerate_arguments() {
        let spec = cubic_scalar(1.0).unwrap();
        assert!(verify_constants(&spec, 0.0, 10, 1).is_err());
        assert!(verify_constants(&spec, 1.0, 0, 1).is_err());
    }
}
