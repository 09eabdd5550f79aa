//! Spectral fields: k-component functions stored as sine-mode coefficients.

use serde::{Deserialize, Serialize};

use crate::dst::{apply_axis, table, TableKind};
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Dealiasing factor for pointwise nonlinear evaluation: nonlinearities are
/// evaluated on a grid this many times finer, then re-projected.
pub const DEALIAS_FACTOR: usize = 2;

/// A k-component function on the box, stored modally. The basis is the
/// orthonormal one, phi_m(x) = (2/L)^{d/2} prod_i sin(pi m_i x_i / L), so
/// Parseval holds with unit constant. Layout: component-major, C-order over
/// the multi-index (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    pub grid: Grid,
    pub coeffs: Vec<f64>,
}

/// Pointwise values of a field (or of a derived quantity) on a uniform grid.
/// `pts` points per axis; `closed` grids include both endpoints per axis.
#[derive(Debug, Clone)]
pub struct PhysicalField {
    pub grid: Grid,
    pub pts: usize,
    pub closed: bool,
    pub values: Vec<f64>,
}

impl PhysicalField {
    /// Grid spacing.
    pub fn h(&self) -> f64 {
        if self.closed {
            self.grid.len / (self.pts as f64 - 1.0)
        } else {
            self.grid.len / (self.pts as f64 + 1.0)
        }
    }

    pub fn points_total(&self) -> usize {
        self.pts.pow(self.grid.d as u32)
    }
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        SpectralField {
            grid,
            coeffs: vec![0.0; grid.coeff_len()],
        }
    }

    pub fn from_coeffs(grid: Grid, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != grid.coeff_len() {
            return Err(Error::Dimension(format!(
                "coefficient array has length {}, grid requires {}",
                coeffs.len(),
                grid.coeff_len()
            )));
        }
        Ok(SpectralField { grid, coeffs })
    }

    /// One basis mode with the given amplitude.
    pub fn single_mode(grid: Grid, component: usize, multi: &[usize], amp: f64) -> Result<Self> {
        if component >= grid.k {
            return Err(Error::Argument(format!("component {component} out of range")));
        }
        if multi.len() != grid.d || multi.iter().any(|&m| m < 1 || m > grid.n) {
            return Err(Error::Argument(format!("mode index {multi:?} out of range")));
        }
        let mut f = SpectralField::zeros(grid);
        let flat = grid.flat_index(multi);
        f.coeffs[component * grid.modes() + flat] = amp;
        Ok(f)
    }

    pub fn coeff(&self, component: usize, flat: usize) -> f64 {
        self.coeffs[component * self.grid.modes() + flat]
    }

    pub fn coeff_mut(&mut self, component: usize, flat: usize) -> &mut f64 {
        &mut self.coeffs[component * self.grid.modes() + flat]
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// self += s * other
    pub fn axpy(&mut self, s: f64, other: &SpectralField) {
        debug_assert!(self.grid.same_layout(&other.grid));
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    /// Modal inner product = L^2 inner product (Parseval).
    pub fn dot(&self, other: &SpectralField) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Apply a spectral multiplier c_m -> mul(lambda_m) c_m to every component.
    pub fn spectral_multiplier(&self, mul: impl Fn(f64) -> f64) -> SpectralField {
        let nd = self.grid.modes();
        let factors: Vec<f64> = (0..nd).map(|i| mul(self.grid.eigenvalue(i))).collect();
        let mut out = self.clone();
        for comp in 0..self.grid.k {
            let base = comp * nd;
            for i in 0..nd {
                out.coeffs[base + i] *= factors[i];
            }
        }
        out
    }

    /// (-Delta)^alpha via the spectral definition c_m -> lambda_m^alpha c_m.
    pub fn fractional_laplacian(&self, alpha: f64) -> Result<SpectralField> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::config("alpha", format!("fractional order must be positive, got {alpha}")));
        }
        Ok(self.spectral_multiplier(|l| l.powf(alpha)))
    }

    /// Laplacian: c_m -> -lambda_m c_m.
    pub fn laplacian(&self) -> SpectralField {
        self.spectral_multiplier(|l| -l)
    }

    /// Physical values at the interior collocation points of the grid itself.
    pub fn to_physical(&self) -> PhysicalField {
        self.to_physical_fine(1)
    }

    /// Physical values at the interior points of a `factor`-times finer grid
    /// (Nf = factor (N+1) - 1 points per axis).
    pub fn to_physical_fine(&self, factor: usize) -> PhysicalField {
        let g = &self.grid;
        let denom = factor * (g.n + 1);
        let pts = denom - 1;
        let tbl = table(TableKind::SinInterior, pts, g.n, denom);
        let scale = (2.0 / g.len).sqrt();
        let mut data = self.coeffs.clone();
        let mut len_done = 1usize;
        for axis in 0..g.d {
            let pre = g.k * len_done;
            let post = g.n.pow((g.d - 1 - axis) as u32);
            data = apply_axis(&data, pre, g.n, post, &tbl, pts, scale);
            len_done *= pts;
        }
        PhysicalField {
            grid: *g,
            pts,
            closed: false,
            values: data,
        }
    }

    /// Project interior physical values back onto the first N modes per axis.
    /// Exact inverse of `to_physical_fine` for band-limited data.
    pub fn from_physical_fine(grid: Grid, phys: &PhysicalField) -> Result<SpectralField> {
        if phys.closed {
            return Err(Error::Internal("projection expects interior-point values".into()));
        }
        let denom = phys.pts + 1;
        if phys.values.len() != grid.k * phys.points_total() {
            return Err(Error::Dimension(format!(
                "physical array has length {}, expected {}",
                phys.values.len(),
                grid.k * phys.points_total()
            )));
        }
        // Transposed interior table: modes x points.
        let fwd = table(TableKind::SinInterior, phys.pts, grid.n, denom);
        let mut tr = vec![0.0; grid.n * phys.pts];
        for j in 0..phys.pts {
            for m in 0..grid.n {
                tr[m * phys.pts + j] = fwd[j * grid.n + m];
            }
        }
        let scale = (grid.len / 2.0).sqrt() * 2.0 / denom as f64;
        let mut data = phys.values.clone();
        let mut len_done = 1usize;
        for axis in 0..grid.d {
            let pre = grid.k * len_done;
            let post = phys.pts.pow((grid.d - 1 - axis) as u32);
            data = apply_axis(&data, pre, phys.pts, post, &tr, grid.n, scale);
            len_done *= grid.n;
        }
        SpectralField::from_coeffs(grid, data)
    }

    /// Inverse of `to_physical` (matching point count).
    pub fn from_physical(grid: Grid, values: &[f64]) -> Result<SpectralField> {
        let phys = PhysicalField {
            grid,
            pts: grid.n,
            closed: false,
            values: values.to_vec(),
        };
        SpectralField::from_physical_fine(grid, &phys)
    }

    /// Values of the axis-`axis` first derivative on the closed fine grid
    /// (factor (N+1) + 1 points per axis including both endpoints).
    pub fn gradient_axis_closed(&self, axis: usize, factor: usize) -> PhysicalField {
        let g = &self.grid;
        let denom = factor * (g.n + 1);
        let pts = denom + 1;
        let sin_tbl = table(TableKind::SinClosed, pts, g.n, denom);
        let cos_tbl = table(TableKind::CosClosed, pts, g.n, denom);
        let scale = (2.0 / g.len).sqrt();
        // Pre-scale coefficients by the per-axis wavenumber pi m / L.
        let mut data = self.modal_axis_scaled(axis, |m| std::f64::consts::PI * m as f64 / g.len);
        let mut len_done = 1usize;
        for a in 0..g.d {
            let pre = g.k * len_done;
            let post = g.n.pow((g.d - 1 - a) as u32);
            let tbl = if a == axis { &cos_tbl } else { &sin_tbl };
            data = apply_axis(&data, pre, g.n, post, tbl, pts, scale);
            len_done *= pts;
        }
        PhysicalField {
            grid: *g,
            pts,
            closed: true,
            values: data,
        }
    }

    /// Values of d_i d_j u on the closed fine grid.
    pub fn hessian_closed(&self, i: usize, j: usize, factor: usize) -> PhysicalField {
        let g = &self.grid;
        let denom = factor * (g.n + 1);
        let pts = denom + 1;
        let sin_tbl = table(TableKind::SinClosed, pts, g.n, denom);
        let cos_tbl = table(TableKind::CosClosed, pts, g.n, denom);
        let scale = (2.0 / g.len).sqrt();
        let wave = |m: usize| std::f64::consts::PI * m as f64 / g.len;
        let mut data = if i == j {
            self.modal_axis_scaled(i, |m| -wave(m) * wave(m))
        } else {
            let tmp = self.modal_axis_scaled(i, wave);
            let tmp_field = SpectralField {
                grid: *g,
                coeffs: tmp,
            };
            tmp_field.modal_axis_scaled(j, wave)
        };
        let mut len_done = 1usize;
        for a in 0..g.d {
            let pre = g.k * len_done;
            let post = g.n.pow((g.d - 1 - a) as u32);
            let use_cos = i != j && (a == i || a == j);
            let tbl = if use_cos { &cos_tbl } else { &sin_tbl };
            data = apply_axis(&data, pre, g.n, post, tbl, pts, scale);
            len_done *= pts;
        }
        PhysicalField {
            grid: *g,
            pts,
            closed: true,
            values: data,
        }
    }

    /// Values of the field itself on the closed fine grid (zero at the boundary).
    pub fn values_closed(&self, factor: usize) -> PhysicalField {
        let g = &self.grid;
        let denom = factor * (g.n + 1);
        let pts = denom + 1;
        let sin_tbl = table(TableKind::SinClosed, pts, g.n, denom);
        let scale = (2.0 / g.len).sqrt();
        let mut data = self.coeffs.clone();
        let mut len_done = 1usize;
        for a in 0..g.d {
            let pre = g.k * len_done;
            let post = g.n.pow((g.d - 1 - a) as u32);
            data = apply_axis(&data, pre, g.n, post, &sin_tbl, pts, scale);
            len_done *= pts;
        }
        PhysicalField {
            grid: *g,
            pts,
            closed: true,
            values: data,
        }
    }

    /// Embed into a finer grid (same box, same components, N' >= N) by
    /// zero-padding the spectrum; the represented function is unchanged.
    pub fn embed(&self, target: Grid) -> Result<SpectralField> {
        if target.d != self.grid.d || target.k != self.grid.k {
            return Err(Error::Dimension("embedding must preserve dimension and components".into()));
        }
        if (target.len - self.grid.len).abs() > 1e-14 * self.grid.len {
            return Err(Error::Dimension("embedding must preserve the box size".into()));
        }
        if target.n < self.grid.n {
            return Err(Error::Dimension("embedding target must have at least as many modes".into()));
        }
        let mut out = SpectralField::zeros(target);
        let nd_src = self.grid.modes();
        for c in 0..self.grid.k {
            for m in 0..nd_src {
                let multi = self.grid.multi_index(m);
                let flat = target.flat_index(&multi[..target.d]);
                out.coeffs[c * target.modes() + flat] = self.coeffs[c * nd_src + m];
            }
        }
        Ok(out)
    }

    /// Coefficients scaled along one axis by f(m_axis); other axes untouched.
    fn modal_axis_scaled(&self, axis: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
        let g = &self.grid;
        let nd = g.modes();
        let mut out = self.coeffs.clone();
        let factors: Vec<f64> = (1..=g.n).map(f).collect();
        let post = g.n.pow((g.d - 1 - axis) as u32);
        for comp in 0..g.k {
            for flat in 0..nd {
                let m_axis = (flat / post) % g.n;
                out[comp * nd + flat] *= factors[m_axis];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn grid1() -> Grid {
        Grid::new(1, 1.0, 8, 1).unwrap()
    }

    #[test]
    fn zero_field_has_zero_values() {
        let f = SpectralField::zeros(grid1());
        let p = f.to_physical();
        assert!(p.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_mode_values_match_basis() {
        // c_1 = 1 in the orthonormal basis means u(x) = sqrt(2) sin(pi x).
        let g = grid1();
        let f = SpectralField::single_mode(g, 0, &[1], 1.0).unwrap();
        let p = f.to_physical();
        for j in 1..=g.n {
            let x = g.point(j);
            assert_relative_eq!(p.values[j - 1], (2.0_f64).sqrt() * (PI * x).sin(), epsilon = 1e-13);
        }
    }

    #[test]
    fn roundtrip_identity_within_tolerance() {
        let g = Grid::new(2, 1.5, 6, 2).unwrap();
        let mut rng = crate::rng::SplitMix64::new(3);
        let coeffs: Vec<f64> = (0..g.coeff_len()).map(|_| rng.next_normal()).collect();
        let f = SpectralField::from_coeffs(g, coeffs).unwrap();
        let p = f.to_physical();
        let back = SpectralField::from_physical(g, &p.values).unwrap();
        let diff = f.sub(&back).norm_l2();
        assert!(diff <= 1e-12 * f.norm_l2(), "roundtrip error {diff}");
    }

    #[test]
    fn fine_roundtrip_is_projection_identity() {
        let g = Grid::new(1, 2.0, 12, 1).unwrap();
        let mut rng = crate::rng::SplitMix64::new(11);
        let coeffs: Vec<f64> = (0..g.coeff_len()).map(|_| rng.next_normal()).collect();
        let f = SpectralField::from_coeffs(g, coeffs).unwrap();
        let p = f.to_physical_fine(4);
        let back = SpectralField::from_physical_fine(g, &p).unwrap();
        assert!(f.sub(&back).norm_l2() <= 1e-12 * f.norm_l2());
    }

    #[test]
    fn fractional_laplacian_special_orders() {
        let g = grid1();
        let f = SpectralField::single_mode(g, 0, &[1], 1.0).unwrap();
        // alpha = 1: ordinary Laplacian eigenvalue pi^2.
        let l1 = f.fractional_laplacian(1.0).unwrap();
        assert_relative_eq!(l1.coeff(0, 0), PI * PI, max_relative = 1e-14);
        // alpha = 0.5: sqrt(pi^2) = pi.
        let lh = f.fractional_laplacian(0.5).unwrap();
        assert_relative_eq!(lh.coeff(0, 0), PI, max_relative = 1e-14);
        // alpha = 2: pi^4.
        let l2 = f.fractional_laplacian(2.0).unwrap();
        assert_relative_eq!(l2.coeff(0, 0), PI.powi(4), max_relative = 1e-14);
    }

    #[test]
    fn fractional_laplacian_rejects_nonpositive_order() {
        let f = SpectralField::zeros(grid1());
        assert!(f.fractional_laplacian(0.0).is_err());
        assert!(f.fractional_laplacian(-1.0).is_err());
    }

    #[test]
    fn gradient_closed_matches_analytic() {
        // u = sqrt(2) sin(2 pi x) -> u' = 2 pi sqrt(2) cos(2 pi x), checked
        // at the boundary too (cosine does not vanish there).
        let g = grid1();
        let f = SpectralField::single_mode(g, 0, &[2], 1.0).unwrap();
        let p = f.gradient_axis_closed(0, 2);
        let h = p.h();
        for j in 0..p.pts {
            let x = j as f64 * h;
            let expect = 2.0 * PI * (2.0_f64).sqrt() * (2.0 * PI * x).cos();
            assert_relative_eq!(p.values[j], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixed_hessian_matches_analytic() {
        let g = Grid::new(2, 1.0, 6, 1).unwrap();
        let f = SpectralField::single_mode(g, 0, &[1, 2], 1.0).unwrap();
        let p = f.hessian_closed(0, 1, 2);
        let h = p.h();
        // u = 2 sin(pi x) sin(2 pi y); d_x d_y u = 2 * pi * 2pi cos(pi x) cos(2 pi y)
        for jx in 0..p.pts {
            for jy in 0..p.pts {
                let (x, y) = (jx as f64 * h, jy as f64 * h);
                let expect = 2.0 * PI * 2.0 * PI * (PI * x).cos() * (2.0 * PI * y).cos();
                let got = p.values[jx * p.pts + jy];
                assert_relative_eq!(got, expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn serialized_field_uses_the_wire_schema() {
        let g = Grid::new(2, 1.5, 2, 2).unwrap();
        let f = SpectralField::from_coeffs(g, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        let json = serde_json::to_value(&f).unwrap();
        assert_eq!(json["grid"]["d"], 2);
        assert_eq!(json["grid"]["L"], 1.5);
        assert_eq!(json["grid"]["N"], 2);
        assert_eq!(json["grid"]["k"], 2);
        assert_eq!(json["coeffs"].as_array().unwrap().len(), 8);
        let back: SpectralField = serde_json::from_value(json).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn embedding_preserves_the_function() {
        let g = Grid::new(2, 1.0, 6, 1).unwrap();
        let fine = Grid::new(2, 1.0, 12, 1).unwrap();
        let mut rng = crate::rng::SplitMix64::new(9);
        let coeffs: Vec<f64> = (0..g.coeff_len()).map(|_| rng.next_normal()).collect();
        let f = SpectralField::from_coeffs(g, coeffs).unwrap();
        let e = f.embed(fine).unwrap();
        assert_relative_eq!(e.norm_l2(), f.norm_l2(), max_relative = 1e-14);
        assert_relative_eq!(e.hs(1.0), f.hs(1.0), max_relative = 1e-14);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let g = grid1();
        assert!(SpectralField::from_coeffs(g, vec![0.0; 3]).is_err());
        assert!(SpectralField::from_physical(g, &[0.0; 3]).is_err());
    }
}
