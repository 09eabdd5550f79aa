//! Deterministic random initial-data ensembles. Every field is a pure
//! function of (seed, stream), so ensembles are reproducible and safe to
//! generate concurrently.

use crate::field::SpectralField;
use crate::grid::Grid;
use crate::rng::SplitMix64;

/// Random field with modal coefficients N(0,1) (lambda_m/lambda_min)^(-decay/2).
/// Larger decay means smoother samples.
pub fn random_field(grid: Grid, seed: u64, stream: u64, decay: f64) -> SpectralField {
    let mut rng = SplitMix64::stream(seed, stream);
    let nd = grid.modes();
    let lam_min = grid.lambda_min();
    let mut f = SpectralField::zeros(grid);
    for c in 0..grid.k {
        for m in 0..nd {
            let rel = grid.eigenvalue(m) / lam_min;
            f.coeffs[c * nd + m] = rng.next_normal() * rel.powf(-decay / 2.0);
        }
    }
    f
}

/// Random field rescaled to a prescribed L^2 norm.
pub fn random_field_with_norm(grid: Grid, seed: u64, stream: u64, decay: f64, l2_norm: f64) -> SpectralField {
    let mut f = random_field(grid, seed, stream, decay);
    let n = f.norm_l2();
    if n > 0.0 {
        f.scale(l2_norm / n);
    }
    f
}

/// Field with prescribed per-mode magnitudes |m|^(-power) and deterministic
/// signs (the rough initial data of the smoothing studies).
pub fn power_law_field(grid: Grid, power: f64, seed: u64) -> SpectralField {
    let mut rng = SplitMix64::stream(seed, 0);
    let nd = grid.modes();
    let mut f = SpectralField::zeros(grid);
    for c in 0..grid.k {
        for m in 0..nd {
            let multi = grid.multi_index(m);
            let msq: f64 = (0..grid.d).map(|a| (multi[a] * multi[a]) as f64).sum();
            let sign = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
            f.coeffs[c * nd + m] = sign * msq.sqrt().powf(-power);
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_stream_is_identical_different_streams_differ() {
        let g = Grid::new(1, 1.0, 16, 1).unwrap();
        let a = random_field(g, 7, 3, 1.0);
        let b = random_field(g, 7, 3, 1.0);
        let c = random_field(g, 7, 4, 1.0);
        assert_eq!(a.coeffs, b.coeffs);
        assert_ne!(a.coeffs, c.coeffs);
    }

    #[test]
    fn norm_rescaling_is_exact() {
        let g = Grid::new(2, 1.0, 8, 1).unwrap();
        let f = random_field_with_norm(g, 1, 0, 1.0, 4.0);
        assert!((f.norm_l2() - 4.0).abs() <= 1e-12);
    }

    #[test]
    fn power_law_has_prescribed_magnitudes() {
        let g = Grid::new(1, 1.0, 8, 1).unwrap();
        let f = power_law_field(g, 1.1, 0);
        for m in 0..8 {
            let expect = ((m + 1) as f64).powf(-1.1);
            assert!((f.coeffs[m].abs() - expect).abs() <= 1e-14);
        }
    }
}
