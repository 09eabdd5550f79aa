//! Direct sine/cosine transform kernels.
//!
//! Transforms are plain matrix applications per axis (O(N^2) per axis),
//! adequate at desk scale. Tables are cached process-wide.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TableKind {
    /// sin(pi (j+1)(m+1)/denom), j = 0..rows-1 (interior points only).
    SinInterior,
    /// sin(pi j (m+1)/denom), j = 0..denom (closed grid; exact zeros at ends).
    SinClosed,
    /// cos(pi j (m+1)/denom), j = 0..denom (closed grid).
    CosClosed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct TableKey {
    kind: TableKind,
    rows: usize,
    cols: usize,
    denom: usize,
}

fn cache() -> &'static Mutex<HashMap<TableKey, Arc<Vec<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<Vec<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Row-major `rows x cols` trigonometric table.
pub fn table(kind: TableKind, rows: usize, cols: usize, denom: usize) -> Arc<Vec<f64>> {
    let key = TableKey { kind, rows, cols, denom };
    if let Some(t) = cache().lock().unwrap().get(&key) {
        return Arc::clone(t);
    }
    let step = std::f64::consts::PI / denom as f64;
    let mut t = vec![0.0; rows * cols];
    for j in 0..rows {
        for m in 0..cols {
            let arg = step * (m as f64 + 1.0);
            t[j * cols + m] = match kind {
                TableKind::SinInterior => ((j as f64 + 1.0) * arg).sin(),
                TableKind::SinClosed => {
                    if j == 0 || j == denom {
                        0.0
                    } else {
                        (j as f64 * arg).sin()
                    }
                }
                TableKind::CosClosed => (j as f64 * arg).cos(),
            };
        }
    }
    let arc = Arc::new(t);
    cache().lock().unwrap().insert(key, Arc::clone(&arc));
    arc
}

/// Apply `table` (out_len x in_len) along the middle axis of data viewed as
/// (pre, in_len, post), scaling every output by `scale`.
pub fn apply_axis(
    input: &[f64],
    pre: usize,
    in_len: usize,
    post: usize,
    tbl: &[f64],
    out_len: usize,
    scale: f64,
) -> Vec<f64> {
    debug_assert_eq!(input.len(), pre * in_len * post);
    debug_assert_eq!(tbl.len(), out_len * in_len);
    let mut out = vec![0.0; pre * out_len * post];
    if post == 1 {
        for p in 0..pre {
            let irow = &input[p * in_len..(p + 1) * in_len];
            let orow = &mut out[p * out_len..(p + 1) * out_len];
            for (r, o) in orow.iter_mut().enumerate() {
                let trow = &tbl[r * in_len..(r + 1) * in_len];
                let mut acc = 0.0;
                for (t, x) in trow.iter().zip(irow) {
                    acc += t * x;
                }
                *o = scale * acc;
            }
        }
    } else {
        for p in 0..pre {
            let in_base = p * in_len * post;
            let out_base = p * out_len * post;
            for (m, chunk) in input[in_base..in_base + in_len * post].chunks_exact(post).enumerate() {
                for r in 0..out_len {
                    let t = scale * tbl[r * in_len + m];
                    if t == 0.0 {
                        continue;
                    }
                    let orow = &mut out[out_base + r * post..out_base + (r + 1) * post];
                    for (o, &x) in orow.iter_mut().zip(chunk) {
                        *o += t * x;
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interior_table_orthogonality() {
        // sum_j sin(pi j m/(N+1)) sin(pi j m'/(N+1)) = (N+1)/2 delta_mm'
        let n = 7;
        let t = table(TableKind::SinInterior, n, n, n + 1);
        for m1 in 0..n {
            for m2 in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += t[j * n + m1] * t[j * n + m2];
                }
                let expect = if m1 == m2 { (n as f64 + 1.0) / 2.0 } else { 0.0 };
                assert_relative_eq!(acc, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn axis_apply_matches_direct_matvec() {
        let tbl = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]; // 2x3
        let input = [1.0, 0.5, -1.0];
        let out = apply_axis(&input, 1, 3, 1, &tbl, 2, 2.0);
        assert_relative_eq!(out[0], 2.0 * (1.0 + 1.0 - 3.0));
        assert_relative_eq!(out[1], 2.0 * (4.0 + 2.5 - 6.0));
    }

    #[test]
    fn axis_apply_tensor_layout() {
        // pre=2, in=2, post=2 identity table leaves data unchanged.
        let tbl = [1.0, 0.0, 0.0, 1.0];
        let input: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let out = apply_axis(&input, 2, 2, 2, &tbl, 2, 1.0);
        assert_eq!(out, input);
    }
}
