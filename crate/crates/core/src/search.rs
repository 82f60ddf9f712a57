//! One-dimensional optimisation: coarse grids refined by golden-section search.

use crate::error::{invalid, Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// `n` evenly spaced points on `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Vertex of the parabola through three points, if it opens downward or upward cleanly.
pub fn parabolic_vertex(x: [f64; 3], y: [f64; 3]) -> Option<f64> {
    let d1 = (x[1] - x[0]) * (y[1] - y[2]);
    let d2 = (x[1] - x[2]) * (y[1] - y[0]);
    let denom = d1 - d2;
    if denom.abs() < 1e-300 {
        return None;
    }
    let v = x[1] - 0.5 * ((x[1] - x[0]) * d1 - (x[1] - x[2]) * d2) / denom;
    v.is_finite().then_some(v)
}

/// Result of a grid-plus-refinement maximisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    /// Grid index of the coarse maximum.
    pub grid_index: usize,
}

/// Maximises `f` over `[lo, hi]`: evaluates a grid of `n` points, then refines between the
/// neighbours of the best grid point with golden-section search to `tol`.
///
/// Non-finite values count as `-inf`. Fails if every grid value is non-finite.
pub fn grid_refine_max<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    n: usize,
    tol: f64,
) -> Result<Maximum> {
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(invalid(format!("degenerate search interval [{lo}, {hi}]")));
    }
    if n < 3 {
        return Err(invalid("search grid needs at least 3 points"));
    }
    let xs = linspace(lo, hi, n);
    let mut best = (usize::MAX, f64::NEG_INFINITY);
    for (i, &x) in xs.iter().enumerate() {
        let v = f(x);
        if v.is_finite() && v > best.1 {
            best = (i, v);
        }
    }
    let (i, coarse) = best;
    if i == usize::MAX {
        return Err(Error::SearchFailed(
            "objective is non-finite on the whole grid".into(),
        ));
    }
    let a = xs[i.saturating_sub(1)];
    let b = xs[(i + 1).min(n - 1)];
    let guarded = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    let (x, value) = golden_max(guarded, a, b, tol);
    Ok(if value >= coarse {
        Maximum {
            x,
            value,
            grid_index: i,
        }
    } else {
        Maximum {
            x: xs[i],
            value: coarse,
            grid_index: i,
        }
    })
}

/// Minimisation counterpart of [`grid_refine_max`].
pub fn grid_refine_min<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    n: usize,
    tol: f64,
) -> Result<Maximum> {
    let m = grid_refine_max(|x| -f(x), lo, hi, n, tol)?;
    Ok(Maximum {
        value: -m.value,
        ..m
    })
}
