//! One-dimensional search helpers shared by the estimators.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of `f` on `[lo, hi]`.
///
/// Returns `(argmax, max, iterations)`; stops once the bracket is narrower than `tol`.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64, usize)
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (b - a).abs() > tol && iterations < 500 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // the midpoint can lose to the last interior probe on flat plateaus
    let best = [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |acc, p| if p.1 > acc.1 { p } else { acc });
    (best.0, best.1, iterations)
}

/// Golden-section search over the integers in `[lo, hi]` for the minimum of `f`.
/// Narrows until the bracket holds a handful of integers, then enumerates them.
pub fn golden_section_min_int<F>(mut f: F, lo: usize, hi: usize) -> (usize, f64)
where
    F: FnMut(usize) -> f64,
{
    let mut cache = std::collections::BTreeMap::new();
    let mut eval = |k: usize, cache: &mut std::collections::BTreeMap<usize, f64>| {
        *cache.entry(k).or_insert_with(|| f(k))
    };
    let (mut a, mut b) = (lo, hi);
    while b - a > 4 {
        let span = (b - a) as f64;
        let c = (b as f64 - INV_PHI * span).round() as usize;
        let d = (a as f64 + INV_PHI * span).round() as usize;
        let (c, d) = if c >= d { (c, c + 1) } else { (c, d) };
        let fc = eval(c, &mut cache);
        let fd = eval(d, &mut cache);
        if fc <= fd {
            b = d;
        } else {
            a = c;
        }
    }
    let mut best = (a, f64::INFINITY);
    for k in a..=b {
        let v = eval(k, &mut cache);
        if v < best.1 {
            best = (k, v);
        }
    }
    best
}
