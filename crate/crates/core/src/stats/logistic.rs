use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogisticError {
    #[error("carrying capacity must be positive, got {0}")]
    Capacity(f64),
    #[error("initial population must lie in (0, K], got {0}")]
    Initial(f64),
    #[error("growth rate must be finite")]
    Rate,
    #[error("initial fraction {0} outside [0, 1]")]
    MapStart(f64),
    #[error("series needs at least 5 points, got {0}")]
    TooShort(usize),
    #[error("degenerate series")]
    Degenerate,
}

/// Verhulst growth `P(t) = K P0 e^{rt} / (K + P0 (e^{rt} - 1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams {
    capacity: f64,
    initial: f64,
    rate: f64,
}

impl LogisticParams {
    pub fn new(capacity: f64, initial: f64, rate: f64) -> Result<Self, LogisticError> {
        if !(capacity > 0.0) || !capacity.is_finite() {
            return Err(LogisticError::Capacity(capacity));
        }
        if !(initial > 0.0 && initial <= capacity) {
            return Err(LogisticError::Initial(initial));
        }
        if !rate.is_finite() {
            return Err(LogisticError::Rate);
        }
        Ok(Self {
            capacity,
            initial,
            rate,
        })
    }

    /// Carrying capacity K.
    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// Population at t = 0.
    pub fn initial(&self) -> f64 {
        self.initial
    }

    /// Growth rate r.
    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// Evaluates the logistic curve at `t`.
///
/// Computed as `K P0 / (P0 + (K - P0) e^{-rt})`, which never overflows:
/// large positive `rt` drives the decay term to zero and the value to K.
pub fn logistic_value(p: &LogisticParams, t: f64) -> f64 {
    let (k, p0) = (p.capacity, p.initial);
    let rt = p.rate * t;
    if p0 == k {
        return k;
    }
    if rt == 0.0 {
        return p0;
    }
    let decay = libm::exp(-rt);
    if decay == 0.0 {
        return k;
    }
    (k * p0 / (p0 + (k - p0) * decay)).min(k)
}

/// Iterates the logistic map `p_{n+1} = r p_n (1 - p_n)`, returning
/// `p_1..=p_n`.
pub fn logistic_map_iterate(r: f64, p0: f64, n: usize) -> Result<Vec<f64>, LogisticError> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(LogisticError::MapStart(p0));
    }
    let mut out = Vec::with_capacity(n);
    let mut p = p0;
    for _ in 0..n {
        p = r * p * (1.0 - p);
        out.push(p);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitOptions {
    /// Fit K as well instead of pinning it to the final observation.
    pub fit_capacity: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticFit {
    pub params: LogisticParams,
    pub r_squared: f64,
}

const GOLDEN: f64 = 0.618_033_988_749_895;

/// Golden-section minimisation of `f` on `[lo, hi]`.
fn golden_min(mut lo: f64, mut hi: f64, iters: usize, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Coarse grid over `[lo, hi]` followed by golden-section refinement in the
/// cells either side of the best grid point.
fn grid_then_golden(lo: f64, hi: f64, cells: usize, iters: usize, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let step = (hi - lo) / cells as f64;
    let mut best = (lo, f64::INFINITY);
    for i in 0..=cells {
        let x = lo + step * i as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let a = (best.0 - step).max(lo);
    let b = (best.0 + step).min(hi);
    let refined = golden_min(a, b, iters, f);
    if refined.1 < best.1 {
        refined
    } else {
        best
    }
}

fn sse(series: &[(f64, f64)], p: &LogisticParams) -> f64 {
    series
        .iter()
        .map(|&(t, y)| {
            let e = logistic_value(p, t) - y;
            e * e
        })
        .sum()
}

/// Smallest SSE over `(ln r, ln P0)` for a fixed capacity.
fn fit_fixed_capacity(series: &[(f64, f64)], k: f64, span: f64) -> (LogisticParams, f64) {
    let ln_r_lo = libm::log(1e-3 / span);
    let ln_r_hi = libm::log(1e3 / span);
    let ln_p_lo = libm::log(k * 1e-9);
    let ln_p_hi = libm::log(k);
    let params = |ln_r: f64, ln_p: f64| {
        LogisticParams::new(k, libm::exp(ln_p).min(k), libm::exp(ln_r)).ok()
    };
    let profile = |ln_r: f64| {
        grid_then_golden(ln_p_lo, ln_p_hi, 40, 40, &mut |ln_p| {
            params(ln_r, ln_p).map_or(f64::INFINITY, |p| sse(series, &p))
        })
    };
    let (ln_r, _) = grid_then_golden(ln_r_lo, ln_r_hi, 40, 50, &mut |ln_r| profile(ln_r).1);
    let (ln_p, best) = profile(ln_r);
    let p = params(ln_r, ln_p).expect("bounded search stays valid");
    (p, best)
}

/// Least-squares Verhulst fit to `(time, population)` samples.
///
/// K is pinned to the last observation unless `options.fit_capacity`;
/// `r` and `P0` are searched on a log grid and refined by golden-section
/// search (nested, so `P0` is re-optimised for every trial `r`).
pub fn fit_logistic(series: &[(f64, f64)], options: FitOptions) -> Result<LogisticFit, LogisticError> {
    if series.len() < 5 {
        return Err(LogisticError::TooShort(series.len()));
    }
    if !series.windows(2).any(|w| w[1].1 > w[0].1) {
        return Err(LogisticError::Degenerate);
    }
    let last = series[series.len() - 1].1;
    let span = series[series.len() - 1].0 - series[0].0;
    if !(last > 0.0) || !(span > 0.0) {
        return Err(LogisticError::Degenerate);
    }
    let (params, best) = if options.fit_capacity {
        let peak = series.iter().map(|s| s.1).fold(f64::MIN, f64::max);
        let mut cache = None;
        let (k, _) = golden_min(peak, 2.0 * peak, 30, &mut |k| {
            let (p, e) = fit_fixed_capacity(series, k, span);
            if cache.is_none_or(|(_, best)| e < best) {
                cache = Some((p, e));
            }
            e
        });
        let fixed = fit_fixed_capacity(series, k, span);
        match cache {
            Some(c) if c.1 < fixed.1 => c,
            _ => fixed,
        }
    } else {
        fit_fixed_capacity(series, last, span)
    };
    let mean = series.iter().map(|s| s.1).sum::<f64>() / series.len() as f64;
    let sst: f64 = series.iter().map(|s| (s.1 - mean) * (s.1 - mean)).sum();
    let r_squared = if sst > 0.0 { 1.0 - best / sst } else { 0.0 };
    Ok(LogisticFit { params, r_squared })
}
