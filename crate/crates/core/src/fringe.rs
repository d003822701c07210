//! Extremum search and the fringe-visibility rule shared by the analytic and
//! the sampled-data paths.
//!
//! Visibility is `(rho_max - rho_min) / (rho_max + rho_min)`, with `rho_max`
//! the global maximum and `rho_min` the deeper of the two minima adjacent to
//! it. A pattern counts as having fringes only once it shows at least three
//! significant maxima: two separated packets (two bumps and a dip) or a
//! single merged bump report zero with `fringes_formed == false`.

use serde::Serialize;

use crate::scalar::Real;

/// Maxima lower than this fraction of the peak are ignored.
pub const SIGNIFICANCE_REL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Visibility<T> {
    pub value: T,
    pub fringes_formed: bool,
}

impl<T: Real> Visibility<T> {
    pub fn none() -> Self {
        Self {
            value: T::zero(),
            fringes_formed: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum<T> {
    pub x: T,
    pub value: T,
    pub is_max: bool,
}

/// Interior local extrema of a sampled curve as `(index, is_max)`.
///
/// Plateaus report one extremum at their right end.
pub fn sample_extrema<T: Real>(samples: &[T]) -> Vec<(usize, bool)> {
    let mut out = Vec::new();
    for i in 1..samples.len().saturating_sub(1) {
        let (a, b, c) = (samples[i - 1], samples[i], samples[i + 1]);
        if b > a && b >= c && !(b == c && plateau_continues_up(samples, i)) {
            out.push((i, true));
        } else if b < a && b <= c && !(b == c && plateau_continues_down(samples, i)) {
            out.push((i, false));
        }
    }
    out
}

fn plateau_continues_up<T: Real>(s: &[T], i: usize) -> bool {
    let mut j = i + 1;
    while j + 1 < s.len() && s[j] == s[i] {
        j += 1;
    }
    s[j] > s[i] || j + 1 == s.len()
}

fn plateau_continues_down<T: Real>(s: &[T], i: usize) -> bool {
    let mut j = i + 1;
    while j + 1 < s.len() && s[j] == s[i] {
        j += 1;
    }
    s[j] < s[i] || j + 1 == s.len()
}

/// Location of the minimum of a unimodal `f` on `[lo, hi]`.
pub fn golden_section<T: Real>(f: impl Fn(T) -> T, mut lo: T, mut hi: T) -> T {
    let ratio = (T::lit(5.0).sqrt() - T::one()) * T::lit(0.5);
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (hi - lo).abs() <= T::epsilon() * (T::one() + c.abs()) {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d);
        }
    }
    (lo + hi) * T::lit(0.5)
}

/// Vertex of the parabola through three equally spaced samples, as an
/// offset from the middle sample in units of the spacing plus the vertex
/// value.
pub fn parabolic_vertex<T: Real>(left: T, mid: T, right: T) -> (T, T) {
    let curvature = left - mid - mid + right;
    if curvature == T::zero() {
        return (T::zero(), mid);
    }
    let half = T::lit(0.5);
    let offset = (half * (left - right) / curvature).max(-half).min(half);
    let value = mid - T::lit(0.25) * (left - right) * offset;
    (offset, value)
}

/// Applies the visibility rule to extrema ordered by position.
pub fn visibility_from_extrema<T: Real>(extrema: &[Extremum<T>], peak: T) -> Visibility<T> {
    if !(peak > T::zero()) {
        return Visibility::none();
    }
    let threshold = T::lit(SIGNIFICANCE_REL) * peak;
    let maxima: Vec<usize> = extrema
        .iter()
        .enumerate()
        .filter(|(_, e)| e.is_max && e.value >= threshold)
        .map(|(i, _)| i)
        .collect();
    if maxima.len() < 3 {
        return Visibility::none();
    }

    let global = (0..maxima.len())
        .max_by(|&a, &b| {
            extrema[maxima[a]]
                .value
                .partial_cmp(&extrema[maxima[b]].value)
                .expect("finite extrema")
                .then(b.cmp(&a))
        })
        .expect("nonempty");
    let rho_max = extrema[maxima[global]].value;

    let deepest_between = |from: usize, to: usize| -> Option<T> {
        extrema[from + 1..to]
            .iter()
            .filter(|e| !e.is_max)
            .map(|e| e.value)
            .fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.min(v))))
    };
    let mut rho_min: Option<T> = None;
    if global > 0 {
        rho_min = deepest_between(maxima[global - 1], maxima[global]);
    }
    if global + 1 < maxima.len() {
        if let Some(v) = deepest_between(maxima[global], maxima[global + 1]) {
            rho_min = Some(rho_min.map_or(v, |a| a.min(v)));
        }
    }
    let Some(rho_min) = rho_min else {
        return Visibility::none();
    };
    let rho_min = rho_min.max(T::zero());
    let value = ((rho_max - rho_min) / (rho_max + rho_min)).max(T::zero()).min(T::one());
    Visibility {
        value,
        fringes_formed: true,
    }
}
