//! Shared numerics: adaptive quadrature, monotone bisection, deterministic
//! RNG stream derivation, and small statistics/formatting helpers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Hard cap on adaptive-subdivision depth. 2^40 subintervals is far past
/// f64 resolution for any interval we integrate.
const MAX_DEPTH: u32 = 40;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`, with Richardson-style acceptance `|S_fine - S_coarse| <= 15 tol`
/// per subinterval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    integrate_with_breaks(f, a, b, &[], tol)
}

/// Adaptive Simpson quadrature forcing subdivision at the given interior
/// points. Use for integrands with kinks (e.g. a Laplace kernel), where a
/// panel straddling the kink can fool the acceptance test.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> f64 {
    if a.is_nan() || b.is_nan() || b <= a {
        return 0.0;
    }
    let mut knots: Vec<f64> = breaks.iter().copied().filter(|x| *x > a && *x < b).collect();
    knots.push(a);
    knots.push(b);
    knots.sort_by(|x, y| x.partial_cmp(y).expect("finite quadrature knots"));
    knots.dedup();

    let total = b - a;
    let mut sum = 0.0;
    for pair in knots.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let piece_tol = (tol * (hi - lo) / total).max(f64::MIN_POSITIVE);
        let m = 0.5 * (lo + hi);
        let (flo, fm, fhi) = (f(lo), f(m), f(hi));
        let whole = simpson(lo, hi, flo, fm, fhi);
        sum += adapt(&f, lo, m, hi, flo, fm, fhi, whole, piece_tol, 0);
    }
    sum
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth >= MAX_DEPTH || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adapt(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
        + adapt(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
}

/// Smallest `x` in `[lo, hi]` with `f(x) >= 0`, for nondecreasing `f`,
/// bisected down to an interval of width `width`.
///
/// Returns `lo` when `f(lo) >= 0` already, and `hi` when `f` is negative on
/// the whole interval (callers are expected to bracket the sign change).
pub fn bisect_nondecreasing<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, width: f64) -> f64 {
    if f(lo) >= 0.0 {
        return lo;
    }
    if f(hi) < 0.0 {
        return hi;
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // f64 resolution reached
        }
        if f(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// SplitMix64 finalizer; decorrelates consecutive tag values.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a tag list into a single 64-bit stream id.
pub fn mix_tags(tags: &[u64]) -> u64 {
    let mut h = 0x243F_6A88_85A3_08D3; // arbitrary nonzero start
    for &t in tags {
        h = splitmix64(h ^ t);
    }
    h
}

/// Derives an independent, reproducible generator from a master seed and a
/// list of integer tags. Identical `(seed, tags)` always produces the same
/// stream; distinct tag lists select distinct ChaCha streams, so work items
/// can be evaluated concurrently without sharing generator state.
pub fn rng_stream(master_seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(mix_tags(tags));
    rng
}

/// Sample mean and 95% normal-approximation half-width `1.96 s / sqrt(n)`
/// (Bessel-corrected `s`). A single sample yields a zero half-width.
pub fn mean_and_ci(samples: &[f64]) -> (f64, f64) {
    assert!(!samples.is_empty(), "mean of an empty sample");
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Plain-decimal formatting with a fixed number of significant digits.
pub fn fmt_sig(x: f64, sig: u32) -> String {
    assert!(sig >= 1);
    if x == 0.0 {
        return format!("{:.*}", sig as usize - 1, 0.0);
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = sig as i32 - 1 - exponent;
    if decimals >= 0 {
        format!("{:.*}", decimals as usize, x)
    } else {
        let scale = 10f64.powi(-decimals);
        format!("{:.0}", (x / scale).round() * scale)
    }
}
