// Float helpers that `core` does not provide without std.

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn log10(x: f64) -> f64 {
    libm::log10(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Absolute guard applied before taking the floor of a task count, so that
/// `2.0 - 1e-13` coming out of the LP is still two tasks.
pub(crate) const FLOOR_GUARD: f64 = 1e-9;

/// Number of whole tasks of `cycles` a share `share` of a `hz` processor
/// finishes in `period_s`: `floor(T * F * X / c)`.
pub fn tasks_for_share(period_s: f64, hz: f64, share: f64, cycles: f64) -> u32 {
    if share <= 0.0 {
        return 0;
    }
    let q = period_s * hz * share / cycles;
    let f = floor(q + FLOOR_GUARD);
    if f <= 0.0 {
        0
    } else if f >= u32::MAX as f64 {
        u32::MAX
    } else {
        f as u32
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent seed for one random stream, keyed by purpose and position, so
/// adding draws to one stream never shifts another.
pub fn derive_seed(seed: u64, tag: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(splitmix64(seed) ^ tag) ^ a) ^ b)
}
