//! Counter-based random number generation.
//!
//! Every draw is a pure function of a key assembled from (seed, stream
//! identifiers, counter), so ensembles are reproducible and independent
//! of evaluation order or thread count.

const GOLDEN: u64 = 0x9e3779b97f4a7c15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Collapse a key of stream identifiers into a 64-bit state.
pub fn mix(parts: &[u64]) -> u64 {
    let mut s = 0x243f6a8885a308d3; // pi digits, arbitrary nonzero start
    for &p in parts {
        s = splitmix64(s ^ p.wrapping_mul(GOLDEN));
    }
    s
}

/// Uniform in (0, 1), never exactly 0 or 1.
pub fn uniform(key: &[u64]) -> f64 {
    let bits = splitmix64(mix(key));
    ((bits >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
}

/// Pair of independent standard normals (Box–Muller).
pub fn normal_pair(key: &[u64]) -> (f64, f64) {
    let s = mix(key);
    let u1 = ((splitmix64(s) >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0);
    let u2 = ((splitmix64(s ^ 0x5851f42d4c957f2d) >> 11) as f64 + 0.5)
        * (1.0 / 9007199254740992.0);
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * u2;
    (r * th.cos(), r * th.sin())
}

/// Single standard normal.
pub fn normal(key: &[u64]) -> f64 {
    normal_pair(key).0
}

/// Poisson draw by inversion (small means only; used for jump counts).
pub fn poisson(key: &[u64], mean: f64) -> u64 {
    assert!(mean >= 0.0 && mean < 1e6, "poisson mean out of range");
    let u = uniform(key);
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf && k < 10_000_000 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

/// Quantize to the dyadic grid 2^-33. Sums of quantized values are exact
/// in f64 well beyond any horizon used here, which makes increment
/// additivity and shift identities bit-exact regardless of summation
/// order. The quantization error (~1e-10) is far below statistical
/// resolution.
pub fn quantize(x: f64) -> f64 {
    const SCALE: f64 = 8589934592.0; // 2^33
    (x * SCALE).round() / SCALE
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_distinct() {
        assert_eq!(uniform(&[1, 2, 3]), uniform(&[1, 2, 3]));
        assert_ne!(uniform(&[1, 2, 3]), uniform(&[1, 2, 4]));
    }

    #[test]
    fn uniform_in_open_interval() {
        for k in 0..10_000u64 {
            let u = uniform(&[42, k]);
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn normal_moments() {
        let n = 200_000u64;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for k in 0..n {
            let (a, b) = normal_pair(&[7, k]);
            sum += a + b;
            sumsq += a * a + b * b;
        }
        let m = sum / (2 * n) as f64;
        let v = sumsq / (2 * n) as f64;
        // 3 s.e. bands for mean and variance of 4e5 standard normals.
        assert!(m.abs() < 3.0 / (2.0 * n as f64).sqrt());
        assert!((v - 1.0).abs() < 3.0 * (2.0 / (2.0 * n as f64)).sqrt());
    }

    #[test]
    fn poisson_mean() {
        let n = 50_000u64;
        let mean = 4.0;
        let total: u64 = (0..n).map(|k| poisson(&[9, k], mean)).sum();
        let m = total as f64 / n as f64;
        assert!((m - mean).abs() < 3.0 * (mean / n as f64).sqrt());
    }

    #[test]
    fn quantize_additivity() {
        let vals: Vec<f64> = (0..1000u64).map(|k| quantize(normal(&[3, k]))).collect();
        let forward: f64 = vals.iter().sum();
        let backward: f64 = vals.iter().rev().sum();
        assert_eq!(forward, backward);
    }
}
