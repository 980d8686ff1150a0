use crate::raster::RasterPlane;

pub const HISTOGRAM_BINS: usize = 256;

/// Bin of `v` such that `bin <= b` exactly when `v <= b / 255`.
pub fn quantize_bin(v: f64) -> usize {
    let mut b = (v * 255.0).ceil().clamp(0.0, 255.0) as usize;
    while b > 0 && v <= (b - 1) as f64 / 255.0 {
        b -= 1;
    }
    while b < 255 && v > b as f64 / 255.0 {
        b += 1;
    }
    b
}

/// Histograms up to this many pixels are scored in exact integer arithmetic.
const EXACT_PIXEL_LIMIT: u64 = 1 << 28;

/// `a_num / a_den > b_num / b_den` for positive denominators, exactly.
fn fraction_gt(a_num: u128, a_den: u128, b_num: u128, b_den: u128) -> bool {
    let (qa, qb) = (a_num / a_den, b_num / b_den);
    if qa != qb {
        return qa > qb;
    }
    (a_num % a_den) * b_den > (b_num % b_den) * a_den
}

/// Bin index maximizing the between-class variance `w0 * w1 * (m0 - m1)^2`,
/// where class 0 holds bins `<= t`. Ties resolve to the smallest bin.
/// Returns `None` when fewer than two bins are occupied.
pub fn otsu_from_histogram(hist: &[u64; HISTOGRAM_BINS]) -> Option<usize> {
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }
    let total: u64 = hist.iter().sum();
    let weighted_total: u64 = hist.iter().enumerate().map(|(b, &c)| b as u64 * c).sum();
    if total < EXACT_PIXEL_LIMIT {
        Some(otsu_exact(hist, total, weighted_total))
    } else {
        Some(otsu_float(hist, total, weighted_total))
    }
}

/// Scores each split as `(S0 * n1 - S1 * n0)^2 / (n0 * n1)`, which is the
/// between-class variance times `N^2`.
fn otsu_exact(hist: &[u64; HISTOGRAM_BINS], total: u64, weighted_total: u64) -> usize {
    let mut best = (0usize, 0u128, 1u128);
    let (mut count0, mut sum0) = (0u64, 0u64);
    for (t, &c) in hist.iter().enumerate() {
        count0 += c;
        sum0 += t as u64 * c;
        let count1 = total - count0;
        if count0 == 0 || count1 == 0 {
            continue;
        }
        let sum1 = weighted_total - sum0;
        let d = (sum0 as i128 * count1 as i128 - sum1 as i128 * count0 as i128).unsigned_abs();
        let (num, den) = (d * d, count0 as u128 * count1 as u128);
        if fraction_gt(num, den, best.1, best.2) {
            best = (t, num, den);
        }
    }
    best.0
}

fn otsu_float(hist: &[u64; HISTOGRAM_BINS], total: u64, weighted_total: u64) -> usize {
    let n = total as f64;
    let mut best = 0;
    let mut best_var = f64::NEG_INFINITY;
    let (mut count0, mut sum0) = (0u64, 0u64);
    for (t, &c) in hist.iter().enumerate() {
        count0 += c;
        sum0 += t as u64 * c;
        let count1 = total - count0;
        let var = if count0 == 0 || count1 == 0 {
            0.0
        } else {
            let mean0 = sum0 as f64 / count0 as f64;
            let mean1 = (weighted_total - sum0) as f64 / count1 as f64;
            (count0 as f64 / n) * (count1 as f64 / n) * (mean0 - mean1) * (mean0 - mean1)
        };
        if var > best_var {
            best_var = var;
            best = t;
        }
    }
    best
}

/// Otsu threshold of a single-channel map, as a value in `[0, 1]`.
///
/// Pixels with value `> t` are foreground. A map occupying a single
/// histogram bin returns its maximum value, leaving the foreground empty.
pub fn otsu_threshold(map: &RasterPlane) -> f64 {
    let mut hist = [0u64; HISTOGRAM_BINS];
    for &v in map.data() {
        hist[quantize_bin(v)] += 1;
    }
    match otsu_from_histogram(&hist) {
        Some(bin) => bin as f64 / 255.0,
        None => map.data().iter().copied().fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(hist: &[u64; HISTOGRAM_BINS]) -> usize {
        // direct evaluation of every split from scratch
        let n: u64 = hist.iter().sum();
        let mut best = (f64::NEG_INFINITY, 0);
        for t in 0..HISTOGRAM_BINS {
            let (mut c0, mut s0, mut c1, mut s1) = (0u64, 0u64, 0u64, 0u64);
            for (b, &c) in hist.iter().enumerate() {
                if b <= t {
                    c0 += c;
                    s0 += b as u64 * c;
                } else {
                    c1 += c;
                    s1 += b as u64 * c;
                }
            }
            let var = if c0 == 0 || c1 == 0 {
                0.0
            } else {
                let (m0, m1) = (s0 as f64 / c0 as f64, s1 as f64 / c1 as f64);
                (c0 as f64 / n as f64) * (c1 as f64 / n as f64) * (m0 - m1) * (m0 - m1)
            };
            if var > best.0 {
                best = (var, t);
            }
        }
        best.1
    }

    #[test]
    fn quantization_is_consistent_with_threshold_values() {
        for b in 0..=255usize {
            let v = b as f64 / 255.0;
            assert_eq!(quantize_bin(v), b);
        }
        assert_eq!(quantize_bin(0.1), 26);
        assert_eq!(quantize_bin(0.0), 0);
        assert_eq!(quantize_bin(1.0), 255);
    }

    #[test]
    fn huge_histograms_use_the_float_path() {
        let mut small = [0u64; HISTOGRAM_BINS];
        small[20] = 5;
        small[60] = 3;
        small[200] = 7;
        let large = small.map(|c| c << 30);
        assert_eq!(otsu_from_histogram(&small), otsu_from_histogram(&large));
        assert_eq!(otsu_from_histogram(&small), Some(60));
    }

    #[test]
    fn two_level_map_ties_to_zero() {
        let map = RasterPlane::new(5, 1, 1, vec![0.0, 0.0, 0.0, 1.0, 1.0]).unwrap();
        let t = otsu_threshold(&map);
        assert_eq!(t, 0.0);
        let mut hist = [0u64; HISTOGRAM_BINS];
        hist[0] = 3;
        hist[255] = 2;
        assert_eq!(brute_force(&hist), 0);
        assert_eq!(map.data().iter().filter(|&&v| v > t).count(), 2);
    }

    #[test]
    fn constant_map_has_empty_foreground() {
        let map = RasterPlane::filled(4, 4, 1, 0.5).unwrap();
        let t = otsu_threshold(&map);
        assert_eq!(t, 0.5);
        assert!(map.data().iter().all(|&v| v <= t));
    }

    #[test]
    fn bimodal_threshold_lands_on_the_low_mode() {
        let mut data = vec![0.1; 50];
        data.extend(vec![0.9; 50]);
        let map = RasterPlane::new(10, 10, 1, data).unwrap();
        let t = otsu_threshold(&map);
        assert!((0.1..0.9).contains(&t));
        assert_eq!(t, 26.0 / 255.0);
        assert_eq!(map.data().iter().filter(|&&v| v > t).count(), 50);
    }

    #[test]
    fn matches_brute_force_on_sparse_histograms() {
        let mut hist = [0u64; HISTOGRAM_BINS];
        hist[3] = 5;
        hist[40] = 1;
        hist[200] = 9;
        assert_eq!(otsu_from_histogram(&hist), Some(brute_force(&hist)));
    }
}
