//! Fixed-order Gauss–Legendre rules on intervals.

#[allow(clippy::excessive_precision)]
const GL8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Eight-point Gauss–Legendre nodes and weights on `[a, b]`; exact for
/// polynomials of degree ≤ 15.
pub fn gauss8(a: f64, b: f64) -> [(f64, f64); 8] {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 8];
    for (i, &(x, w)) in GL8.iter().enumerate() {
        out[2 * i] = (mid - half * x, half * w);
        out[2 * i + 1] = (mid + half * x, half * w);
    }
    out
}

/// `[a, b]` cut into `n` pieces with geometrically growing lengths; needs `a > 0`.
pub fn geometric_subcells(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let ratio = (b / a).powf(1.0 / n as f64);
    let mut out = Vec::with_capacity(n);
    let mut left = a;
    for i in 1..=n {
        let right = if i == n { b } else { a * ratio.powi(i as i32) };
        out.push((left, right));
        left = right;
    }
    out
}

/// `[a, b]` cut at whichever of `breaks` lie strictly inside.
pub fn split_at(a: f64, b: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&c| c > a && c < b));
    pts.push(b);
    pts.windows(2).map(|w| (w[0], w[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_degree_fifteen() {
        let s: f64 = gauss8(0.0, 2.0).iter().map(|(x, w)| w * x.powi(15)).sum();
        assert!((s - 2f64.powi(16) / 16.0).abs() < 1e-10);
    }

    #[test]
    fn weights_sum_to_length() {
        let s: f64 = gauss8(-1.0, 3.0).iter().map(|(_, w)| w).sum();
        assert!((s - 4.0).abs() < 1e-14);
    }

    #[test]
    fn geometric_subcells_tile_the_interval() {
        let c = geometric_subcells(1e-3, 1.0, 16);
        assert_eq!(c.len(), 16);
        assert_eq!(c[0].0, 1e-3);
        assert_eq!(c[15].1, 1.0);
        assert!(c.windows(2).all(|w| w[0].1 == w[1].0));
    }

    #[test]
    fn splits_only_at_interior_points() {
        assert_eq!(split_at(0.0, 1.0, &[0.0, 0.5, 2.0]), vec![(0.0, 0.5), (0.5, 1.0)]);
    }
}
