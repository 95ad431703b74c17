//! Exact eigenvalues of one mode of the truncated model operator, as roots of
//! an entire secular function.
//!
//! Solutions of `L_ν u = λu` with tip behavior `a·x^{ν} + b·x^{−ν}` are
//! `u = aΓ(1+ν)(k/2)^{−ν}J_ν(kx) + bΓ(1−ν)(k/2)^{ν}J_{−ν}(kx)`, `k = √λ`, and
//! `u(R) = 0` reads
//! `F(λ) = a R^{ν} Σ z^m/(m!(1+ν)_m) + b R^{−ν} Σ z^m/(m!(1−ν)_m)`,
//! `z = −λR²/4`. For `ν = 0` and tip behavior `a + b·log x` the second
//! solution is `log x·J₀(kx) + Σ_{m≥1} (−1)^{m+1} H_m (kx/2)^{2m}/(m!)²`.
//! No branch of `√λ` survives, so roots are found on the whole plane.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::special::{harmonic_bessel_series, normalized_bessel_series};

/// Beyond `|λ|R²` of this size the series lose too many digits to cancellation.
const MAX_SCALED_MODULUS: f64 = 2048.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecularFunction {
    pub nu: f64,
    pub a: Complex64,
    pub b: Complex64,
    pub outer_radius: f64,
}

impl SecularFunction {
    pub fn new(nu: f64, a: Complex64, b: Complex64, outer_radius: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&nu) {
            return Err(Error::ScopeViolation(format!("oracle needs ν ∈ [0, 1), got {nu}")));
        }
        if a.norm() + b.norm() == 0.0 {
            return Err(Error::RankDeficient);
        }
        if !(outer_radius > 0.0 && outer_radius.is_finite()) {
            return Err(Error::ScopeViolation(format!("outer radius {outer_radius} must be positive")));
        }
        Ok(SecularFunction { nu, a, b, outer_radius })
    }

    /// `(F(λ), F'(λ))`.
    pub fn eval(&self, lambda: Complex64) -> (Complex64, Complex64) {
        let r2 = self.outer_radius * self.outer_radius;
        let z = -lambda * (r2 / 4.0);
        let dz = -r2 / 4.0;
        if self.nu == 0.0 {
            let (s0, ds0) = normalized_bessel_series(0.0, z);
            let (h, dh) = harmonic_bessel_series(-z);
            let lead = self.a + self.b * self.outer_radius.ln();
            (lead * s0 + self.b * h, (lead * ds0 - self.b * dh) * dz)
        } else {
            let up = self.outer_radius.powf(self.nu);
            let (sp, dsp) = normalized_bessel_series(self.nu, z);
            let (sm, dsm) = normalized_bessel_series(-self.nu, z);
            (
                self.a * up * sp + self.b / up * sm,
                (self.a * up * dsp + self.b / up * dsm) * dz,
            )
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    fn diameter(&self) -> f64 {
        (self.x1 - self.x0).hypot(self.y1 - self.y0)
    }

    fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.x0 - slack && z.re <= self.x1 + slack && z.im >= self.y0 - slack && z.im <= self.y1 + slack
    }

    fn split(&self, fx: f64, fy: f64) -> [Rect; 4] {
        let xm = self.x0 + fx * (self.x1 - self.x0);
        let ym = self.y0 + fy * (self.y1 - self.y0);
        [
            Rect { x0: self.x0, x1: xm, y0: self.y0, y1: ym },
            Rect { x0: xm, x1: self.x1, y0: self.y0, y1: ym },
            Rect { x0: self.x0, x1: xm, y0: ym, y1: self.y1 },
            Rect { x0: xm, x1: self.x1, y0: ym, y1: self.y1 },
        ]
    }
}

fn arg_change(f: &SecularFunction, a: Complex64, b: Complex64, fa: Complex64, fb: Complex64, depth: u32) -> Result<f64> {
    let d = (fb / fa).arg();
    if d.abs() < 0.4 || depth == 0 {
        if depth == 0 && d.abs() >= 0.4 {
            return Err(Error::RootFinder("contour passes too close to a root".into()));
        }
        return Ok(d);
    }
    let m = (a + b) * 0.5;
    let fm = f.eval(m).0;
    if fm.norm() == 0.0 || !fm.re.is_finite() || !fm.im.is_finite() {
        return Err(Error::RootFinder(format!("secular function vanishes or overflows at {m}")));
    }
    Ok(arg_change(f, a, m, fa, fm, depth - 1)? + arg_change(f, m, b, fm, fb, depth - 1)?)
}

/// Number of zeros inside `rect` by the argument principle.
fn winding(f: &SecularFunction, rect: &Rect) -> Result<usize> {
    let corners = [
        Complex64::new(rect.x0, rect.y0),
        Complex64::new(rect.x1, rect.y0),
        Complex64::new(rect.x1, rect.y1),
        Complex64::new(rect.x0, rect.y1),
    ];
    let values: Vec<Complex64> = corners.iter().map(|&z| f.eval(z).0).collect();
    if values.iter().any(|v| v.norm() == 0.0) {
        return Err(Error::RootFinder("root on a contour corner".into()));
    }
    let mut total = 0.0;
    for i in 0..4 {
        let j = (i + 1) % 4;
        // F turns like e^{±i√λ R}; along an edge at distance ~r from the
        // origin √λ R moves by at most √r R, so this seeding keeps each piece
        // well under π and the phase cannot alias
        let reach = corners.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let pieces = 8 + (4.0 * (reach * f.outer_radius * f.outer_radius).sqrt()).ceil() as usize;
        let mut prev = (corners[i], values[i]);
        for s in 1..=pieces {
            let z = corners[i] + (corners[j] - corners[i]) * (s as f64 / pieces as f64);
            let fz = if s == pieces { values[j] } else { f.eval(z).0 };
            total += arg_change(f, prev.0, z, prev.1, fz, 40)?;
            prev = (z, fz);
        }
    }
    let turns = total / std::f64::consts::TAU;
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.05 || rounded < 0.0 {
        return Err(Error::RootFinder(format!("non-integral winding {turns}")));
    }
    Ok(rounded as usize)
}

/// Newton iteration; converged at a relative step of 1e-14, or at 1e-10 once
/// series cancellation makes the tighter target unreachable.
fn newton(f: &SecularFunction, start: Complex64) -> Option<Complex64> {
    let mut z = start;
    let mut last = f64::INFINITY;
    for _ in 0..60 {
        let (v, d) = f.eval(z);
        if d.norm() == 0.0 {
            return None;
        }
        let step = v / d;
        z -= step;
        if !(z.re.is_finite() && z.im.is_finite()) {
            return None;
        }
        last = step.norm() / z.norm().max(1.0);
        if last <= 1e-14 {
            return Some(z);
        }
    }
    (last <= 1e-10).then_some(z)
}

/// All zeros in `rect`, which must contain exactly `count` of them.
fn roots_in(f: &SecularFunction, rect: Rect, count: usize, out: &mut Vec<Complex64>) -> Result<()> {
    if count == 0 {
        return Ok(());
    }
    let scale = rect.center().norm().max(1.0);
    if count == 1 && rect.diameter() < 0.25 * scale {
        if let Some(z) = newton(f, rect.center()) {
            if rect.contains(z, 1e-9 * scale) {
                out.push(z);
                return Ok(());
            }
        }
    }
    if rect.diameter() < 1e-9 * scale {
        // numerically multiple root
        let z = newton(f, rect.center()).unwrap_or(rect.center());
        out.extend(std::iter::repeat(z).take(count));
        return Ok(());
    }
    for (fx, fy) in [(0.5123, 0.4871), (0.4617, 0.5389), (0.5731, 0.4239)] {
        let children = rect.split(fx, fy);
        let counts: Result<Vec<usize>> = children.iter().map(|c| winding(f, c)).collect();
        if let Ok(counts) = counts {
            if counts.iter().sum::<usize>() == count {
                for (c, k) in children.iter().zip(counts) {
                    roots_in(f, *c, k, out)?;
                }
                return Ok(());
            }
        }
    }
    Err(Error::RootFinder(format!("could not isolate {count} roots near {}", rect.center())))
}

/// Zeros of `f` in the disc `|λ| ≤ radius` (found from the enclosing square).
pub fn roots_within(f: &SecularFunction, radius: f64) -> Result<Vec<Complex64>> {
    // asymmetric square so the real axis and the origin are never on an edge
    let square = Rect {
        x0: -radius * 1.0137,
        x1: radius * 1.0071,
        y0: -radius * 1.0093,
        y1: radius * 1.0113,
    };
    let count = winding(f, &square)?;
    let mut roots = Vec::with_capacity(count);
    roots_in(f, square, count, &mut roots)?;
    roots.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.re.total_cmp(&b.re)));
    Ok(roots)
}

/// The `how_many` eigenvalues of smallest modulus of the mode-`ν` operator on
/// `(0, R]` with tip behavior `(a, b)` and `u(R) = 0`.
pub fn oracle_eigenvalues(nu: f64, a: Complex64, b: Complex64, outer_radius: f64, how_many: usize) -> Result<Vec<Complex64>> {
    let f = SecularFunction::new(nu, a, b, outer_radius)?;
    if how_many == 0 {
        return Ok(Vec::new());
    }
    let r2 = outer_radius * outer_radius;
    let mut radius = 16.0 / r2;
    loop {
        if radius * r2 > MAX_SCALED_MODULUS {
            return Err(Error::RootFinder(format!(
                "{how_many} eigenvalues need |λ|R² beyond {MAX_SCALED_MODULUS}; series precision exhausted"
            )));
        }
        let roots = roots_within(&f, radius)?;
        if roots.len() >= how_many && roots[how_many - 1].norm() <= radius {
            let picked: Vec<Complex64> = roots.into_iter().take(how_many).collect();
            for &z in &picked {
                let (v, d) = f.eval(z);
                if (v / d).norm() > 1e-8 * z.norm().max(1.0) {
                    return Err(Error::RootFinder(format!("root {z} did not polish")));
                }
            }
            return Ok(picked);
        }
        radius *= 2.0;
    }
}

/// Relative deviation `|λ_h − λ|/max(|λ|, 1)` of each of the first `count`
/// oracle values from the nearest of the first `count + 2` computed values,
/// the slack absorbing order swaps between near-equal moduli.
pub fn relative_errors(computed: &[Complex64], oracle: &[Complex64], count: usize) -> Vec<f64> {
    let pool = &computed[..(count + 2).min(computed.len())];
    oracle
        .iter()
        .take(count)
        .map(|o| pool.iter().map(|h| (h - o).norm() / o.norm().max(1.0)).fold(f64::INFINITY, f64::min))
        .collect()
}

/// [`oracle_eigenvalues`] for several parameter sets at once.
pub fn oracle_batch(cases: &[(f64, Complex64, Complex64)], outer_radius: f64, how_many: usize) -> Vec<Result<Vec<Complex64>>> {
    cases
        .par_iter()
        .map(|&(nu, a, b)| oracle_eigenvalues(nu, a, b, outer_radius, how_many))
        .collect()
}
