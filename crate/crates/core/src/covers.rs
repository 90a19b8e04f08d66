//! Numeric realization of branched covers as rational functions on the
//! sphere.
//!
//! A cover `h(z) = a · Π(z−z⁻ₖ)^{m⁻ₖ} / Π(z−z⁺ₖ)^{m⁺ₖ}` maps the punctured
//! sphere to the cylinder `ℝ × S¹` via `(log|h|, arg h)`.  Cylinder
//! coordinates are normalized by `1/2π`; only differences of coordinates are
//! ever asserted.  Punctures at infinity are represented by omitting them;
//! the invariant checks use finite punctures only.

use num::complex::Complex64;
use rand::Rng;

use crate::{Error, Result};

const WINDING_TOL: f64 = 1e-6;

/// A meromorphic function with prescribed zeros and poles.
#[derive(Debug, Clone)]
pub struct RationalCover {
    zeros: Vec<(Complex64, u32)>,
    poles: Vec<(Complex64, u32)>,
    scale: Complex64,
}

impl RationalCover {
    /// Builds a cover after checking that all punctures are pairwise distinct
    /// and the scale is nonzero.
    pub fn new(
        zeros: Vec<(Complex64, u32)>,
        poles: Vec<(Complex64, u32)>,
        scale: Complex64,
    ) -> Result<Self> {
        if scale.norm() == 0.0 {
            return Err(Error::Validation("cover scale must be nonzero".into()));
        }
        if zeros.iter().chain(&poles).any(|&(_, m)| m == 0) {
            return Err(Error::Validation(
                "puncture multiplicities must be positive".into(),
            ));
        }
        let points: Vec<Complex64> = zeros.iter().chain(&poles).map(|&(z, _)| z).collect();
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i] == points[j] {
                    return Err(Error::Validation(format!(
                        "punctures must be pairwise distinct, found {} twice",
                        points[i]
                    )));
                }
            }
        }
        Ok(Self { zeros, poles, scale })
    }

    pub fn zeros(&self) -> &[(Complex64, u32)] {
        &self.zeros
    }

    pub fn poles(&self) -> &[(Complex64, u32)] {
        &self.poles
    }

    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    /// Total zero degree minus total pole degree at the finite punctures.
    /// Nonzero values are carried by the implicit puncture at infinity.
    pub fn finite_degree(&self) -> i64 {
        let z: i64 = self.zeros.iter().map(|&(_, m)| i64::from(m)).sum();
        let p: i64 = self.poles.iter().map(|&(_, m)| i64::from(m)).sum();
        z - p
    }

    /// True when the finite divisor already has degree zero.
    pub fn is_balanced(&self) -> bool {
        self.finite_degree() == 0
    }

    fn value(&self, z: Complex64) -> Complex64 {
        let mut h = self.scale;
        for &(w, m) in &self.zeros {
            h *= (z - w).powi(i32::try_from(m).unwrap());
        }
        for &(w, m) in &self.poles {
            h /= (z - w).powi(i32::try_from(m).unwrap());
        }
        h
    }

    /// Cylinder coordinates `(s, t) = (log|h(z)|/2π, arg h(z)/2π mod 1)`.
    pub fn evaluate(&self, z: Complex64) -> Result<(f64, f64)> {
        if self.zeros.iter().chain(&self.poles).any(|&(w, _)| w == z) {
            return Err(Error::Validation(format!(
                "cannot evaluate the cover at the puncture {z}"
            )));
        }
        let tau = std::f64::consts::TAU;
        // log-space accumulation keeps large multiplicities stable
        let mut log_abs = self.scale.norm().ln();
        let mut arg = self.scale.arg();
        for &(w, m) in &self.zeros {
            log_abs += f64::from(m) * (z - w).norm().ln();
            arg += f64::from(m) * (z - w).arg();
        }
        for &(w, m) in &self.poles {
            log_abs -= f64::from(m) * (z - w).norm().ln();
            arg -= f64::from(m) * (z - w).arg();
        }
        let s = log_abs / tau;
        let t = (arg / tau).rem_euclid(1.0);
        if !s.is_finite() || !t.is_finite() {
            return Err(Error::Numeric(format!(
                "cover evaluation overflowed at {z}"
            )));
        }
        Ok((s, t))
    }

    /// Winding number of `arg h` around a circle enclosing exactly one
    /// puncture: `+m` at a zero of multiplicity `m`, `−m` at a pole.
    ///
    /// The winding is the sum of normalized angle increments along the
    /// sampled circle; the residue after rounding must stay below `10⁻⁶`.
    pub fn winding_multiplicity(
        &self,
        center: Complex64,
        radius: f64,
        samples: usize,
    ) -> Result<i64> {
        self.winding_measurement(center, radius, samples)
            .map(|(value, _)| value)
    }

    /// Like [`winding_multiplicity`](Self::winding_multiplicity), but also
    /// reports the rounding residue.
    pub fn winding_measurement(
        &self,
        center: Complex64,
        radius: f64,
        samples: usize,
    ) -> Result<(i64, f64)> {
        if samples < 64 {
            return Err(Error::Validation(format!(
                "winding needs at least 64 samples, got {samples}"
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::Validation("winding radius must be positive".into()));
        }
        let enclosed: Vec<Complex64> = self
            .zeros
            .iter()
            .chain(&self.poles)
            .map(|&(w, _)| w)
            .filter(|w| (w - center).norm() < radius)
            .collect();
        if enclosed.len() != 1 {
            return Err(Error::Validation(format!(
                "winding circle must enclose exactly one puncture, found {}",
                enclosed.len()
            )));
        }
        let tau = std::f64::consts::TAU;
        let mut total = 0.0_f64;
        let mut prev = self.value(center + Complex64::from_polar(radius, 0.0));
        for j in 1..=samples {
            let angle = tau * (j as f64) / (samples as f64);
            let next = self.value(center + Complex64::from_polar(radius, angle));
            // arg(next/prev) in (-pi, pi]; steps stay small for smooth covers
            total += (next * prev.conj()).arg();
            prev = next;
        }
        if !total.is_finite() {
            return Err(Error::Numeric("winding sum overflowed".into()));
        }
        let turns = total / tau;
        let rounded = turns.round();
        let residue = (turns - rounded).abs();
        if residue >= WINDING_TOL {
            return Err(Error::Numeric(format!(
                "winding residue {residue:.3e} exceeds tolerance: circle too close to another puncture"
            )));
        }
        Ok((rounded as i64, residue))
    }
}

/// Composite trapezoid rule over `[0, 1]` with at least `2¹⁰` panels.
fn trapezoid(f: impl Fn(f64) -> f64, samples: usize) -> f64 {
    let n = samples.max(1 << 10);
    let h = 1.0 / (n as f64);
    let mut acc = 0.5 * (f(0.0) + f(1.0));
    for j in 1..n {
        acc += f(h * (j as f64));
    }
    acc * h
}

/// Level-shift identity at a neck: realize the degree-`m` neck as the cover
/// `(s, t) ↦ (m·s, m·t mod 1)` on `[−r, r] × S¹` and compare the measured
/// cross-neck shift `∫₀¹ h₁(+r, t) dt − ∫₀¹ h₁(−r, t) dt` against `2·m·r`.
pub fn neck_shift_check(m: i64, r: f64, samples: usize) -> Result<(f64, f64)> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Validation(format!("neck length {r} must be >= 0")));
    }
    let h1 = |s: f64, _t: f64| (m as f64) * s;
    let top = trapezoid(|t| h1(r, t), samples);
    let bottom = trapezoid(|t| h1(-r, t), samples);
    let measured = top - bottom;
    let expected = 2.0 * (m as f64) * r;
    if !measured.is_finite() {
        return Err(Error::Numeric("neck quadrature overflowed".into()));
    }
    Ok((measured, expected))
}

/// Rescaled cover `a'·h`; every evaluation shifts uniformly by
/// `(log|a'|/2π, arg a'/2π)`.
pub fn scale_family(cover: &RationalCover, factor: Complex64) -> Result<RationalCover> {
    if factor.norm() == 0.0 {
        return Err(Error::Validation("scale factor must be nonzero".into()));
    }
    RationalCover::new(
        cover.zeros.clone(),
        cover.poles.clone(),
        cover.scale * factor,
    )
}

/// Random balanced cover with well-separated punctures, for stress checks.
/// Total degree per side is at most `max_degree`.
pub fn random_balanced_cover<R: Rng>(rng: &mut R, max_degree: u32) -> RationalCover {
    let max_degree = max_degree.max(1);
    let degree = rng.gen_range(1..=max_degree);
    let split = |rng: &mut R, mut left: u32| {
        let mut parts = Vec::new();
        while left > 0 {
            let m = rng.gen_range(1..=left);
            parts.push(m);
            left -= m;
        }
        parts
    };
    let zero_mults = split(rng, degree);
    let pole_mults = split(rng, degree);
    let mut points: Vec<Complex64> = Vec::new();
    let mut sample_point = |rng: &mut R| loop {
        let z = Complex64::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        if points.iter().all(|p| (p - z).norm() >= 1.0) {
            points.push(z);
            return z;
        }
    };
    let zeros = zero_mults
        .into_iter()
        .map(|m| (sample_point(rng), m))
        .collect();
    let poles = pole_mults
        .into_iter()
        .map(|m| (sample_point(rng), m))
        .collect();
    let scale = Complex64::from_polar(
        rng.gen_range(0.25..4.0),
        rng.gen_range(0.0..std::f64::consts::TAU),
    );
    RationalCover::new(zeros, poles, scale).expect("separated punctures are distinct")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn evaluate_identity_cover() {
        // h(z) = z: zero at the origin, pole at infinity left implicit
        let cover = RationalCover::new(vec![(c(0.0, 0.0), 1)], vec![], c(1.0, 0.0)).unwrap();
        let (s, t) = cover.evaluate(c(std::f64::consts::TAU.exp(), 0.0)).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(t.abs() < 1e-12 || (t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evaluate_square_cover_at_i() {
        // h(z) = z^2 at z = i: |h| = 1, arg = pi
        let cover = RationalCover::new(vec![(c(0.0, 0.0), 2)], vec![], c(1.0, 0.0)).unwrap();
        let (s, t) = cover.evaluate(c(0.0, 1.0)).unwrap();
        assert!(s.abs() < 1e-12);
        assert!((t - 0.5).abs() < 1e-12);
    }

    #[test]
    fn evaluate_matches_direct_product_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let cover = random_balanced_cover(&mut rng, 6);
            for _ in 0..10 {
                let z = c(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
                if cover
                    .zeros()
                    .iter()
                    .chain(cover.poles())
                    .any(|&(w, _)| (w - z).norm() < 1e-3)
                {
                    continue;
                }
                let direct = cover.value(z);
                let (s, t) = cover.evaluate(z).unwrap();
                let tau = std::f64::consts::TAU;
                assert!((s - direct.norm().ln() / tau).abs() < 1e-9);
                let dt = (t - (direct.arg() / tau).rem_euclid(1.0)).abs();
                assert!(dt < 1e-9 || (dt - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn evaluation_at_puncture_is_rejected() {
        let cover = RationalCover::new(vec![(c(0.0, 0.0), 1)], vec![], c(1.0, 0.0)).unwrap();
        assert!(cover.evaluate(c(0.0, 0.0)).is_err());
    }

    #[test]
    fn winding_counts_multiplicities_with_sign() {
        let cover = RationalCover::new(
            vec![(c(0.0, 0.0), 3), (c(3.0, 0.0), 1)],
            vec![(c(0.0, 3.0), 2), (c(-3.0, -3.0), 2)],
            c(2.0, 1.0),
        )
        .unwrap();
        assert_eq!(cover.winding_multiplicity(c(0.0, 0.0), 0.1, 256).unwrap(), 3);
        assert_eq!(cover.winding_multiplicity(c(3.0, 0.0), 0.1, 256).unwrap(), 1);
        assert_eq!(cover.winding_multiplicity(c(0.0, 3.0), 0.1, 256).unwrap(), -2);
        assert_eq!(
            cover.winding_multiplicity(c(-3.0, -3.0), 0.1, 256).unwrap(),
            -2
        );
    }

    #[test]
    fn winding_requires_exactly_one_puncture() {
        let cover = RationalCover::new(
            vec![(c(0.0, 0.0), 1), (c(0.5, 0.0), 1)],
            vec![(c(4.0, 0.0), 2)],
            c(1.0, 0.0),
        )
        .unwrap();
        // two punctures enclosed
        assert!(cover.winding_multiplicity(c(0.25, 0.0), 1.0, 256).is_err());
        // none enclosed
        assert!(cover.winding_multiplicity(c(-3.0, 0.0), 0.5, 256).is_err());
        // too few samples
        assert!(cover.winding_multiplicity(c(0.0, 0.0), 0.1, 32).is_err());
    }

    #[test]
    fn windings_of_balanced_cover_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let cover = random_balanced_cover(&mut rng, 8);
            let mut total = 0i64;
            for &(w, m) in cover.zeros().iter().chain(cover.poles()) {
                let got = cover.winding_multiplicity(w, 0.35, 512).unwrap();
                assert_eq!(got.unsigned_abs(), u64::from(m));
                total += got;
            }
            assert_eq!(total, 0);
        }
    }

    #[test]
    fn neck_shift_matches_two_m_r() {
        let (measured, expected) = neck_shift_check(2, 1.0, 1 << 10).unwrap();
        assert!((measured - 4.0).abs() < 1e-6);
        assert_eq!(expected, 4.0);
        let (measured, expected) = neck_shift_check(1, 0.0, 1 << 10).unwrap();
        assert_eq!(expected, 0.0);
        assert!(measured.abs() < 1e-12);
        let (measured, expected) = neck_shift_check(-3, 0.5, 1 << 10).unwrap();
        assert!((measured - (-3.0)).abs() < 1e-6);
        assert_eq!(expected, -3.0);
    }

    #[test]
    fn neck_shift_grid() {
        for m in (-5..=5i64).filter(|&m| m != 0) {
            for r in [0.25, 1.0, 4.0] {
                let (measured, expected) = neck_shift_check(m, r, 1 << 10).unwrap();
                assert!(
                    (measured - expected).abs() < 1e-6,
                    "m={m}, r={r}: {measured} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn scaling_shifts_coordinates_uniformly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cover = random_balanced_cover(&mut rng, 5);
        let tau = std::f64::consts::TAU;

        let checks: Vec<(Complex64, f64, f64)> = vec![
            (c(1.0, 0.0), 0.0, 0.0),
            (c(tau.exp(), 0.0), 1.0, 0.0),
            (c(0.0, 1.0), 0.0, 0.25),
        ];
        for (factor, ds, dt) in checks {
            let scaled = scale_family(&cover, factor).unwrap();
            for _ in 0..10 {
                let z = c(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
                if cover.evaluate(z).is_err() {
                    continue;
                }
                let (s0, t0) = cover.evaluate(z).unwrap();
                let (s1, t1) = scaled.evaluate(z).unwrap();
                assert!((s1 - s0 - ds).abs() < 1e-9);
                let wrapped = (t1 - t0 - dt).rem_euclid(1.0);
                assert!(wrapped < 1e-9 || wrapped > 1.0 - 1e-9);
            }
        }
        assert!(scale_family(&cover, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn distinctness_and_scale_validation() {
        assert!(RationalCover::new(
            vec![(c(0.0, 0.0), 1), (c(0.0, 0.0), 2)],
            vec![],
            c(1.0, 0.0)
        )
        .is_err());
        assert!(RationalCover::new(vec![(c(0.0, 0.0), 1)], vec![], c(0.0, 0.0)).is_err());
    }
}
