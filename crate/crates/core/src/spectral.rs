//! Dispersion quartic, critical speed, tail decay rate and the principal
//! eigenvalue threshold for habitat length.

use nalgebra::{Complex, Matrix4};
use serde::{Deserialize, Serialize};

use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::real::Real;

/// Coefficients `[c0, c1, c2, c3, c4]` (ascending powers) of
/// `(d1 l^2 - s l - a)(d2 l^2 - s l - d) - bc`.
pub fn quartic_coefficients<T: Real>(params: &ModelParams<T>, s: T) -> [T; 5] {
    let ModelParams { d1, d2, a, b, c, d, .. } = *params;
    [
        a * d - b * c,
        s * (a + d),
        s * s - d1 * d - a * d2,
        -s * (d1 + d2),
        d1 * d2,
    ]
}

/// Evaluates the dispersion quartic in its factored form.
pub fn eval_quartic<T: Real>(params: &ModelParams<T>, s: T, lambda: Complex<T>) -> Complex<T> {
    let l2 = lambda * lambda;
    let sc = Complex::new(s, T::zero());
    let p1 = l2 * params.d1 - sc * lambda - Complex::new(params.a, T::zero());
    let p2 = l2 * params.d2 - sc * lambda - Complex::new(params.d, T::zero());
    p1 * p2 - Complex::new(params.b * params.c, T::zero())
}

#[inline]
fn modulus<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

fn horner<T: Real>(coeffs: &[T; 5], z: Complex<T>) -> (Complex<T>, Complex<T>) {
    let mut p = Complex::new(coeffs[4], T::zero());
    let mut dp = Complex::new(T::zero(), T::zero());
    for k in (0..4).rev() {
        dp = dp * z + p;
        p = p * z + Complex::new(coeffs[k], T::zero());
    }
    (p, dp)
}

fn horner_real<T: Real>(coeffs: &[T; 5], x: T) -> (T, T, T) {
    let (mut p, mut dp, mut ddp) = (coeffs[4], T::zero(), T::zero());
    for k in (0..4).rev() {
        ddp = ddp * x + dp * T::lit(2.0);
        dp = dp * x + p;
        p = p * x + coeffs[k];
    }

    (p, dp, ddp)
}

/// Rounding-level bound on evaluating the quartic at `x`.
fn eval_noise<T: Real>(coeffs: &[T; 5], x: T) -> T {
    let ax = x.abs();
    let mut pow = T::one();
    let mut sum = T::zero();
    for c in coeffs {
        sum += c.abs() * pow;
        pow *= ax;
    }
    T::lit(16.0) * T::EPS * sum
}

/// Reality tolerance for an eigenvalue of magnitude `|z|`.
fn reality_tol<T: Real>(z: Complex<T>) -> T {
    T::lit(1e-9).max(T::EPS * T::lit(1e3)) * (T::one() + modulus(z))
}

/// Imaginary parts below this band may be eigensolver noise around a
/// (near-)double real root and are re-examined on the real axis.
fn collision_band<T: Real>(z: Complex<T>) -> T {
    T::lit(1e-5) * (T::one() + modulus(z))
}

/// Four roots of a quartic with leading coefficient `coeffs[4] != 0`,
/// via the eigenvalues of its companion matrix, each polished by Newton.
pub fn quartic_roots_of(coeffs: &[f64; 5]) -> [Complex<f64>; 4] {
    companion_roots(coeffs)
}

fn companion_roots<T: Real>(coeffs: &[T; 5]) -> [Complex<T>; 4] {
    let lead = coeffs[4];
    let mut m = Matrix4::<T>::zeros();
    for i in 1..4 {
        m[(i, i - 1)] = T::one();
    }
    for k in 0..4 {
        m[(k, 3)] = -coeffs[k] / lead;
    }
    let eig = m.complex_eigenvalues();
    let mut roots = [Complex::new(T::zero(), T::zero()); 4];
    for (slot, z) in roots.iter_mut().zip(eig.iter()) {
        *slot = polish(coeffs, *z);
    }
    roots
}

fn polish<T: Real>(coeffs: &[T; 5], mut z: Complex<T>) -> Complex<T> {
    let (mut pz, _) = horner(coeffs, z);
    for _ in 0..4 {
        let (_, dp) = horner(coeffs, z);
        if modulus(dp) == T::zero() {
            break;
        }
        let trial = z - pz / dp;
        let (pt, _) = horner(coeffs, trial);
        if modulus(pt) < modulus(pz) {
            z = trial;
            pz = pt;
        } else {
            break;
        }
    }
    z
}

/// Roots of the dispersion quartic at a given speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticRoots<T = f64> {
    /// Sorted by real part, then imaginary part.
    pub roots: [Complex<T>; 4],
    pub all_real: bool,
}

impl<T: Real> QuarticRoots<T> {
    /// Real roots (imaginary parts dropped), ascending.
    pub fn real_roots(&self) -> Vec<T> {
        self.roots
            .iter()
            .filter(|z| z.im == T::zero())
            .map(|z| z.re)
            .collect()
    }
}

/// Locates and classifies the roots of a real quartic.
///
/// Roots whose imaginary part is within `1e-9 (1 + |z|)` are real. A
/// conjugate pair inside the wider collision band is re-examined on the real
/// axis: the quartic's local extremum next to the pair decides whether two
/// real roots exist there (sign change, or a zero within rounding).
pub fn classify_quartic<T: Real>(coeffs: &[T; 5]) -> QuarticRoots<T> {
    let mut roots = companion_roots(coeffs);
    let mut handled = [false; 4];
    for i in 0..4 {
        if handled[i] {
            continue;
        }
        let z = roots[i];
        if z.im.abs() <= reality_tol(z) {
            roots[i] = Complex::new(z.re, T::zero());
            handled[i] = true;
            continue;
        }
        // partner: the closest remaining root to the conjugate
        let partner = (0..4)
            .filter(|&j| j != i && !handled[j])
            .min_by(|&j, &k| {
                let dj = modulus(roots[j] - z.conj());
                let dk = modulus(roots[k] - z.conj());
                dj.partial_cmp(&dk).unwrap_or(std::cmp::Ordering::Equal)
            });
        let Some(j) = partner else { continue };
        if z.im.abs() > collision_band(z) {
            handled[i] = true;
            handled[j] = true;
            continue;
        }
        if let Some((r1, r2)) = resolve_collision(coeffs, z.re) {
            roots[i] = Complex::new(r1, T::zero());
            roots[j] = Complex::new(r2, T::zero());
        }
        handled[i] = true;
        handled[j] = true;
    }
    roots.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let all_real = roots.iter().all(|z| z.im == T::zero());
    QuarticRoots { roots, all_real }
}

/// Two real roots near `x0` when the quartic's nearby extremum reaches zero.
fn resolve_collision<T: Real>(coeffs: &[T; 5], x0: T) -> Option<(T, T)> {
    let mut x = x0;
    for _ in 0..50 {
        let (_, dp, ddp) = horner_real(coeffs, x);
        if ddp == T::zero() {
            break;
        }
        let step = dp / ddp;
        x -= step;
        if step.abs() <= T::EPS * (T::one() + x.abs()) {
            break;
        }
    }
    let (p, _, ddp) = horner_real(coeffs, x);
    let noise = eval_noise(coeffs, x);
    if p.abs() <= noise {
        return Some((x, x));
    }
    if p * ddp > T::zero() || ddp == T::zero() {
        return None;
    }
    let half_gap = (-T::lit(2.0) * p / ddp).sqrt();
    let refine = |mut r: T| {
        for _ in 0..8 {
            let (pr, dpr, _) = horner_real(coeffs, r);
            if dpr == T::zero() || pr.abs() <= noise {
                break;
            }
            let next = r - pr / dpr;
            if !next.is_finite() || (next - x).abs() > T::lit(2.0) * half_gap + noise {
                break;
            }
            r = next;
        }
        r
    };
    Some((refine(x - half_gap), refine(x + half_gap)))
}

/// Roots of the dispersion quartic at speed `s`.
pub fn quartic_roots<T: Real>(params: &ModelParams<T>, s: T) -> QuarticRoots<T> {
    classify_quartic(&quartic_coefficients(params, s))
}

/// Result of the critical-speed bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CriticalSpeed<T = f64> {
    /// Upper bracket end: every speed from here on has four real roots.
    pub s_star: T,
    /// Lower bracket end, where a complex pair is present.
    pub lower: T,
}

fn margin_check<T: Real>(params: &ModelParams<T>) -> Result<()> {
    if !(params.cooperation_margin() > T::zero()) {
        return Err(Error::Domain(
            "bc−ad must be positive for the spectral thresholds".into(),
        ));
    }
    Ok(())
}

/// Smallest speed from which all four roots of the dispersion quartic stay
/// real, by bisection on the all-real predicate with a guard scan above.
pub fn critical_speed<T: Real>(params: &ModelParams<T>, tol: T) -> Result<T> {
    critical_speed_bracket(params, tol).map(|c| c.s_star)
}

pub fn critical_speed_bracket<T: Real>(params: &ModelParams<T>, tol: T) -> Result<CriticalSpeed<T>> {
    margin_check(params)?;
    if !(tol > T::zero()) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let real_at = |s: T| quartic_roots(params, s).all_real;
    let cap = T::lit(1e3) * T::one().max((params.a + params.d).sqrt());
    let guards = [T::lit(1.5), T::lit(2.0), T::lit(4.0)];
    let mut lo = T::zero();
    if real_at(lo) {
        return Err(Error::numerical("dispersion quartic already real at s = 0", 0.0));
    }
    loop {
        // seed an all-real upper end above `lo`
        let mut hi = lo.max(T::lit(0.5));
        loop {
            hi *= T::lit(2.0);
            if hi > cap {
                return Err(Error::numerical(
                    format!("no all-real speed found below {cap}"),
                    hi.as_f64(),
                ));
            }
            if real_at(hi) {
                break;
            }
            lo = hi;
        }
        while hi - lo > tol {
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if real_at(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        match guards.iter().map(|&g| g * hi).find(|&s| !real_at(s)) {
            None => return Ok(CriticalSpeed { s_star: hi, lower: lo }),
            Some(bad) => lo = bad,
        }
    }
}

/// Decay rate of a semi-wave towards the equilibrium at speed `s`: minus the
/// largest negative real root of the quartic linearised at `(u*, v*)`.
pub fn tail_rate<T: Real>(params: &ModelParams<T>, s: T, eq: &Equilibrium<T>) -> Result<T> {
    if !(s >= T::zero()) {
        return Err(Error::Domain("speed must be nonnegative".into()));
    }
    let shifted = params.with_shifted_mortality(
        params.f_spec.derivative(eq.u_star),
        params.g_spec.derivative(eq.v_star),
    );
    let roots = quartic_roots(&shifted, s);
    roots
        .real_roots()
        .into_iter()
        .filter(|&r| r < T::zero())
        .fold(None, |best: Option<T>, r| Some(best.map_or(r, |b| b.max(r))))
        .map(|r| -r)
        .ok_or_else(|| {
            Error::Assertion(format!("linearised quartic has no negative real root at s = {s}"))
        })
}

/// Principal eigenpair of the cooperative problem on `(-l, l)` with zero
/// boundary values; the eigenfunction is `(weight * cos(kx), cos(kx))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PrincipalEigen<T = f64> {
    pub value: T,
    /// Ratio of the first to the second component of the eigenvector.
    pub weight: T,
}

pub fn principal_eigenpair<T: Real>(params: &ModelParams<T>, l: T) -> Result<PrincipalEigen<T>> {
    if !(l > T::zero()) {
        return Err(Error::Domain("half-length must be positive".into()));
    }
    let k = T::pi() / (T::lit(2.0) * l);
    let k2 = k * k;
    let p = params.d1 * k2 + params.a;
    let q = params.d2 * k2 + params.d;
    let half_gap = (p - q) * T::lit(0.5);
    let root = (half_gap * half_gap + params.b * params.c).sqrt();
    let value = (p + q) * T::lit(0.5) - root;
    Ok(PrincipalEigen {
        value,
        weight: params.b / (half_gap + root),
    })
}

/// Smaller eigenvalue of `[[d1 k^2 + a, -b], [-c, d2 k^2 + d]]`, `k = pi/(2l)`.
pub fn principal_eigenvalue<T: Real>(params: &ModelParams<T>, l: T) -> Result<T> {
    principal_eigenpair(params, l).map(|e| e.value)
}

/// Half-length at which the principal eigenvalue changes sign.
///
/// Bisection runs to full precision; `tol` bounds the accepted bracket.
pub fn critical_length<T: Real>(params: &ModelParams<T>, tol: T) -> Result<T> {
    margin_check(params)?;
    if !(tol > T::zero()) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let lambda = |l: T| principal_eigenvalue(params, l).expect("positive length");
    let mut lo = T::one();
    while lambda(lo) <= T::zero() {
        lo *= T::lit(0.5);
    }
    let mut hi = T::one();
    while lambda(hi) >= T::zero() {
        hi *= T::lit(2.0);
    }
    if hi < lo {
        std::mem::swap(&mut hi, &mut lo);
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if lambda(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    debug_assert!(hi - lo <= tol);
    Ok((lo + hi) * T::lit(0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SpectralSummary<T = f64> {
    pub s_star: T,
    /// Speed at which the tail rate was evaluated.
    pub speed: T,
    pub mu_hat1: T,
    /// Half-length at which the principal eigenvalue was evaluated.
    pub half_length: T,
    pub lambda0: T,
    pub l_star: T,
}

/// Bundles the spectral quantities for one instance.
pub fn spectral_summary<T: Real>(
    params: &ModelParams<T>,
    eq: &Equilibrium<T>,
    speed: T,
    half_length: T,
    tol: T,
) -> Result<SpectralSummary<T>> {
    Ok(SpectralSummary {
        s_star: critical_speed(params, tol)?,
        speed,
        mu_hat1: tail_rate(params, speed, eq)?,
        half_length,
        lambda0: principal_eigenvalue(params, half_length)?,
        l_star: critical_length(params, tol)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    type P = ModelParams<f64>;

    fn r() -> P {
        P::reference()
    }

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn quartic_at_origin_is_ad_minus_bc() {
        for s in [0.0, 0.7, 3.0] {
            assert_eq!(eval_quartic(&r(), s, c(0.0, 0.0)), c(-3.0, 0.0));
        }
    }

    #[test]
    fn quartic_zeros_from_factorisation() {
        assert!(eval_quartic(&r(), 0.0, c(3f64.sqrt(), 0.0)).norm() < 1e-14);
        assert!(eval_quartic(&r(), 0.0, c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn coefficients_match_factored_form() {
        let p = P { d1: 0.7, d2: 1.9, a: 0.4, d: 1.3, b: 2.2, c: 0.9, ..r() };
        let coeffs = quartic_coefficients(&p, 1.1);
        for z in [c(0.3, -0.4), c(-2.0, 0.0), c(1.5, 2.5)] {
            let (h, _) = horner(&coeffs, z);
            assert!((h - eval_quartic(&p, 1.1, z)).norm() < 1e-12);
        }
    }

    #[test]
    fn roots_at_zero_speed() {
        let q = quartic_roots(&r(), 0.0);
        assert!(!q.all_real);
        let s3 = 3f64.sqrt();
        let expected = [c(-s3, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(s3, 0.0)];
        for (z, e) in q.roots.iter().zip(expected) {
            assert!((z - e).norm() < 1e-12, "{z} vs {e}");
        }
    }

    #[test]
    fn roots_real_above_threshold() {
        assert!(quartic_roots(&r(), 3.0).all_real);
        let q = quartic_roots(&r(), 2.0);
        assert!(q.all_real, "{:?}", q.roots);
        let near_one = q.roots.iter().filter(|z| (z.re - 1.0).abs() < 1e-6).count();
        assert_eq!(near_one, 2, "{:?}", q.roots);
    }

    #[test]
    fn collision_resolution_just_below_and_above() {
        assert!(!quartic_roots(&r(), 2.0 - 1e-12).all_real);
        assert!(quartic_roots(&r(), 2.0 + 1e-12).all_real);
    }

    #[test]
    fn reference_critical_speed() {
        let s = critical_speed(&r(), 1e-8).unwrap();
        assert!((s - 2.0).abs() <= 1e-8, "{s}");
        let coarse = critical_speed(&r(), 1e-3).unwrap();
        assert!((coarse - s).abs() <= 1e-3);
        let bracket = critical_speed_bracket(&r(), 1e-8).unwrap();
        assert!(bracket.s_star - bracket.lower <= 1e-8);
        assert!(!quartic_roots(&r(), bracket.lower).all_real);
    }

    #[test]
    fn critical_speed_vanishes_at_marginal_cooperation() {
        let p = P { b: 1.001, c: 1.001, ..r() };
        let s = critical_speed(&p, 1e-8).unwrap();
        assert!(s > 0.0 && s < 0.2, "{s}");
        // dense scan oracle on the grid 0.001 k
        let first_real = (1..2000)
            .map(|k| 0.001 * k as f64)
            .find(|&x| quartic_roots(&p, x).all_real)
            .unwrap();
        assert!((first_real - s).abs() <= 0.001 + 1e-8, "{first_real} vs {s}");
    }

    #[test]
    fn tail_rate_closed_form() {
        let eq = Equilibrium { u_star: 1.0, v_star: 1.0 };
        for s in [0.0, 0.5, 1.0, 1.5, 1.9] {
            let expected = ((s * s + 4.0f64).sqrt() - s) / 2.0;
            let got = tail_rate(&r(), s, &eq).unwrap();
            assert!((got - expected).abs() < 1e-10, "s={s}: {got} vs {expected}");
        }
        assert!((tail_rate(&r(), 1.0, &eq).unwrap() - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn principal_eigenvalue_closed_form() {
        for l in [0.5, 1.0, PI / 2.0, 3.0, 10.0] {
            let k = PI / (2.0 * l);
            let got = principal_eigenvalue(&r(), l).unwrap();
            assert!((got - (k * k - 1.0)).abs() < 1e-10);
        }
        assert!(principal_eigenvalue(&r(), PI / 2.0).unwrap().abs() < 1e-14);
        assert!((principal_eigenvalue(&r(), 1e8).unwrap() + 1.0).abs() < 1e-10);
        let pair = principal_eigenpair(&r(), 2.0).unwrap();
        assert!(pair.weight > 0.0);
    }

    #[test]
    fn critical_lengths() {
        let l = critical_length(&r(), 1e-8).unwrap();
        assert!((l - PI / 2.0).abs() < 1e-8);
        let l4 = critical_length(&P { d1: 4.0, d2: 4.0, ..r() }, 1e-8).unwrap();
        assert!((l4 - PI).abs() < 1e-8);
        let weak = critical_length(&P { b: 1.1, c: 1.1, ..r() }, 1e-8).unwrap();
        assert!(weak > l);
        assert!(principal_eigenvalue(&r(), l).unwrap().abs() < 1e-10);
    }

    #[test]
    fn thresholds_need_cooperation_margin() {
        let p = P { b: 0.5, c: 0.5, ..r() };
        assert!(critical_speed(&p, 1e-6).is_err());
        assert!(critical_length(&p, 1e-6).is_err());
    }

    #[test]
    fn general_quartic_roots() {
        // (x-1)(x+2)(x^2+1) = x^4 + x^3 - x^2 + x - 2
        let roots = quartic_roots_of(&[-2.0, 1.0, -1.0, 1.0, 1.0]);
        for e in [c(1.0, 0.0), c(-2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)] {
            assert!(roots.iter().any(|z| (z - e).norm() < 1e-12));
        }
    }

    #[test]
    fn single_precision_spectra() {
        let p = ModelParams::<f32>::reference();
        let s = critical_speed(&p, 1e-4f32).unwrap();
        assert!((s - 2.0).abs() < 1e-3, "{s}");
        let l = critical_length(&p, 1e-5f32).unwrap();
        assert!((l - std::f32::consts::FRAC_PI_2).abs() < 1e-5);
    }
}
