//! Poles of the first-order biexciton reflection amplitude.
//!
//! The relative wavefunction is continued to complex CM wavevector through
//! α_K = 2J cos K / D with k = −ln α on the principal branch. Only the
//! even (cosh) form is continued; σ^|s| cancels in every product used here.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::ModelParams;
use crate::roots;

/// Real part of the pole wavevector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PoleBranch {
    /// K′ = 0, realised when sgn D = sgn V0.
    Zero,
    /// K′ = π/2, realised when the signs differ.
    HalfPi,
}

impl PoleBranch {
    pub fn k_prime(self) -> f64 {
        match self {
            PoleBranch::Zero => 0.0,
            PoleBranch::HalfPi => FRAC_PI_2,
        }
    }

    /// The branch that carries the pole for these parameters, if any.
    pub fn select(p: &ModelParams) -> Option<Self> {
        let x = p.d * p.v0;
        if x > 0.0 {
            Some(PoleBranch::Zero)
        } else if x < 0.0 {
            Some(PoleBranch::HalfPi)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoleResult {
    pub branch: PoleBranch,
    pub k_prime: f64,
    pub k_doubleprime: f64,
    /// E_b at the complex pole, 2E0 included.
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// First-order continued-fraction ingredients at one complex K.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrder {
    /// ⟨Φ_K|V|Φ_K⟩ = 4 V0 S / N.
    pub beta: Complex64,
    /// ⟨Φ_K|V G0 V|Φ_K⟩ in the large-N closed form.
    pub gamma: Complex64,
    /// β/(β − γ), the weight of G0 V |Φ_K⟩ in the scattered state.
    pub correction: Complex64,
    /// γ/(β − γ), which equals R_b.
    pub reflection: Complex64,
}

/// Relative wavefunction at complex K as a scaled cosh profile.
///
/// Values are multiplied by e^{−k(N/2−1)} so that the largest term is O(1)
/// whatever the size of Re k. Returns samples for |s| = 0..N−1 (index |s|)
/// and the unconjugated sum Σ_{0<|s|<N} φ².
fn continued_profile(k: Complex64, p: &ModelParams) -> Result<(Vec<Complex64>, Complex64)> {
    let alpha = 2.0 * p.j * k.cos() / p.d;
    if !(alpha.norm() > 0.0) || !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::Range(format!("α_K = {alpha} at K = {k} has no finite logarithm")));
    }
    let mut ki = -alpha.ln();
    if ki.re < 0.0 {
        ki = -ki;
    }
    if !ki.re.is_finite() || ki.re * (p.n as f64) > 1e300 {
        return Err(Error::Range(format!("relative decay rate {ki} overflows at K = {k}")));
    }
    let h = p.n as f64 / 2.0;
    let f: Vec<Complex64> = (0..p.n)
        .map(|a| {
            if a == 0 {
                return Complex64::new(0.0, 0.0);
            }
            let x = h - a as f64;
            0.5 * ((ki * (x - h + 1.0)).exp() + (-ki * (x + h - 1.0)).exp())
        })
        .collect();
    // |s| = 1..N−1 each appear twice in (−N, N)
    let norm2: Complex64 = f.iter().skip(1).map(|v| 2.0 * v * v).sum();
    if !(norm2.norm() > 0.0) || !norm2.re.is_finite() {
        return Err(Error::Range(format!("normalization of φ at K = {k} is {norm2}")));
    }
    Ok((f, norm2))
}

/// S(K′, K″) = Σ_{s=−N/2+1}^{N/2} e^{−2|K″||s|} φ_{K′−i|K″|}(s) φ_{K′+i|K″|}(s).
///
/// The weight uses |s|; with signed s the sum is dominated by its negative
/// end and grows like e^{|K″|N}.
pub fn s_function(k_prime: f64, k_doubleprime: f64, p: &ModelParams) -> Result<f64> {
    p.validate()?;
    let y = k_doubleprime.abs();
    let km = Complex64::new(k_prime, -y);
    let kp = Complex64::new(k_prime, y);
    let (fm, nm) = continued_profile(km, p)?;
    let (fp, np) = continued_profile(kp, p)?;
    let half = p.half();
    let mut sum = Complex64::new(0.0, 0.0);
    for s in (-half + 1)..=half {
        let a = s.unsigned_abs() as usize;
        sum += (-2.0 * y * a as f64).exp() * fm[a] * fp[a];
    }
    let s = sum / (nm * np).sqrt();
    if !s.re.is_finite() {
        return Err(Error::Range(format!("S({k_prime}, {k_doubleprime}) is not finite")));
    }
    if s.im.abs() > 1e-10 * s.norm().max(1e-300) {
        return Err(Error::numerical(format!("S({k_prime}, {k_doubleprime}) is not real"), s.im));
    }
    Ok(s.re)
}

fn twice_dv0_s(k: Complex64, p: &ModelParams) -> Result<f64> {
    if p.v0 == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * p.d * p.v0 * s_function(k.re, k.im, p)?)
}

/// R_b(K) = 2iDV0 S / (J² sin 2K̃ − 2iDV0 S) with K̃ = K′ + i|K″|.
pub fn biexciton_reflection_amplitude(k: Complex64, p: &ModelParams) -> Result<Complex64> {
    let x = twice_dv0_s(k, p)?;
    if x == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let kt = Complex64::new(k.re, k.im.abs());
    let den = p.j * p.j * (2.0 * kt).sin() - Complex64::new(0.0, x);
    if den.norm() <= 1e-13 * (p.j * p.j).max(x.abs()) {
        return Err(Error::Pole(format!("R_b diverges at K = {k}")));
    }
    Ok(Complex64::new(0.0, x) / den)
}

/// β, γ and the first-order scattered-state weights at complex K.
pub fn continued_fraction_first_order(k: Complex64, p: &ModelParams) -> Result<FirstOrder> {
    let zero = Complex64::new(0.0, 0.0);
    let nf = p.n as f64;
    let beta = if p.v0 == 0.0 {
        zero
    } else {
        Complex64::new(4.0 * p.v0 * s_function(k.re, k.im, p)? / nf, 0.0)
    };
    let kt = Complex64::new(k.re, k.im.abs());
    let sin2 = (2.0 * kt).sin();
    if sin2.norm() < 1e-14 {
        return Err(Error::Pole(format!("sin 2K vanishes at K = {k}")));
    }
    let gamma = Complex64::new(0.0, nf * p.d) * beta * beta / (2.0 * p.j * p.j * sin2);
    if beta == zero {
        return Ok(FirstOrder { beta, gamma, correction: zero, reflection: zero });
    }
    let den = beta - gamma;
    if den.norm() <= 1e-13 * beta.norm() {
        return Err(Error::Pole(format!("β − γ vanishes at K = {k}")));
    }
    Ok(FirstOrder {
        beta,
        gamma,
        correction: beta / den,
        reflection: gamma / den,
    })
}

/// sinh 2K″ − 2DV0 S(K′, K″) / (J² cos 2K′).
pub fn pole_equation(branch: PoleBranch, k_doubleprime: f64, p: &ModelParams) -> Result<f64> {
    let kp = branch.k_prime();
    let c = (2.0 * kp).cos();
    Ok((2.0 * k_doubleprime).sinh() - 2.0 * p.d * p.v0 * s_function(kp, k_doubleprime, p)? / (p.j * p.j * c))
}

/// 2E0 + D(1 + α_K²) at complex K; real on both pole branches.
pub fn pole_energy(k: Complex64, p: &ModelParams) -> f64 {
    let a = 2.0 * p.j * k.cos() / p.d;
    (2.0 * p.e0 + p.d * (1.0 + a * a)).re
}

/// Pole on the branch picked by the signs of D and V0.
pub fn find_pole(p: &ModelParams) -> Result<PoleResult> {
    p.require_biexciton()?;
    let branch = PoleBranch::select(p).ok_or_else(|| Error::Existence("no pole for D V0 = 0".into()))?;
    find_pole_on_branch(branch, p)
}

const POLE_TOL: f64 = 1e-10;
const MAX_ITER: usize = 500;

/// Damped fixed-point iteration on K″ = ½ arsinh(2DV0 S / J² cos 2K′),
/// finished by a bracketed solve of the pole equation.
pub fn find_pole_on_branch(branch: PoleBranch, p: &ModelParams) -> Result<PoleResult> {
    p.require_biexciton()?;
    let kp = branch.k_prime();
    let c = (2.0 * kp).cos();
    let lo = 1e-8;
    let rhs = |y: f64| -> Result<f64> { Ok(2.0 * p.d * p.v0 * s_function(kp, y, p)? / (p.j * p.j * c)) };
    if rhs(lo)? <= 0.0 {
        return Err(Error::Existence(format!("branch {branch:?} has no pole for D = {}, V0 = {}", p.d, p.v0)));
    }

    let mut y = 0.5 * rhs(lo)?.asinh();
    let damp = 0.5;
    let mut iterations = 0;
    let mut trace = Vec::new();
    while iterations < MAX_ITER {
        iterations += 1;
        let next = 0.5 * rhs(y)?.asinh();
        let r = (2.0 * y).sinh() - rhs(y)?;
        trace.push(r);
        if r.abs() < POLE_TOL {
            break;
        }
        y = (1.0 - damp) * y + damp * next;
    }

    let g = |x: f64| pole_equation(branch, x, p).unwrap_or(f64::NAN);
    let mut residual = g(y).abs();
    if residual >= POLE_TOL || !residual.is_finite() {
        // widen around the fixed-point estimate until the sign changes
        let (mut a, mut b) = (y.max(lo) * 0.5, y.max(lo) * 2.0);
        let mut widen = 0;
        while g(a) * g(b) > 0.0 && widen < 60 {
            a = (a * 0.5).max(lo);
            b *= 2.0;
            widen += 1;
        }
        let root = roots::bracketed(g, a, b, POLE_TOL * 1e-2).map_err(|_| {
            Error::numerical(
                format!("pole iteration did not converge; last residuals {:?}", &trace[trace.len().saturating_sub(5)..]),
                residual,
            )
        })?;
        y = root.x;
        residual = g(y).abs();
        iterations += 1;
    }
    if residual >= POLE_TOL {
        return Err(Error::numerical("pole equation residual above tolerance", residual));
    }
    Ok(PoleResult {
        branch,
        k_prime: kp,
        k_doubleprime: y,
        energy: pole_energy(Complex64::new(kp, y), p),
        residual,
        iterations,
    })
}

/// |R_b(K′ + iK″)| over a K″ grid; divergent points report +∞.
pub fn reflection_scan(k_prime: f64, grid: &[f64], p: &ModelParams) -> Result<Vec<(f64, f64)>> {
    grid.iter()
        .map(|&y| match biexciton_reflection_amplitude(Complex64::new(k_prime, y), p) {
            Ok(r) => Ok((y, r.norm())),
            Err(Error::Pole(_)) => Ok((y, f64::INFINITY)),
            Err(e) => Err(e),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(v0: f64) -> ModelParams {
        ModelParams::new(40, 1.0, 4.0, 0.0, v0).unwrap()
    }

    // unscaled cosh sums, independent of the scaled implementation
    fn s_direct(kp: f64, y: f64, p: &ModelParams) -> f64 {
        let n = p.n as i64;
        let prof = |k: Complex64| {
            let a = 2.0 * p.j * k.cos() / p.d;
            let ki = -a.ln();
            let f = move |s: i64| (ki * (n as f64 / 2.0 - s.abs() as f64)).cosh();
            let norm2: Complex64 = (-n + 1..n).filter(|&s| s != 0).map(|s| f(s) * f(s)).sum();
            (f, norm2)
        };
        let (fm, nm) = prof(Complex64::new(kp, -y));
        let (fp, np) = prof(Complex64::new(kp, y));
        let mut t = Complex64::new(0.0, 0.0);
        for s in (-n / 2 + 1)..=(n / 2) {
            if s != 0 {
                t += (-2.0 * y * s.abs() as f64).exp() * fm(s) * fp(s);
            }
        }
        (t / (nm * np).sqrt()).re
    }

    #[test]
    fn s_matches_direct_sum() {
        let p = params(0.25);
        let a = s_function(0.0, 0.1, &p).unwrap();
        let b = s_direct(0.0, 0.1, &p);
        assert!((a - b).abs() < 1e-12, "{a} {b}");
        let a = s_function(FRAC_PI_2, 0.3, &p).unwrap();
        let b = s_direct(FRAC_PI_2, 0.3, &p);
        assert!((a - b).abs() < 1e-12, "{a} {b}");
    }

    #[test]
    fn s_is_positive_and_v0_free() {
        let a = s_function(0.0, 0.0, &params(0.25)).unwrap();
        let b = s_function(0.0, 0.0, &params(-3.0)).unwrap();
        assert!(a > 0.0 && a == b);
        for y in [0.05, 0.2, 0.7] {
            assert!(s_function(0.0, y, &params(1.0)).unwrap() > 0.0);
            assert!(s_function(FRAC_PI_2, y, &params(1.0)).unwrap() > 0.0);
            assert!(s_function(0.4, y, &params(1.0)).unwrap().is_finite());
        }
    }

    #[test]
    fn zone_edge_delta_limit_and_range_error() {
        // φ sits on |s| = 1 and |s| = N − 1; only s = ±1 fall in the sum
        let s = s_function(FRAC_PI_2, 0.0, &params(1.0)).unwrap();
        assert!((s - 0.5).abs() < 1e-12, "{s}");
        assert!(matches!(s_function(0.0, 1000.0, &params(1.0)), Err(Error::Range(_))));
    }

    #[test]
    fn reflection_vanishes_without_impurity() {
        let r = biexciton_reflection_amplitude(Complex64::new(0.0, 0.3), &params(0.0)).unwrap();
        assert_eq!(r, Complex64::new(0.0, 0.0));
        let f = continued_fraction_first_order(Complex64::new(0.3, 0.1), &params(0.0)).unwrap();
        assert_eq!(f.beta, Complex64::new(0.0, 0.0));
        assert_eq!(f.correction, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn beta_is_s_at_real_k() {
        let p = params(0.25);
        let f = continued_fraction_first_order(Complex64::new(0.3, 0.0), &p).unwrap();
        let s = s_function(0.3, 0.0, &p).unwrap();
        assert!((f.beta.re - 4.0 * 0.25 * s / 40.0).abs() < 1e-15);
    }

    #[test]
    fn reflection_from_beta_gamma() {
        for v0 in [0.25, -0.25, 0.1] {
            let p = params(v0);
            for k in [Complex64::new(0.0, 0.2), Complex64::new(FRAC_PI_2, 0.4), Complex64::new(0.7, 0.1)] {
                let f = continued_fraction_first_order(k, &p).unwrap();
                let r = biexciton_reflection_amplitude(k, &p).unwrap();
                assert!((f.reflection - r).norm() < 1e-10 * r.norm().max(1.0), "{k} {r} {}", f.reflection);
            }
        }
    }

    #[test]
    fn branches_follow_sign_rule() {
        let a = find_pole(&params(0.25)).unwrap();
        assert_eq!(a.branch, PoleBranch::Zero);
        assert!(a.residual <= 1e-10 && a.k_doubleprime > 0.0);
        let b = find_pole(&params(-0.25)).unwrap();
        assert_eq!(b.branch, PoleBranch::HalfPi);
        assert!(b.residual <= 1e-10);
        assert!(find_pole_on_branch(PoleBranch::HalfPi, &params(0.25)).is_err());
        assert!(find_pole_on_branch(PoleBranch::Zero, &params(-0.25)).is_err());
    }

    #[test]
    fn single_divergence_along_imaginary_axis() {
        let p = params(0.25);
        let pole = find_pole(&p).unwrap();
        let grid: Vec<f64> = (1..=400).map(|i| i as f64 * 0.005).collect();
        let scan = reflection_scan(0.0, &grid, &p).unwrap();
        let peak = scan.iter().cloned().fold((0.0, 0.0), |m, x| if x.1 > m.1 { x } else { m });
        assert!((peak.0 - pole.k_doubleprime).abs() < 0.01);
        // exactly one contiguous stretch where |R_b| is large
        let big: Vec<bool> = scan.iter().map(|x| x.1 > 10.0).collect();
        let runs = big.windows(2).filter(|w| !w[0] && w[1]).count() + usize::from(big[0]);
        assert_eq!(runs, 1);
        // the denominator's real part changes sign at the root
        let den = |y: f64| p.j * p.j * (2.0 * y).sinh() - 2.0 * p.d * p.v0 * s_function(0.0, y, &p).unwrap();
        assert!(den(pole.k_doubleprime).abs() < 1e-9);
    }

    #[test]
    fn pole_energies_are_outside_the_band() {
        let a = find_pole(&params(0.25)).unwrap();
        let b = find_pole(&params(-0.25)).unwrap();
        // band spans D to D(1 + 1/4) for D = 4J
        assert!(a.energy > 5.0);
        assert!(b.energy < 4.0);
    }
}
