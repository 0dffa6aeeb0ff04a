//! One exciton on the ring with a single impurity at site 0.
//!
//! Antisymmetric states (ψ(−n) = −ψ(n)) never see the impurity and keep the
//! free wavevectors 2πν/N. Symmetric states obey
//! `tan(k N/2) sin k = −V0/2J`, which has N/2 real roots plus one complex
//! root `k = i κ` (V0/J > 0) or `k = π + i κ` (V0/J < 0).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::ModelParams;
use crate::roots;

/// Separation from the band edge below which a state is not called bound.
pub const BOUND_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcitonBoundState {
    /// `k′ + i k″` with k′ ∈ {0, π}.
    #[serde(serialize_with = "ser_complex")]
    pub k: Complex64,
    pub energy: f64,
    /// |ψ(n)| for n = −N/2+1 ..= N/2, unit norm.
    pub amplitude_profile: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcitonSpectrum {
    pub antisymmetric_k: Vec<f64>,
    pub symmetric_k: Vec<f64>,
    pub bound: Option<ExcitonBoundState>,
    /// tan(k_s N/2) for each symmetric root.
    pub alpha_mix: Vec<f64>,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

impl ExcitonSpectrum {
    /// All N energies (antisymmetric, symmetric, bound), unsorted.
    pub fn energies(&self, p: &ModelParams) -> Vec<f64> {
        let disp = |k: f64| p.e0 + 2.0 * p.j * k.cos();
        let mut e: Vec<f64> = self.antisymmetric_k.iter().map(|&k| disp(k)).collect();
        e.extend(self.symmetric_k.iter().map(|&k| disp(k)));
        if let Some(b) = &self.bound {
            e.push(b.energy);
        }
        e
    }
}

/// E0 + 2J cos k; real whenever k′ ∈ {0, π}.
pub fn exciton_dispersion(k: Complex64, p: &ModelParams) -> Complex64 {
    p.e0 + 2.0 * p.j * k.cos()
}

/// Infinite-N bound wavevector: `i arsinh(V0/2J)` or `π − i arsinh(V0/2J)`.
pub fn exciton_bound_wavevector_large_n(p: &ModelParams) -> Result<Complex64> {
    if p.v0 == 0.0 || p.j == 0.0 {
        return Err(Error::Parameter("bound wavevector needs V0 != 0 and J != 0".into()));
    }
    let x = (p.v0 / (2.0 * p.j)).asinh();
    Ok(if p.v0.signum() == p.j.signum() {
        Complex64::new(0.0, x)
    } else {
        Complex64::new(PI, -x)
    })
}

/// The symmetric-sector quantization function tan(kN/2) sin k + V0/2J.
fn symmetric_condition(k: f64, p: &ModelParams) -> f64 {
    (k * p.n as f64 / 2.0).tan() * k.sin() + p.v0 / (2.0 * p.j)
}

pub fn solve_exciton_spectrum(p: &ModelParams) -> Result<ExcitonSpectrum> {
    p.validate()?;
    let n = p.n;
    let nf = n as f64;
    let antisymmetric_k: Vec<f64> = (1..n / 2).map(|nu| 2.0 * PI * nu as f64 / nf).collect();

    if p.v0 == 0.0 {
        let symmetric_k: Vec<f64> = (0..=n / 2).map(|j| 2.0 * PI * j as f64 / nf).collect();
        let alpha_mix = symmetric_k.iter().map(|k| (k * nf / 2.0).tan()).collect();
        return Ok(ExcitonSpectrum {
            antisymmetric_k,
            symmetric_k,
            bound: None,
            alpha_mix,
        });
    }

    let v = p.v0 / (2.0 * p.j);
    let f = |k: f64| symmetric_condition(k, p);
    let eps = 1e-11;
    let mut symmetric_k = Vec::with_capacity(n / 2);
    let mut push = |a: f64, b: f64| -> Result<()> {
        symmetric_k.push(roots::bracketed(f, a, b, 1e-13)?.x);
        Ok(())
    };
    if v < 0.0 {
        push(eps, PI / nf - eps)?;
    }
    for j in 1..n / 2 {
        push((2 * j - 1) as f64 * PI / nf + eps, (2 * j + 1) as f64 * PI / nf - eps)?;
    }
    if v > 0.0 {
        push((nf - 1.0) * PI / nf + eps, PI - eps)?;
    }

    let bound = exciton_bound_state(p)?;
    let alpha_mix = symmetric_k.iter().map(|k| (k * nf / 2.0).tan()).collect();
    let spec = ExcitonSpectrum {
        antisymmetric_k,
        symmetric_k,
        bound: Some(bound),
        alpha_mix,
    };
    let count = spec.antisymmetric_k.len() + spec.symmetric_k.len() + 1;
    if count != n {
        return Err(Error::numerical(
            format!("found {count} eigenstates for N = {n}"),
            (count as f64 - nf).abs(),
        ));
    }
    Ok(spec)
}

/// Exact finite-N bound state: tanh(κN/2) sinh κ = |V0/2J|.
fn exciton_bound_state(p: &ModelParams) -> Result<ExcitonBoundState> {
    let v = (p.v0 / (2.0 * p.j)).abs();
    let nh = p.n as f64 / 2.0;
    let g = |x: f64| (x * nh).tanh() * x.sinh() - v;
    let mut hi = v.asinh() + 1.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    let kappa = roots::bracketed(g, 1e-14, hi, 1e-14)?.x;
    let centre = p.v0.signum() == p.j.signum();
    let k = if centre {
        Complex64::new(0.0, kappa)
    } else {
        Complex64::new(PI, kappa)
    };
    let energy = if centre {
        p.e0 + 2.0 * p.j * kappa.cosh()
    } else {
        p.e0 - 2.0 * p.j * kappa.cosh()
    };
    let h = p.half();
    let mut profile: Vec<f64> = (-h + 1..=h)
        .map(|site| {
            // cosh(κ(N/2−|n|)) scaled by e^{−κN/2}
            let a = site.abs() as f64;
            0.5 * ((-kappa * a).exp() + (-kappa * (p.n as f64 - a)).exp())
        })
        .collect();
    let norm = profile.iter().map(|x| x * x).sum::<f64>().sqrt();
    profile.iter_mut().for_each(|x| *x /= norm);
    Ok(ExcitonBoundState {
        k,
        energy,
        amplitude_profile: profile,
    })
}

/// Infinite-N reflection amplitude
/// `V0 / [(2J cos k′ sinh|k″| − V0) − 2iJ sin k′ cosh|k″|]`.
pub fn exciton_reflection_amplitude(k: Complex64, p: &ModelParams) -> Result<Complex64> {
    let (kr, ki) = (k.re, k.im.abs());
    let den = Complex64::new(2.0 * p.j * kr.cos() * ki.sinh() - p.v0, -2.0 * p.j * kr.sin() * ki.cosh());
    let scale = p.v0.abs().max(p.j.abs());
    if den.norm() <= 1e-14 * scale {
        if p.v0 == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        return Err(Error::Pole(format!("reflection amplitude diverges at k = {k}")));
    }
    Ok(Complex64::new(p.v0, 0.0) / den)
}

pub fn exciton_site_hamiltonian(p: &ModelParams) -> DMatrix<f64> {
    let n = p.n;
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = p.e0;
        let right = (i + 1) % n;
        h[(i, right)] += p.j;
        h[(right, i)] += p.j;
    }
    // row i is site i − N/2 + 1, so site 0 sits at row N/2 − 1
    h[(n / 2 - 1, n / 2 - 1)] += p.v0;
    h
}

/// Curvature mass of the band at real k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EffectiveMass {
    Finite(f64),
    /// Inflection point of the cosine band (k = π/2).
    Infinite,
}

pub fn effective_mass(k: f64, p: &ModelParams) -> EffectiveMass {
    let curvature = -2.0 * p.j * k.cos();
    if curvature.abs() < 1e-12 * p.j.abs() {
        EffectiveMass::Infinite
    } else {
        EffectiveMass::Finite(1.0 / curvature)
    }
}

/// Whether an energy lies outside [E0 − 2|J|, E0 + 2|J|] by more than the bound threshold.
pub fn is_bound_energy(e: f64, p: &ModelParams) -> bool {
    let w = 2.0 * p.j.abs();
    e > p.e0 + w + BOUND_THRESHOLD * p.j.abs() || e < p.e0 - w - BOUND_THRESHOLD * p.j.abs()
}

/// |k″| of the finite-N bound root minus the infinite-N closed form.
pub fn finite_size_pole_shift(p: &ModelParams) -> Result<f64> {
    let spec = solve_exciton_spectrum(p)?;
    let b = spec
        .bound
        .ok_or_else(|| Error::Existence("no bound state at V0 = 0".into()))?;
    let ln = exciton_bound_wavevector_large_n(p)?;
    Ok(b.k.im.abs() - ln.im.abs())
}
