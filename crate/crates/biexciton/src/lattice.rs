//! Model parameters, the folded CM wavevector grid and the impurity-free
//! biexciton eigenbasis.
//!
//! Sites run over `[-N/2+1, N/2]`. A pair of excitations at `m < n` has
//! `r = m + n` and `s = n - m`; only `r + s` even is physical. The CM
//! wavevector `K = π l / N` lives in the folded zone `(-π/2, π/2]`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;

/// Physical parameters of the ring. Energies share one unit (|J| in practice).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "E0", default)]
    pub e0: f64,
    #[serde(rename = "V0", default)]
    pub v0: f64,
}

impl ModelParams {
    pub fn new(n: usize, j: f64, d: f64, e0: f64, v0: f64) -> Result<Self> {
        let p = ModelParams { n, j, d, e0, v0 };
        p.validate()?;
        Ok(p)
    }

    /// Lattice-level checks shared by every module.
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || !self.n.is_multiple_of(2) {
            return Err(Error::Parameter(format!("N must be even and >= 4, got {}", self.n)));
        }
        for (name, v) in [("J", self.j), ("D", self.d), ("E0", self.e0), ("V0", self.v0)] {
            if !v.is_finite() {
                return Err(Error::Parameter(format!("{name} is not finite")));
            }
        }
        if self.j == 0.0 {
            return Err(Error::Parameter("J must be nonzero".into()));
        }
        Ok(())
    }

    /// Checks needed before building the biexciton basis: one bound
    /// relative solution per K requires |D| > 2|J|.
    pub fn require_biexciton(&self) -> Result<()> {
        self.validate()?;
        if self.d.abs() <= 2.0 * self.j.abs() {
            return Err(Error::Regime(format!(
                "|D| = {} must exceed 2|J| = {} for a biexciton band",
                self.d.abs(),
                2.0 * self.j.abs()
            )));
        }
        Ok(())
    }

    pub fn with_v0(mut self, v0: f64) -> Self {
        self.v0 = v0;
        self
    }

    pub fn with_d(mut self, d: f64) -> Self {
        self.d = d;
        self
    }

    pub fn half(&self) -> i64 {
        (self.n / 2) as i64
    }
}

/// Even or odd mode index; selects the cosh or sinh branch of φ_K.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// CM wavevector `K = π l / N` on the folded grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavevectorIndex {
    pub l: i64,
    pub k: f64,
}

impl WavevectorIndex {
    pub fn new(l: i64, n: usize) -> Self {
        WavevectorIndex {
            l,
            k: std::f64::consts::PI * l as f64 / n as f64,
        }
    }

    pub fn parity(&self) -> Parity {
        if self.l.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// (-1)^l
    pub fn sign(&self) -> f64 {
        match self.parity() {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    /// The zone-boundary mode K = π/2, where φ degenerates to delta functions.
    pub fn is_zone_edge(&self, n: usize) -> bool {
        self.l == (n / 2) as i64
    }
}

/// How the relative wavevector is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Root of the finite-N quantization condition.
    Exact,
    /// `k_i = |ln|α_K||`, valid once the bound state is narrow compared to N.
    LargeN,
    /// `LargeN` when |D/2J| > 2 and N >= 40, `Exact` otherwise.
    #[default]
    Auto,
}

impl Method {
    pub fn resolve(self, p: &ModelParams) -> Method {
        match self {
            Method::Auto => {
                if (p.d / (2.0 * p.j)).abs() > 2.0 && p.n >= 40 {
                    Method::LargeN
                } else {
                    Method::Exact
                }
            }
            m => m,
        }
    }
}

/// Relative wavevector `k = k_r + i k_i` of a bound pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeK {
    /// 0 when sgn J = sgn D, π otherwise.
    pub k_real: f64,
    /// Decay rate; `f64::INFINITY` at the zone edge.
    pub k_imag: f64,
    /// K = π/2: φ is the closed-form delta limit.
    pub delta_limit: bool,
    /// Other roots of the exact quantization condition, if any were found.
    pub extra_roots: Vec<f64>,
}

pub fn k_grid(p: &ModelParams) -> Vec<WavevectorIndex> {
    let h = p.half();
    (-h + 1..=h).map(|l| WavevectorIndex::new(l, p.n)).collect()
}

/// α_K = 2J cos K / D
pub fn alpha(k: f64, p: &ModelParams) -> Result<f64> {
    if p.d == 0.0 {
        return Err(Error::Parameter("alpha needs D != 0".into()));
    }
    Ok(2.0 * p.j * cos_folded(k) / p.d)
}

/// cos K with the zone edge snapped to exactly zero.
pub(crate) fn cos_folded(k: f64) -> f64 {
    if (k.abs() - FRAC_PI_2).abs() < 1e-13 {
        0.0
    } else {
        k.cos()
    }
}

/// cosh(k a) / cosh(k b) for a > b >= 0 without overflow.
fn cosh_ratio(k: f64, a: f64, b: f64) -> f64 {
    ((k * (a - b)).exp()) * (1.0 + (-2.0 * k * a).exp()) / (1.0 + (-2.0 * k * b).exp())
}

/// sinh(k a) / sinh(k b) for a > b > 0, continued to a/b at k = 0.
fn sinh_ratio(k: f64, a: f64, b: f64) -> f64 {
    if k.abs() < 1e-9 {
        return a / b;
    }
    ((k * (a - b)).exp()) * (-(-2.0 * k * a).exp_m1()) / (-(-2.0 * k * b).exp_m1())
}

fn sign_convention(p: &ModelParams) -> f64 {
    if p.d * p.j >= 0.0 {
        0.0
    } else {
        std::f64::consts::PI
    }
}

pub fn solve_relative_wavevector(idx: &WavevectorIndex, p: &ModelParams, method: Method) -> Result<RelativeK> {
    let k_real = sign_convention(p);
    if idx.is_zone_edge(p.n) {
        return Ok(RelativeK {
            k_real,
            k_imag: f64::INFINITY,
            delta_limit: true,
            extra_roots: vec![],
        });
    }
    let a = alpha(idx.k, p)?.abs();
    match method.resolve(p) {
        Method::LargeN | Method::Auto => {
            if a > 1.0 {
                return Err(Error::Existence(format!(
                    "|alpha| = {a} > 1 at K = {}: no bound relative solution",
                    idx.k
                )));
            }
            Ok(RelativeK {
                k_real,
                k_imag: -a.ln(),
                delta_limit: false,
                extra_roots: vec![],
            })
        }
        Method::Exact => exact_root(idx, p, a, k_real),
    }
}

fn exact_root(idx: &WavevectorIndex, p: &ModelParams, a: f64, k_real: f64) -> Result<RelativeK> {
    let nh = p.n as f64 / 2.0;
    let target = 1.0 / a;
    let parity = idx.parity();
    let g = |k: f64| -> f64 {
        match parity {
            Parity::Even => cosh_ratio(k, nh, nh - 1.0) - target,
            Parity::Odd => sinh_ratio(k, nh, nh - 1.0) - target,
        }
    };
    let floor = match parity {
        Parity::Even => 1.0,
        Parity::Odd => nh / (nh - 1.0),
    };
    if target < floor || (parity == Parity::Odd && target == floor) {
        return Err(Error::Existence(format!(
            "1/|alpha| = {target} does not exceed {floor} at K = {} (l = {}): no complex root at N = {}",
            idx.k, idx.l, p.n
        )));
    }
    if target == floor {
        return Ok(RelativeK {
            k_real,
            k_imag: 0.0,
            delta_limit: false,
            extra_roots: vec![],
        });
    }
    let mut hi = target.ln() + 1.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::numerical("could not bracket the relative root", g(hi)));
        }
    }
    let root = roots::bracketed(g, 1e-14, hi, 1e-13)?;
    let extra_roots = roots::scan_all(g, 1e-9, 3.0 * hi, 600, f64::INFINITY, 1e-12)
        .into_iter()
        .map(|r| r.x)
        .filter(|&x| (x - root.x).abs() > 1e-6)
        .collect();
    Ok(RelativeK {
        k_real,
        k_imag: root.x,
        delta_limit: false,
        extra_roots,
    })
}

/// Energy of the bound pair at CM wavevector K.
pub fn biexciton_energy(idx: &WavevectorIndex, p: &ModelParams, method: Method) -> Result<f64> {
    let rk = solve_relative_wavevector(idx, p, method)?;
    Ok(energy_from_root(idx, p, method, &rk))
}

fn energy_from_root(idx: &WavevectorIndex, p: &ModelParams, method: Method, rk: &RelativeK) -> f64 {
    if rk.delta_limit {
        return 2.0 * p.e0 + p.d;
    }
    match method.resolve(p) {
        Method::Exact => 2.0 * p.e0 + 4.0 * p.j.abs() * p.d.signum() * cos_folded(idx.k) * rk.k_imag.cosh(),
        _ => {
            let a = 2.0 * p.j * cos_folded(idx.k) / p.d;
            2.0 * p.e0 + p.d * (1.0 + a * a)
        }
    }
}

/// 2E0 + 4J cos K cos k for a real relative wavevector.
pub fn continuum_energy(k_cm: f64, k_rel: f64, p: &ModelParams) -> f64 {
    2.0 * p.e0 + 4.0 * p.j * cos_folded(k_cm) * k_rel.cos()
}

/// Real relative wavevectors in (0, π) solving the impurity-free quantization
/// condition at this K (scattering states of the pair). D = 0 is allowed.
pub fn continuum_relative_roots(idx: &WavevectorIndex, p: &ModelParams) -> Vec<f64> {
    let nh = p.n as f64 / 2.0;
    let c = 2.0 * p.j * cos_folded(idx.k);
    let d = p.d;
    let g = |k: f64| -> f64 {
        match idx.parity() {
            Parity::Even => c * (k * nh).cos() - d * (k * (nh - 1.0)).cos(),
            Parity::Odd => c * (k * nh).sin() - d * (k * (nh - 1.0)).sin(),
        }
    };
    let eps = 1e-9;
    roots::scan_all(g, eps, std::f64::consts::PI - eps, 40 * p.n, f64::INFINITY, 1e-13)
        .into_iter()
        .map(|r| r.x)
        .collect()
}

/// One impurity-free biexciton eigenmode with φ_K sampled on s ∈ (−N, N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiexcitonMode {
    pub index: WavevectorIndex,
    pub alpha: f64,
    pub k: RelativeK,
    pub energy: f64,
    /// φ_K(s) at `s + N - 1`.
    pub phi: Vec<f64>,
    /// Analytic normalization 𝒩 of the unscaled cosh/sinh form (1 in the delta limit).
    pub norm: f64,
    /// Method actually used; an `Exact` request falls back to `LargeN` when
    /// the finite-N condition has no complex root at this K.
    pub method: Method,
}

impl BiexcitonMode {
    pub fn phi_at(&self, s: i64, n: usize) -> Result<f64> {
        let n = n as i64;
        if s <= -n || s >= n {
            return Err(Error::Domain(format!("s = {s} outside (-{n}, {n})")));
        }
        Ok(self.phi[(s + n - 1) as usize])
    }

    /// φ_K(s) with no range check; `s` must lie in (−N, N).
    #[inline]
    pub(crate) fn phi_unchecked(&self, s: i64, n: usize) -> f64 {
        self.phi[(s + n as i64 - 1) as usize]
    }
}

/// Normalized φ_K on the full grid s ∈ (−N, N) for a given relative root.
fn sample_phi(idx: &WavevectorIndex, p: &ModelParams, rk: &RelativeK) -> (Vec<f64>, f64) {
    let n = p.n as i64;
    let mut phi = vec![0.0; (2 * n - 1) as usize];
    if rk.delta_limit {
        let edge = idx.sign();
        for s in [-1i64, 1] {
            phi[(s + n - 1) as usize] += 0.5;
        }
        for s in [-(n - 1), n - 1] {
            phi[(s + n - 1) as usize] += 0.5 * edge;
        }
        return (phi, 1.0);
    }
    let ki = rk.k_imag;
    let sigma = if rk.k_real == 0.0 { 1.0 } else { -1.0 };
    let pm = idx.sign();
    for s in -(n - 1)..n {
        if s == 0 {
            continue;
        }
        let a = s.abs() as f64;
        // cosh/sinh(k_i (N/2 - |s|)) scaled by e^{-k_i N/2}
        let f = 0.5 * ((-ki * a).exp() + pm * (-ki * (n as f64 - a)).exp());
        let f = if ki == 0.0 && pm < 0.0 {
            // sinh branch at k_i = 0: use the linear limit N/2 - |s|
            n as f64 / 2.0 - a
        } else {
            f
        };
        let sgn = if sigma < 0.0 && s.abs() % 2 == 1 { -1.0 } else { 1.0 };
        phi[(s + n - 1) as usize] = sgn * f;
    }
    let sum: f64 = phi.iter().map(|x| x * x).sum();
    let scale = sum.sqrt();
    for x in phi.iter_mut() {
        *x /= scale;
    }
    (phi, analytic_norm(p.n, ki, idx.parity()))
}

/// 𝒩² = sinh(k_i (N−1)) / sinh k_i ± (N − 1) for the unscaled form.
pub fn analytic_norm(n: usize, ki: f64, parity: Parity) -> f64 {
    let n = n as f64;
    let ratio = if ki.abs() < 1e-12 {
        n - 1.0
    } else {
        (ki * (n - 1.0)).sinh() / ki.sinh()
    };
    let pm = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    (ratio + pm * (n - 1.0)).sqrt()
}

/// φ_K(s), normalized so that Σ_{s∈(−N,N)} φ² = 1.
pub fn phi(idx: &WavevectorIndex, s: i64, p: &ModelParams, method: Method) -> Result<f64> {
    build_mode(idx, p, method)?.phi_at(s, p.n)
}

pub fn build_mode(idx: &WavevectorIndex, p: &ModelParams, method: Method) -> Result<BiexcitonMode> {
    let method = method.resolve(p);
    let rk = solve_relative_wavevector(idx, p, method)?;
    let energy = energy_from_root(idx, p, method, &rk);
    let (phi, norm) = sample_phi(idx, p, &rk);
    Ok(BiexcitonMode {
        index: *idx,
        alpha: alpha(idx.k, p)?,
        k: rk,
        energy,
        phi,
        norm,
        method,
    })
}

/// The full impurity-free basis, one mode per grid K.
///
/// With the exact method, a K whose finite-N condition has no complex root
/// (odd l close to the band bottom at small |D|) uses the large-N form instead.
pub fn modes(p: &ModelParams, method: Method) -> Result<Vec<BiexcitonMode>> {
    p.require_biexciton()?;
    let method = method.resolve(p);
    k_grid(p)
        .iter()
        .map(|idx| match build_mode(idx, p, method) {
            Err(Error::Existence(_)) if method == Method::Exact => build_mode(idx, p, Method::LargeN),
            other => other,
        })
        .collect()
}

/// Min and max of E_b over the discrete grid.
pub fn band_edges(modes: &[BiexcitonMode]) -> (f64, f64) {
    modes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| {
        (lo.min(m.energy), hi.max(m.energy))
    })
}
