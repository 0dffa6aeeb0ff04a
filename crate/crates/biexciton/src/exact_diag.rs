//! Full two-excitation Hamiltonian in the hard-core pair basis, state
//! classification and bound states in the continuum.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::ModelParams;
use crate::linalg;
use crate::projected::log_linear_fit;
use crate::roots;

/// Ordered pairs (m, n), m < n, over sites [−N/2+1, N/2].
#[derive(Debug, Clone)]
pub struct PairBasis {
    n: usize,
    states: Vec<(i64, i64)>,
    index: HashMap<(i64, i64), usize>,
}

impl PairBasis {
    pub fn new(n: usize) -> Self {
        let h = (n / 2) as i64;
        let states: Vec<(i64, i64)> = (-h + 1..=h).flat_map(|m| (m + 1..=h).map(move |k| (m, k))).collect();
        let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        PairBasis { n, states, index }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[(i64, i64)] {
        &self.states
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Row of an unordered pair of distinct sites, wrapping both into range.
    pub fn index_of(&self, a: i64, b: i64) -> Option<usize> {
        let (a, b) = (self.wrap(a), self.wrap(b));
        if a == b {
            return None;
        }
        self.index.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn wrap(&self, x: i64) -> i64 {
        let n = self.n as i64;
        let h = n / 2;
        (x + h - 1).rem_euclid(n) - h + 1
    }

    /// Minimal-image (r, s) with s ∈ [1, N/2] and r ∈ (−N, N].
    pub fn relative_coords(&self, i: usize) -> (i64, i64) {
        let n = self.n as i64;
        let (m, k) = self.states[i];
        let (mut r, mut s) = (m + k, k - m);
        if s > n / 2 {
            // same pair seen with the other particle wrapped: m → m + N
            s = n - s;
            r = if r <= 0 { r + n } else { r - n };
        }
        (r, s)
    }
}

/// Two excitons hopping with J, pair energy D on neighbouring sites and V0
/// on site 0. Hard core enters through the basis.
pub fn build_pair_hamiltonian(p: &ModelParams) -> Result<(PairBasis, DMatrix<f64>)> {
    p.validate()?;
    let basis = PairBasis::new(p.n);
    let dim = basis.len();
    let n = p.n as i64;
    let mut h = DMatrix::zeros(dim, dim);
    for (i, &(m, k)) in basis.states.iter().enumerate() {
        let gap = (k - m).rem_euclid(n);
        let mut diag = 2.0 * p.e0;
        if gap == 1 || gap == n - 1 {
            diag += p.d;
        }
        if m == 0 || k == 0 {
            diag += p.v0;
        }
        h[(i, i)] = diag;
        for (a, b) in [(m + 1, k), (m - 1, k), (m, k + 1), (m, k - 1)] {
            if let Some(j) = basis.index_of(a, b) {
                h[(j, i)] += p.j;
            }
        }
    }
    Ok((basis, h))
}

#[derive(Debug, Clone)]
pub struct FullSpectrum {
    pub params: ModelParams,
    pub basis: PairBasis,
    /// Ascending.
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl FullSpectrum {
    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }
}

pub fn diagonalize_full(p: &ModelParams) -> Result<FullSpectrum> {
    let (basis, h) = build_pair_hamiltonian(p)?;
    let e = linalg::eigh(h)?;
    Ok(FullSpectrum {
        params: *p,
        basis,
        values: e.values,
        vectors: e.vectors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BicEnergies {
    pub e_b1: f64,
    pub e_b2: f64,
}

impl BicEnergies {
    /// The closed-form energy inside [2E0 − 4|J|, 2E0 + 4|J|], if any.
    pub fn in_band(&self, p: &ModelParams) -> Option<f64> {
        [self.e_b1, self.e_b2].into_iter().find(|&e| in_continuum(e, p))
    }
}

/// E_b = DV0 (D + V0 ∓ √(4J² + (D − V0)²)) / 2(DV0 − J²) + 2E0.
pub fn bic_energies(p: &ModelParams) -> Result<BicEnergies> {
    p.validate()?;
    let den = 2.0 * (p.d * p.v0 - p.j * p.j);
    if den.abs() < 1e-12 * (p.j * p.j).max(p.d.abs() * p.v0.abs()) {
        return Err(Error::Pole("D V0 = J² makes the closed form singular".into()));
    }
    let root = (4.0 * p.j * p.j + (p.d - p.v0).powi(2)).sqrt();
    let pre = p.d * p.v0 / den;
    Ok(BicEnergies {
        e_b1: 2.0 * p.e0 + pre * (p.d + p.v0 - root),
        e_b2: 2.0 * p.e0 + pre * (p.d + p.v0 + root),
    })
}

pub fn in_continuum(e: f64, p: &ModelParams) -> bool {
    let w = 4.0 * p.j.abs();
    e >= 2.0 * p.e0 - w && e <= 2.0 * p.e0 + w
}

/// Real part of the antisymmetric CM wavevector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CmBranch {
    /// K_a = iK″: V0/2J = ±e^{−K″} cosh k_i.
    Imaginary,
    /// K_a = π/2 + iK″: −V0/2J = ±e^{K″} cosh k_i.
    HalfPi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CmRoot {
    pub branch: CmBranch,
    /// +1 for the equation with k = i k_i, −1 for k = π + i k_i.
    pub sign: i8,
    #[serde(skip)]
    pub k: Complex64,
    /// 2E0 + 4J cos K_a cos k.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AntisymmetricCm {
    pub roots: Vec<CmRoot>,
    /// |V0| and |D| are within a factor 3/2; the decoupled picture does not hold.
    pub unreliable: bool,
}

/// Roots of the large-N antisymmetric quantization on both branches.
///
/// The sign picked on each branch follows the sign cases of J, D and V0:
/// `+` on the imaginary branch when sgn J = sgn V0, `+` on the π/2 branch
/// when they differ. Every root of the reduced equations is returned; the
/// finite-N condition is not solved.
pub fn antisymmetric_cm_wavevector(p: &ModelParams) -> Result<AntisymmetricCm> {
    p.require_biexciton()?;
    if p.v0 == 0.0 {
        return Err(Error::Existence("V0 = 0 binds no CM state".into()));
    }
    let (j, d, v) = (p.j, p.d, p.v0 / (2.0 * p.j));
    let sg = (p.v0 / p.j).signum();
    // cosh k_i = (1/|α| + |α|)/2 with α continued to the complex K
    let fa = move |x: f64| {
        let a = (2.0 * j * x.cosh() / d).abs();
        v - sg * (-x).exp() * (1.0 / a + a) / 2.0
    };
    let fb = move |x: f64| {
        let a = (2.0 * j * x.sinh() / d).abs();
        -v + sg * x.exp() * (1.0 / a - a).abs() / 2.0
    };
    let ea = |x: f64| 2.0 * p.e0 + d + 4.0 * j * j * x.cosh().powi(2) / d;
    let eb = |x: f64| 2.0 * p.e0 + d - 4.0 * j * j * x.sinh().powi(2) / d;

    let mut out = Vec::new();
    let grid = 16_000;
    for r in roots::scan_all(fa, -8.0, 8.0, grid, 1.0, 1e-12) {
        out.push(CmRoot {
            branch: CmBranch::Imaginary,
            sign: sg as i8,
            k: Complex64::new(0.0, r.x),
            energy: ea(r.x),
        });
    }
    // offset the grid so x = 0, where |α| vanishes, is never sampled
    for r in roots::scan_all(fb, -8.0 + 1e-7, 8.0 + 1e-7, grid, 1.0, 1e-12) {
        out.push(CmRoot {
            branch: CmBranch::HalfPi,
            sign: -sg as i8,
            k: Complex64::new(FRAC_PI_2, r.x),
            energy: eb(r.x),
        });
    }
    let ratio = (p.v0 / p.d).abs();
    Ok(AntisymmetricCm {
        roots: out,
        unreliable: ratio > 2.0 / 3.0 && ratio < 1.5,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundType {
    FreeBiexciton,
    CmBoundPair,
    OneExcitonBound,
    FullyBound,
    /// Two extended excitons.
    Unbound,
    Unclassified,
}

impl BoundType {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundType::FreeBiexciton => "free_biexciton",
            BoundType::CmBoundPair => "cm_bound_pair",
            BoundType::OneExcitonBound => "one_exciton_bound",
            BoundType::FullyBound => "fully_bound",
            BoundType::Unbound => "unbound",
            BoundType::Unclassified => "unclassified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// Decay rate of the marginal probability (per site, amplitude scale).
    pub rate: f64,
    pub r2: f64,
}

impl DecayFit {
    fn decaying(&self) -> bool {
        self.rate > DECAY_MIN && self.r2 > R2_MIN
    }

    fn ambiguous(&self) -> bool {
        self.rate > DECAY_MIN && self.r2 > R2_AMBIGUOUS && self.r2 <= R2_MIN
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateClassification {
    #[serde(rename = "type")]
    pub kind: BoundType,
    pub in_continuum: bool,
    pub schmidt_number: f64,
    pub decay_r: DecayFit,
    pub decay_s: DecayFit,
    /// Weight with at least one exciton within two sites of the impurity.
    pub near_impurity: f64,
    /// ⟨P⟩ for r → −r.
    pub parity: f64,
}

const DECAY_MIN: f64 = 0.05;
const R2_MIN: f64 = 0.8;
const R2_AMBIGUOUS: f64 = 0.5;
const SINGLE_MIN: f64 = 0.8;

/// Probability marginals over |r| ∈ [0, N] and s ∈ [0, N/2].
fn marginals(v: &[f64], basis: &PairBasis) -> (Vec<f64>, Vec<f64>, f64) {
    let n = basis.n;
    let mut pr = vec![0.0; n + 1];
    let mut ps = vec![0.0; n / 2 + 1];
    let mut near = 0.0;
    for (i, &a) in v.iter().enumerate() {
        let (r, s) = basis.relative_coords(i);
        let w = a * a;
        pr[r.unsigned_abs() as usize] += w;
        ps[s as usize] += w;
        let (m, k) = basis.states[i];
        if m.abs().min(k.abs()) <= 2 {
            near += w;
        }
    }
    (pr, ps, near)
}

/// Fit of ln P against x; a profile living on fewer than three points is
/// treated as infinitely sharp.
fn marginal_fit(xs: impl Iterator<Item = usize>, y: &[f64]) -> DecayFit {
    let max = y.iter().cloned().fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = xs.filter(|&x| y[x] > 1e-12 * max).map(|x| (x as f64, y[x])).collect();
    if pts.len() < 3 {
        return DecayFit { rate: f64::INFINITY, r2: 1.0 };
    }
    match log_linear_fit(&pts) {
        Some((slope, r2)) => DecayFit { rate: -slope / 2.0, r2 },
        None => DecayFit { rate: 0.0, r2: 0.0 },
    }
}

/// Ψ on the minimal-image (r, s) grid: rows r ∈ (−N, N], columns s ∈ [0, N/2].
pub fn amplitude_grid(v: &[f64], basis: &PairBasis) -> DMatrix<f64> {
    let n = basis.n;
    let mut g = DMatrix::zeros(2 * n, n / 2 + 1);
    for (i, &a) in v.iter().enumerate() {
        let (r, s) = basis.relative_coords(i);
        g[((r + n as i64 - 1) as usize, s as usize)] += a;
    }
    g
}

/// Effective Schmidt rank exp(H) of Ψ(r, s), averaged over the even-s and
/// odd-s sublattices with their weights. The two sublattices never mix
/// (r + s is even), so a joint SVD would double-count a product state.
pub fn schmidt_number(v: &[f64], basis: &PairBasis) -> f64 {
    let g = amplitude_grid(v, basis);
    let mut total = 0.0;
    let mut weight = 0.0;
    for parity in 0..2 {
        let cols: Vec<usize> = (0..g.ncols()).filter(|s| s % 2 == parity).collect();
        let block = g.select_columns(&cols);
        let w = block.norm_squared();
        if w < 1e-14 {
            continue;
        }
        let sv = block.singular_values();
        let q: Vec<f64> = sv.iter().map(|x| x * x / w).filter(|&q| q > 1e-15).collect();
        let h: f64 = -q.iter().map(|q| q * q.ln()).sum::<f64>();
        total += w * h.exp();
        weight += w;
    }
    if weight == 0.0 {
        1.0
    } else {
        total / weight
    }
}

/// ⟨v|P|v⟩ with P: (m, n) → (−n, −m).
pub fn parity(v: &[f64], basis: &PairBasis) -> f64 {
    basis
        .states
        .iter()
        .enumerate()
        .map(|(i, &(m, k))| {
            let j = basis.index_of(-k, -m).expect("mirror pair exists");
            v[i] * v[j]
        })
        .sum()
}

pub fn classify_state(energy: f64, v: &[f64], basis: &PairBasis, p: &ModelParams) -> StateClassification {
    let n = basis.n;
    let (pr, ps, near) = marginals(v, basis);
    // skip three sites at the impurity and at the antipode
    let decay_r = marginal_fit(4..n - 3, &pr);
    let decay_s = marginal_fit(1..n / 2 - 1, &ps);
    let in_band = in_continuum(energy, p);
    let kind = if decay_r.decaying() && decay_s.decaying() {
        BoundType::FullyBound
    } else if near > SINGLE_MIN {
        BoundType::OneExcitonBound
    } else if decay_s.decaying() {
        BoundType::FreeBiexciton
    } else if decay_r.decaying() {
        BoundType::CmBoundPair
    } else if decay_r.ambiguous() || decay_s.ambiguous() || !in_band {
        BoundType::Unclassified
    } else {
        BoundType::Unbound
    };
    StateClassification {
        kind,
        in_continuum: in_band,
        schmidt_number: schmidt_number(v, basis),
        decay_r,
        decay_s,
        near_impurity: near,
        parity: parity(v, basis),
    }
}

pub fn classify_all(spec: &FullSpectrum) -> Vec<StateClassification> {
    (0..spec.values.len())
        .into_par_iter()
        .map(|i| {
            let v: Vec<f64> = spec.vectors.column(i).iter().copied().collect();
            classify_state(spec.values[i], &v, &spec.basis, &spec.params)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BicState {
    pub index: usize,
    pub energy: f64,
    pub closed_form: f64,
    pub discrepancy: f64,
    pub classification: StateClassification,
}

/// The fully bound, r-antisymmetric eigenstate inside the continuum that is
/// closest to the in-band closed-form energy.
pub fn find_bic(spec: &FullSpectrum, classes: &[StateClassification]) -> Result<BicState> {
    let p = &spec.params;
    let target = bic_energies(p)?
        .in_band(p)
        .ok_or_else(|| Error::Existence("neither closed-form energy lies in the continuum".into()))?;
    classes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.in_continuum && c.kind == BoundType::FullyBound && c.parity < 0.0)
        .map(|(i, c)| (i, c, (spec.values[i] - target).abs()))
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .map(|(i, c, d)| BicState {
            index: i,
            energy: spec.values[i],
            closed_form: target,
            discrepancy: d,
            classification: *c,
        })
        .ok_or_else(|| Error::Existence("no fully bound antisymmetric state in the continuum".into()))
}

/// Dense little-endian f64 dump, row-major.
pub fn write_grid_le<W: Write>(w: &mut W, g: &DMatrix<f64>) -> std::io::Result<()> {
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            w.write_all(&g[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}
