//! Biexciton-impurity problem restricted to the N impurity-free biexciton
//! modes: `M_KK′ = E_b(K) δ_KK′ + V_KK′`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{self, band_edges, BiexcitonMode, Method, ModelParams};
use crate::linalg::{self, EighComplex};

/// `M` stored relative to 2E0 so that large E0 does not eat the precision.
#[derive(Debug, Clone)]
pub struct ProjectedHamiltonian {
    pub params: ModelParams,
    pub modes: Vec<BiexcitonMode>,
    offset: f64,
    relative: DMatrix<Complex64>,
}

impl ProjectedHamiltonian {
    pub fn new(p: &ModelParams, method: Method) -> Result<Self> {
        let modes = lattice::modes(p, method)?;
        Self::from_modes(modes, p)
    }

    pub fn from_modes(modes: Vec<BiexcitonMode>, p: &ModelParams) -> Result<Self> {
        let mut relative = potential_matrix(&modes, p)?;
        let offset = 2.0 * p.e0;
        for (i, m) in modes.iter().enumerate() {
            relative[(i, i)] += m.energy - offset;
        }
        Ok(ProjectedHamiltonian {
            params: *p,
            modes,
            offset,
            relative,
        })
    }

    /// The full matrix M.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let n = self.relative.nrows();
        &self.relative + DMatrix::from_diagonal_element(n, n, Complex64::new(self.offset, 0.0))
    }

    /// M − 2E0.
    pub fn relative(&self) -> &DMatrix<Complex64> {
        &self.relative
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn band_edges(&self) -> (f64, f64) {
        band_edges(&self.modes)
    }
}

/// `V_KK′ = (4V0/N) Σ_{s=−N/2+1, s≠0}^{N/2} φ_K(s) φ_K′(s) e^{i(K′−K)s}`.
///
/// The s-sum runs over one N-site window; with the factor 4V0/N this is
/// exactly ⟨Φ_K|V̂|Φ_K′⟩ in the pair basis.
pub fn potential_matrix(modes: &[BiexcitonMode], p: &ModelParams) -> Result<DMatrix<Complex64>> {
    let n = p.n;
    let grid = lattice::k_grid(p);
    if modes.len() != n || modes.iter().zip(&grid).any(|(m, g)| m.index.l != g.l) {
        return Err(Error::Parameter(format!(
            "mode list does not match the N = {n} wavevector grid"
        )));
    }
    let h = p.half();
    let c = 4.0 * p.v0 / n as f64;
    let svals: Vec<i64> = (-h + 1..=h).filter(|&s| s != 0).collect();
    // a_K(s) = φ_K(s) e^{−iKs}
    let a: Vec<Vec<Complex64>> = modes
        .iter()
        .map(|m| {
            svals
                .iter()
                .map(|&s| Complex64::from_polar(m.phi_unchecked(s, n), -m.index.k * s as f64))
                .collect()
        })
        .collect();
    let mut v = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        for j in i..n {
            let sum: Complex64 = a[i].iter().zip(&a[j]).map(|(x, y)| x * y.conj()).sum();
            v[(i, j)] = c * sum;
            v[(j, i)] = (c * sum).conj();
        }
        v[(i, i)].im = 0.0;
    }
    Ok(v)
}

/// Eigenpairs of M, ascending.
#[derive(Debug, Clone)]
pub struct ProjectedSpectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

pub fn diagonalize_projected(h: &ProjectedHamiltonian) -> Result<ProjectedSpectrum> {
    let EighComplex { values, vectors } = linalg::eigh(h.relative.clone())?;
    Ok(ProjectedSpectrum {
        values: values.into_iter().map(|e| e + h.offset).collect(),
        vectors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReKClass {
    NearZero,
    NearHalfPi,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundStateRecord {
    pub mu: usize,
    pub energy: f64,
    /// K at the maximum of |u(K)|².
    pub dominant_k: f64,
    pub re_k_class: ReKClass,
    /// Fitted decay rate of |Ψ(r, s=1)| in |r|.
    pub decay_rate: f64,
    /// Goodness of the log-linear decay fit.
    pub fit_r2: f64,
    /// Participation ratio of |Ψ(r, 1)|² over r.
    pub participation: f64,
    /// a, b, c, ... by decreasing distance from the band.
    pub label: String,
}

/// Ψ(r, s) = √(2/N) Σ_K u_K e^{iKr} φ_K(s) for r ∈ (−N, N] with r + s even.
pub fn amplitude_at_s(u: &[Complex64], modes: &[BiexcitonMode], n: usize, s: i64) -> Vec<(i64, Complex64)> {
    let nn = n as i64;
    let pref = (2.0 / n as f64).sqrt();
    (-nn + 1..=nn)
        .filter(|r| (r + s).rem_euclid(2) == 0)
        .map(|r| {
            let amp: Complex64 = u
                .iter()
                .zip(modes)
                .map(|(c, m)| c * Complex64::from_polar(m.phi_unchecked(s, n), m.index.k * r as f64))
                .sum();
            (r, amp * pref)
        })
        .collect()
}

pub fn participation_ratio(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 == 0.0 {
        0.0
    } else {
        s * s / s2
    }
}

/// Least-squares slope and R² of ln y against x.
pub(crate) fn log_linear_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(_, y)| *y > 0.0).map(|&(x, y)| (x, y.ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some((slope, r2))
}

/// Decay rate and R² of |Ψ(r, 1)| over |r| ∈ [4, N−6].
fn decay_fit(profile: &[(i64, Complex64)], n: usize) -> (f64, f64) {
    let max = profile.iter().map(|(_, a)| a.norm()).fold(0.0, f64::max);
    let hi = n as i64 - 6;
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .filter(|(r, a)| r.abs() >= 4 && r.abs() <= hi && a.norm() > 1e-9 * max)
        .map(|(r, a)| (r.abs() as f64, a.norm()))
        .collect();
    match log_linear_fit(&pts) {
        Some((slope, r2)) => (-slope, r2),
        None => (0.0, 0.0),
    }
}

/// Eigenstates of M that lie outside the impurity-free band and decay in r.
pub fn classify_bound_states(spec: &ProjectedSpectrum, h: &ProjectedHamiltonian) -> Vec<BoundStateRecord> {
    let p = &h.params;
    let n = p.n;
    let (lo, hi) = h.band_edges();
    let tol = 1e-9 * p.j.abs();
    let k_of = |f: &dyn Fn(&BiexcitonMode, &BiexcitonMode) -> bool| {
        h.modes.iter().fold(&h.modes[0], |best, m| if f(m, best) { m } else { best }).index.k
    };
    let k_at_max = k_of(&|m, b| m.energy > b.energy);
    let k_at_min = k_of(&|m, b| m.energy < b.energy);
    let class = |k: f64| {
        if k.abs() < std::f64::consts::FRAC_PI_4 {
            ReKClass::NearZero
        } else {
            ReKClass::NearHalfPi
        }
    };

    let mut records = Vec::new();
    for (mu, &e) in spec.values.iter().enumerate() {
        let u: Vec<Complex64> = spec.vectors.column(mu).iter().copied().collect();
        let profile = amplitude_at_s(&u, &h.modes, n, 1);
        let weights: Vec<f64> = profile.iter().map(|(_, a)| a.norm_sqr()).collect();
        let pr = participation_ratio(&weights);
        let outside = e > hi + tol || e < lo - tol;
        let (rate, r2) = decay_fit(&profile, n);
        if !(outside && rate > 0.0) {
            continue;
        }
        let dom = u
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .map(|(i, _)| h.modes[i].index.k)
            .unwrap_or(0.0);
        records.push(BoundStateRecord {
            mu,
            energy: e,
            dominant_k: dom,
            re_k_class: if e > hi { class(k_at_max) } else { class(k_at_min) },
            decay_rate: rate,
            fit_r2: r2,
            participation: pr,
            label: String::new(),
        });
    }
    let gap = |e: f64| if e > hi { e - hi } else { lo - e };
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| gap(records[b].energy).total_cmp(&gap(records[a].energy)));
    for (rank, &i) in order.iter().enumerate() {
        records[i].label = label_for(rank);
    }
    records
}

fn label_for(rank: usize) -> String {
    let mut s = String::new();
    let mut x = rank;
    loop {
        s.insert(0, (b'a' + (x % 26) as u8) as char);
        if x < 26 {
            break;
        }
        x = x / 26 - 1;
    }
    s
}

/// Minimum participation ratio over the scattering (non-bound) states.
pub fn min_scattering_participation(spec: &ProjectedSpectrum, h: &ProjectedHamiltonian) -> f64 {
    let bound: Vec<usize> = classify_bound_states(spec, h).iter().map(|r| r.mu).collect();
    (0..spec.values.len())
        .filter(|mu| !bound.contains(mu))
        .map(|mu| {
            let u: Vec<Complex64> = spec.vectors.column(mu).iter().copied().collect();
            let w: Vec<f64> = amplitude_at_s(&u, &h.modes, h.params.n, 1).iter().map(|(_, a)| a.norm_sqr()).collect();
            participation_ratio(&w)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Number of bound states for one parameter set.
pub fn count_bound_states(p: &ModelParams, method: Method) -> Result<usize> {
    let h = ProjectedHamiltonian::new(p, method)?;
    let spec = diagonalize_projected(&h)?;
    Ok(classify_bound_states(&spec, &h).len())
}

/// Bound-state counts on a (D, V0) grid; a failing cell records −1.
/// `counts[i][j]` belongs to `d_grid[i]`, `v0_grid[j]`.
pub fn phase_diagram(d_grid: &[f64], v0_grid: &[f64], template: &ModelParams, method: Method) -> Vec<Vec<i64>> {
    let cells: Vec<(usize, usize)> = (0..d_grid.len())
        .flat_map(|i| (0..v0_grid.len()).map(move |j| (i, j)))
        .collect();
    let flat: Vec<i64> = cells
        .par_iter()
        .map(|&(i, j)| {
            let p = template.with_d(d_grid[i]).with_v0(v0_grid[j]);
            count_bound_states(&p, method).map(|c| c as i64).unwrap_or(-1)
        })
        .collect();
    flat.chunks(v0_grid.len().max(1)).map(|c| c.to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_defect, max_residual};

    fn fig2(d: f64, v0: f64) -> ModelParams {
        ModelParams::new(40, d.signum(), d, 1000.0, v0).unwrap()
    }

    #[test]
    fn zero_potential() {
        let p = fig2(4.1, 0.0);
        let h = ProjectedHamiltonian::new(&p, Method::Auto).unwrap();
        assert!(potential_matrix(&h.modes, &p).unwrap().iter().all(|z| z.norm() == 0.0));
        let spec = diagonalize_projected(&h).unwrap();
        let mut e: Vec<f64> = h.modes.iter().map(|m| m.energy).collect();
        e.sort_by(f64::total_cmp);
        for (a, b) in e.iter().zip(&spec.values) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(classify_bound_states(&spec, &h).is_empty());
        for (i, m) in h.modes.iter().enumerate() {
            assert_eq!(h.matrix()[(i, i)].re, m.energy);
        }
    }

    #[test]
    fn diagonal_sign_and_hermiticity() {
        for v0 in [4.0, -4.0] {
            let p = fig2(4.1, v0);
            let h = ProjectedHamiltonian::new(&p, Method::Auto).unwrap();
            let v = potential_matrix(&h.modes, &p).unwrap();
            for i in 0..40 {
                assert_eq!(v[(i, i)].re.signum(), v0.signum());
                assert_eq!(v[(i, i)].im, 0.0);
            }
            assert!(hermitian_defect(&h.matrix()) <= 1e-12);
            let e = linalg::eigh(h.relative().clone()).unwrap();
            assert!(max_residual(h.relative(), &e) < 1e-8);
        }
    }

    #[test]
    fn fig2_counts_and_classes() {
        let p = fig2(4.1, 4.0);
        let h = ProjectedHamiltonian::new(&p, Method::Auto).unwrap();
        let spec = diagonalize_projected(&h).unwrap();
        let rec = classify_bound_states(&spec, &h);
        assert_eq!(rec.len(), 4);
        assert!(rec.iter().all(|r| r.re_k_class == ReKClass::NearZero));
        let rate = |l: &str| rec.iter().find(|r| r.label == l).unwrap().decay_rate;
        assert!(rate("a") > rate("c") && rate("b") > rate("d"));

        let p = fig2(4.1, -4.0);
        let h = ProjectedHamiltonian::new(&p, Method::Auto).unwrap();
        let spec = diagonalize_projected(&h).unwrap();
        let rec = classify_bound_states(&spec, &h);
        assert_eq!(rec.len(), 2);
        assert!(rec.iter().all(|r| r.re_k_class == ReKClass::NearHalfPi));
    }

    #[test]
    fn bound_states_are_more_localized_than_scattering_states() {
        let p = fig2(4.1, 4.0);
        let h = ProjectedHamiltonian::new(&p, Method::Auto).unwrap();
        let spec = diagonalize_projected(&h).unwrap();
        let floor = min_scattering_participation(&spec, &h);
        for r in classify_bound_states(&spec, &h) {
            assert!(r.participation < floor, "{} {} {}", r.label, r.participation, floor);
        }
    }

    #[test]
    fn energies_split_away_from_nearer_edge() {
        for v0 in [4.0, -4.0] {
            let p = fig2(4.1, v0);
            let h = ProjectedHamiltonian::new(&p, Method::Auto).unwrap();
            let (lo, hi) = h.band_edges();
            let spec = diagonalize_projected(&h).unwrap();
            for r in classify_bound_states(&spec, &h) {
                let near_top = (r.energy - hi).abs() < (r.energy - lo).abs();
                if near_top {
                    assert!(r.energy > hi);
                } else {
                    assert!(r.energy < lo);
                }
            }
        }
    }

    #[test]
    fn large_d_symmetry_and_zero_column() {
        let t = ModelParams::new(40, 1.0, 6.0, 0.0, 0.0).unwrap();
        let grid = phase_diagram(&[6.0, -6.0], &[-5.0, 0.0, 5.0], &t, Method::Auto);
        for row in &grid {
            assert_eq!(row[1], 0);
            assert_eq!(row[0], row[2]);
        }
    }

    #[test]
    fn bad_cell_is_sentinel() {
        let t = ModelParams::new(40, 1.0, 6.0, 0.0, 0.0).unwrap();
        let grid = phase_diagram(&[1.0], &[1.0], &t, Method::Auto);
        assert_eq!(grid, vec![vec![-1]]);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let p = fig2(4.1, 4.0);
        let mut modes = lattice::modes(&p, Method::Auto).unwrap();
        modes.pop();
        assert!(matches!(potential_matrix(&modes, &p), Err(Error::Parameter(_))));
    }

    #[test]
    fn labels() {
        assert_eq!(label_for(0), "a");
        assert_eq!(label_for(25), "z");
        assert_eq!(label_for(26), "aa");
    }
}
