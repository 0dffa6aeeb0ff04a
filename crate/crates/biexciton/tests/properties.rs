use biexciton::dynamics::{Propagator, WavepacketState};
use biexciton::exact_diag;
use biexciton::exciton;
use biexciton::lattice::{self, Method};
use biexciton::linalg::{eigh, hermitian_defect};
use biexciton::projected::ProjectedHamiltonian;
use biexciton::ModelParams;
use num_complex::Complex64;
use proptest::prelude::*;

fn sign() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(-1.0)]
}

/// Even N in [4, 20], |J| in [0.2, 2], |D| above 2|J|, any V0.
fn biexciton_params() -> impl Strategy<Value = ModelParams> {
    (2usize..=10, 0.2f64..2.0, sign(), 2.05f64..5.0, sign(), -10.0f64..10.0, -5.0f64..5.0).prop_map(
        |(h, j, sj, ratio, sd, v0, e0)| ModelParams::new(2 * h, j * sj, ratio * j * sd, e0, v0).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn built_matrices_are_hermitian(p in biexciton_params()) {
        let scale = p.j.abs();
        prop_assert!(hermitian_defect(&exciton::exciton_site_hamiltonian(&p)) <= 1e-12 * scale);
        let (_, h) = exact_diag::build_pair_hamiltonian(&p).unwrap();
        prop_assert!(hermitian_defect(&h) <= 1e-12 * scale);
        let m = ProjectedHamiltonian::new(&p, Method::Auto).unwrap();
        prop_assert!(hermitian_defect(&m.matrix()) <= 1e-12 * scale);
    }

    #[test]
    fn phi_symmetries_hold_exactly(p in biexciton_params(), exact in any::<bool>()) {
        let method = if exact { Method::Exact } else { Method::LargeN };
        let n = p.n as i64;
        let h = n / 2;
        for m in lattice::modes(&p, method).unwrap() {
            let sg = if m.index.l.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            prop_assert_eq!(m.phi_at(0, p.n).unwrap(), 0.0);
            for s in 1..n {
                prop_assert_eq!(m.phi_at(s, p.n).unwrap(), m.phi_at(-s, p.n).unwrap());
            }
            for s in 0..h {
                prop_assert_eq!(m.phi_at(h + s, p.n).unwrap(), sg * m.phi_at(h - s, p.n).unwrap());
            }
        }
    }

    #[test]
    fn propagation_is_unitary_and_conserves_energy(
        h in 4usize..=10,
        d in 4.5f64..9.0,
        sd in sign(),
        v0 in -3.0f64..3.0,
        seed in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 20),
        t in -60.0f64..120.0,
    ) {
        let p = ModelParams::new(2 * h, 1.0, d * sd, 0.0, v0).unwrap();
        let ham = ProjectedHamiltonian::new(&p, Method::Auto).unwrap();
        let prop = Propagator::new(&ham).unwrap();
        let u: Vec<Complex64> = seed.iter().take(p.n).map(|&(a, b)| Complex64::new(a, b)).collect();
        let norm = u.iter().map(|c| c.norm_sqr()).sum::<f64>();
        prop_assume!(norm > 1e-3);
        let s0 = WavepacketState { t: 0.0, u, norm };
        let e0 = prop.energy(&s0);
        let st = prop.propagate(&s0, t);
        prop_assert!((st.norm - norm).abs() <= 1e-10 * norm);
        prop_assert!((prop.energy(&st) - e0).abs() <= 1e-8 * e0.abs().max(norm));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn exciton_flux_is_conserved(k in 1e-3f64..(std::f64::consts::PI - 1e-3), j in 0.2f64..3.0, sj in sign(), v0 in -8.0f64..8.0) {
        let p = ModelParams::new(40, j * sj, 4.0, 0.0, v0).unwrap();
        let r = exciton::exciton_reflection_amplitude(Complex64::new(k, 0.0), &p).unwrap();
        prop_assert!((r.norm_sqr() + (Complex64::new(1.0, 0.0) + r).norm_sqr() - 1.0).abs() < 1e-10);
    }
}

fn full_spectrum(p: &ModelParams) -> Vec<f64> {
    let (_, h) = exact_diag::build_pair_hamiltonian(p).unwrap();
    eigh(h).unwrap().values
}

fn nearest(values: &[f64], e: f64) -> f64 {
    values.iter().map(|v| (v - e).abs()).fold(f64::INFINITY, f64::min)
}

#[test]
fn exact_mode_energies_are_in_the_full_spectrum() {
    for n in [8, 12, 40] {
        for d in [4.1, -4.5, 3.0] {
            let p = ModelParams::new(n, 1.0, d, 0.0, 0.0).unwrap();
            let spec = full_spectrum(&p);
            for m in lattice::modes(&p, Method::Exact).unwrap().iter().filter(|m| m.method == Method::Exact) {
                let gap = nearest(&spec, m.energy);
                assert!(gap < 1e-8, "N={n} D={d} K={}: {gap:e}", m.index.k);
            }
        }
    }
}

/// The large-N form drops the e^{−k_i N/2} overlap of the two halves of the
/// ring, so its energy error is bounded by |D| e^{−k_min N/2}.
#[test]
fn large_n_energies_within_documented_bound() {
    for n in [8, 12, 40] {
        for d in [4.1, -4.5, 3.0] {
            let p = ModelParams::new(n, 1.0, d, 0.0, 0.0).unwrap();
            let spec = full_spectrum(&p);
            let modes = lattice::modes(&p, Method::LargeN).unwrap();
            let k_min = modes.iter().map(|m| m.k.k_imag).fold(f64::INFINITY, f64::min);
            let bound = d.abs() * (-k_min * n as f64 / 2.0).exp() + 1e-10;
            for m in &modes {
                let gap = nearest(&spec, m.energy);
                assert!(gap <= bound, "N={n} D={d} K={}: {gap:e} > {bound:e}", m.index.k);
            }
        }
    }
}

#[test]
fn exciton_energies_match_site_matrix() {
    for n in [8, 12, 40] {
        for (j, v0) in [(1.0, 0.7), (-1.0, 2.5), (1.0, -0.1), (0.5, 0.0)] {
            let p = ModelParams::new(n, j, 4.0, 0.3, v0).unwrap();
            let mut a = exciton::solve_exciton_spectrum(&p).unwrap().energies(&p);
            a.sort_by(f64::total_cmp);
            let e = eigh(exciton::exciton_site_hamiltonian(&p)).unwrap().values;
            assert_eq!(a.len(), n);
            for (x, y) in a.iter().zip(&e) {
                assert!((x - y).abs() < 1e-8 * j.abs(), "N={n} J={j} V0={v0}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn exciton_sign_symmetry() {
    let p = ModelParams::new(40, 1.0, 4.0, 2.0, 1.3).unwrap();
    let q = ModelParams { j: -p.j, v0: -p.v0, ..p };
    let mut a: Vec<f64> = eigh(exciton::exciton_site_hamiltonian(&p)).unwrap().values;
    let mut b: Vec<f64> = eigh(exciton::exciton_site_hamiltonian(&q)).unwrap().values.iter().map(|e| 2.0 * p.e0 - e).collect();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn pair_hamiltonian_is_real_symmetric_for_canonical_sizes() {
    for n in [8, 12, 40] {
        let p = ModelParams::new(n, -1.0, 4.1, 1000.0, 8.0).unwrap();
        let (basis, h) = exact_diag::build_pair_hamiltonian(&p).unwrap();
        assert_eq!(basis.len(), n * (n - 1) / 2);
        assert_eq!(h.clone(), h.transpose());
    }
}
