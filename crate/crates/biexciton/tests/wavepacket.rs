use biexciton::dynamics::{self, ExcitonPacket, Wavepacket, WavepacketConfig};
use biexciton::ModelParams;

fn canonical_model(v0: f64) -> ModelParams {
    ModelParams::new(40, -1.0, -4.5, 0.0, v0).unwrap()
}

#[test]
fn free_packet_keeps_its_entropy() {
    let w = Wavepacket::new(&canonical_model(0.0), &WavepacketConfig::canonical()).unwrap();
    let s0 = w.entropy_at(-30.0).unwrap();
    for t in [-10.0, 0.0, 25.0, 70.0] {
        assert!((w.entropy_at(t).unwrap() - s0).abs() < 1e-10, "t = {t}");
    }
    // nothing reflects without an impurity
    assert!(w.reflected_at(25.0) < 0.05);
}

#[test]
fn calibrated_run_splits_evenly_and_conserves_energy() {
    let cfg = WavepacketConfig::canonical();
    let cal = dynamics::calibrate_v0(&canonical_model(0.0), &cfg, 0.5, 25.0).unwrap();
    assert!(cal.v0 > 0.0 && cal.v0 < 9.0, "V0 = {}", cal.v0);
    assert!((cal.reflected - 0.5).abs() < 1e-6);
    let w = Wavepacket::new(&canonical_model(cal.v0), &cfg).unwrap();
    let (refl, trans) = w.split_at(25.0).unwrap();
    assert!((refl - 0.5).abs() < 0.02 && (trans - 0.5).abs() < 0.02);

    let series = w.time_series().unwrap();
    let e0 = series[0].energy;
    for s in &series {
        assert!((s.energy - e0).abs() <= 1e-6 * e0.abs());
        assert!((s.norm - 1.0).abs() < 1e-10);
        assert!(s.entropy >= 0.0);
    }
    assert!((series[0].entropy - 0.18).abs() <= 0.02, "S(-30) = {}", series[0].entropy);
}

#[test]
fn exciton_comparator_is_fully_coherent() {
    let cfg = WavepacketConfig::canonical();
    let cal = dynamics::calibrate_exciton_v0(40, -1.0, 1.0, &cfg, 0.5).unwrap();
    let ex = ExcitonPacket::new(40, -1.0, cal.v0, &cfg).unwrap();
    let k0 = cfg.k0;
    assert!((cal.v0.abs() - 2.0 * k0.sin()).abs() < 0.2, "V0 = {}", cal.v0);
    let (_, ratio) = ex.fringes_at(ex.meeting_time());
    assert!(ratio < 0.1, "min/max = {ratio}");
}

#[test]
fn regime_violations_are_rejected() {
    let cfg = WavepacketConfig::canonical();
    let weak = ModelParams::new(40, -1.0, -3.5, 0.0, 0.5).unwrap();
    assert!(matches!(Wavepacket::new(&weak, &cfg), Err(biexciton::Error::Regime(_))));
}
