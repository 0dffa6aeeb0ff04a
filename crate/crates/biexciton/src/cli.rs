//! Command-line front end. Each command turns a [`RunConfig`] into a
//! [`Report`] of tables and dense grids, which is then written to `--out`.

use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error as ThisError;

use crate::config::{PolesRun, RunConfig};
use crate::dynamics::{self, ExcitonPacket, Wavepacket};
use crate::error::Error;
use crate::exact_diag;
use crate::exciton;
use crate::io::{self, Cell, Format, Table};
use crate::lattice::ModelParams;
use crate::projected::{self, ProjectedHamiltonian, ReKClass};
use crate::scattering;

#[derive(Debug, Parser)]
#[command(name = "biexciton", version, about = "Biexciton-impurity scattering on a periodic 1D lattice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single exciton with one impurity: spectrum and bound-state profile.
    Exciton(Common),
    /// Projected-basis biexciton-impurity eigenstates and bound records.
    BiexcitonSpectrum(Common),
    /// Bound-state counts over a (D, V0) grid.
    PhaseDiagram(Common),
    /// |R_b| along imaginary K and the pole against projected energies.
    Poles(Common),
    /// Full two-exciton diagonalization and bound states in the continuum.
    Bic(Common),
    /// Wavepacket scattering and entanglement time series.
    Wavepacket(Common),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Exciton(c)
            | Command::BiexcitonSpectrum(c)
            | Command::PhaseDiagram(c)
            | Command::Poles(c)
            | Command::Bic(c)
            | Command::Wavepacket(c) => c,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] Error),
}

impl CliError {
    /// 0 ok, 1 numerical failure, 2 config or IO, 3 regime violation.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Model(Error::Regime(_)) => 3,
            CliError::Model(Error::Parameter(_)) => 2,
            CliError::Model(_) => 1,
        }
    }
}

/// What to plot from a table: x column, y column, optional grouping column.
#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub x: &'static str,
    pub y: &'static str,
    pub group: Option<&'static str>,
}

#[derive(Debug, Default)]
pub struct Report {
    pub tables: Vec<(Table, Option<PlotSpec>)>,
    pub grids: Vec<(String, DMatrix<f64>)>,
    pub notes: Vec<String>,
}

impl Report {
    fn table(&mut self, t: Table, plot: Option<PlotSpec>) {
        self.tables.push((t, plot));
    }

    pub fn get(&self, name: &str) -> Option<&Table> {
        self.tables.iter().map(|(t, _)| t).find(|t| t.name == name)
    }

    /// Writes every table, grid and optional script into `dir`.
    pub fn write(&self, dir: &Path, format: Format, plots: bool) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (t, plot) in &self.tables {
            written.push(t.save(dir, format)?);
            if let (true, Format::Csv, Some(spec)) = (plots, format, plot) {
                let script = io::gnuplot_script(t, spec.x, spec.y, spec.group);
                written.push(io::save_script(dir, t, &script)?);
            }
        }
        for (stem, g) in &self.grids {
            written.push(io::save_grid(dir, stem, g)?);
        }
        Ok(written)
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = RunConfig::load(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    RunConfig::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Parses, runs and writes; returns the process exit code.
pub fn main_with(cli: Cli) -> ExitCode {
    match execute(&cli.command) {
        Ok(report) => {
            for n in &report.notes {
                eprintln!("note: {n}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn execute(cmd: &Command) -> Result<Report, CliError> {
    let common = cmd.common();
    let cfg = parse_config(&common.config)?;
    if common.threads > 0 {
        // A second call in the same process fails harmlessly.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(common.threads).build_global();
    }
    let report = run(cmd, &cfg)?;
    report.write(&common.out, common.format, cfg.plots)?;
    std::fs::write(common.out.join("run_config.toml"), cfg.to_toml())?;
    Ok(report)
}

pub fn run(cmd: &Command, cfg: &RunConfig) -> Result<Report, CliError> {
    match cmd {
        Command::Exciton(_) => cmd_exciton(cfg),
        Command::BiexcitonSpectrum(_) => cmd_biexciton_spectrum(cfg),
        Command::PhaseDiagram(_) => cmd_phase_diagram(cfg),
        Command::Poles(_) => cmd_poles(cfg),
        Command::Bic(_) => cmd_bic(cfg),
        Command::Wavepacket(_) => cmd_wavepacket(cfg),
    }
}

fn sign_tag(x: f64) -> char {
    if x < 0.0 { '-' } else { '+' }
}

pub fn cmd_exciton(cfg: &RunConfig) -> Result<Report, CliError> {
    let m = cfg.model;
    let cases: Vec<ModelParams> = if cfg.exciton.sign_cases {
        let (j, v) = (m.j.abs(), m.v0.abs());
        vec![
            ModelParams { j, v0: v, ..m },
            ModelParams { j, v0: -v, ..m },
            ModelParams { j: -j, v0: v, ..m },
            ModelParams { j: -j, v0: -v, ..m },
        ]
    } else {
        vec![m]
    };

    let mut spec = Table::new("exciton_spectrum", &["case", "branch", "k_real", "k_imag", "energy", "bound_flag"]);
    let mut prof = Table::new("exciton_profiles", &["case", "site", "amplitude"]);
    for p in &cases {
        let case = format!("J{}V0{}", sign_tag(p.j), sign_tag(p.v0));
        let s = exciton::solve_exciton_spectrum(p)?;
        let disp = |k: f64| p.e0 + 2.0 * p.j * k.cos();
        for (branch, ks) in [("antisymmetric", &s.antisymmetric_k), ("symmetric", &s.symmetric_k)] {
            for &k in ks {
                spec.push(vec![case.clone().into(), branch.into(), k.into(), 0.0.into(), disp(k).into(), false.into()]);
            }
        }
        if let Some(b) = &s.bound {
            let flag = exciton::is_bound_energy(b.energy, p);
            spec.push(vec![case.clone().into(), "bound".into(), b.k.re.into(), b.k.im.into(), b.energy.into(), flag.into()]);
            let first = -(p.n as i64) / 2 + 1;
            for (i, &a) in b.amplitude_profile.iter().enumerate() {
                prof.push(vec![case.clone().into(), (first + i as i64).into(), a.into()]);
            }
        }
    }
    let mut r = Report::default();
    r.table(spec, Some(PlotSpec { x: "k_real", y: "energy", group: Some("case") }));
    r.table(prof, Some(PlotSpec { x: "site", y: "amplitude", group: Some("case") }));
    Ok(r)
}

pub fn cmd_biexciton_spectrum(cfg: &RunConfig) -> Result<Report, CliError> {
    let m = cfg.model;
    m.require_biexciton()?;
    let cases: Vec<(&str, ModelParams)> = if cfg.biexciton_spectrum.sign_cases {
        let v = m.v0.abs() * m.d.signum();
        vec![("same_sign", m.with_v0(v)), ("opposite_sign", m.with_v0(-v))]
    } else {
        vec![("model", m)]
    };

    let mut states = Table::new(
        "biexciton_states",
        &["case", "mu", "energy", "dominant_K", "class", "decay_rate", "bound_flag", "label"],
    );
    let mut prof = Table::new("bound_profiles", &["case", "label", "r", "abs_psi_s1"]);
    let mut notes = Vec::new();
    for (case, p) in &cases {
        let h = ProjectedHamiltonian::new(p, cfg.method)?;
        let spec = projected::diagonalize_projected(&h)?;
        let records = projected::classify_bound_states(&spec, &h);
        for mu in 0..spec.values.len() {
            let u: Vec<Complex64> = spec.vectors.column(mu).iter().copied().collect();
            let rec = records.iter().find(|r| r.mu == mu);
            let dominant = rec.map(|r| r.dominant_k).unwrap_or_else(|| {
                let i = (0..u.len()).max_by(|&a, &b| u[a].norm_sqr().total_cmp(&u[b].norm_sqr())).unwrap_or(0);
                h.modes[i].index.k
            });
            let class = rec.map(|r| r.re_k_class).unwrap_or(if dominant.abs() < FRAC_PI_4 {
                ReKClass::NearZero
            } else {
                ReKClass::NearHalfPi
            });
            let class = match class {
                ReKClass::NearZero => "near_0",
                ReKClass::NearHalfPi => "near_pi_2",
            };
            states.push(vec![
                (*case).into(),
                mu.into(),
                spec.values[mu].into(),
                dominant.into(),
                class.into(),
                rec.map(|r| r.decay_rate).into(),
                rec.is_some().into(),
                rec.map(|r| r.label.clone()).into(),
            ]);
            if let Some(rec) = rec {
                for (r, a) in projected::amplitude_at_s(&u, &h.modes, p.n, 1) {
                    prof.push(vec![(*case).into(), rec.label.clone().into(), r.into(), a.norm().into()]);
                }
            }
        }
        notes.push(format!("{case}: {} bound states", records.len()));
    }
    let mut r = Report { notes, ..Report::default() };
    r.table(states, Some(PlotSpec { x: "dominant_K", y: "energy", group: Some("case") }));
    r.table(prof, Some(PlotSpec { x: "r", y: "abs_psi_s1", group: Some("label") }));
    Ok(r)
}

pub fn cmd_phase_diagram(cfg: &RunConfig) -> Result<Report, CliError> {
    let grid = cfg
        .phase_diagram
        .ok_or_else(|| CliError::Config("missing [phase_diagram] block".into()))?;
    let (ds, vs) = (grid.d_grid(), grid.v0_grid());
    for &d in &ds {
        cfg.model.with_d(d).require_biexciton()?;
    }
    let counts = projected::phase_diagram(&ds, &vs, &cfg.model, cfg.method);
    let mut t = Table::new("phase_diagram", &["D", "V0", "count"]);
    for (i, &d) in ds.iter().enumerate() {
        for (j, &v) in vs.iter().enumerate() {
            t.push(vec![d.into(), v.into(), counts[i][j].into()]);
        }
    }
    let mut r = Report::default();
    let failed = counts.iter().flatten().filter(|&&c| c < 0).count();
    if failed > 0 {
        r.notes.push(format!("{failed} cells failed and hold -1"));
    }
    r.table(t, Some(PlotSpec { x: "V0", y: "count", group: Some("D") }));
    Ok(r)
}

pub fn cmd_poles(cfg: &RunConfig) -> Result<Report, CliError> {
    let p = cfg.model;
    p.require_biexciton()?;
    let mut r = Report::default();

    let mut scan = Table::new("pole_scan", &["K_prime", "K_doubleprime", "abs_R_b"]);
    let grid = cfg.poles.grid();
    for kp in PolesRun::k_primes() {
        for (y, a) in scattering::reflection_scan(kp, &grid, &p)? {
            scan.push(vec![kp.into(), y.into(), a.into()]);
        }
    }

    let mut summary = Table::new("pole_summary", &["branch", "K_doubleprime_pole", "E_pole", "E_numeric", "rel_err"]);
    match scattering::find_pole(&p) {
        Ok(pole) => {
            let h = ProjectedHamiltonian::new(&p, cfg.method)?;
            let spec = projected::diagonalize_projected(&h)?;
            let bound = projected::classify_bound_states(&spec, &h);
            let nearest = bound
                .iter()
                .map(|b| b.energy)
                .min_by(|a, b| (a - pole.energy).abs().total_cmp(&(b - pole.energy).abs()));
            let rel = nearest.map(|e| (pole.energy - e).abs() / (e - 2.0 * p.e0).abs());
            let branch = match pole.branch {
                scattering::PoleBranch::Zero => "biexciton_K0",
                scattering::PoleBranch::HalfPi => "biexciton_Kpi2",
            };
            summary.push(vec![branch.into(), pole.k_doubleprime.into(), pole.energy.into(), nearest.into(), rel.into()]);
        }
        Err(Error::Existence(msg)) => r.notes.push(format!("no biexciton pole: {msg}")),
        Err(e) => return Err(e.into()),
    }

    if p.v0 != 0.0 {
        let k = exciton::exciton_bound_wavevector_large_n(&p)?;
        let e_pole = exciton::exciton_dispersion(k, &p).re;
        let e_num = exciton::solve_exciton_spectrum(&p)?.bound.map(|b| b.energy);
        let rel = e_num.map(|e| (e_pole - e).abs() / (e - p.e0).abs());
        summary.push(vec!["exciton".into(), k.im.abs().into(), e_pole.into(), e_num.into(), rel.into()]);
    }

    r.table(scan, Some(PlotSpec { x: "K_doubleprime", y: "abs_R_b", group: Some("K_prime") }));
    r.table(summary, None);
    Ok(r)
}

pub fn cmd_bic(cfg: &RunConfig) -> Result<Report, CliError> {
    let p = cfg.model;
    p.require_biexciton()?;
    let full = exact_diag::diagonalize_full(&p)?;
    let classes = exact_diag::classify_all(&full);

    let mut states = Table::new(
        "bic_states",
        &["index", "energy", "type", "in_continuum", "schmidt_number", "decay_r", "decay_s", "parity", "bic_candidate"],
    );
    for (i, c) in classes.iter().enumerate() {
        // Only the antisymmetric sector has a closed form to compare against.
        let candidate = match (c.in_continuum && c.kind == exact_diag::BoundType::FullyBound, c.parity < 0.0) {
            (false, _) => Cell::Empty,
            (true, true) => "antisymmetric".into(),
            (true, false) => "unclassified-symmetric".into(),
        };
        states.push(vec![
            i.into(),
            full.values[i].into(),
            c.kind.as_str().into(),
            c.in_continuum.into(),
            c.schmidt_number.into(),
            c.decay_r.rate.into(),
            c.decay_s.rate.into(),
            c.parity.into(),
            candidate,
        ]);
    }

    let mut r = Report::default();
    let mut summary = Table::new(
        "bic_summary",
        &["index", "energy", "E_b1", "discrepancy", "schmidt_number", "parity", "flagged"],
    );
    match exact_diag::find_bic(&full, &classes) {
        Ok(b) => {
            let flagged = b.discrepancy > cfg.bic.tolerance * p.j.abs();
            summary.push(vec![
                b.index.into(),
                b.energy.into(),
                b.closed_form.into(),
                b.discrepancy.into(),
                b.classification.schmidt_number.into(),
                b.classification.parity.into(),
                flagged.into(),
            ]);
            if cfg.bic.dump_amplitudes {
                let v: Vec<f64> = full.vector(b.index).iter().copied().collect();
                let g = exact_diag::amplitude_grid(&v, &full.basis).map(f64::abs);
                r.grids.push((format!("bic_amplitude_{}", b.index), g));
            }
        }
        Err(Error::Existence(msg)) | Err(Error::Pole(msg)) => {
            r.notes.push(format!("no bound state in the continuum: {msg}"));
            let closed = exact_diag::bic_energies(&p).ok().and_then(|e| e.in_band(&p));
            summary.push(vec![
                Cell::Empty,
                Cell::Empty,
                closed.into(),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                closed.is_some().into(),
            ]);
        }
        Err(e) => return Err(e.into()),
    }

    let mut cm = Table::new("cm_wavevector", &["branch", "sign", "k_real", "k_imag", "energy", "unreliable"]);
    if p.v0 != 0.0 {
        let a = exact_diag::antisymmetric_cm_wavevector(&p)?;
        for root in &a.roots {
            let branch = match root.branch {
                exact_diag::CmBranch::Imaginary => "imaginary",
                exact_diag::CmBranch::HalfPi => "half_pi",
            };
            cm.push(vec![
                branch.into(),
                (root.sign as i64).into(),
                root.k.re.into(),
                root.k.im.into(),
                root.energy.into(),
                a.unreliable.into(),
            ]);
        }
    }

    r.table(states, Some(PlotSpec { x: "energy", y: "schmidt_number", group: Some("type") }));
    r.table(summary, None);
    r.table(cm, None);
    Ok(r)
}

pub fn cmd_wavepacket(cfg: &RunConfig) -> Result<Report, CliError> {
    let w = cfg
        .wavepacket
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [wavepacket] block".into()))?;
    let mut p = cfg.model;
    dynamics::check_regime(&p)?;
    w.packet.validate()?;
    let mut r = Report::default();
    let mut summary = Table::new("wavepacket_summary", &["quantity", "value"]);

    if let Some(c) = w.calibrate {
        let cal = dynamics::calibrate_v0(&p, &w.packet, c.target, c.t_measure)?;
        p.v0 = cal.v0;
        r.notes.extend(cal.warnings.iter().cloned());
        summary.push(vec!["calibrated_reflected".into(), cal.reflected.into()]);
        summary.push(vec!["calibration_monotone".into(), cal.monotone.into()]);
    }
    let packet = Wavepacket::new(&p, &w.packet)?;
    if let Some(msg) = &packet.warning {
        r.notes.push(msg.clone());
    }

    let series = packet.time_series()?;
    let mut ts = Table::new("time_series", &["t", "S", "norm", "energy", "reflected_prob"]);
    for s in &series {
        ts.push(vec![s.t.into(), s.entropy.into(), s.norm.into(), s.energy.into(), s.reflected.into()]);
    }
    let e0 = series.first().map_or(0.0, |s| s.energy);
    let drift = series.iter().map(|s| (s.energy - e0).abs()).fold(0.0, f64::max);
    summary.push(vec!["V0".into(), p.v0.into()]);
    summary.push(vec!["group_velocity".into(), dynamics::group_velocity(w.packet.k0, &p).into()]);
    summary.push(vec!["energy".into(), e0.into()]);
    summary.push(vec!["energy_drift".into(), drift.into()]);
    summary.push(vec!["free_flight_end".into(), packet.free_flight_end().into()]);
    summary.push(vec!["free_flight_dS".into(), packet.free_flight_entropy_change()?.into()]);

    for &t in &w.snapshots {
        let grid = packet.grid_at(t);
        let rd = dynamics::reduced_density(&grid)?;
        let tag = format!("t{t}");
        r.grids.push((format!("psi2_{tag}"), grid.psi.map(|c| c.norm_sqr())));
        r.grids.push((format!("rho_diag_{tag}"), DMatrix::from_fn(grid.r.len(), 2, |i, j| {
            if j == 0 { grid.r[i] as f64 } else { rd.rho[(i, i)].re }
        })));
        let c = dynamics::contrast(&rd);
        r.grids.push((format!("contrast_{tag}"), DMatrix::from_fn(c.len(), c.len(), |i, j| c[i][j].unwrap_or(f64::NAN))));
        let dist = dynamics::mode_distribution(&packet.state_at(t), packet.modes());
        r.grids.push((format!("uk2_{tag}"), DMatrix::from_fn(dist.len(), 2, |i, j| if j == 0 { dist[i].0 } else { dist[i].1 })));
        summary.push(vec![format!("visibility_{tag}").into(), packet.visibility_at(t)?.into()]);
    }

    if w.exciton_comparator {
        let sign = -p.d.signum();
        let cal = dynamics::calibrate_exciton_v0(p.n, p.j, sign, &w.packet, 0.5)?;
        let ex = ExcitonPacket::new(p.n, p.j, cal.v0, &w.packet)?;
        let t_meet = ex.meeting_time();
        let (vis, ratio) = ex.fringes_at(t_meet);
        summary.push(vec!["exciton_V0".into(), cal.v0.into()]);
        summary.push(vec!["exciton_meeting_time".into(), t_meet.into()]);
        summary.push(vec!["exciton_visibility".into(), vis.into()]);
        summary.push(vec!["exciton_min_over_max".into(), ratio.into()]);
        let mut prof = Table::new("exciton_comparator", &["x", "density"]);
        for (x, d) in ex.profile_at(t_meet) {
            prof.push(vec![x.into(), d.into()]);
        }
        r.table(prof, Some(PlotSpec { x: "x", y: "density", group: None }));
    }

    r.table(ts, Some(PlotSpec { x: "t", y: "S", group: None }));
    r.table(summary, None);
    Ok(r)
}
