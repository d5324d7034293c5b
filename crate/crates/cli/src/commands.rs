//! The `calibrate`, `teleport`, `readout`, `tomo`, `shots` and `full` commands.

use std::path::{Path, PathBuf};

use pcqc::profile::{render_model, load_profile, ProfileModel, SampledProfile};
use pcqc::readout::{
    choose_detunings, detuning_grid, excitation_probability, sweep, tomography_invert, InversionLimits,
    Measurement, ReadoutCircuit, TomographyResult, DEFAULT_CONDITION_LIMIT,
};
use pcqc::shots::{estimate, simulate_shots, EstimationReport, ShotBudget, ShotOptions, ShotRecord};
use pcqc::state::{bloch_to_qubit, BlochAngles, QubitState};
use pcqc::teleport::{run_teleport, TeleportConfig, TeleportOutcome};
use pcqc::PhysicalParams;

use crate::config::{CavitySource, DetuningChoice, RunConfig, WaveguideSource};
use crate::output::{config_hash, num, Csv, Report};
use crate::CliError;

/// Resolved configuration plus everything a command needs to write output.
pub struct Session {
    pub config: RunConfig,
    pub hash: String,
    pub report: Report,
    pub written: Vec<PathBuf>,
}

impl Session {
    pub fn new(config: RunConfig, warnings: &[String]) -> Self {
        let hash = config_hash(&config);
        let report = Report::new(&hash, warnings);
        Self {
            config,
            hash,
            report,
            written: Vec::new(),
        }
    }

    fn out_dir(&self) -> &Path {
        &self.config.output.dir
    }

    fn emit(&mut self, name: &str, csv: &Csv) -> Result<(), CliError> {
        let p = csv.write(self.out_dir(), name)?;
        self.written.push(p);
        Ok(())
    }

    /// Writes `report.txt` with every section gathered so far.
    pub fn finish(&mut self) -> Result<(), CliError> {
        let p = crate::output::write_file(self.out_dir(), "report.txt", self.report.as_str())?;
        self.written.push(p);
        Ok(())
    }
}

pub fn physical(cfg: &RunConfig) -> PhysicalParams {
    let p = &cfg.physical;
    PhysicalParams {
        lattice_a: p.lattice_a,
        wavelength: p.wavelength,
        dipole_mu10: p.dipole_mu10,
        g0: p.g0,
        v_b: p.v_b,
        v_a: p.v_a,
    }
}

pub fn cavity_profile(cfg: &RunConfig) -> Result<SampledProfile, CliError> {
    let p = match &cfg.cavity.source {
        CavitySource::Gaussian {
            width_sigma,
            center,
            span,
        } => render_model(
            &ProfileModel::AnalyticCavity {
                width_sigma: *width_sigma,
                center: *center,
                span: *span,
            },
            cfg.cavity.samples_per_a,
        )?,
        CavitySource::File(path) => load_profile(path)?,
    };
    Ok(p)
}

pub fn waveguide_profiles(cfg: &RunConfig) -> Result<Vec<SampledProfile>, CliError> {
    let w = &cfg.waveguide;
    match &w.source {
        WaveguideSource::Lobed {
            lobe_period,
            envelope_sigma,
        } => w
            .zone_starts
            .iter()
            .map(|&start| {
                render_model(
                    &ProfileModel::AnalyticWaveguide {
                        lobe_period: *lobe_period,
                        envelope_sigma: *envelope_sigma,
                        zone_start: start,
                        zone_length: w.zone_length,
                    },
                    w.samples_per_a,
                )
                .map_err(CliError::from)
            })
            .collect(),
        WaveguideSource::Files(paths) => paths.iter().map(|p| load_profile(p).map_err(CliError::from)).collect(),
    }
}

pub fn teleport_config(cfg: &RunConfig) -> Result<TeleportConfig, CliError> {
    let mut t = TeleportConfig::with_profile(physical(cfg), cavity_profile(cfg)?);
    let c = &cfg.calibration;
    t.target_area_b = c.target_area_b;
    t.target_area_a = c.target_area_a;
    t.injection_position = c.injection_position;
    t.readout_entry = c.readout_entry;
    if let Some(x) = c.detector_position {
        t.detector_position = x;
    }
    t.validate()?;
    Ok(t)
}

pub fn circuit(cfg: &RunConfig) -> Result<ReadoutCircuit, CliError> {
    let p = physical(cfg);
    Ok(ReadoutCircuit::calibrated(
        waveguide_profiles(cfg)?,
        p.omega(),
        p.transit_b(),
        cfg.waveguide.zone_area,
        cfg.readout.step,
    )?)
}

pub fn input_state(cfg: &RunConfig) -> Result<QubitState, CliError> {
    let angles = BlochAngles::new(cfg.input.theta, cfg.input.phi).map_err(|e| CliError::Numeric(e.to_string()))?;
    Ok(bloch_to_qubit(angles))
}

fn half_width(cfg: &RunConfig, circuit: &ReadoutCircuit) -> f64 {
    cfg.readout.half_width.unwrap_or_else(|| circuit.default_search_half_width())
}

pub fn detunings(cfg: &RunConfig, circuit: &ReadoutCircuit) -> Result<Vec<f64>, CliError> {
    match &cfg.readout.detunings {
        DetuningChoice::Fixed(d) => Ok(d.clone()),
        DetuningChoice::Auto => Ok(choose_detunings(
            circuit,
            4,
            half_width(cfg, circuit),
            cfg.readout.grid_points,
            DEFAULT_CONDITION_LIMIT,
        )?),
    }
}

pub fn cmd_calibrate(s: &mut Session) -> Result<(), CliError> {
    let t = teleport_config(&s.config)?;
    let cal = t.calibrate()?;
    let tl = t.timeline();
    let c = circuit(&s.config)?;
    let r = &mut s.report;
    r.section("calibration");
    r.value("g0_b_rad_per_s", cal.g0_b);
    r.value("g0_a_rad_per_s", cal.g0_a);
    r.value("area_b", cal.area_b);
    r.value("area_a", cal.area_a);
    r.value("area_a_with_g0_b", cal.area_a_shared_g0);
    r.value("field_beyond_injection_fraction", cal.handoff_fraction);
    r.value("detector_position_a", t.detector_position);
    r.value("t1_s", tl.t1);
    r.value("t2_s", tl.t2);
    r.value("t3_s", tl.t3);
    r.value("b_position_at_detection_a", tl.b_position_at_detection);
    r.value("readout_peak_rabi_rad_per_s", c.peak_rabi);
    r.value("readout_mean_rabi_rad_per_s", c.mean_rabi());
    Ok(())
}

fn teleport_outcome(cfg: &RunConfig) -> Result<TeleportOutcome, CliError> {
    Ok(run_teleport(&teleport_config(cfg)?, &input_state(cfg)?, None)?)
}

pub fn cmd_teleport(s: &mut Session) -> Result<(), CliError> {
    let out = teleport_outcome(&s.config)?;
    let r = &mut s.report;
    r.section("teleport");
    r.value("input_theta", s.config.input.theta);
    r.value("input_phi", s.config.input.phi);
    r.value("p_atom_a_excited", out.success_probability);
    r.value("fidelity", out.fidelity_vs_input);
    r.value("fidelity_vacuum_branch", out.fidelity_leak_as_loss);
    r.value("fidelity_postselected", out.fidelity_postselected);
    for (b, n) in [(0u8, 0u8), (1, 0), (0, 1), (1, 1), (0, 2), (1, 2)] {
        let z = out.conditional_state.get(b, n);
        r.line(&format!("conditional_b{b}_n{n}"), format!("{} {}", num(z.re), num(z.im)));
    }

    for (name, trace) in ["fig2.csv", "fig3.csv"].iter().zip(&out.stage_traces) {
        let mut header = vec!["t_s".to_string(), "g_rad_per_s".to_string()];
        for series in &trace.series {
            for part in ["re", "im", "abs2"] {
                header.push(format!("{part}_{}", series.label));
            }
        }
        let refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut csv = Csv::new(&s.hash, &refs);
        for (i, (&t, &g)) in trace.coupling.times.iter().zip(&trace.coupling.g_values).enumerate() {
            let mut row = vec![t, g];
            for series in &trace.series {
                let z = series.values[i];
                row.extend([z.re, z.im, z.norm_sqr()]);
            }
            csv.numbers(&row);
        }
        s.emit(name, &csv)?;
    }
    Ok(())
}

pub fn cmd_readout(s: &mut Session) -> Result<(), CliError> {
    let cfg = &s.config;
    let cavity = cavity_profile(cfg)?;
    let zones = waveguide_profiles(cfg)?;
    let c = circuit(cfg)?;
    let input = input_state(cfg)?;

    let mut fig4 = Csv::new(&s.hash, &["x_in_a", "magnitude"]);
    let first_zone = zones.first().map_or(f64::INFINITY, |z| z.start());
    for (&x, &m) in cavity.positions().iter().zip(cavity.magnitudes()) {
        if x < first_zone {
            fig4.numbers(&[x, m]);
        }
    }
    let mut last = f64::NEG_INFINITY;
    for z in &zones {
        for (&x, &m) in z.positions().iter().zip(z.magnitudes()) {
            if x > last {
                fig4.numbers(&[x, m]);
                last = x;
            }
        }
    }

    let hw = half_width(cfg, &c);
    let grid = detuning_grid(hw, cfg.readout.sweep_points);
    let mut fig5 = Csv::new(
        &s.hash,
        &["delta_rad_per_s", "P1", "c01_abs2", "c11_abs2", "cross_re", "cross_im"],
    );
    for p in sweep(&c, &input, &grid) {
        let cross = p.cross();
        fig5.numbers(&[p.delta, p.p1, p.c01_abs2(), p.c11_abs2(), cross.re, cross.im]);
    }

    let deltas = detunings(cfg, &c)?;
    let tomo = invert_noiseless(&c, &input, &deltas)?;
    let r = &mut s.report;
    r.section("readout");
    r.value("search_half_width_rad_per_s", hw);
    r.line(
        "detunings_rad_per_s",
        deltas.iter().map(|&d| num(d)).collect::<Vec<_>>().join(" "),
    );
    r.value("condition_number", tomo.condition_number);
    r.section("tomography_noiseless");
    write_tomography(r, &tomo);
    s.emit("fig4.csv", &fig4)?;
    s.emit("fig5.csv", &fig5)?;
    Ok(())
}

fn invert_noiseless(c: &ReadoutCircuit, input: &QubitState, deltas: &[f64]) -> Result<TomographyResult, CliError> {
    let meas: Vec<Measurement> = deltas
        .iter()
        .map(|&d| {
            let transfer = c.transfer(d);
            Measurement {
                delta: d,
                p1: excitation_probability(input, &transfer),
                transfer,
            }
        })
        .collect();
    Ok(tomography_invert(&meas)?)
}

fn write_tomography(r: &mut Report, t: &TomographyResult) {
    r.value("theta_hat", t.theta_hat);
    r.value("phi_hat", t.phi_hat);
    r.value("x1", t.x1);
    r.value("x2", t.x2);
    r.value("x3", t.x3);
    r.value("x4", t.x4);
    r.value("residual", t.residual);
    r.value("normalization_defect", t.normalization_defect);
    r.value("condition_number", t.condition_number);
}

/// Parses `delta,P1` rows; blank lines, `#` comments and a non-numeric
/// header row are skipped.
pub fn parse_measurements(text: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = (cells.len() >= 2)
            .then(|| Some((cells[0].parse::<f64>().ok()?, cells[1].parse::<f64>().ok()?)))
            .flatten();
        match parsed {
            Some((d, p)) if d.is_finite() && (0.0..=1.0).contains(&p) => out.push((d, p)),
            Some(_) => {
                return Err(CliError::Input(format!(
                    "line {}: need a finite detuning and P1 in [0, 1]",
                    i + 1
                )))
            }
            None if out.is_empty() && cells.iter().any(|c| c.parse::<f64>().is_err()) => continue,
            None => return Err(CliError::Input(format!("line {}: expected `delta,P1`", i + 1))),
        }
    }
    Ok(out)
}

pub fn cmd_tomo(s: &mut Session, measurements: &Path) -> Result<TomographyResult, CliError> {
    let text = std::fs::read_to_string(measurements).map_err(|source| CliError::Io {
        path: measurements.to_path_buf(),
        source,
    })?;
    let rows = parse_measurements(&text)?;
    let c = circuit(&s.config)?;
    let meas: Vec<Measurement> = rows
        .iter()
        .map(|&(delta, p1)| Measurement {
            delta,
            p1,
            transfer: c.transfer(delta),
        })
        .collect();
    let tomo = tomography_invert(&meas)?;
    s.report.section("tomography");
    s.report.line("measurements", measurements.display());
    write_tomography(&mut s.report, &tomo);
    Ok(tomo)
}

pub fn cmd_shots(s: &mut Session) -> Result<EstimationReport, CliError> {
    let cfg = &s.config;
    let t = teleport_config(cfg)?;
    let c = circuit(cfg)?;
    let input = input_state(cfg)?;
    let deltas = detunings(cfg, &c)?;
    let options = ShotOptions {
        detector_efficiency: cfg.shots.detector_efficiency,
        emission_loss_per_zone: cfg.shots.emission_loss_per_zone,
        workers: cfg.shots.workers,
    };
    let records = simulate_shots(
        &t,
        &c,
        &input,
        &deltas,
        ShotBudget::AcceptedPerDelta(cfg.shots.accepted_per_delta),
        cfg.shots.seed,
        &options,
    )?;
    let transfers: Vec<_> = deltas.iter().map(|&d| (d, c.transfer(d))).collect();
    let rep = estimate(&records, &transfers, &InversionLimits::default())?;

    let mut est = Csv::new(
        &s.hash,
        &["delta_rad_per_s", "n_total", "n_accepted", "n_b_excited", "P1_hat", "standard_error"],
    );
    for d in &rep.per_delta {
        est.row(&[
            num(d.delta),
            d.n_total.to_string(),
            d.n_accepted.to_string(),
            d.n_b_excited.to_string(),
            num(d.p1_hat),
            num(d.standard_error),
        ]);
    }
    let write_records = cfg.shots.write_records;

    let r = &mut s.report;
    r.section("shots");
    r.line("seed", cfg.shots.seed);
    r.line("accepted_per_delta", cfg.shots.accepted_per_delta);
    r.value("detector_efficiency", cfg.shots.detector_efficiency);
    r.value("emission_loss_per_zone", cfg.shots.emission_loss_per_zone);
    r.value("acceptance_fraction", rep.acceptance_fraction());
    write_tomography(r, &rep.tomography);
    r.value("theta_ci", rep.theta_ci);
    r.value("phi_ci", rep.phi_ci);

    s.emit("estimates.csv", &est)?;
    if write_records {
        let csv = records_csv(&s.hash, &records);
        s.emit("records.csv", &csv)?;
    }
    Ok(rep)
}

pub fn records_csv(hash: &str, records: &[ShotRecord]) -> Csv {
    let mut csv = Csv::new(hash, &["delta_rad_per_s", "accepted", "b_excited", "shot_index"]);
    for r in records {
        let b = match r.atom_b_excited {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        csv.row(&[
            num(r.delta),
            (r.atom_a_excited as u8).to_string(),
            b.to_string(),
            r.shot_index.to_string(),
        ]);
    }
    csv
}

pub fn cmd_full(s: &mut Session) -> Result<(), CliError> {
    cmd_calibrate(s)?;
    cmd_teleport(s)?;
    cmd_readout(s)?;
    cmd_shots(s)?;
    Ok(())
}
