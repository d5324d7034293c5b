//! Normalized field-magnitude profiles along atom trajectories.
//!
//! A profile stores `|E(x)| / |E(r_m)|` on a grid of positions measured in
//! lattice constants. All physical scale lives in the peak coupling (`g₀` for
//! the cavity, `Ω₀` for a waveguide zone), so the coupling an atom sees is
//! `g(t) = g₀ · profile(x₀ + v·t / a)`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Grid density used when rendering analytic models (one sample per a/65 of travel).
pub const DEFAULT_SAMPLES_PER_A: usize = 65;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("cannot read profile {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: cannot parse `{text}` as two numeric columns")]
    Parse { line: usize, text: String },
    #[error("line {line}: position {position} does not increase strictly")]
    NonMonotonic { line: usize, position: f64 },
    #[error("line {line}: magnitude {value} outside [0, 1]")]
    MagnitudeOutOfRange { line: usize, value: f64 },
    #[error("profile needs at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("positions and magnitudes differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("profile has no positive area; g0 cannot be calibrated")]
    Uncalibratable,
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// Physical constants of the chip and the two atomic beams, in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Lattice constant `a` in metres.
    pub lattice_a: f64,
    /// Resonant wavelength in metres.
    pub wavelength: f64,
    /// Transition dipole moment in C·m.
    pub dipole_mu10: f64,
    /// Vacuum Rabi frequency in rad/s; `None` means calibrate from the pulse-area target.
    pub g0: Option<f64>,
    /// Velocity of atom B in m/s.
    pub v_b: f64,
    /// Velocity of atom A in m/s.
    pub v_a: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            lattice_a: 2.202e-3,
            wavelength: 5.9e-3,
            dipole_mu10: 2e-26,
            g0: None,
            v_b: 767.7,
            v_a: 987.0,
        }
    }
}

impl PhysicalParams {
    /// Atomic transition angular frequency `2πc/λ`.
    pub fn omega(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.wavelength
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let checks = [
            ("lattice_a", self.lattice_a),
            ("wavelength", self.wavelength),
            ("dipole_mu10", self.dipole_mu10),
            ("v_b", self.v_b),
            ("v_a", self.v_a),
            ("g0", self.g0.unwrap_or(1.0)),
        ];
        for (name, value) in checks {
            if !(value.is_finite() && value > 0.0) {
                return Err(ProfileError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }

    pub fn transit_b(&self) -> Transit {
        Transit::new(self.lattice_a, self.v_b)
    }

    pub fn transit_a(&self) -> Transit {
        Transit::new(self.lattice_a, self.v_a)
    }
}

/// Straight-line motion at constant speed across a lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transit {
    pub lattice_a: f64,
    pub velocity: f64,
}

impl Transit {
    pub fn new(lattice_a: f64, velocity: f64) -> Self {
        Self {
            lattice_a,
            velocity,
        }
    }

    /// Seconds needed to cover `distance` lattice constants.
    pub fn duration(&self, distance: f64) -> f64 {
        distance * self.lattice_a / self.velocity
    }

    /// Lattice constants covered in `time` seconds.
    pub fn distance(&self, time: f64) -> f64 {
        time * self.velocity / self.lattice_a
    }
}

/// Field magnitude sampled along a trajectory, linearly interpolated
/// between samples and identically zero outside the sampled span.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    positions: Vec<f64>,
    magnitudes: Vec<f64>,
    uniform_step: Option<f64>,
}

impl SampledProfile {
    pub fn new(positions: Vec<f64>, magnitudes: Vec<f64>) -> Result<Self, ProfileError> {
        if positions.len() != magnitudes.len() {
            return Err(ProfileError::LengthMismatch(positions.len(), magnitudes.len()));
        }
        if positions.len() < 2 {
            return Err(ProfileError::TooShort(positions.len()));
        }
        for (i, &x) in positions.iter().enumerate() {
            if !x.is_finite() {
                return Err(ProfileError::Parse {
                    line: i + 1,
                    text: x.to_string(),
                });
            }
            if i > 0 && x <= positions[i - 1] {
                return Err(ProfileError::NonMonotonic {
                    line: i + 1,
                    position: x,
                });
            }
        }
        for (i, &m) in magnitudes.iter().enumerate() {
            if !(0.0..=1.0).contains(&m) {
                return Err(ProfileError::MagnitudeOutOfRange {
                    line: i + 1,
                    value: m,
                });
            }
        }
        let h = (positions[positions.len() - 1] - positions[0]) / (positions.len() - 1) as f64;
        let uniform = positions
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
        Ok(Self {
            positions,
            magnitudes,
            uniform_step: uniform.then_some(h),
        })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn start(&self) -> f64 {
        self.positions[0]
    }

    pub fn end(&self) -> f64 {
        self.positions[self.positions.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn peak(&self) -> f64 {
        self.magnitudes.iter().copied().fold(0.0, f64::max)
    }

    /// Linear interpolation; zero outside `[start, end]`.
    pub fn eval(&self, x: f64) -> f64 {
        if !(x >= self.start() && x <= self.end()) {
            return 0.0;
        }
        let i = self.positions.partition_point(|&p| p <= x);
        if i >= self.positions.len() {
            return self.magnitudes[self.positions.len() - 1];
        }
        let (x0, x1) = (self.positions[i - 1], self.positions[i]);
        let (m0, m1) = (self.magnitudes[i - 1], self.magnitudes[i]);
        m0 + (m1 - m0) * (x - x0) / (x1 - x0)
    }

    /// `∫ profile(x) dx` over `[x_start, x_end]` in units of a.
    ///
    /// Whole grid intervals are integrated with composite Simpson (3/8 rule on
    /// the last three intervals when the count is odd) if the grid is uniform,
    /// otherwise with the trapezoid rule. Partial intervals at either end use
    /// the exact integral of the linear interpolant.
    pub fn integral(&self, x_start: f64, x_end: f64) -> f64 {
        let lo = x_start.max(self.start());
        let hi = x_end.min(self.end());
        if !(hi > lo) {
            return 0.0;
        }
        let i0 = self.positions.partition_point(|&p| p < lo);
        let i1 = self.positions.partition_point(|&p| p <= hi) - 1;
        if i0 > i1 {
            return 0.5 * (hi - lo) * (self.eval(lo) + self.eval(hi));
        }
        let head = 0.5 * (self.positions[i0] - lo) * (self.eval(lo) + self.magnitudes[i0]);
        let tail = 0.5 * (hi - self.positions[i1]) * (self.magnitudes[i1] + self.eval(hi));
        head + self.grid_integral(i0, i1) + tail
    }

    fn grid_integral(&self, i0: usize, i1: usize) -> f64 {
        let m = &self.magnitudes;
        let intervals = i1 - i0;
        match (self.uniform_step, intervals) {
            (_, 0) => 0.0,
            (Some(h), n) if n >= 2 => {
                let simpson_end = if n % 2 == 0 { i1 } else { i1 - 3 };
                let mut s = 0.0;
                let mut i = i0;
                while i < simpson_end {
                    s += h / 3.0 * (m[i] + 4.0 * m[i + 1] + m[i + 2]);
                    i += 2;
                }
                if simpson_end != i1 {
                    let j = simpson_end;
                    s += 3.0 * h / 8.0 * (m[j] + 3.0 * m[j + 1] + 3.0 * m[j + 2] + m[j + 3]);
                }
                s
            }
            _ => (i0..i1)
                .map(|i| 0.5 * (self.positions[i + 1] - self.positions[i]) * (m[i] + m[i + 1]))
                .sum(),
        }
    }

    /// Two-column text form accepted by [`load_profile`].
    pub fn to_text(&self) -> String {
        let mut out = String::from("# position_in_a magnitude\n");
        for (x, m) in self.positions.iter().zip(&self.magnitudes) {
            let _ = writeln!(out, "{x:?} {m:?}");
        }
        out
    }
}

/// Parses a two-column `position magnitude` file; `#` starts a comment line.
pub fn parse_profile(text: &str) -> Result<SampledProfile, ProfileError> {
    let mut positions = Vec::new();
    let mut magnitudes = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut cols = trimmed.split_whitespace();
        let parsed = match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), None) => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
            _ => None,
        };
        let Some((x, m)) = parsed.filter(|(x, m)| x.is_finite() && m.is_finite()) else {
            return Err(ProfileError::Parse {
                line,
                text: trimmed.to_string(),
            });
        };
        if positions.last().is_some_and(|&prev| x <= prev) {
            return Err(ProfileError::NonMonotonic { line, position: x });
        }
        if !(0.0..=1.0).contains(&m) {
            return Err(ProfileError::MagnitudeOutOfRange { line, value: m });
        }
        positions.push(x);
        magnitudes.push(m);
    }
    SampledProfile::new(positions, magnitudes)
}

pub fn load_profile(path: &Path) -> Result<SampledProfile, ProfileError> {
    let text = fs::read_to_string(path).map_err(|source| ProfileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_profile(&text)
}

pub fn save_profile(profile: &SampledProfile, path: &Path) -> Result<(), ProfileError> {
    fs::write(path, profile.to_text()).map_err(|source| ProfileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `G = g₀ ∫ profile(x(τ)) dτ` for travel from `x_start` to `x_end`.
pub fn pulse_area(
    profile: &SampledProfile,
    transit: &Transit,
    g0: f64,
    x_start: f64,
    x_end: f64,
) -> f64 {
    g0 * transit.duration(profile.integral(x_start, x_end))
}

/// Peak coupling that makes the pulse area over `[x_start, x_end]` equal `target_area`.
pub fn calibrate_g0(
    profile: &SampledProfile,
    transit: &Transit,
    target_area: f64,
    x_start: f64,
    x_end: f64,
) -> Result<f64, ProfileError> {
    if !(target_area.is_finite() && target_area > 0.0) {
        return Err(ProfileError::InvalidParameter {
            name: "target_area",
            value: target_area,
        });
    }
    let time_integral = transit.duration(profile.integral(x_start, x_end));
    if !(time_integral > 0.0) {
        return Err(ProfileError::Uncalibratable);
    }
    Ok(target_area / time_integral)
}

/// Parametric stand-ins for externally computed mode profiles.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileModel {
    /// Gaussian cavity mode sampled over `[0, span]`.
    AnalyticCavity {
        width_sigma: f64,
        center: f64,
        span: f64,
    },
    /// `|sin(π(x − zone_start)/lobe_period)|` lobes under a Gaussian envelope
    /// centred on the zone, supported on `[zone_start, zone_start + zone_length]`.
    AnalyticWaveguide {
        lobe_period: f64,
        envelope_sigma: f64,
        zone_start: f64,
        zone_length: f64,
    },
    FromFile(PathBuf),
}

impl ProfileModel {
    /// Cavity mode centred 9a into the 43a teleportation region.
    pub fn default_cavity() -> Self {
        ProfileModel::AnalyticCavity {
            width_sigma: 2.5,
            center: 9.0,
            span: 43.0,
        }
    }

    /// One 18a coupled-cavity waveguide zone beginning at `zone_start`.
    pub fn default_waveguide(zone_start: f64) -> Self {
        ProfileModel::AnalyticWaveguide {
            lobe_period: 2.0,
            envelope_sigma: 6.0,
            zone_start,
            zone_length: 18.0,
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, ProfileError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ProfileError::InvalidParameter { name, value })
    }
}

fn grid(start: f64, length: f64, samples_per_a: usize) -> Vec<f64> {
    let n = (length * samples_per_a as f64).round().max(1.0) as usize;
    (0..=n).map(|i| start + length * i as f64 / n as f64).collect()
}

fn normalize_peak(magnitudes: &mut [f64]) -> Result<(), ProfileError> {
    let peak = magnitudes.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(ProfileError::Uncalibratable);
    }
    magnitudes.iter_mut().for_each(|m| *m = (*m / peak).min(1.0));
    Ok(())
}

/// Renders a model on a grid with `samples_per_a` samples per lattice constant.
pub fn render_model(model: &ProfileModel, samples_per_a: usize) -> Result<SampledProfile, ProfileError> {
    if samples_per_a == 0 {
        return Err(ProfileError::InvalidParameter {
            name: "samples_per_a",
            value: 0.0,
        });
    }
    match model {
        ProfileModel::AnalyticCavity {
            width_sigma,
            center,
            span,
        } => {
            let sigma = positive("width_sigma", *width_sigma)?;
            let span = positive("span", *span)?;
            if !(0.0..=span).contains(center) {
                return Err(ProfileError::InvalidParameter {
                    name: "center",
                    value: *center,
                });
            }
            let xs = grid(0.0, span, samples_per_a);
            let mut ms: Vec<f64> = xs
                .iter()
                .map(|x| (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp())
                .collect();
            normalize_peak(&mut ms)?;
            SampledProfile::new(xs, ms)
        }
        ProfileModel::AnalyticWaveguide {
            lobe_period,
            envelope_sigma,
            zone_start,
            zone_length,
        } => {
            let period = positive("lobe_period", *lobe_period)?;
            let sigma = positive("envelope_sigma", *envelope_sigma)?;
            let length = positive("zone_length", *zone_length)?;
            if !zone_start.is_finite() {
                return Err(ProfileError::InvalidParameter {
                    name: "zone_start",
                    value: *zone_start,
                });
            }
            let mid = zone_start + 0.5 * length;
            let xs = grid(*zone_start, length, samples_per_a);
            let last = xs.len() - 1;
            let mut ms: Vec<f64> = xs
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    if i == 0 || i == last {
                        return 0.0;
                    }
                    let lobe = (PI * (x - zone_start) / period).sin().abs();
                    lobe * (-(x - mid).powi(2) / (2.0 * sigma * sigma)).exp()
                })
                .collect();
            normalize_peak(&mut ms)?;
            SampledProfile::new(xs, ms)
        }
        ProfileModel::FromFile(path) => load_profile(path),
    }
}

/// Time-dependent coupling `g(t)` seen by a moving atom.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTrace {
    pub times: Vec<f64>,
    pub g_values: Vec<f64>,
}

impl CouplingTrace {
    /// Samples `g(t)` every `dt` seconds from `t = 0` to `t_end` inclusive.
    pub fn sample(
        profile: &SampledProfile,
        transit: &Transit,
        g0: f64,
        x_entry: f64,
        t_end: f64,
        dt: f64,
    ) -> Self {
        let n = (t_end / dt).ceil().max(1.0) as usize;
        let times: Vec<f64> = (0..=n).map(|i| (i as f64 * dt).min(t_end)).collect();
        let times = dedup_times(times);
        let g_values = times
            .iter()
            .map(|&t| g0 * profile.eval(x_entry + transit.distance(t)))
            .collect();
        Self { times, g_values }
    }

    /// Samples `g(t)` at every profile knot crossed between `x_entry` and
    /// `x_exit`, plus the two endpoints. Linear interpolation of the result
    /// reproduces the linearly interpolated profile exactly.
    pub fn at_knots(
        profile: &SampledProfile,
        transit: &Transit,
        g0: f64,
        x_entry: f64,
        x_exit: f64,
    ) -> Self {
        let mut xs = vec![x_entry];
        xs.extend(
            profile
                .positions()
                .iter()
                .copied()
                .filter(|&x| x > x_entry && x < x_exit),
        );
        xs.push(x_exit);
        let times = dedup_times(xs.iter().map(|&x| transit.duration(x - x_entry)).collect());
        let g_values = times
            .iter()
            .map(|&t| g0 * profile.eval(x_entry + transit.distance(t)))
            .collect();
        Self { times, g_values }
    }

    /// Constant coupling `g` on `[0, duration]`.
    pub fn constant(g: f64, duration: f64) -> Self {
        Self {
            times: vec![0.0, duration],
            g_values: vec![g, g],
        }
    }

    /// Linear interpolation; zero outside the sampled window.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.times.len();
        if n == 0 || t < self.times[0] || t > self.times[n - 1] {
            return 0.0;
        }
        let i = self.times.partition_point(|&s| s <= t);
        if i >= n {
            return self.g_values[n - 1];
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (g0, g1) = (self.g_values[i - 1], self.g_values[i]);
        g0 + (g1 - g0) * (t - t0) / (t1 - t0)
    }

    pub fn end_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn peak(&self) -> f64 {
        self.g_values.iter().copied().fold(0.0, f64::max)
    }
}

fn dedup_times(mut times: Vec<f64>) -> Vec<f64> {
    times.dedup_by(|b, a| *b <= *a);
    times
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> SampledProfile {
        SampledProfile::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap()
    }

    fn flat(length: f64) -> SampledProfile {
        let xs = grid(0.0, length, 65);
        let ms = vec![1.0; xs.len()];
        SampledProfile::new(xs, ms).unwrap()
    }

    #[test]
    fn parse_triangle() {
        let p = parse_profile("# pos mag\n0 0\n1 1\n\n2 0\n").unwrap();
        assert_eq!(p, triangle());
    }

    #[test]
    fn parse_errors_are_distinct() {
        assert!(matches!(
            parse_profile("0 0\n1 1.2\n"),
            Err(ProfileError::MagnitudeOutOfRange { line: 2, .. })
        ));
        assert!(matches!(
            parse_profile("0 0\n0 1\n"),
            Err(ProfileError::NonMonotonic { line: 2, .. })
        ));
        assert!(matches!(
            parse_profile("0 0\nabc 1\n"),
            Err(ProfileError::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_profile("0 0 0\n"), Err(ProfileError::Parse { .. })));
        assert!(matches!(parse_profile("0 0\n"), Err(ProfileError::TooShort(1))));
    }

    #[test]
    fn save_then_load_is_identity() {
        let p = render_model(&ProfileModel::default_waveguide(43.0), 65).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wg.txt");
        save_profile(&p, &path).unwrap();
        assert_eq!(load_profile(&path).unwrap(), p);
    }

    #[test]
    fn eval_interpolates_and_truncates() {
        let p = triangle();
        assert_eq!(p.eval(1.0), 1.0);
        assert_eq!(p.eval(0.5), 0.5);
        assert_eq!(p.eval(2.0), 0.0);
        assert_eq!(p.eval(2.5), 0.0);
        assert_eq!(p.eval(-0.1), 0.0);
    }

    #[test]
    fn integral_of_nonuniform_triangle_is_trapezoidal() {
        let p = SampledProfile::new(vec![0.0, 1.0, 3.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert!((p.integral(0.0, 3.0) - 1.5).abs() < 1e-15);
        assert!((p.integral(0.25, 0.75) - 0.25).abs() < 1e-15);
        assert!((p.integral(-5.0, 5.0) - 1.5).abs() < 1e-15);
        assert_eq!(p.integral(1.0, 1.0), 0.0);
        assert_eq!(p.integral(2.0, 1.0), 0.0);
    }

    #[test]
    fn integral_of_fine_uniform_triangle() {
        let xs = grid(0.0, 2.0, 64);
        let ms: Vec<f64> = xs.iter().map(|x| 1.0 - (x - 1.0).abs()).collect();
        let p = SampledProfile::new(xs, ms).unwrap();
        assert!((p.integral(0.0, 2.0) - 1.0).abs() < 1e-14);
        assert!((p.integral(0.0, 1.0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn simpson_handles_odd_interval_counts() {
        // quadratic is integrated exactly by both Simpson rules
        let xs = grid(0.0, 1.0, 7);
        let ms: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let p = SampledProfile::new(xs, ms).unwrap();
        assert!((p.integral(0.0, 1.0) - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn rectangle_pulse_area() {
        let t = Transit::new(2.202e-3, 767.7);
        let l = 10.0;
        let g0 = 3.0e4;
        let expected = g0 * l * 2.202e-3 / 767.7;
        let area = pulse_area(&flat(l), &t, g0, 0.0, l);
        assert!((area - expected).abs() < 1e-12 * expected);
        let zero = SampledProfile::new(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(pulse_area(&zero, &t, g0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn calibration_is_linear_and_exact() {
        let t = Transit::new(2.202e-3, 767.7);
        let l = 10.0;
        let g_pi = calibrate_g0(&flat(l), &t, PI, 0.0, l).unwrap();
        assert!((g_pi - PI * 767.7 / (l * 2.202e-3)).abs() < 1e-9 * g_pi);
        let g_2pi = calibrate_g0(&flat(l), &t, 2.0 * PI, 0.0, l).unwrap();
        assert_eq!(g_2pi, 2.0 * g_pi);

        let zero = SampledProfile::new(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            calibrate_g0(&zero, &t, PI, 0.0, 1.0),
            Err(ProfileError::Uncalibratable)
        ));
    }

    #[test]
    fn cavity_tail_budget() {
        let p = render_model(&ProfileModel::default_cavity(), 65).unwrap();
        assert_eq!(p.peak(), 1.0);
        let total = p.integral(0.0, 43.0);
        let tail = p.integral(18.0, 43.0);
        assert!(tail / total < 0.01);
        assert!(p.eval(18.0) < 0.01);
    }

    #[test]
    fn waveguide_support() {
        let p = render_model(&ProfileModel::default_waveguide(43.0), 65).unwrap();
        assert_eq!(p.start(), 43.0);
        assert!((p.end() - 61.0).abs() < 1e-12);
        assert_eq!(p.magnitudes()[0], 0.0);
        assert_eq!(*p.magnitudes().last().unwrap(), 0.0);
        assert!((p.peak() - 1.0).abs() < 1e-15);
        assert_eq!(p.eval(42.99), 0.0);
        assert_eq!(p.eval(61.01), 0.0);
    }

    #[test]
    fn render_rejects_bad_parameters() {
        let bad = ProfileModel::AnalyticCavity {
            width_sigma: -1.0,
            center: 9.0,
            span: 43.0,
        };
        assert!(matches!(
            render_model(&bad, 65),
            Err(ProfileError::InvalidParameter { name: "width_sigma", .. })
        ));
    }

    #[test]
    fn knot_trace_reproduces_profile() {
        let p = render_model(&ProfileModel::default_cavity(), 65).unwrap();
        let t = Transit::new(2.202e-3, 987.0);
        let trace = CouplingTrace::at_knots(&p, &t, 2.0, 0.0, 16.7);
        for &x in &[0.0, 3.3, 9.0, 12.345, 16.7] {
            let g = trace.eval(t.duration(x));
            assert!((g - 2.0 * p.eval(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn omega_matches_wavelength() {
        let p = PhysicalParams::default();
        let lambda = 2.0 * PI * SPEED_OF_LIGHT / p.omega();
        assert!((lambda - p.wavelength).abs() < 1e-9 * p.wavelength);
    }
}
