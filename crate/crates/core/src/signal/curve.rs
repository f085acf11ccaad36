use std::io::{BufRead, Write};

use nalgebra::{Point3, Vector3};

use super::SignalError;
use crate::contact::{normalize_frame, step_tactile, ContactParams, FrameScale};
use crate::geometry::AnalyticPrimitive;
use crate::sensor_pad::{RigidState, TaxelWorldBatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveSource {
    Measured,
    Simulated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    /// Applied normal load, N.
    pub load: f64,
    /// Normalized sensor reading.
    pub reading: f64,
    /// Indentation rate during the sample, m/s (0 for a static press).
    pub rate: f64,
    /// The reading hit the normalization ceiling.
    pub flagged: bool,
}

/// Load/reading pairs, grouped into segments of constant press rate.
/// Loads increase strictly within each segment.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceResponseCurve {
    pub samples: Vec<CurveSample>,
    pub source: CurveSource,
}

impl ForceResponseCurve {
    pub fn new(samples: Vec<CurveSample>, source: CurveSource) -> Result<Self, SignalError> {
        let curve = Self { samples, source };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        if self.samples.len() < 4 {
            return Err(SignalError::InvalidCurve(format!(
                "need at least 4 samples, got {}",
                self.samples.len()
            )));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if !(s.load.is_finite() && s.reading.is_finite() && s.rate.is_finite()) {
                return Err(SignalError::InvalidCurve(format!(
                    "sample {i} is not finite"
                )));
            }
        }
        for (i, w) in self.samples.windows(2).enumerate() {
            if w[0].rate == w[1].rate && !(w[1].load > w[0].load) {
                return Err(SignalError::InvalidCurve(format!(
                    "loads must increase within a rate segment (sample {})",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn readings(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.reading).collect()
    }

    pub fn has_rates(&self) -> bool {
        self.samples.iter().any(|s| s.rate != 0.0)
    }

    /// CSV with header `load_n,reading` (plus `,rate_mps` when any rate is non-zero).
    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let rates = self.has_rates();
        writeln!(
            out,
            "{}",
            if rates {
                "load_n,reading,rate_mps"
            } else {
                "load_n,reading"
            }
        )?;
        for s in &self.samples {
            if rates {
                writeln!(out, "{:?},{:?},{:?}", s.load, s.reading, s.rate)?;
            } else {
                writeln!(out, "{:?},{:?}", s.load, s.reading)?;
            }
        }
        Ok(())
    }

    pub fn read_csv(input: impl BufRead, source: CurveSource) -> Result<Self, SignalError> {
        let mut lines = input.lines().enumerate();
        let (_, header) = lines.next().ok_or(SignalError::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let header = header?;
        let columns: Vec<&str> = header.split(',').map(str::trim).collect();
        let with_rate = match columns.as_slice() {
            ["load_n", "reading"] => false,
            ["load_n", "reading", "rate_mps"] => true,
            _ => {
                return Err(SignalError::Parse {
                    line: 1,
                    message: format!("expected header `load_n,reading[,rate_mps]`, got `{header}`"),
                })
            }
        };
        let mut samples = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let values = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| SignalError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            if values.len() != columns.len() {
                return Err(SignalError::Parse {
                    line: i + 1,
                    message: format!("expected {} columns, got {}", columns.len(), values.len()),
                });
            }
            samples.push(CurveSample {
                load: values[0],
                reading: values[1],
                rate: if with_rate { values[2] } else { 0.0 },
                flagged: false,
            });
        }
        Self::new(samples, source)
    }
}

/// Single-taxel press rig: a flat box indenter driven into one taxel under
/// load control.
#[derive(Debug, Clone, PartialEq)]
pub struct PressScene {
    /// Full scale of the depth channel used for the reading.
    pub scale: FrameScale,
    /// Indentation rates; one curve segment is produced per rate.
    pub rates: Vec<f64>,
    pub indenter_half_extent: f64,
}

impl Default for PressScene {
    fn default() -> Self {
        Self {
            scale: FrameScale::default(),
            rates: vec![0.0],
            indenter_half_extent: 0.005,
        }
    }
}

impl PressScene {
    /// Reading for one load at one rate, and whether it saturated.
    ///
    /// Under load control the spring-damper balance `k_n d + k_d ḋ = load` fixes
    /// the depth; the rig then presses the indenter to that depth at that rate
    /// and reports the normalized depth channel of the taxel.
    pub fn reading(&self, params: &ContactParams, load: f64, rate: f64) -> (f64, bool) {
        let depth = ((load - params.k_d * rate) / params.k_n).max(0.0);
        let half = self.indenter_half_extent;
        let indenter = AnalyticPrimitive::Box {
            center: Point3::origin(),
            half_extents: Vector3::repeat(half),
        };
        let state = RigidState::from_translation(Vector3::new(0.0, 0.0, half - depth))
            .with_twist(Vector3::zeros(), Vector3::new(0.0, 0.0, -rate));
        let taxel = TaxelWorldBatch {
            rows: 1,
            cols: 1,
            positions: vec![Point3::origin()],
            velocities: vec![Vector3::zeros()],
        };
        let raw = step_tactile(&taxel, &indenter, &state, params);
        let normalized = normalize_frame(&raw, &self.scale);
        (normalized.depth[0], normalized.clamped > 0)
    }
}

pub fn simulate_response_curve(params: &ContactParams, loads: &[f64]) -> ForceResponseCurve {
    simulate_response_curve_with(params, loads, &PressScene::default())
}

pub fn simulate_response_curve_with(
    params: &ContactParams,
    loads: &[f64],
    scene: &PressScene,
) -> ForceResponseCurve {
    let samples = scene
        .rates
        .iter()
        .flat_map(|&rate| {
            loads.iter().map(move |&load| {
                let (reading, flagged) = scene.reading(params, load, rate);
                CurveSample {
                    load,
                    reading,
                    rate,
                    flagged,
                }
            })
        })
        .collect();
    ForceResponseCurve {
        samples,
        source: CurveSource::Simulated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_press_inverts_linear_law() {
        let curve = simulate_response_curve(&ContactParams::default(), &[0.0005, 0.001, 0.002]);
        let r: Vec<f64> = curve.readings();
        assert!((r[0] - 0.25).abs() < 1e-12);
        assert!((r[1] - 0.5).abs() < 1e-12);
        assert!((r[2] - 1.0).abs() < 1e-12);
        assert!(curve.samples.iter().all(|s| !s.flagged));
    }

    #[test]
    fn empty_loads_give_empty_curve() {
        assert!(simulate_response_curve(&ContactParams::default(), &[]).is_empty());
    }

    #[test]
    fn doubling_stiffness_halves_depth() {
        let loads = [0.0002, 0.0004, 0.0008, 0.0012];
        let a = simulate_response_curve(&ContactParams::new(1.0, 3e-3).unwrap(), &loads);
        let b = simulate_response_curve(&ContactParams::new(2.0, 3e-3).unwrap(), &loads);
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((y.reading - x.reading / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn overload_is_flagged() {
        let curve = simulate_response_curve(&ContactParams::default(), &[0.001, 0.003]);
        assert!(!curve.samples[0].flagged);
        assert!(curve.samples[1].flagged);
        assert_eq!(curve.samples[1].reading, 1.0);
    }

    #[test]
    fn rate_segments_reduce_static_depth() {
        let scene = PressScene {
            rates: vec![0.0, 0.1],
            ..Default::default()
        };
        let curve = simulate_response_curve_with(&ContactParams::default(), &[0.001], &scene);
        let (s, d) = (curve.samples[0].reading, curve.samples[1].reading);
        assert!((s - d - 3e-4 / 0.002).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip_and_validation() {
        let scene = PressScene {
            rates: vec![0.0, 0.05],
            ..Default::default()
        };
        let loads = [0.0002, 0.0004, 0.0008, 0.0012];
        let curve = simulate_response_curve_with(&ContactParams::default(), &loads, &scene);
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"load_n,reading,rate_mps\n"));
        let back = ForceResponseCurve::read_csv(buf.as_slice(), CurveSource::Measured).unwrap();
        assert_eq!(back.readings(), curve.readings());

        let short = "load_n,reading\n0.1,0.1\n0.2,0.2\n0.3,0.3\n";
        assert!(ForceResponseCurve::read_csv(short.as_bytes(), CurveSource::Measured).is_err());
        let unsorted = "load_n,reading\n0.1,0.1\n0.3,0.2\n0.2,0.3\n0.4,0.4\n";
        assert!(ForceResponseCurve::read_csv(unsorted.as_bytes(), CurveSource::Measured).is_err());
    }
}
