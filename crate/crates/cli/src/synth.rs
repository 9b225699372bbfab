//! Synthetic ground truth: a segment-based 1D generator with exact
//! derivatives and a piecewise-smooth 2D test image.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tvpwl::{GridGeometry, ScalarGrid};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("need at least 10 samples, got {0}")]
    TooFewSamples(usize),

    #[error("segments must cover [0, 1] contiguously: {0}")]
    BadSegments(String),

    #[error(transparent)]
    Grid(#[from] tvpwl::Error),
}

/// Shape of one segment of the 1D ground truth on `[from, to)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentKind {
    Constant {
        level: f64,
    },
    /// `start + slope * (x - from)`.
    Linear {
        start: f64,
        slope: f64,
    },
    /// `offset + amplitude * sin(2π cycles (x - from)/(to - from))`.
    Sinusoid {
        offset: f64,
        amplitude: f64,
        cycles: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Segment {
    pub from: f64,
    pub to: f64,
    #[serde(flatten)]
    pub kind: SegmentKind,
}

impl Segment {
    fn value(&self, x: f64) -> f64 {
        match &self.kind {
            SegmentKind::Constant { level } => *level,
            SegmentKind::Linear { start, slope } => start + slope * (x - self.from),
            SegmentKind::Sinusoid {
                offset,
                amplitude,
                cycles,
            } => {
                let t = (x - self.from) / (self.to - self.from);
                offset + amplitude * (std::f64::consts::TAU * cycles * t).sin()
            }
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        match &self.kind {
            SegmentKind::Constant { .. } => 0.0,
            SegmentKind::Linear { slope, .. } => *slope,
            SegmentKind::Sinusoid {
                amplitude, cycles, ..
            } => {
                let w = std::f64::consts::TAU * cycles / (self.to - self.from);
                let t = (x - self.from) / (self.to - self.from);
                amplitude * w * (std::f64::consts::TAU * cycles * t).cos()
            }
        }
    }
}

/// The default ground-truth layout: four interior jumps, slopes of both
/// signs, a sinusoidal stretch, and two places where a negative slope is
/// followed by a positive jump.
pub fn default_segments() -> Vec<Segment> {
    vec![
        Segment {
            from: 0.0,
            to: 0.15,
            kind: SegmentKind::Linear {
                start: 1.6,
                slope: -4.0,
            },
        },
        Segment {
            from: 0.15,
            to: 0.30,
            kind: SegmentKind::Linear {
                start: 2.2,
                slope: -4.0,
            },
        },
        Segment {
            from: 0.30,
            to: 0.45,
            kind: SegmentKind::Constant { level: 2.6 },
        },
        Segment {
            from: 0.45,
            to: 0.62,
            kind: SegmentKind::Constant { level: 1.0 },
        },
        Segment {
            from: 0.62,
            to: 0.82,
            kind: SegmentKind::Sinusoid {
                offset: 1.9,
                amplitude: 0.35,
                cycles: 0.75,
            },
        },
        Segment {
            from: 0.82,
            to: 1.0,
            kind: SegmentKind::Linear {
                start: 0.8,
                slope: 2.5,
            },
        },
    ]
}

fn check_segments(segments: &[Segment]) -> Result<(), SynthError> {
    if segments.is_empty() {
        return Err(SynthError::BadSegments("no segments".into()));
    }
    if segments[0].from != 0.0 {
        return Err(SynthError::BadSegments(format!(
            "first segment starts at {}, not 0",
            segments[0].from
        )));
    }
    for w in segments.windows(2) {
        if w[0].to > w[1].from {
            return Err(SynthError::BadSegments(format!(
                "segments [{}, {}) and [{}, {}) overlap",
                w[0].from, w[0].to, w[1].from, w[1].to
            )));
        }
        if w[0].to < w[1].from {
            return Err(SynthError::BadSegments(format!(
                "gap between {} and {}",
                w[0].to, w[1].from
            )));
        }
    }
    let last = segments.last().unwrap();
    if last.to != 1.0 {
        return Err(SynthError::BadSegments(format!(
            "last segment ends at {}, not 1",
            last.to
        )));
    }
    for s in segments {
        if s.from >= s.to || s.from.is_nan() || s.to.is_nan() {
            return Err(SynthError::BadSegments(format!(
                "empty segment [{}, {})",
                s.from, s.to
            )));
        }
    }
    Ok(())
}

/// Sample a segment list on `n` nodes over `[0, 1]` (spacing `1/(n-1)`),
/// returning the signal and its exact within-segment derivative.
pub fn synth_signal(
    n: usize,
    segments: &[Segment],
) -> Result<(ScalarGrid, ScalarGrid), SynthError> {
    if n < 10 {
        return Err(SynthError::TooFewSamples(n));
    }
    check_segments(segments)?;
    let h = 1.0 / (n as f64 - 1.0);
    let geometry = GridGeometry::with_spacing(&[n], &[h])?;
    let mut values = Vec::with_capacity(n);
    let mut deriv = Vec::with_capacity(n);
    for i in 0..n {
        let x = i as f64 * h;
        let seg = segments
            .iter()
            .find(|s| x >= s.from && (x < s.to || (x >= 1.0 && s.to >= 1.0)))
            .expect("segments cover [0, 1]");
        values.push(seg.value(x));
        deriv.push(seg.derivative(x));
    }
    Ok((
        ScalarGrid::from_values(geometry.clone(), values)?,
        ScalarGrid::from_values(geometry, deriv)?,
    ))
}

/// Piecewise-smooth `n × n` test image with values in `[0, 255]`: a tilted
/// smooth background, a quadratic dome on a disk, and a rectangle carrying a
/// linear ramp. Unit pixel spacing.
pub fn synth_image(n: usize) -> Result<ScalarGrid, SynthError> {
    if n < 10 {
        return Err(SynthError::TooFewSamples(n));
    }
    let geometry = GridGeometry::rect(n, n)?;
    let mut values = Vec::with_capacity(n * n);
    let scale = 1.0 / (n as f64 - 1.0);
    for r in 0..n {
        for c in 0..n {
            let y = r as f64 * scale;
            let x = c as f64 * scale;
            let mut v = 60.0 + 70.0 * x + 25.0 * (std::f64::consts::TAU * y).sin();
            let dx = x - 0.38;
            let dy = y - 0.58;
            let rad2 = dx * dx + dy * dy;
            if rad2 < 0.22 * 0.22 {
                v = 215.0 - 550.0 * rad2;
            } else if (0.58..0.88).contains(&x) && (0.12..0.40).contains(&y) {
                v = 225.0 - 160.0 * (y - 0.12) / 0.28;
            }
            values.push(v.clamp(0.0, 255.0));
        }
    }
    Ok(ScalarGrid::from_values(geometry, values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_segment_has_zero_derivative() {
        let segs = vec![Segment {
            from: 0.0,
            to: 1.0,
            kind: SegmentKind::Constant { level: 2.0 },
        }];
        let (u, du) = synth_signal(50, &segs).unwrap();
        assert!(u.values().iter().all(|&v| v == 2.0));
        assert!(du.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_segment_has_constant_derivative() {
        let segs = vec![Segment {
            from: 0.0,
            to: 1.0,
            kind: SegmentKind::Linear {
                start: 0.0,
                slope: 2.0,
            },
        }];
        let (u, du) = synth_signal(100, &segs).unwrap();
        assert!(du.values().iter().all(|&v| v == 2.0));
        assert!((u.values()[99] - 2.0).abs() < 1e-12);
        // Sampled with spacing 1/(n-1), discrete differences match the slope.
        let g = tvpwl::grad(&u);
        for &d in &g.component(0)[..99] {
            assert!((d - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn default_layout_has_jumps_and_both_slope_signs() {
        let segs = default_segments();
        let (u, du) = synth_signal(1000, &segs).unwrap();
        // Count jumps: discrete differences an order above the within-segment
        // derivative scale.
        let h = 1.0 / 999.0;
        let mut jumps = 0;
        for i in 0..999 {
            let step = (u.values()[i + 1] - u.values()[i]).abs();
            if step > 20.0 * h {
                jumps += 1;
            }
        }
        assert!(jumps >= 4, "expected at least 4 jumps, found {jumps}");
        assert!(du.values().iter().any(|&d| d > 0.5));
        assert!(du.values().iter().any(|&d| d < -0.5));

        // A negative slope followed by a positive jump (twice, at 0.15/0.30).
        let at = |x: f64| (x * 999.0).round() as usize;
        for boundary in [0.15, 0.30] {
            let i = at(boundary);
            assert!(du.values()[i - 2] < 0.0, "slope before {boundary}");
            assert!(
                u.values()[i] - u.values()[i - 1] > 0.0,
                "jump at {boundary} should be positive"
            );
        }
    }

    #[test]
    fn too_few_samples_are_rejected() {
        assert!(matches!(
            synth_signal(9, &default_segments()),
            Err(SynthError::TooFewSamples(9))
        ));
        assert!(matches!(synth_image(9), Err(SynthError::TooFewSamples(9))));
    }

    #[test]
    fn overlapping_segments_are_rejected() {
        let segs = vec![
            Segment {
                from: 0.0,
                to: 0.6,
                kind: SegmentKind::Constant { level: 0.0 },
            },
            Segment {
                from: 0.5,
                to: 1.0,
                kind: SegmentKind::Constant { level: 1.0 },
            },
        ];
        assert!(matches!(
            synth_signal(100, &segs),
            Err(SynthError::BadSegments(_))
        ));
    }

    #[test]
    fn image_is_in_range_and_piecewise_smooth() {
        let img = synth_image(64).unwrap();
        assert!(img
            .values()
            .iter()
            .all(|&v| (0.0..=255.0).contains(&v)));
        // It must contain genuine jumps (the shape boundaries).
        let g = tvpwl::grad(&img);
        let maxg = g
            .pointwise_norm()
            .values()
            .iter()
            .cloned()
            .fold(0.0_f64, f64::max);
        assert!(maxg > 30.0, "expected sharp edges, max |grad| = {maxg}");
    }
}
