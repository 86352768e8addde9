use super::quad;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TraceStatus {
    Completed,
    Blowup { t: f64 },
    Stalled { t: f64 },
}

/// State and meters at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: Vec<f64>,
    /// Infinity norm of the derivative.
    pub speed: f64,
    /// Curve length, the integral of the infinity norm of the derivative.
    pub length: f64,
    /// Running supremum of the infinity norm of the state.
    pub space: f64,
    /// Initial error plus the integral of the perturbation norm.
    pub budget: f64,
}

/// Dense representation of one accepted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    /// `y_i(t0 + s) = sum_j coeffs[i][j] s^j`.
    Taylor { t0: f64, h: f64, coeffs: Vec<Vec<f64>> },
    /// Cubic Hermite data from an embedded pair.
    Hermite { t0: f64, h: f64, y0: Vec<f64>, f0: Vec<f64>, y1: Vec<f64>, f1: Vec<f64> },
}

impl Segment {
    pub fn t0(&self) -> f64 {
        match self {
            Segment::Taylor { t0, .. } | Segment::Hermite { t0, .. } => *t0,
        }
    }

    pub fn h(&self) -> f64 {
        match self {
            Segment::Taylor { h, .. } | Segment::Hermite { h, .. } => *h,
        }
    }

    pub fn state(&self, t: f64, out: &mut [f64]) {
        match self {
            Segment::Taylor { t0, coeffs, .. } => {
                let s = t - t0;
                for (o, c) in out.iter_mut().zip(coeffs) {
                    *o = c.iter().rev().fold(0.0, |acc, a| acc * s + a);
                }
            }
            Segment::Hermite { t0, h, y0, f0, y1, f1 } => {
                let th = (t - t0) / h;
                let h00 = (1.0 + 2.0 * th) * (1.0 - th).powi(2);
                let h10 = th * (1.0 - th).powi(2);
                let h01 = th * th * (3.0 - 2.0 * th);
                let h11 = th * th * (th - 1.0);
                for i in 0..out.len() {
                    out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
                }
            }
        }
    }

    pub fn derivative(&self, t: f64, out: &mut [f64]) {
        match self {
            Segment::Taylor { t0, coeffs, .. } => {
                let s = t - t0;
                for (o, c) in out.iter_mut().zip(coeffs) {
                    let mut acc = 0.0;
                    for j in (1..c.len()).rev() {
                        acc = acc * s + j as f64 * c[j];
                    }
                    *o = acc;
                }
            }
            Segment::Hermite { t0, h, y0, f0, y1, f1 } => {
                let th = (t - t0) / h;
                let d00 = 6.0 * th * th - 6.0 * th;
                let d10 = 3.0 * th * th - 4.0 * th + 1.0;
                let d01 = -d00;
                let d11 = 3.0 * th * th - 2.0 * th;
                for i in 0..out.len() {
                    out[i] = (d00 * y0[i] + d01 * y1[i]) / h + d10 * f0[i] + d11 * f1[i];
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub dim: usize,
    pub samples: Vec<Sample>,
    #[serde(skip)]
    pub segments: Vec<Segment>,
    pub status: TraceStatus,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl Trace {
    pub fn t_start(&self) -> f64 {
        self.samples.first().map(|s| s.t).unwrap_or(0.0)
    }

    pub fn t_end(&self) -> f64 {
        self.samples.last().map(|s| s.t).unwrap_or(0.0)
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trace has an initial sample")
    }

    pub fn completed(&self) -> bool {
        self.status == TraceStatus::Completed
    }

    fn segment_index(&self, t: f64) -> Option<usize> {
        if self.segments.is_empty() {
            return None;
        }
        let idx = self.segments.partition_point(|s| s.t0() <= t);
        Some(idx.saturating_sub(1))
    }

    /// Dense state at `t`, clamped to the simulated range.
    pub fn state_at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        match self.segment_index(t) {
            Some(i) => {
                let seg = &self.segments[i];
                let t = t.clamp(seg.t0(), seg.t0() + seg.h());
                seg.state(t, &mut out);
            }
            None => out.copy_from_slice(&self.samples[0].state),
        }
        out
    }

    pub fn derivative_at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        if let Some(i) = self.segment_index(t) {
            let seg = &self.segments[i];
            seg.derivative(t.clamp(seg.t0(), seg.t0() + seg.h()), &mut out);
        }
        out
    }

    /// Integral of `f(t, y(t))` over `[a, b]`, segment by segment.
    pub fn integral(&self, f: &dyn Fn(f64, &[f64]) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        let mut acc = 0.0;
        let mut y = vec![0.0; self.dim];
        let n = self.segments.len().max(1);
        for seg in &self.segments {
            let lo = seg.t0().max(a);
            let hi = (seg.t0() + seg.h()).min(b);
            if hi <= lo {
                continue;
            }
            acc += quad::integrate(
                &mut |t| {
                    seg.state(t, &mut y);
                    f(t, &y)
                },
                lo,
                hi,
                tol / n as f64,
            );
        }
        acc
    }

    /// Curve length of the selected coordinates over `[a, b]`.
    pub fn length_of(&self, coords: &[usize], a: f64, b: f64, tol: f64) -> f64 {
        let mut d = vec![0.0; self.dim];
        let mut acc = 0.0;
        let n = self.segments.len().max(1);
        for seg in &self.segments {
            let lo = seg.t0().max(a);
            let hi = (seg.t0() + seg.h()).min(b);
            if hi <= lo {
                continue;
            }
            acc += quad::integrate(
                &mut |t| {
                    seg.derivative(t, &mut d);
                    coords.iter().fold(0.0, |m, &i| m.max(d[i].abs()))
                },
                lo,
                hi,
                tol / n as f64,
            );
        }
        acc
    }

    /// State and meters at an arbitrary time inside the trace.
    pub fn metrics_at(&self, t: f64) -> Sample {
        let k = self.samples.partition_point(|s| s.t <= t).saturating_sub(1);
        let base = &self.samples[k];
        if base.t == t || k + 1 >= self.samples.len() {
            return base.clone();
        }
        let next = &self.samples[k + 1];
        let state = self.state_at(t);
        let speed = inf_norm(&self.derivative_at(t));
        let all: Vec<usize> = (0..self.dim).collect();
        let length = base.length + self.length_of(&all, base.t, t, 1e-13);
        let mut space = base.space.max(inf_norm(&state));
        for i in 1..16 {
            let s = base.t + (t - base.t) * i as f64 / 16.0;
            space = space.max(inf_norm(&self.state_at(s)));
        }
        let w = (t - base.t) / (next.t - base.t);
        let budget = base.budget + w * (next.budget - base.budget);
        Sample { t, state, speed, length, space, budget }
    }

    /// Samples on a uniform grid with the given spacing, end point included.
    pub fn resample(&self, dt: f64) -> Vec<Sample> {
        let (a, b) = (self.t_start(), self.t_end());
        let n = ((b - a) / dt).floor() as usize;
        let mut out: Vec<Sample> = (0..=n).map(|i| self.metrics_at(a + i as f64 * dt)).collect();
        if out.last().map(|s| s.t < b).unwrap_or(true) {
            out.push(self.last().clone());
        }
        out
    }

    pub fn csv_header(dim: usize) -> String {
        let mut h = String::from("t");
        for i in 0..dim {
            write!(h, ",y{}", i + 1).unwrap();
        }
        h.push_str(",length,space,budget");
        h
    }

    /// CSV text with columns `t, y1..yd, length, space, budget`.
    pub fn to_csv(&self, samples: &[Sample]) -> String {
        let mut s = Self::csv_header(self.dim);
        s.push('\n');
        for smp in samples {
            write!(s, "{}", smp.t).unwrap();
            for v in &smp.state {
                write!(s, ",{v}").unwrap();
            }
            writeln!(s, ",{},{},{}", smp.length, smp.space, smp.budget).unwrap();
        }
        s
    }

    pub fn to_json(&self, samples: &[Sample]) -> serde_json::Value {
        serde_json::json!({
            "dim": self.dim,
            "status": self.status,
            "columns": Self::csv_header(self.dim).split(',').collect::<Vec<_>>(),
            "samples": samples,
        })
    }
}
