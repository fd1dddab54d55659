//! Piecewise time-dependent Hamiltonians and their time-ordered propagators.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operator::{HermitianOperator, UnitaryOperator};

pub type HamiltonianFn = Arc<dyn Fn(f64) -> HermitianOperator + Send + Sync>;

/// How a segment's Hamiltonian depends on the local time `s ∈ [0, duration]`.
#[derive(Clone)]
pub enum Generator {
    Constant(HermitianOperator),
    /// `(1 - s/τ) from + (s/τ) to`.
    Linear {
        from: HermitianOperator,
        to: HermitianOperator,
    },
    Function(HamiltonianFn),
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(h) => f.debug_tuple("Constant").field(h).finish(),
            Self::Linear { from, to } => f
                .debug_struct("Linear")
                .field("from", from)
                .field("to", to)
                .finish(),
            Self::Function(_) => f.write_str("Function(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Segment {
    pub duration: f64,
    pub generator: Generator,
}

impl Segment {
    /// Hamiltonian at local time `s`.
    pub fn at(&self, s: f64) -> HermitianOperator {
        match &self.generator {
            Generator::Constant(h) => h.clone(),
            Generator::Linear { from, to } => {
                let x = (s / self.duration).clamp(0.0, 1.0);
                &from.scaled(1.0 - x) + &to.scaled(x)
            }
            Generator::Function(f) => f(s),
        }
    }

    /// `dH/dt` at local time `s`; central differences for function segments.
    pub fn derivative_at(&self, s: f64) -> HermitianOperator {
        match &self.generator {
            Generator::Constant(h) => HermitianOperator::zeros(h.dim()),
            Generator::Linear { from, to } => (to - from).scaled(1.0 / self.duration),
            Generator::Function(f) => {
                let h = 1e-6 * self.duration;
                let lo = (s - h).max(0.0);
                let hi = (s + h).min(self.duration);
                (&f(hi) - &f(lo)).scaled(1.0 / (hi - lo))
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.generator, Generator::Constant(_))
    }

    fn dim(&self) -> usize {
        match &self.generator {
            Generator::Constant(h) => h.dim(),
            Generator::Linear { from, .. } => from.dim(),
            Generator::Function(f) => f(0.0).dim(),
        }
    }
}

/// Ordered list of segments sharing one Hilbert-space dimension.
#[derive(Debug, Clone)]
pub struct Schedule {
    segments: Vec<Segment>,
    dim: usize,
}

/// One midpoint substep of a propagation grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Substep {
    pub segment: usize,
    /// Global start time of the substep.
    pub start: f64,
    /// Local start time within the segment.
    pub local_start: f64,
    pub dt: f64,
}

impl Schedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let Some(first) = segments.first() else {
            return Err(Error::InvalidSchedule("no segments".into()));
        };
        let dim = first.dim();
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.duration > 0.0) || !seg.duration.is_finite() {
                return Err(Error::InvalidSchedule(format!(
                    "segment {i} has non-positive duration {}",
                    seg.duration
                )));
            }
            let ok = match &seg.generator {
                Generator::Linear { from, to } => from.dim() == dim && to.dim() == dim,
                _ => seg.dim() == dim,
            };
            if !ok {
                return Err(Error::InvalidSchedule(format!(
                    "segment {i} has mismatched dimension"
                )));
            }
        }
        Ok(Self { segments, dim })
    }

    pub fn constant(h: HermitianOperator, duration: f64) -> Result<Self> {
        Self::new(vec![Segment {
            duration,
            generator: Generator::Constant(h),
        }])
    }

    pub fn linear(from: HermitianOperator, to: HermitianOperator, duration: f64) -> Result<Self> {
        Self::new(vec![Segment {
            duration,
            generator: Generator::Linear { from, to },
        }])
    }

    pub fn function(
        duration: f64,
        f: impl Fn(f64) -> HermitianOperator + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::new(vec![Segment {
            duration,
            generator: Generator::Function(Arc::new(f)),
        }])
    }

    /// Concatenation: `other` runs after `self`.
    pub fn then(mut self, other: Schedule) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::InvalidSchedule(format!(
                "cannot append dimension {} to {}",
                other.dim, self.dim
            )));
        }
        self.segments.extend(other.segments);
        Ok(self)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn is_time_independent(&self) -> bool {
        self.segments.len() == 1 && self.segments[0].is_constant()
    }

    /// `H(t)`; at a segment boundary the later segment applies.
    pub fn at(&self, t: f64) -> HermitianOperator {
        let (i, s) = self.locate(t);
        self.segments[i].at(s)
    }

    pub fn derivative_at(&self, t: f64) -> HermitianOperator {
        let (i, s) = self.locate(t);
        self.segments[i].derivative_at(s)
    }

    pub fn initial(&self) -> HermitianOperator {
        self.segments[0].at(0.0)
    }

    pub fn last(&self) -> HermitianOperator {
        let seg = self.segments.last().unwrap();
        seg.at(seg.duration)
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let mut start = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            if t < start + seg.duration || i + 1 == self.segments.len() {
                return (i, (t - start).clamp(0.0, seg.duration));
            }
            start += seg.duration;
        }
        unreachable!("schedule has at least one segment")
    }

    /// Per-segment step counts: largest-remainder apportionment of `steps`
    /// by duration, with at least one step per segment.
    pub fn allocate_steps(&self, steps: usize) -> Vec<usize> {
        let total = self.duration();
        let shares: Vec<f64> = self
            .segments
            .iter()
            .map(|s| steps as f64 * s.duration / total)
            .collect();
        let mut alloc: Vec<usize> = shares.iter().map(|x| x.floor() as usize).collect();
        let assigned: usize = alloc.iter().sum();
        let mut order: Vec<usize> = (0..shares.len()).collect();
        order.sort_by(|&a, &b| {
            (shares[b] - shares[b].floor()).total_cmp(&(shares[a] - shares[a].floor()))
        });
        for &i in order.iter().take(steps.saturating_sub(assigned)) {
            alloc[i] += 1;
        }
        alloc.iter().map(|&n| n.max(1)).collect()
    }

    /// Uniform substeps inside each segment; no substep straddles a boundary.
    pub fn grid(&self, steps: usize) -> Vec<Substep> {
        let alloc = self.allocate_steps(steps);
        let mut out = Vec::with_capacity(alloc.iter().sum());
        let mut start = 0.0;
        for (i, (seg, &n)) in self.segments.iter().zip(&alloc).enumerate() {
            let dt = seg.duration / n as f64;
            for k in 0..n {
                out.push(Substep {
                    segment: i,
                    start: start + k as f64 * dt,
                    local_start: k as f64 * dt,
                    dt,
                });
            }
            start += seg.duration;
        }
        out
    }
}

/// Uniform midpoint grid over the union of all segment boundaries of
/// schedules that share one total duration. Returns `(start, dt)` pairs.
pub fn merged_grid(schedules: &[&Schedule], steps: usize) -> Result<Vec<(f64, f64)>> {
    let Some(first) = schedules.first() else {
        return Err(Error::InvalidSchedule("no schedules".into()));
    };
    if steps == 0 {
        return Err(Error::InvalidSchedule("steps must be at least 1".into()));
    }
    let total = first.duration();
    if schedules
        .iter()
        .any(|s| (s.duration() - total).abs() > 1e-9 * total)
    {
        return Err(Error::InvalidSchedule(
            "schedules have different total durations".into(),
        ));
    }
    let mut marks = vec![0.0, total];
    for s in schedules {
        let mut t = 0.0;
        for seg in s.segments() {
            t += seg.duration;
            marks.push(t.min(total));
        }
    }
    marks.sort_by(f64::total_cmp);
    marks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * total);
    let mut out = Vec::with_capacity(steps + marks.len());
    for w in marks.windows(2) {
        let width = w[1] - w[0];
        let n = ((steps as f64 * width / total).round() as usize).max(1);
        let dt = width / n as f64;
        out.extend((0..n).map(|k| (w[0] + k as f64 * dt, dt)));
    }
    Ok(out)
}

/// Time-ordered propagator: the product of `exp(-i H(t_mid) Δt / ħ)` over
/// the midpoint grid. Constant segments are exponentiated exactly in one go.
pub fn propagate(schedule: &Schedule, steps: usize, hbar: f64) -> Result<UnitaryOperator> {
    if steps == 0 {
        return Err(Error::InvalidSchedule("steps must be at least 1".into()));
    }
    let alloc = schedule.allocate_steps(steps);
    let mut u = UnitaryOperator::identity(schedule.dim());
    for (seg, &n) in schedule.segments().iter().zip(&alloc) {
        if let Generator::Constant(h) = &seg.generator {
            u = h.evolution(seg.duration, hbar).then_after(&u);
            continue;
        }
        let dt = seg.duration / n as f64;
        for k in 0..n {
            let h = seg.at((k as f64 + 0.5) * dt);
            u = h.evolution(dt, hbar).then_after(&u);
        }
    }
    Ok(u)
}
