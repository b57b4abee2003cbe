//! Hybrid time domains and sampled hybrid arcs.
//!
//! A compact hybrid time domain is the union of intervals `[t_j, t_{j+1}] x {j}`
//! for `j = 0..=J`, with `t_0 = 0` and `t_{J+1} = T`. A [`HybridArc`] stores one
//! polyline of `(t, x)` samples per interval and evaluates between samples by
//! linear interpolation.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{HybridError, Result};

/// Compact hybrid time domain described by its jump times and terminal time.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridTimeDomain {
    jump_times: Vec<f64>,
    terminal: f64,
}

impl HybridTimeDomain {
    /// Validates `0 <= t_1 <= ... <= t_J <= T`.
    pub fn new(jump_times: Vec<f64>, terminal: f64) -> Result<Self> {
        if !terminal.is_finite() || terminal < 0.0 {
            return Err(HybridError::NegativeTime(terminal));
        }
        let mut prev = 0.0;
        for (index, &t) in jump_times.iter().enumerate() {
            if !t.is_finite() || t < 0.0 {
                return Err(HybridError::NegativeTime(t));
            }
            if t < prev {
                return Err(HybridError::NonMonotone { index, prev, next: t });
            }
            prev = t;
        }
        if terminal < prev {
            return Err(HybridError::TerminalBeforeLastJump { terminal, last_jump: prev });
        }
        Ok(Self { jump_times, terminal })
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn terminal_time(&self) -> f64 {
        self.terminal
    }

    /// Number of jumps `J`.
    pub fn jumps(&self) -> usize {
        self.jump_times.len()
    }

    /// The interval `[t_j, t_{j+1}]`, or `None` when `j > J`.
    pub fn interval(&self, j: usize) -> Option<(f64, f64)> {
        let jumps = self.jumps();
        if j > jumps {
            return None;
        }
        let start = if j == 0 { 0.0 } else { self.jump_times[j - 1] };
        let end = if j == jumps { self.terminal } else { self.jump_times[j] };
        Some((start, end))
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..=self.jumps()).filter_map(move |j| self.interval(j))
    }

    pub fn contains(&self, t: f64, j: usize) -> bool {
        self.interval(j).is_some_and(|(a, b)| t >= a && t <= b)
    }
}

/// Samples of one flow interval of an arc.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    times: Vec<f64>,
    data: Vec<f64>,
    dim: usize,
}

impl Segment {
    pub fn new(dim: usize) -> Self {
        Self { times: Vec::new(), data: Vec::new(), dim }
    }

    pub fn with_capacity(dim: usize, cap: usize) -> Self {
        Self { times: Vec::with_capacity(cap), data: Vec::with_capacity(cap * dim), dim }
    }

    pub fn push(&mut self, t: f64, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.times.push(t);
        self.data.extend_from_slice(x);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn first(&self) -> Option<(f64, &[f64])> {
        (!self.is_empty()).then(|| (self.times[0], self.state(0)))
    }

    pub fn last(&self) -> Option<(f64, &[f64])> {
        let n = self.len();
        (n > 0).then(|| (self.times[n - 1], self.state(n - 1)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &[f64])> + '_ {
        self.times.iter().copied().zip(self.data.chunks_exact(self.dim))
    }

    /// Linear interpolation at `t`, exact at stored samples. `t` must lie in the
    /// segment's time span.
    fn eval_into(&self, t: f64, out: &mut [f64]) {
        let k = self.times.partition_point(|&s| s < t);
        if k < self.len() && self.times[k] == t {
            out.copy_from_slice(self.state(k));
            return;
        }
        // k is the first sample strictly after t
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        let (a, b) = (self.state(k - 1), self.state(k));
        for ((o, &xa), &xb) in out.iter_mut().zip(a).zip(b) {
            *o = xa + w * (xb - xa);
        }
    }
}

/// A hybrid arc sampled on a compact hybrid time domain.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridArc {
    domain: HybridTimeDomain,
    segments: Vec<Segment>,
    dim: usize,
}

impl HybridArc {
    /// Builds an arc from per-interval samples, deriving the domain from the
    /// first sample of every segment after the first and the last sample of
    /// the final segment.
    pub fn from_segments(segments: Vec<Segment>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| HybridError::MalformedArc("no segments".into()))?;
        let dim = first.dim;
        for (j, seg) in segments.iter().enumerate() {
            if seg.dim != dim {
                return Err(HybridError::DimensionMismatch { expected: dim, got: seg.dim });
            }
            if seg.is_empty() {
                return Err(HybridError::MalformedArc(format!("segment {j} has no samples")));
            }
            if seg.times.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(HybridError::MalformedArc(format!(
                    "segment {j} sample times are not strictly increasing"
                )));
            }
        }
        if first.times[0] != 0.0 {
            return Err(HybridError::MalformedArc("arc must start at t = 0".into()));
        }
        for j in 1..segments.len() {
            let (end, _) = segments[j - 1].last().expect("nonempty");
            let (start, _) = segments[j].first().expect("nonempty");
            if end != start {
                return Err(HybridError::MalformedArc(format!(
                    "segment {} ends at {end} but segment {j} starts at {start}",
                    j - 1
                )));
            }
        }
        let jump_times = segments[1..].iter().map(|s| s.times[0]).collect();
        let terminal = segments.last().and_then(Segment::last).map(|(t, _)| t).unwrap_or(0.0);
        let domain = HybridTimeDomain::new(jump_times, terminal)?;
        Ok(Self { domain, segments, dim })
    }

    pub fn domain(&self) -> &HybridTimeDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, j: usize) -> Option<&Segment> {
        self.segments.get(j)
    }

    /// Terminal hybrid time `(T, J)`.
    pub fn terminal_time(&self) -> (f64, usize) {
        (self.domain.terminal_time(), self.domain.jumps())
    }

    pub fn terminal_state(&self) -> &[f64] {
        self.segments.last().and_then(Segment::last).map(|(_, x)| x).expect("nonempty arc")
    }

    /// State immediately before jump `k` (1-based), i.e. `x(t_k, k - 1)`.
    pub fn pre_jump_state(&self, k: usize) -> Option<&[f64]> {
        if k == 0 {
            return None;
        }
        self.segments.get(k - 1).and(self.segments.get(k)).map(|_| {
            self.segments[k - 1].last().map(|(_, x)| x).expect("nonempty")
        })
    }

    /// Evaluates the arc at `(t, j)`.
    pub fn eval(&self, t: f64, j: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, j, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, t: f64, j: usize, out: &mut [f64]) -> Result<()> {
        if !self.domain.contains(t, j) {
            return Err(HybridError::OutOfDomain { t, j });
        }
        self.segments[j].eval_into(t, out);
        Ok(())
    }

    /// All samples as `(t, j, x)` in `(j, t)` order.
    pub fn samples(&self) -> impl Iterator<Item = (f64, usize, &[f64])> + '_ {
        self.segments
            .iter()
            .enumerate()
            .flat_map(|(j, seg)| seg.iter().map(move |(t, x)| (t, j, x)))
    }

    /// Keeps the state components in `range`; used to drop the cost
    /// accumulator of an augmented arc.
    pub fn project(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.dim || range.is_empty() {
            return Err(HybridError::DimensionMismatch { expected: self.dim, got: range.end });
        }
        let dim = range.len();
        let segments = self
            .segments
            .iter()
            .map(|seg| {
                let mut out = Segment::with_capacity(dim, seg.len());
                for (t, x) in seg.iter() {
                    out.push(t, &x[range.clone()]);
                }
                out
            })
            .collect();
        Ok(Self { domain: self.domain.clone(), segments, dim })
    }

    /// Writes the arc as CSV with header `t,j,x_1,...,x_n`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = String::from("t,j");
        for i in 1..=self.dim {
            write!(header, ",x_{i}").expect("string write");
        }
        writeln!(w, "{header}")?;
        let mut line = String::new();
        for (t, j, x) in self.samples() {
            line.clear();
            write!(line, "{t},{j}").expect("string write");
            for v in x {
                write!(line, ",{v}").expect("string write");
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Reads an arc written by [`HybridArc::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| HybridError::MalformedArc("missing header".into()))?
            .map_err(|e| HybridError::MalformedArc(e.to_string()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 3 || cols[0] != "t" || cols[1] != "j" {
            return Err(HybridError::MalformedArc(format!("bad header {header:?}")));
        }
        let dim = cols.len() - 2;
        let mut segments: Vec<Segment> = Vec::new();
        let mut x = vec![0.0; dim];
        for (row, line) in lines.enumerate() {
            let line = line.map_err(|e| HybridError::MalformedArc(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || HybridError::MalformedArc(format!("row {}: {line:?}", row + 1));
            let mut fields = line.split(',').map(str::trim);
            let t: f64 = fields.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let j: usize = fields.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            for xi in x.iter_mut() {
                *xi = fields.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            }
            if fields.next().is_some() {
                return Err(bad());
            }
            if j == segments.len() {
                segments.push(Segment::new(dim));
            } else if j + 1 != segments.len() {
                return Err(bad());
            }
            segments[j].push(t, &x);
        }
        Self::from_segments(segments)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seg(dim: usize, pts: &[(f64, &[f64])]) -> Segment {
        let mut s = Segment::new(dim);
        for (t, x) in pts {
            s.push(*t, x);
        }
        s
    }

    #[test]
    fn no_jump_domain() {
        let d = HybridTimeDomain::new(vec![], 1.0).unwrap();
        assert_eq!(d.jumps(), 0);
        assert_eq!(d.interval(0), Some((0.0, 1.0)));
        assert_eq!(d.interval(1), None);
    }

    #[test]
    fn simultaneous_jumps_are_legal() {
        let d = HybridTimeDomain::new(vec![0.5, 0.5], 2.0).unwrap();
        assert_eq!(d.jumps(), 2);
        assert_eq!(d.interval(1), Some((0.5, 0.5)));
        assert!(d.contains(0.5, 1));
        assert!(!d.contains(0.6, 1));
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            HybridTimeDomain::new(vec![1.0, 0.5], 2.0),
            Err(HybridError::NonMonotone { index: 1, .. })
        ));
        assert!(matches!(
            HybridTimeDomain::new(vec![1.0], 0.5),
            Err(HybridError::TerminalBeforeLastJump { .. })
        ));
        assert!(matches!(HybridTimeDomain::new(vec![-0.1], 1.0), Err(HybridError::NegativeTime(_))));
        assert!(matches!(HybridTimeDomain::new(vec![], -1.0), Err(HybridError::NegativeTime(_))));
    }

    #[test]
    fn midpoint_interpolation() {
        let arc = HybridArc::from_segments(vec![seg(1, &[(0.0, &[0.0]), (1.0, &[2.0])])]).unwrap();
        assert_eq!(arc.eval(0.5, 0).unwrap(), vec![1.0]);
        assert!(matches!(arc.eval(0.5, 1), Err(HybridError::OutOfDomain { .. })));
        assert!(matches!(arc.eval(1.5, 0), Err(HybridError::OutOfDomain { .. })));
    }

    #[test]
    fn constant_arc_with_zero_length_segment() {
        let c: &[f64] = &[3.0, -1.0];
        let arc = HybridArc::from_segments(vec![
            seg(2, &[(0.0, c), (0.4, c), (0.5, c)]),
            seg(2, &[(0.5, c)]),
            seg(2, &[(0.5, c), (0.9, c)]),
        ])
        .unwrap();
        assert_eq!(arc.domain().jump_times(), &[0.5, 0.5]);
        for &(t, j) in &[(0.0, 0), (0.45, 0), (0.5, 1), (0.7, 2), (0.9, 2)] {
            assert_eq!(arc.eval(t, j).unwrap(), c);
        }
        assert_eq!(arc.pre_jump_state(2).unwrap(), c);
        assert!(arc.pre_jump_state(3).is_none());
    }

    #[test]
    fn rejects_discontinuous_jump_times() {
        let r = HybridArc::from_segments(vec![
            seg(1, &[(0.0, &[0.0]), (1.0, &[0.0])]),
            seg(1, &[(1.1, &[0.0])]),
        ]);
        assert!(matches!(r, Err(HybridError::MalformedArc(_))));
    }

    #[test]
    fn csv_round_trip() {
        let arc = HybridArc::from_segments(vec![
            seg(2, &[(0.0, &[1.0, 0.0]), (0.25, &[0.7, -2.45])]),
            seg(2, &[(0.25, &[0.0, 2.1]), (0.5, &[0.1, 0.1 / 3.0])]),
        ])
        .unwrap();
        let mut buf = Vec::new();
        arc.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,j,x_1,x_2\n"));
        let back = HybridArc::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, arc);
    }

    proptest! {
        #[test]
        fn domain_round_trip(mut ts in proptest::collection::vec(0.0f64..10.0, 0..6), extra in 0.0f64..3.0) {
            ts.sort_by(f64::total_cmp);
            let t_end = ts.last().copied().unwrap_or(0.0) + extra;
            let d = HybridTimeDomain::new(ts.clone(), t_end).unwrap();
            let again = HybridTimeDomain::new(d.jump_times().to_vec(), d.terminal_time()).unwrap();
            prop_assert_eq!(&again, &d);
            // intervals tile [0, T] and only touch at jump instants
            let iv: Vec<_> = d.intervals().collect();
            prop_assert_eq!(iv[0].0, 0.0);
            prop_assert_eq!(iv.last().unwrap().1, t_end);
            for w in iv.windows(2) {
                prop_assert_eq!(w[0].1, w[1].0);
            }
        }

        #[test]
        fn eval_exact_at_samples(steps in proptest::collection::vec((0.01f64..1.0, -5.0f64..5.0), 1..20)) {
            let mut s = Segment::new(1);
            let mut t = 0.0;
            s.push(0.0, &[0.0]);
            for (dt, x) in &steps {
                t += dt;
                s.push(t, &[*x]);
            }
            let arc = HybridArc::from_segments(vec![s.clone()]).unwrap();
            for (t, x) in s.iter() {
                prop_assert_eq!(arc.eval(t, 0).unwrap(), x.to_vec());
            }
        }
    }
}
