//! `(τ, ε)`-closeness of hybrid arcs and graphical-convergence diagnostics.
//!
//! Arc `a` is covered by arc `b` at `(τ, ε)` when every sample `(t, j)` of `a`
//! with `t + j <= τ` has some `s` with `(s, j)` in the domain of `b`,
//! `|t - s| < ε` and `|a(t, j) - b(s, j)| < ε`. Two arcs are close when each
//! covers the other. Since `b` is piecewise linear, the best `s` on each
//! linear piece is found by exact projection, so the inner search has no
//! resolution limit. A distance of exactly `ε` counts as a failure.

use std::io::Write;

use crate::error::{HybridError, Result};
use crate::hytime::{HybridArc, Segment};

/// Why a sample of one arc is not matched by the other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FailureReason {
    /// The other arc has no segment `j` overlapping `[t - ε, t + ε]`.
    NoMatchingTime,
    /// Best state distance within the time window is at least `ε`.
    StateDistance(f64),
}

/// Unmatched sample `(t, j)` of arc `a` (`a_to_b`) or of arc `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub t: f64,
    pub j: usize,
    pub a_to_b: bool,
    pub reason: FailureReason,
}

/// Result of [`is_close`].
#[derive(Debug, Clone, PartialEq)]
pub struct Closeness {
    pub close: bool,
    /// First failing sample in each direction.
    pub witnesses: Vec<Witness>,
}

/// Result of [`min_eps`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClosenessReport {
    pub tau: f64,
    /// Smallest grid value at which the arcs are close, `+∞` if none.
    pub eps_star: f64,
    /// Witnesses at the largest grid value below `eps_star`.
    pub direction_failures: Vec<Witness>,
}

/// Tests `(τ, ε)`-closeness over the sample points of both arcs.
pub fn is_close(a: &HybridArc, b: &HybridArc, tau: f64, eps: f64) -> Result<Closeness> {
    if !(eps > 0.0) || !(tau >= 0.0) {
        return Err(HybridError::InvalidCloseness { eps, tau });
    }
    if a.dim() != b.dim() {
        return Err(HybridError::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let mut witnesses = Vec::new();
    if let Some(w) = first_uncovered(a, b, tau, eps) {
        witnesses.push(Witness { a_to_b: true, ..w });
    }
    if let Some(w) = first_uncovered(b, a, tau, eps) {
        witnesses.push(Witness { a_to_b: false, ..w });
    }
    Ok(Closeness { close: witnesses.is_empty(), witnesses })
}

fn first_uncovered(a: &HybridArc, b: &HybridArc, tau: f64, eps: f64) -> Option<Witness> {
    for (j, seg) in a.segments().iter().enumerate() {
        if j as f64 > tau {
            break;
        }
        let target = b.segment(j);
        for (t, x) in seg.iter() {
            if t + j as f64 > tau {
                break;
            }
            let reason = match target {
                None => Some(FailureReason::NoMatchingTime),
                Some(other) => match nearest_in_window(other, t, x, eps) {
                    None => Some(FailureReason::NoMatchingTime),
                    Some(d) if d < eps => None,
                    Some(d) => Some(FailureReason::StateDistance(d)),
                },
            };
            if let Some(reason) = reason {
                return Some(Witness { t, j, a_to_b: true, reason });
            }
        }
    }
    None
}

/// Smallest distance from `x` to `seg(s)` over `s ∈ [t - ε, t + ε]`, stopping
/// early once it drops below `ε`. `None` when the window misses the segment.
fn nearest_in_window(seg: &Segment, t: f64, x: &[f64], eps: f64) -> Option<f64> {
    let times = seg.times();
    let (lo, hi) = (t - eps, t + eps);
    let (first, last) = (times[0], times[times.len() - 1]);
    if hi < first || lo > last {
        return None;
    }
    if times.len() == 1 {
        return Some(dist(x, seg.state(0)));
    }
    // pieces [k, k+1]; search outward from the piece containing t
    let pieces = times.len() - 1;
    let center = times.partition_point(|&s| s <= t.clamp(first, last)).saturating_sub(1).min(pieces - 1);
    let piece = |k: usize| piece_distance(seg.state(k), seg.state(k + 1), times[k], times[k + 1], lo, hi, x);
    let mut best = piece(center);
    let (mut left, mut right) = (center, center + 1);
    loop {
        if best < eps {
            return Some(best);
        }
        let mut progressed = false;
        if left > 0 && times[left] >= lo {
            left -= 1;
            best = best.min(piece(left));
            progressed = true;
        }
        if right < pieces && times[right] <= hi {
            best = best.min(piece(right));
            right += 1;
            progressed = true;
        }
        if !progressed {
            return Some(best);
        }
    }
}

/// Distance from `x` to the linear piece `b0 → b1` over `[s0, s1]`
/// restricted to times in `[lo, hi]`.
fn piece_distance(b0: &[f64], b1: &[f64], s0: f64, s1: f64, lo: f64, hi: f64, x: &[f64]) -> f64 {
    let len = s1 - s0;
    if len <= 0.0 {
        return dist(x, b0).min(dist(x, b1));
    }
    let l_lo = ((lo - s0) / len).clamp(0.0, 1.0);
    let l_hi = ((hi - s0) / len).clamp(0.0, 1.0);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..x.len() {
        let d = b1[i] - b0[i];
        num += (x[i] - b0[i]) * d;
        den += d * d;
    }
    let l = if den > 0.0 { (num / den).clamp(l_lo, l_hi) } else { l_lo };
    x.iter().enumerate().map(|(i, &xi)| (xi - b0[i] - l * (b1[i] - b0[i])).powi(2)).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|&e| !(e > 0.0)) || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(HybridError::EmptyGrid);
    }
    Ok(())
}

/// Smallest `ε` in the ascending `eps_grid` at which the arcs are close.
/// Closeness is monotone in `ε`, so the grid is bisected.
pub fn min_eps(a: &HybridArc, b: &HybridArc, tau: f64, eps_grid: &[f64]) -> Result<ClosenessReport> {
    check_grid(eps_grid)?;
    let (mut lo, mut hi) = (0usize, eps_grid.len());
    // invariant: grid[..lo] are not close, grid[hi..] are close
    while lo < hi {
        let mid = (lo + hi) / 2;
        let c = is_close(a, b, tau, eps_grid[mid])?;
        if c.close {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let direction_failures = if lo == 0 { Vec::new() } else { is_close(a, b, tau, eps_grid[lo - 1])?.witnesses };
    let eps_star = eps_grid.get(lo).copied().unwrap_or(f64::INFINITY);
    Ok(ClosenessReport { tau, eps_star, direction_failures })
}

/// Verdict rule for [`graphical_convergence_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRule {
    /// `eps_star` must be nonincreasing from this 0-based index on.
    pub from_index: usize,
    /// Final `eps_star` must not exceed this.
    pub threshold: f64,
}

impl Default for ConvergenceRule {
    fn default() -> Self {
        Self { from_index: 1, threshold: 0.05 }
    }
}

/// `eps_star` of each sequence element against `limit`, and the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub eps_star: Vec<f64>,
    pub converging: bool,
}

impl ConvergenceReport {
    /// Writes `i,eps_star` with `i` counted from 1.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,eps_star")?;
        for (i, e) in self.eps_star.iter().enumerate() {
            writeln!(w, "{},{e}", i + 1)?;
        }
        Ok(())
    }
}

/// Diagnoses graphical convergence of `seq` to `limit` through closeness.
pub fn graphical_convergence_report(
    seq: &[HybridArc],
    limit: &HybridArc,
    tau: f64,
    eps_grid: &[f64],
    rule: ConvergenceRule,
) -> Result<ConvergenceReport> {
    check_grid(eps_grid)?;
    let eps_star = seq
        .iter()
        .map(|arc| min_eps(arc, limit, tau, eps_grid).map(|r| r.eps_star))
        .collect::<Result<Vec<_>>>()?;
    let tail = &eps_star[rule.from_index.min(eps_star.len())..];
    let monotone = tail.windows(2).all(|w| w[1] <= w[0]);
    let last_ok = eps_star.last().is_some_and(|&e| e <= rule.threshold);
    Ok(ConvergenceReport { converging: monotone && last_ok, eps_star })
}

/// `count` logarithmically spaced values from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| if k + 1 == count { hi } else { (a + (b - a) * k as f64 / (count - 1) as f64).exp() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn constant(c: f64, t_end: f64) -> HybridArc {
        let mut s = Segment::new(1);
        let n = 20;
        for k in 0..=n {
            s.push(t_end * k as f64 / n as f64, &[c]);
        }
        HybridArc::from_segments(vec![s]).unwrap()
    }

    fn ramp(slope: f64, shift: f64) -> HybridArc {
        let mut s = Segment::new(1);
        for k in 0..=30 {
            let t = k as f64 * 0.1;
            s.push(t, &[slope * t + shift]);
        }
        HybridArc::from_segments(vec![s]).unwrap()
    }

    #[test]
    fn identity_and_offsets() {
        let z = constant(0.0, 2.0);
        assert!(is_close(&z, &z, 2.0, 1e-9).unwrap().close);
        let c = constant(0.3, 2.0);
        assert!(is_close(&z, &c, 2.0, 0.31).unwrap().close);
        let tie = is_close(&z, &c, 2.0, 0.3).unwrap();
        assert!(!tie.close);
        assert_eq!(tie.witnesses.len(), 2);
        let r = min_eps(&z, &c, 2.0, &[0.15, 0.6]).unwrap();
        assert_eq!(r.eps_star, 0.6);
        assert!(!r.direction_failures.is_empty());
        let r = min_eps(&z, &z, 2.0, &[0.01, 0.1]).unwrap();
        assert_eq!(r.eps_star, 0.01);
        assert!(matches!(min_eps(&z, &z, 2.0, &[]), Err(HybridError::EmptyGrid)));
    }

    #[test]
    fn shifted_ramps_threshold_set_by_initial_point() {
        // interior points can trade time for state, but b(0) = -0.05 only
        // sees a(t) = t for t >= 0
        let a = ramp(1.0, 0.0);
        let b = ramp(1.0, -0.05);
        assert!(is_close(&a, &b, 2.5, 0.051).unwrap().close);
        let c = is_close(&a, &b, 2.5, 0.049).unwrap();
        assert!(!c.close);
        assert_eq!(c.witnesses, vec![Witness { t: 0.0, j: 0, a_to_b: false, reason: FailureReason::StateDistance(0.05) }]);
    }

    #[test]
    fn missing_jump_segment_fails() {
        let a = constant(0.0, 1.0);
        let mut s0 = Segment::new(1);
        s0.push(0.0, &[0.0]);
        s0.push(1.0, &[0.0]);
        let mut s1 = Segment::new(1);
        s1.push(1.0, &[0.0]);
        let b = HybridArc::from_segments(vec![s0, s1]).unwrap();
        let c = is_close(&a, &b, 5.0, 0.5).unwrap();
        assert!(!c.close);
        assert_eq!(c.witnesses[0].reason, FailureReason::NoMatchingTime);
        assert!(!c.witnesses[0].a_to_b);
        // a horizon that excludes the jump sees no difference
        assert!(is_close(&a, &b, 0.9, 0.5).unwrap().close);
    }

    #[test]
    fn convergence_verdicts() {
        let limit = constant(0.0, 1.0);
        let seq: Vec<HybridArc> = (1..=5).map(|i| constant(0.5f64.powi(i), 1.0)).collect();
        let grid = log_grid(1e-3, 10.0, 60);
        let rep = graphical_convergence_report(&seq, &limit, 1.0, &grid, ConvergenceRule::default()).unwrap();
        assert!(rep.converging, "{:?}", rep.eps_star);
        let away: Vec<HybridArc> = (1..=5).map(|i| constant(i as f64, 1.0)).collect();
        let rep = graphical_convergence_report(&away, &limit, 1.0, &grid, ConvergenceRule::default()).unwrap();
        assert!(!rep.converging);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("i,eps_star\n1,"));
    }

    proptest! {
        #[test]
        fn symmetric_and_monotone(slope in -2.0f64..2.0, shift in -0.5f64..0.5, eps in 0.01f64..1.0, tau in 0.0f64..3.0) {
            let a = ramp(1.0, 0.0);
            let b = ramp(slope, shift);
            let ab = is_close(&a, &b, tau, eps).unwrap().close;
            prop_assert_eq!(ab, is_close(&b, &a, tau, eps).unwrap().close);
            if ab {
                prop_assert!(is_close(&a, &b, tau, eps * 1.5).unwrap().close);
                prop_assert!(is_close(&a, &b, tau * 0.5, eps).unwrap().close);
            }
        }
    }
}
