//! Exact occupation-time histogram of a trajectory.
//!
//! Within an inter-event segment the state decays deterministically, so
//! the time spent above any level `a` is `(1/gamma)·ln(x_hi/a)` clamped
//! to the segment; bin occupancies are differences of these crossing
//! times and sum to the window exactly.

use super::EventLog;

#[derive(Debug, Clone, PartialEq)]
pub struct OccupationHistogram {
    /// Bin edges (popularity), strictly increasing.
    pub edges: Vec<f64>,
    /// Occupation time per bin (days).
    pub occupation: Vec<f64>,
    /// Time spent below the first edge.
    pub underflow: f64,
    /// Time spent above the last edge.
    pub overflow: f64,
    /// Post-burn-in window length (days).
    pub window: f64,
}

impl OccupationHistogram {
    /// Total accounted time: bins + underflow + overflow.
    pub fn total(&self) -> f64 {
        self.occupation.iter().sum::<f64>() + self.underflow + self.overflow
    }

    /// Normalized density per bin (1/(popularity·window)).
    pub fn density(&self) -> Vec<f64> {
        self.edges
            .windows(2)
            .zip(&self.occupation)
            .map(|(e, occ)| occ / (self.window * (e[1] - e[0])))
            .collect()
    }

    /// CDF evaluated at the bin edges (underflow mass included at the
    /// first edge, so the last value is `1 - overflow/window`).
    pub fn cdf_at_edges(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.edges.len());
        let mut acc = self.underflow / self.window;
        out.push(acc);
        for occ in &self.occupation {
            acc += occ / self.window;
            out.push(acc);
        }
        out
    }
}

/// Geometric (log-spaced) bin edges.
pub fn log_edges(min: f64, max: f64, bins: usize) -> Vec<f64> {
    assert!(min > 0.0 && max > min && bins >= 1);
    let step = (max / min).ln() / bins as f64;
    (0..=bins).map(|k| min * (step * k as f64).exp()).collect()
}

/// Exact occupation time per bin over `[burnin, horizon]`.
///
/// Time spent outside the grid is reported in `underflow`/`overflow`
/// rather than dropped, so `total()` equals the window to rounding.
pub fn occupation_histogram(
    log: &EventLog,
    edges: &[f64],
    gamma: f64,
    burnin: f64,
) -> OccupationHistogram {
    assert!(edges.len() >= 2, "need at least one bin");
    assert!(burnin < log.horizon);
    let nbins = edges.len() - 1;
    let mut occ = vec![0.0; nbins];
    let mut underflow = 0.0;
    let mut overflow = 0.0;

    let mut add_segment = |x_hi: f64, dur: f64| {
        if dur <= 0.0 {
            return;
        }
        if x_hi <= 0.0 {
            underflow += dur;
            return;
        }
        // Time spent above each edge, clamped to the segment.
        let t_above = |level: f64| ((x_hi / level).ln() / gamma).clamp(0.0, dur);
        underflow += dur - t_above(edges[0]);
        overflow += t_above(edges[nbins]);
        // Only bins intersecting (x_lo, x_hi) pick up occupation; the
        // clamp pins every other edge to exactly 0 or `dur`.
        let x_lo = x_hi * (-gamma * dur).exp();
        let k_lo = edges.partition_point(|&e| e <= x_lo).saturating_sub(1);
        let k_hi = edges.partition_point(|&e| e < x_hi).min(nbins);
        let mut above_prev = t_above(edges[k_lo]);
        for k in k_lo..k_hi {
            let above_next = t_above(edges[k + 1]);
            occ[k] += above_prev - above_next;
            above_prev = above_next;
        }
    };

    let mut t = burnin;
    let mut x = log.state_at(burnin, gamma);
    for e in log.events.iter().filter(|e| e.time > burnin) {
        add_segment(x, e.time - t);
        t = e.time;
        x = e.x_after;
    }
    add_segment(x, log.horizon - t);

    OccupationHistogram {
        edges: edges.to_vec(),
        occupation: occ,
        underflow,
        overflow,
        window: log.horizon - burnin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InfluencerParams, JumpFamily, SystemParams};
    use crate::sim::{simulate_trajectory, Event, EventKind, EventLog};

    #[test]
    fn single_segment_closed_form() {
        // Decay 10 -> 5 with gamma = 1/64, bin (5, 10): occupation (1/gamma) ln 2.
        let gamma = 1.0 / 64.0;
        let dur = 64.0 * 2.0f64.ln();
        let log = EventLog {
            influencer: 0,
            initial_state: 0.0,
            events: vec![Event {
                time: 0.5,
                kind: EventKind::Internal,
                x_before: 0.0,
                jump: 10.0,
                x_after: 10.0,
            }],
            horizon: 0.5 + dur,
            seed: 0,
        };
        let h = occupation_histogram(&log, &[5.0, 10.0], gamma, 0.5);
        assert!((h.occupation[0] - 64.0 * 2.0f64.ln()).abs() < 1e-9);
        assert!(h.overflow.abs() < 1e-12);
        assert!(h.underflow.abs() < 1e-12);
    }

    #[test]
    fn mass_conservation() {
        let sys = SystemParams::new(1.0 / 64.0, 0.6, 0.01, 0.0).unwrap();
        let inf = InfluencerParams {
            beta: 0.9,
            lambda0: 4.0,
            lambda1: 0.0,
            phi: 0.0,
            cv: 4.0,
            v_family: JumpFamily::Lognormal,
        };
        let log = simulate_trajectory(&sys, &inf, 20_000.0, 77).unwrap();
        let edges = log_edges(1e-3, 1e8, 256);
        let h = occupation_histogram(&log, &edges, sys.gamma, 4_000.0);
        let window = 16_000.0;
        assert!(
            (h.total() - window).abs() < 1e-9 * window,
            "total {} vs window {window}",
            h.total()
        );
    }

    #[test]
    fn cdf_is_monotone_and_reaches_one_minus_overflow() {
        let sys = SystemParams::new(1.0 / 64.0, 0.0, 0.01, 0.0).unwrap();
        let inf = InfluencerParams {
            beta: 1.0,
            lambda0: 4.0,
            lambda1: 0.0,
            phi: 0.0,
            cv: 1.0,
            v_family: JumpFamily::Exponential,
        };
        let log = simulate_trajectory(&sys, &inf, 50_000.0, 3).unwrap();
        let edges = log_edges(1.0, 1e4, 128);
        let h = occupation_histogram(&log, &edges, sys.gamma, 5_000.0);
        let cdf = h.cdf_at_edges();
        for w in cdf.windows(2) {
            assert!(w[1] >= w[0] - 1e-15);
        }
        let last = *cdf.last().unwrap();
        assert!((last + h.overflow / h.window - 1.0).abs() < 1e-9);
    }
}
