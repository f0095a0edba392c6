//! Competition metrics: first-place probability and average stay.
//!
//! Between events every log-popularity decays with the identical slope
//! `-gamma`, so the ranking can only change at event times and
//! leadership intervals are closed-form: no time discretization is
//! involved.

use super::{JointTrajectory, SimError};

/// A maximal-by-construction piece of the post-burn-in window during
/// which one influencer leads. Adjacent intervals may share a leader
/// (they are split at every event time); consumers merge as needed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadInterval {
    pub start: f64,
    pub end: f64,
    pub leader: usize,
}

/// Comparison key for influencer `i` between events: with current
/// post-event state `z_i` taken at time `t_i`, the state at any later
/// `t` is `z_i e^{-gamma (t - t_i)}`, so ordering is by
/// `ln z_i + gamma t_i`. Ties break toward the lowest index.
fn rank_key(z: f64, t: f64, gamma: f64) -> f64 {
    if z <= 0.0 {
        f64::NEG_INFINITY
    } else {
        z.ln() + gamma * t
    }
}

fn leader_of(keys: &[f64]) -> usize {
    let mut best = 0;
    for (i, &k) in keys.iter().enumerate().skip(1) {
        if k > keys[best] {
            best = i;
        }
    }
    best
}

/// Exact leadership intervals over `[burnin, horizon]`.
pub fn leadership_intervals(
    jt: &JointTrajectory,
    gamma: f64,
) -> Result<Vec<LeadInterval>, SimError> {
    if jt.burnin >= jt.horizon {
        return Err(SimError::EmptyWindow {
            burnin: jt.burnin,
            horizon: jt.horizon,
        });
    }
    let n = jt.logs.len();
    let mut keys: Vec<f64> = jt
        .logs
        .iter()
        .map(|l| rank_key(l.initial_state, 0.0, gamma))
        .collect();
    // Merged event stream: (time, influencer, x_after), ordered by time.
    let mut merged: Vec<(f64, usize, f64)> = Vec::new();
    for (i, log) in jt.logs.iter().enumerate() {
        for e in &log.events {
            merged.push((e.time, i, e.x_after));
        }
    }
    merged.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let mut intervals = Vec::new();
    let mut t_cursor = jt.burnin;
    for &(te, i, z) in &merged {
        if te > jt.burnin {
            let end = te.min(jt.horizon);
            if end > t_cursor {
                intervals.push(LeadInterval {
                    start: t_cursor,
                    end,
                    leader: leader_of(&keys),
                });
                t_cursor = end;
            }
            if te >= jt.horizon {
                break;
            }
        }
        keys[i] = rank_key(z, te, gamma);
    }
    if t_cursor < jt.horizon {
        intervals.push(LeadInterval {
            start: t_cursor,
            end: jt.horizon,
            leader: leader_of(&keys),
        });
    }
    debug_assert!(intervals.iter().all(|iv| iv.leader < n));
    Ok(intervals)
}

/// Fraction of the post-burn-in window during which each influencer
/// holds the top popularity (`pi_1`). Sums to 1 by construction.
pub fn first_place_probability(jt: &JointTrajectory, gamma: f64) -> Result<Vec<f64>, SimError> {
    let intervals = leadership_intervals(jt, gamma)?;
    let window = jt.horizon - jt.burnin;
    let mut pi = vec![0.0; jt.logs.len()];
    for iv in intervals {
        pi[iv.leader] += (iv.end - iv.start) / window;
    }
    Ok(pi)
}

/// Mean length of maximal contiguous leadership intervals (`S_1`);
/// `None` for influencers that never lead.
pub fn first_place_average_stay(
    jt: &JointTrajectory,
    gamma: f64,
) -> Result<Vec<Option<f64>>, SimError> {
    let intervals = leadership_intervals(jt, gamma)?;
    let n = jt.logs.len();
    let mut total = vec![0.0; n];
    let mut stays = vec![0usize; n];
    let mut current: Option<(usize, f64)> = None; // (leader, run length)
    for iv in &intervals {
        let len = iv.end - iv.start;
        match current {
            Some((leader, run)) if leader == iv.leader => current = Some((leader, run + len)),
            Some((leader, run)) => {
                total[leader] += run;
                stays[leader] += 1;
                current = Some((iv.leader, len));
            }
            None => current = Some((iv.leader, len)),
        }
    }
    if let Some((leader, run)) = current {
        total[leader] += run;
        stays[leader] += 1;
    }
    Ok((0..n)
        .map(|i| {
            if stays[i] == 0 {
                None
            } else {
                Some(total[i] / stays[i] as f64)
            }
        })
        .collect())
}
