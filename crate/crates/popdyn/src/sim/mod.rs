//! Exact event-driven simulation of the popularity process.
//!
//! Between jumps the state decays deterministically,
//! `X(t) = X(T_n^+)·exp(-gamma (t - T_n))`, so the process is simulated
//! exactly by drawing inter-jump times from the closed-form survival
//! `exp(-(lambda0+mu)·z - (lambda1/(gamma·phi))·z^phi·(1 - e^{-gamma·phi·z}))`
//! via thinning, classifying each event as a post or an exogenous hit,
//! and applying the jump at the decayed state.

mod metrics;
mod occupation;

pub use metrics::{first_place_average_stay, first_place_probability, leadership_intervals};
pub use occupation::{log_edges, occupation_histogram, OccupationHistogram};

use crate::model::{
    pow_conv, posting_intensity, sample_jump, InfluencerParams, SystemParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SimError {
    #[error("horizon must be > 0 (got {0})")]
    InvalidHorizon(f64),
    #[error("empty post-burn-in window (burn-in {burnin} >= horizon {horizon})")]
    EmptyWindow { burnin: f64, horizon: f64 },
    #[error("population must contain at least one influencer")]
    EmptyPopulation,
}

/// Origin of a jump event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    /// Post emission (process `N_I`).
    Internal,
    /// Exogenous event (process `N_E`).
    External,
}

/// A single jump of the popularity process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Absolute event time (days).
    pub time: f64,
    pub kind: EventKind,
    /// State just before the jump, `X(T_n^-)`.
    pub x_before: f64,
    pub jump: f64,
    /// State just after the jump, `x_before + jump`.
    pub x_after: f64,
}

/// Ordered realization of one influencer's process on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub influencer: usize,
    pub initial_state: f64,
    pub events: Vec<Event>,
    pub horizon: f64,
    pub seed: u64,
}

impl EventLog {
    /// State at time `t` by exact decay from the last preceding jump.
    pub fn state_at(&self, t: f64, gamma: f64) -> f64 {
        let idx = self.events.partition_point(|e| e.time <= t);
        if idx == 0 {
            self.initial_state * (-gamma * t).exp()
        } else {
            let e = &self.events[idx - 1];
            e.x_after * (-gamma * (t - e.time)).exp()
        }
    }

    /// Count of internal (posting) events.
    pub fn internal_count(&self) -> usize {
        self.events.iter().filter(|e| e.kind == EventKind::Internal).count()
    }
}

/// Per-influencer logs over a shared time axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTrajectory {
    pub logs: Vec<EventLog>,
    pub horizon: f64,
    /// Absolute burn-in cut point (days).
    pub burnin: f64,
}

/// State at which the event-type split probability is evaluated.
///
/// The exact dynamics attribute the accepted thinning point at the
/// decayed state `X(T_n^-)`; the embedded-chain kernel can also be read
/// with the split at the pre-decay state. Both coincide when
/// `lambda1 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SplitMode {
    #[default]
    AtJumpInstant,
    AtEmbeddedState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub initial_state: f64,
    pub split_mode: SplitMode,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            initial_state: 0.0,
            split_mode: SplitMode::AtJumpInstant,
        }
    }
}

/// Draw the inter-jump time given the post-jump state `z`.
///
/// The total intensity `lambda0 + mu + lambda1 (z e^{-gamma u})^phi` is
/// nonincreasing between jumps, so Lewis–Shedler thinning with the
/// current-state majorant is exact. Constant-intensity special cases
/// draw directly from the exponential. Returns `f64::INFINITY` when no
/// further jump occurs (possible only when `lambda0 + mu = 0`).
pub fn sample_inter_jump<R: Rng + ?Sized>(
    z: f64,
    sys: &SystemParams,
    inf: &InfluencerParams,
    rng: &mut R,
) -> f64 {
    debug_assert!(z >= 0.0);
    let base = inf.lambda0 + sys.mu;
    let exp_draw = |rate: f64, rng: &mut R| -> f64 {
        rand_distr::Exp::new(rate).expect("positive rate").sample(rng)
    };
    if inf.lambda1 == 0.0 {
        return exp_draw(base, rng);
    }
    if inf.phi == 0.0 {
        return exp_draw(base + inf.lambda1, rng);
    }
    if z == 0.0 {
        return exp_draw(base, rng);
    }
    if base == 0.0 {
        // Defective case: total remaining intensity mass is finite, so
        // with probability exp(-c) no further jump occurs. Invert the
        // closed-form survival directly.
        let c = inf.lambda1 / (sys.gamma * inf.phi) * z.powf(inf.phi);
        let u: f64 = rng.gen();
        let neg_log_u = -(1.0 - u).ln();
        if neg_log_u >= c {
            return f64::INFINITY;
        }
        return -(1.0 - neg_log_u / c).ln() / (sys.gamma * inf.phi);
    }
    let mut t = 0.0;
    loop {
        let majorant = base + inf.lambda1 * (z * (-sys.gamma * t).exp()).powf(inf.phi);
        t += exp_draw(majorant, rng);
        let lam = base + inf.lambda1 * (z * (-sys.gamma * t).exp()).powf(inf.phi);
        debug_assert!(lam <= majorant * (1.0 + 1e-12));
        if rng.gen::<f64>() * majorant <= lam {
            return t;
        }
    }
}

/// Closed-form survival `P(inter-jump > zeta | post-jump state z)`.
pub fn inter_jump_survival(zeta: f64, z: f64, sys: &SystemParams, inf: &InfluencerParams) -> f64 {
    let base = inf.lambda0 + sys.mu;
    let variable = if inf.lambda1 == 0.0 {
        0.0
    } else if inf.phi == 0.0 {
        inf.lambda1 * zeta
    } else {
        inf.lambda1 / (sys.gamma * inf.phi)
            * pow_conv(z, inf.phi)
            * (1.0 - (-sys.gamma * inf.phi * zeta).exp())
    };
    (-base * zeta - variable).exp()
}

/// Probability that a jump at state `x` is exogenous:
/// `mu / (lambda0 + mu + lambda1 x^phi)`.
pub fn external_probability(x: f64, sys: &SystemParams, inf: &InfluencerParams) -> f64 {
    if sys.mu == 0.0 {
        return 0.0;
    }
    sys.mu / (posting_intensity(x, inf) + sys.mu)
}

/// Classify an event occurring at state `x`.
pub fn classify_event<R: Rng + ?Sized>(
    x: f64,
    sys: &SystemParams,
    inf: &InfluencerParams,
    rng: &mut R,
) -> EventKind {
    let p_e = external_probability(x, sys, inf);
    if p_e > 0.0 && rng.gen::<f64>() < p_e {
        EventKind::External
    } else {
        EventKind::Internal
    }
}

/// One embedded-chain transition from the post-jump state `z`.
///
/// Returns the elapsed time and the event, or `None` when no further
/// jump ever occurs. The decay to the jump instant is exact:
/// `x_before = z·exp(-gamma·dt)`.
pub fn step<R: Rng + ?Sized>(
    z: f64,
    sys: &SystemParams,
    inf: &InfluencerParams,
    split_mode: SplitMode,
    rng: &mut R,
) -> Option<(f64, Event)> {
    let dt = sample_inter_jump(z, sys, inf, rng);
    if !dt.is_finite() {
        return None;
    }
    let x_before = z * (-sys.gamma * dt).exp();
    let split_state = match split_mode {
        SplitMode::AtJumpInstant => x_before,
        SplitMode::AtEmbeddedState => z,
    };
    let kind = classify_event(split_state, sys, inf, rng);
    let jump = match kind {
        EventKind::Internal => sample_jump(x_before, sys, inf, rng),
        EventKind::External => sys.w_dist.sample(rng),
    };
    Some((
        dt,
        Event {
            time: dt, // caller rebases to absolute time
            kind,
            x_before,
            jump,
            x_after: x_before + jump,
        },
    ))
}

/// Simulate one influencer's trajectory on `[0, horizon]`.
pub fn simulate_trajectory(
    sys: &SystemParams,
    inf: &InfluencerParams,
    horizon: f64,
    seed: u64,
) -> Result<EventLog, SimError> {
    simulate_trajectory_with(sys, inf, horizon, seed, 0, SimOptions::default())
}

pub fn simulate_trajectory_with(
    sys: &SystemParams,
    inf: &InfluencerParams,
    horizon: f64,
    seed: u64,
    influencer: usize,
    opts: SimOptions,
) -> Result<EventLog, SimError> {
    if !(horizon > 0.0) {
        return Err(SimError::InvalidHorizon(horizon));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    let mut t = 0.0;
    let mut z = opts.initial_state;
    while let Some((dt, mut ev)) = step(z, sys, inf, opts.split_mode, &mut rng) {
        t += dt;
        if t > horizon {
            break;
        }
        ev.time = t;
        z = ev.x_after;
        events.push(ev);
    }
    Ok(EventLog {
        influencer,
        initial_state: opts.initial_state,
        events,
        horizon,
        seed,
    })
}

/// Deterministic per-(influencer, replica) stream seed derived from the
/// master seed (splitmix64 finalizer over the packed triple).
pub fn derive_seed(master: u64, influencer: u64, replica: u64) -> u64 {
    let mut x = master
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(influencer.wrapping_mul(0xBF58_476D_1CE4_E5B9))
        .wrapping_add(replica.wrapping_mul(0x94D0_49BB_1331_11EB))
        .wrapping_add(0x2545_F491_4F6C_DD1D);
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 31;
    x
}

/// Simulate a population of influencers over a shared horizon.
///
/// Trajectories are independent (influencers interact only through the
/// shared decay rate), each on its own seed stream.
pub fn simulate_population(
    sys: &SystemParams,
    influencers: &[InfluencerParams],
    horizon: f64,
    burnin_frac: f64,
    master_seed: u64,
    replica: u64,
) -> Result<JointTrajectory, SimError> {
    if influencers.is_empty() {
        return Err(SimError::EmptyPopulation);
    }
    let logs = influencers
        .iter()
        .enumerate()
        .map(|(i, inf)| {
            simulate_trajectory_with(
                sys,
                inf,
                horizon,
                derive_seed(master_seed, i as u64, replica),
                i,
                SimOptions::default(),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(JointTrajectory {
        logs,
        horizon,
        burnin: burnin_frac * horizon,
    })
}
