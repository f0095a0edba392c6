//! Empirical calibration pipeline on per-influencer post logs:
//! popularity reconstruction, normalization, binned conditional
//! statistics, MLE fitting of jump families with Kolmogorov
//! goodness-of-fit, system-parameter grid search, dispersion index and
//! posting-intensity estimation.

use crate::model::{JumpDistribution, JumpFamily};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CalibError {
    #[error("timestamps must be sorted ascending (record {index})")]
    UnsortedTimestamps { index: usize },
    #[error("likes must be nonnegative (record {index})")]
    NegativeLikes { index: usize },
    #[error("need at least {needed} usable records, got {got}")]
    TooFewRecords { needed: usize, got: usize },
    #[error("all-zero series cannot be normalized")]
    AllZeroSeries,
    #[error("nonpositive residuals are incompatible with family {family:?}")]
    NonpositiveResiduals { family: JumpFamily },
    #[error("empty parameter grid")]
    EmptyGrid,
}

/// One post: timestamp in days (monotone within an influencer) and its
/// success proxy (likes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostRecord {
    pub timestamp: f64,
    pub likes: f64,
}

/// Per-influencer post log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostDataset {
    pub influencer: String,
    pub posts: Vec<PostRecord>,
    pub topic: Option<String>,
}

impl PostDataset {
    pub fn new(influencer: impl Into<String>, posts: Vec<PostRecord>) -> Result<Self, CalibError> {
        for (i, w) in posts.windows(2).enumerate() {
            if w[1].timestamp < w[0].timestamp {
                return Err(CalibError::UnsortedTimestamps { index: i + 1 });
            }
        }
        if let Some(i) = posts.iter().position(|p| !(p.likes >= 0.0)) {
            return Err(CalibError::NegativeLikes { index: i });
        }
        Ok(Self {
            influencer: influencer.into(),
            posts,
            topic: None,
        })
    }
}

/// Reconstructed popularity just before each post,
/// `X(t_k^-) = sum_{j<k} likes_j·e^{-gamma (t_k - t_j)}`, zero initial
/// condition, computed in O(n) via the decay recurrence.
pub fn reconstruct_popularity(ds: &PostDataset, gamma: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(ds.posts.len());
    let mut x = 0.0;
    let mut prev_t = f64::NAN;
    for p in &ds.posts {
        if prev_t.is_nan() {
            out.push(0.0);
        } else {
            x = x * (-gamma * (p.timestamp - prev_t)).exp();
            out.push(x);
        }
        x += p.likes;
        prev_t = p.timestamp;
    }
    out
}

/// Divide both series by their own maxima, mapping into [0, 1].
pub fn normalize_series(xs: &[f64], vs: &[f64]) -> Result<(Vec<f64>, Vec<f64>), CalibError> {
    let norm = |s: &[f64]| -> Result<Vec<f64>, CalibError> {
        let max = s.iter().cloned().fold(0.0f64, f64::max);
        if max <= 0.0 {
            return Err(CalibError::AllZeroSeries);
        }
        Ok(s.iter().map(|v| v / max).collect())
    };
    Ok((norm(xs)?, norm(vs)?))
}

/// Per-bin mean of `vs` conditioned on `xs`, over equal-width bins of
/// [0, 1]. Empty bins are `None`.
pub fn binned_conditional_mean(
    xs: &[f64],
    vs: &[f64],
    n_bins: usize,
) -> Vec<Option<(f64, usize)>> {
    assert!(n_bins >= 2, "need at least 2 bins");
    let mut sum = vec![0.0; n_bins];
    let mut count = vec![0usize; n_bins];
    for (&x, &v) in xs.iter().zip(vs) {
        let b = ((x * n_bins as f64) as usize).min(n_bins - 1);
        sum[b] += v;
        count[b] += 1;
    }
    (0..n_bins)
        .map(|b| {
            if count[b] == 0 {
                None
            } else {
                Some((sum[b] / count[b] as f64, count[b]))
            }
        })
        .collect()
}

/// Residual series `r_k = likes_k / X(t_k^-)^theta`, whose distribution
/// estimates `beta·V̂` (`epsilon` neglected). Posts with `X(t_k^-) = 0`
/// are skipped and counted.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub values: Vec<f64>,
    pub skipped: usize,
}

pub fn compute_residuals(
    ds: &PostDataset,
    gamma: f64,
    theta: f64,
) -> Result<Residuals, CalibError> {
    let xs = reconstruct_popularity(ds, gamma);
    let mut values = Vec::with_capacity(xs.len());
    let mut skipped = 0usize;
    for (p, &x) in ds.posts.iter().zip(&xs) {
        if x <= 0.0 {
            skipped += 1;
            continue;
        }
        values.push(p.likes / x.powf(theta));
    }
    if values.len() < 2 {
        return Err(CalibError::TooFewRecords {
            needed: 2,
            got: values.len(),
        });
    }
    Ok(Residuals { values, skipped })
}

/// Fitted distribution with goodness-of-fit summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: JumpFamily,
    pub dist: JumpDistribution,
    /// Fitted mean of the residual scale (estimate of `beta`).
    pub beta_hat: f64,
    /// Fitted coefficient of variation.
    pub cv_hat: f64,
    pub log_likelihood: f64,
    /// Kolmogorov distance to the empirical residual CDF.
    pub kappa: f64,
}

/// Maximum-likelihood fit of one candidate family to the residuals.
///
/// Lognormal: closed-form MLE on logs. Exponential: rate = 1/mean.
/// Power law: Pareto with cutoff at the sample minimum, MLE exponent.
pub fn mle_fit(residuals: &[f64], family: JumpFamily) -> Result<FitResult, CalibError> {
    if residuals.len() < 30 {
        return Err(CalibError::TooFewRecords {
            needed: 30,
            got: residuals.len(),
        });
    }
    let n = residuals.len() as f64;
    let dist = match family {
        JumpFamily::Lognormal | JumpFamily::PowerLaw => {
            if residuals.iter().any(|&r| r <= 0.0) {
                return Err(CalibError::NonpositiveResiduals { family });
            }
            match family {
                JumpFamily::Lognormal => {
                    let m = residuals.iter().map(|r| r.ln()).sum::<f64>() / n;
                    let s2 = residuals.iter().map(|r| (r.ln() - m).powi(2)).sum::<f64>() / n;
                    JumpDistribution::Lognormal {
                        log_mean: m,
                        log_sd: s2.sqrt(),
                    }
                }
                _ => {
                    let xmin = residuals.iter().cloned().fold(f64::INFINITY, f64::min);
                    let sum_log = residuals.iter().map(|r| (r / xmin).ln()).sum::<f64>();
                    let alpha = if sum_log > 0.0 { n / sum_log } else { f64::INFINITY };
                    JumpDistribution::Pareto {
                        exponent: alpha,
                        cutoff: xmin,
                    }
                }
            }
        }
        JumpFamily::Exponential => {
            let mean = residuals.iter().sum::<f64>() / n;
            JumpDistribution::Exponential { rate: 1.0 / mean }
        }
        JumpFamily::Deterministic => {
            let mean = residuals.iter().sum::<f64>() / n;
            JumpDistribution::Deterministic { value: mean }
        }
    };
    let log_likelihood = residuals.iter().map(|&r| dist.log_pdf(r)).sum();
    let kappa = kolmogorov_distance(residuals, |w| dist.cdf(w));
    Ok(FitResult {
        family,
        beta_hat: dist.mean(),
        cv_hat: dist.cv(),
        log_likelihood,
        kappa,
        dist,
    })
}

/// Fit every candidate family and return all results plus the index of
/// the best (smallest Kolmogorov distance).
pub fn fit_families(
    residuals: &[f64],
    families: &[JumpFamily],
) -> Result<(Vec<FitResult>, usize), CalibError> {
    let fits: Vec<FitResult> = families
        .iter()
        .map(|&f| mle_fit(residuals, f))
        .collect::<Result<_, _>>()?;
    let best = fits
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.kappa.partial_cmp(&b.1.kappa).unwrap())
        .map(|(i, _)| i)
        .expect("nonempty family list");
    Ok((fits, best))
}

/// Exact Kolmogorov distance between a sample and a CDF. The reference
/// CDF is evaluated both at each empirical jump point and just below
/// it, so step-valued references (e.g. the sample's own empirical CDF)
/// are handled exactly rather than picking up a spurious 1/n gap.
pub fn kolmogorov_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    assert!(!sample.is_empty(), "nonempty sample required");
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut sup: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        // Empirical CDF is i/n just below x and j/n at x.
        sup = sup.max((cdf(x) - j as f64 / n).abs());
        sup = sup.max((cdf(f64_next_down(x)) - i as f64 / n).abs());
        i = j;
    }
    sup
}

fn f64_next_down(x: f64) -> f64 {
    // Largest float strictly below x (x finite, the only case here).
    if x == 0.0 {
        -f64::MIN_POSITIVE
    } else if x > 0.0 {
        f64::from_bits(x.to_bits() - 1)
    } else {
        f64::from_bits(x.to_bits() + 1)
    }
}

/// One cell of the (gamma, theta) search surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub gamma: f64,
    pub theta: f64,
    /// Cumulative best-family Kolmogorov distance over all influencers.
    pub kappa_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub surface: Vec<GridCell>,
    pub best_gamma: f64,
    pub best_theta: f64,
    /// Per-influencer best fit at the optimum.
    pub best_fits: Vec<(String, FitResult)>,
}

pub const DEFAULT_FAMILIES: [JumpFamily; 3] = [
    JumpFamily::Lognormal,
    JumpFamily::Exponential,
    JumpFamily::PowerLaw,
];

/// Grid search over system-level parameters: for every `(gamma, theta)`
/// reconstruct, residualize, fit the candidate families per influencer
/// (likelihood inner, Kolmogorov outer) and sum the best distances;
/// returns the argmin and the full surface.
pub fn grid_search_system_params(
    datasets: &[PostDataset],
    gamma_grid: &[f64],
    theta_grid: &[f64],
    families: &[JumpFamily],
) -> Result<GridSearchResult, CalibError> {
    if gamma_grid.is_empty() || theta_grid.is_empty() || datasets.is_empty() {
        return Err(CalibError::EmptyGrid);
    }
    let cells: Vec<(f64, f64)> = gamma_grid
        .iter()
        .flat_map(|&g| theta_grid.iter().map(move |&t| (g, t)))
        .collect();
    let surface: Vec<GridCell> = cells
        .par_iter()
        .map(|&(gamma, theta)| {
            let kappa_sum = datasets
                .iter()
                .map(|ds| {
                    let res = compute_residuals(ds, gamma, theta)?;
                    let (fits, best) = fit_families(&res.values, families)?;
                    Ok(fits[best].kappa)
                })
                .sum::<Result<f64, CalibError>>()?;
            Ok(GridCell {
                gamma,
                theta,
                kappa_sum,
            })
        })
        .collect::<Result<_, CalibError>>()?;
    let best = surface
        .iter()
        .min_by(|a, b| a.kappa_sum.partial_cmp(&b.kappa_sum).unwrap())
        .expect("nonempty surface");
    let best_fits = datasets
        .iter()
        .map(|ds| {
            let res = compute_residuals(ds, best.gamma, best.theta)?;
            let (fits, idx) = fit_families(&res.values, families)?;
            Ok((ds.influencer.clone(), fits[idx].clone()))
        })
        .collect::<Result<Vec<_>, CalibError>>()?;
    Ok(GridSearchResult {
        best_gamma: best.gamma,
        best_theta: best.theta,
        surface,
        best_fits,
    })
}

/// Index of dispersion of per-window post counts (variance/mean) over a
/// tiling of the observation span starting at the first post; the
/// partial trailing window is discarded. `None` when fewer than two
/// full windows exist or the mean count is zero.
pub fn dispersion_index(ds: &PostDataset, window_days: f64) -> Option<f64> {
    let first = ds.posts.first()?.timestamp;
    let last = ds.posts.last()?.timestamp;
    let n_windows = ((last - first) / window_days).floor() as usize;
    if n_windows < 2 {
        return None;
    }
    let mut counts = vec![0usize; n_windows];
    for p in &ds.posts {
        let w = ((p.timestamp - first) / window_days).floor() as usize;
        if w < n_windows {
            counts[w] += 1;
        }
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<usize>() as f64 / n;
    if mean == 0.0 {
        return None;
    }
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n;
    Some(var / mean)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityFit {
    pub lambda0: f64,
    /// Scale of the variable term in normalized-popularity units.
    pub lambda1: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityProfile {
    /// Per-bin (center, rate, count); `None` for bins with fewer than
    /// [`MIN_BIN_SAMPLES`] observations.
    pub bins: Vec<Option<(f64, f64, usize)>>,
    pub fit: Option<IntensityFit>,
}

/// Minimum observations per bin for the rate profile.
pub const MIN_BIN_SAMPLES: usize = 10;

/// Binned posting-rate profile: per normalized-popularity bin, the
/// reciprocal of the average next inter-post time; then a least-squares
/// fit of `lambda0 + lambda1·x^phi` (`phi` on a coarse grid, the linear
/// coefficients nonnegative).
pub fn estimate_posting_intensity(
    ds: &PostDataset,
    gamma: f64,
    n_bins: usize,
) -> Result<IntensityProfile, CalibError> {
    if ds.posts.len() < 2 {
        return Err(CalibError::TooFewRecords {
            needed: 2,
            got: ds.posts.len(),
        });
    }
    let xs = reconstruct_popularity(ds, gamma);
    // Popularity just after each post (the state governing the next
    // inter-post time).
    let post_jump: Vec<f64> = xs.iter().zip(&ds.posts).map(|(&x, p)| x + p.likes).collect();
    let max = post_jump.iter().cloned().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Err(CalibError::AllZeroSeries);
    }
    let mut sum_dt = vec![0.0; n_bins];
    let mut count = vec![0usize; n_bins];
    for k in 0..ds.posts.len() - 1 {
        let dt = ds.posts[k + 1].timestamp - ds.posts[k].timestamp;
        let xn = post_jump[k] / max;
        let b = ((xn * n_bins as f64) as usize).min(n_bins - 1);
        sum_dt[b] += dt;
        count[b] += 1;
    }
    let bins: Vec<Option<(f64, f64, usize)>> = (0..n_bins)
        .map(|b| {
            if count[b] < MIN_BIN_SAMPLES || sum_dt[b] <= 0.0 {
                None
            } else {
                let center = (b as f64 + 0.5) / n_bins as f64;
                Some((center, count[b] as f64 / sum_dt[b], count[b]))
            }
        })
        .collect();

    // Weight by bin population so thinly populated extreme bins cannot
    // dominate the fit.
    let pts: Vec<(f64, f64, f64)> = bins
        .iter()
        .flatten()
        .map(|&(c, r, n)| (c, r, n as f64))
        .collect();
    let fit = if pts.len() >= 2 {
        Some(fit_intensity_profile(&pts))
    } else {
        None
    };
    Ok(IntensityProfile { bins, fit })
}

/// Weighted nonnegative least squares of `l0 + l1·x^phi` over a coarse
/// phi grid.
fn fit_intensity_profile(pts: &[(f64, f64, f64)]) -> IntensityFit {
    let mut best = IntensityFit {
        lambda0: 0.0,
        lambda1: 0.0,
        phi: 0.0,
    };
    let mut best_sse = f64::INFINITY;
    for k in 0..=10 {
        let phi = k as f64 / 10.0;
        let (l0, l1) = nnls_two(pts, phi);
        let sse: f64 = pts
            .iter()
            .map(|&(x, r, w)| w * (r - l0 - l1 * x.powf(phi)).powi(2))
            .sum();
        if sse < best_sse {
            best_sse = sse;
            best = IntensityFit {
                lambda0: l0,
                lambda1: l1,
                phi,
            };
        }
    }
    best
}

fn nnls_two(pts: &[(f64, f64, f64)], phi: f64) -> (f64, f64) {
    let (mut sw, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, r, w) in pts {
        let z = x.powf(phi);
        sw += w;
        sx += w * z;
        sxx += w * z * z;
        sy += w * r;
        sxy += w * z * r;
    }
    let det = sw * sxx - sx * sx;
    if det.abs() > 1e-12 {
        let l0 = (sxx * sy - sx * sxy) / det;
        let l1 = (sw * sxy - sx * sy) / det;
        if l0 >= 0.0 && l1 >= 0.0 {
            return (l0, l1);
        }
        if l1 < 0.0 {
            return (sy / sw, 0.0);
        }
        return (0.0, (sxy / sxx).max(0.0));
    }
    (sy / sw, 0.0)
}

/// Reads a posts CSV with columns
/// `influencer_id, timestamp, likes`; the timestamp may be either an
/// ISO-8601 datetime or a plain day offset. Datasets come back sorted
/// by influencer id, posts sorted by time.
pub fn read_posts_csv(path: impl AsRef<std::path::Path>) -> anyhow::Result<Vec<PostDataset>> {
    use std::collections::BTreeMap;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())?;
    let mut groups: BTreeMap<String, Vec<PostRecord>> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() < 3 {
            anyhow::bail!("row {}: expected 3 columns, got {}", i + 1, rec.len());
        }
        let timestamp = parse_timestamp(&rec[1])
            .ok_or_else(|| anyhow::anyhow!("row {}: unparseable timestamp `{}`", i + 1, &rec[1]))?;
        let likes: f64 = rec[2].trim().parse()?;
        groups
            .entry(rec[0].trim().to_string())
            .or_default()
            .push(PostRecord { timestamp, likes });
    }
    groups
        .into_iter()
        .map(|(id, mut posts)| {
            posts.sort_by(|a, b| a.timestamp.partial_cmp(&b.timestamp).unwrap());
            Ok(PostDataset::new(id, posts)?)
        })
        .collect()
}

/// Day-float directly, otherwise ISO-8601 converted to days since the
/// Unix epoch.
fn parse_timestamp(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp_millis() as f64 / 86_400_000.0);
    }
    chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .ok()
        .map(|dt| dt.and_utc().timestamp_millis() as f64 / 86_400_000.0)
}

/// Writes the grid-search surface as `gamma, theta, kappa_sum`.
pub fn write_kappa_surface_csv(
    path: impl AsRef<std::path::Path>,
    surface: &[GridCell],
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["gamma", "theta", "kappa_sum"])?;
    for c in surface {
        w.write_record([
            format!("{:.8e}", c.gamma),
            format!("{:.4}", c.theta),
            format!("{:.6}", c.kappa_sum),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::Distribution;

    fn ds(posts: Vec<(f64, f64)>) -> PostDataset {
        PostDataset::new(
            "test",
            posts
                .into_iter()
                .map(|(timestamp, likes)| PostRecord { timestamp, likes })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn reconstruct_zero_initial_and_closed_form() {
        let d = ds(vec![(0.0, 100.0), (64.0, 5.0)]);
        let xs = reconstruct_popularity(&d, 1.0 / 64.0);
        assert_eq!(xs[0], 0.0);
        assert!((xs[1] - 100.0 / std::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn recurrence_equals_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut t = 0.0;
        let posts: Vec<(f64, f64)> = (0..500)
            .map(|_| {
                t += rand_distr::Exp::new(0.5).unwrap().sample(&mut rng);
                (t, rand_distr::LogNormal::new(0.0, 1.0).unwrap().sample(&mut rng))
            })
            .collect();
        let d = ds(posts.clone());
        let gamma = 1.0 / 40.0;
        let xs = reconstruct_popularity(&d, gamma);
        for (k, &x) in xs.iter().enumerate() {
            let direct: f64 = posts[..k]
                .iter()
                .map(|&(tj, lj)| lj * (-gamma * (posts[k].0 - tj)).exp())
                .sum();
            assert!(
                (x - direct).abs() <= 1e-12 * direct.max(1.0),
                "k={k}: {x} vs {direct}"
            );
        }
    }

    #[test]
    fn rejects_unsorted_input() {
        let posts = vec![
            PostRecord {
                timestamp: 1.0,
                likes: 2.0,
            },
            PostRecord {
                timestamp: 0.5,
                likes: 2.0,
            },
        ];
        assert!(PostDataset::new("x", posts).is_err());
    }

    #[test]
    fn normalize_basics() {
        let (xn, vn) = normalize_series(&[2.0, 4.0, 3.0], &[7.0, 7.0, 7.0]).unwrap();
        assert_eq!(xn, vec![0.5, 1.0, 0.75]);
        assert_eq!(vn, vec![1.0, 1.0, 1.0]);
        // Scale invariance.
        let (xs, _) = normalize_series(&[14.0, 28.0, 21.0], &[7.0, 7.0, 7.0]).unwrap();
        assert_eq!(xs, xn);
        assert!(normalize_series(&[0.0, 0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn binned_mean_degenerate_and_flat() {
        let bins = binned_conditional_mean(&[0.05, 0.07], &[1.0, 3.0], 10);
        assert_eq!(bins[0], Some((2.0, 2)));
        assert!(bins[1..].iter().all(|b| b.is_none()));
    }

    #[test]
    fn residuals_theta0_are_raw_likes() {
        let d = ds(vec![(0.0, 10.0), (1.0, 20.0), (2.0, 30.0)]);
        let r = compute_residuals(&d, 0.1, 0.0).unwrap();
        assert_eq!(r.skipped, 1); // first post has X = 0
        assert_eq!(r.values, vec![20.0, 30.0]);
    }

    #[test]
    fn residuals_single_post_rejected() {
        let d = ds(vec![(0.0, 10.0)]);
        assert!(compute_residuals(&d, 0.1, 0.5).is_err());
    }

    #[test]
    fn lognormal_mle_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let beta: f64 = 0.9;
        let cv = 4.0f64;
        let s2 = (1.0 + cv * cv).ln();
        let d = rand_distr::LogNormal::new(beta.ln() - s2 / 2.0, s2.sqrt()).unwrap();
        let sample: Vec<f64> = (0..10_000).map(|_| d.sample(&mut rng)).collect();
        let fit = mle_fit(&sample, JumpFamily::Lognormal).unwrap();
        assert!((fit.beta_hat - beta).abs() < 0.05 * beta, "beta {}", fit.beta_hat);
        assert!((fit.cv_hat - cv).abs() < 0.15 * cv, "cv {}", fit.cv_hat);
        // Closed-form MLE: fitted log-moments equal sample log-moments.
        let m = sample.iter().map(|r| r.ln()).sum::<f64>() / sample.len() as f64;
        match fit.dist {
            JumpDistribution::Lognormal { log_mean, .. } => {
                assert!((log_mean - m).abs() < 1e-12)
            }
            _ => panic!("wrong family"),
        }
    }

    #[test]
    fn exponential_data_prefers_exponential_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut wins = 0;
        let trials = 50;
        for _ in 0..trials {
            let d = rand_distr::Exp::new(0.5).unwrap();
            let sample: Vec<f64> = (0..2_000).map(|_| d.sample(&mut rng)).collect();
            let exp_fit = mle_fit(&sample, JumpFamily::Exponential).unwrap();
            let ln_fit = mle_fit(&sample, JumpFamily::Lognormal).unwrap();
            if exp_fit.kappa <= ln_fit.kappa {
                wins += 1;
            }
        }
        assert!(wins >= (trials * 9) / 10, "wins {wins}/{trials}");
    }

    #[test]
    fn constant_residuals_collapse_to_point() {
        let sample = vec![3.25; 64];
        let fit = mle_fit(&sample, JumpFamily::Lognormal).unwrap();
        assert!((fit.beta_hat - 3.25).abs() < 1e-9);
        assert!(fit.cv_hat < 1e-9);
    }

    #[test]
    fn kolmogorov_distance_basics() {
        // Single sample at m with F(m) = 0.5 -> kappa = 0.5.
        let k = kolmogorov_distance(&[1.0], |_| 0.5);
        assert!((k - 0.5).abs() < 1e-12);
        // Sample vs its own empirical step CDF.
        let xs = vec![1.0, 2.0, 3.0, 4.0];
        let step = |w: f64| xs.iter().filter(|&&x| x <= w).count() as f64 / xs.len() as f64;
        assert_eq!(kolmogorov_distance(&xs, step), 0.0);
    }

    #[test]
    fn kolmogorov_converges_for_true_cdf() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let d = rand_distr::Exp::new(1.0).unwrap();
        let sample: Vec<f64> = (0..10_000).map(|_| d.sample(&mut rng)).collect();
        let k = kolmogorov_distance(&sample, |w| 1.0 - (-w).exp());
        assert!(k <= 0.02, "kappa {k}");
    }

    #[test]
    fn single_grid_point_is_argmin() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = rand_distr::LogNormal::new(0.0, 1.0).unwrap();
        let mut t = 0.0;
        let posts: Vec<PostRecord> = (0..500)
            .map(|_| {
                t += 0.25;
                PostRecord {
                    timestamp: t,
                    likes: d.sample(&mut rng),
                }
            })
            .collect();
        let data = vec![PostDataset::new("a", posts).unwrap()];
        let res =
            grid_search_system_params(&data, &[1.0 / 64.0], &[0.6], &DEFAULT_FAMILIES).unwrap();
        assert_eq!(res.surface.len(), 1);
        assert_eq!(res.best_gamma, 1.0 / 64.0);
        assert_eq!(res.best_theta, 0.6);
        // Surface bounds: between the per-influencer minimum and the
        // number of influencers.
        assert!(res.surface[0].kappa_sum <= data.len() as f64);
        assert!(res.surface[0].kappa_sum >= 0.0);
    }

    #[test]
    fn dispersion_poisson_near_one_periodic_below() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let exp = rand_distr::Exp::new(2.0).unwrap();
        let mut t = 0.0;
        let poisson: Vec<(f64, f64)> = (0..8_000)
            .map(|_| {
                t += exp.sample(&mut rng);
                (t, 1.0)
            })
            .collect();
        let d = dispersion_index(&ds(poisson), 7.0).unwrap();
        assert!((d - 1.0).abs() < 0.1, "poisson D = {d}");

        let periodic: Vec<(f64, f64)> = (0..4_000).map(|k| (k as f64 * 0.5, 1.0)).collect();
        let dp = dispersion_index(&ds(periodic), 7.0).unwrap();
        assert!(dp < 1.0, "periodic D = {dp}");
    }

    #[test]
    fn dispersion_needs_two_windows() {
        let d = ds(vec![(0.0, 1.0), (1.0, 1.0)]);
        assert!(dispersion_index(&d, 7.0).is_none());
    }

    #[test]
    fn posts_csv_round_trip_with_mixed_timestamps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("posts.csv");
        std::fs::write(
            &path,
            "influencer_id,timestamp,likes\n\
             a,1.5,10\n\
             a,0.5,4\n\
             b,1970-01-03T00:00:00Z,7\n",
        )
        .unwrap();
        let data = read_posts_csv(&path).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data[0].influencer, "a");
        // Out-of-order rows are sorted per influencer.
        assert_eq!(data[0].posts[0].timestamp, 0.5);
        assert_eq!(data[1].posts[0].timestamp, 2.0); // two days past epoch
        assert_eq!(data[1].posts[0].likes, 7.0);
    }

    #[test]
    fn intensity_profile_flat_for_homogeneous_poisson() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let exp = rand_distr::Exp::new(4.0).unwrap();
        let like = rand_distr::LogNormal::new(0.0, 0.5).unwrap();
        let mut t = 0.0;
        let posts: Vec<(f64, f64)> = (0..40_000)
            .map(|_| {
                t += exp.sample(&mut rng);
                (t, like.sample(&mut rng))
            })
            .collect();
        let prof = estimate_posting_intensity(&ds(posts), 1.0 / 16.0, 10).unwrap();
        // Only well-populated bins carry a tight rate estimate;
        // 1/mean over a handful of samples is noisy and biased high.
        for b in prof.bins.iter().flatten().filter(|b| b.2 >= 200) {
            assert!((b.1 - 4.0).abs() < 0.5, "bin rate {}", b.1);
        }
        let fit = prof.fit.unwrap();
        let at = |x: f64| fit.lambda0 + fit.lambda1 * x.powf(fit.phi);
        assert!((at(0.2) - 4.0).abs() < 0.5 && (at(0.9) - 4.0).abs() < 0.5);
    }
}
