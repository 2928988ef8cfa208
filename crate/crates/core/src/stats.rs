//! Correlation and nonparametric statistics: Pearson, lagged correlation,
//! Fisher-z aggregation, Friedman test, Wilcoxon signed-rank, Bonferroni.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};

/// Result of a (possibly lag-searched) correlation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CorrelationResult {
    /// Signed correlation at the chosen lag.
    pub r: f64,
    /// Samples by which the second series trails the first.
    pub lag: i64,
    /// Two-sided p-value from the t distribution, when defined.
    pub p_value: Option<f64>,
}

fn check_pair_lengths(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid_parameter(
            "sequences",
            format!("lengths differ: {} vs {}", x.len(), y.len()),
        ));
    }
    if x.len() < min {
        return Err(Error::SignalTooShort {
            need: min,
            got: x.len(),
        });
    }
    Ok(())
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair_lengths(x, y, 3)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation {
            detail: "constant input sequence".into(),
        });
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Two-sided p-value for Pearson's r via the t distribution with n-2 dof.
pub fn pearson_p_value(r: f64, n: usize) -> Option<f64> {
    if n < 3 {
        return None;
    }
    let df = (n - 2) as f64;
    let denom = 1.0 - r * r;
    if denom <= 0.0 {
        return Some(0.0);
    }
    let t = r.abs() * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some((2.0 * dist.cdf(-t)).clamp(0.0, 1.0))
}

/// Correlation maximized in absolute value over integer lags in
/// `[-max_lag, +max_lag]`, computed on the overlapping region only.
///
/// A positive lag means `y` trails `x`. Ties in |r| break toward smaller
/// |lag|, then toward the negative lag. The reported r keeps its sign at the
/// chosen lag.
///
/// Window sums come from prefix arrays over globally centered copies, so
/// only the cross term needs a pass per lag.
pub fn max_lagged_correlation(x: &[f64], y: &[f64], max_lag: usize) -> Result<CorrelationResult> {
    let min_len = max_lag + 3;
    if x.len() < min_len || y.len() < min_len {
        return Err(Error::SignalTooShort {
            need: min_len,
            got: x.len().min(y.len()),
        });
    }
    let center = |v: &[f64]| -> Vec<f64> {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|a| a - m).collect()
    };
    let xc = center(x);
    let yc = center(y);
    let prefix = |v: &[f64], sq: bool| -> Vec<f64> {
        let mut p = Vec::with_capacity(v.len() + 1);
        p.push(0.0);
        for &a in v {
            p.push(p.last().unwrap() + if sq { a * a } else { a });
        }
        p
    };
    let px = prefix(&xc, false);
    let pxx = prefix(&xc, true);
    let py = prefix(&yc, false);
    let pyy = prefix(&yc, true);

    let mut best: Option<(f64, i64, usize)> = None;
    let mut lags: Vec<i64> = Vec::with_capacity(2 * max_lag + 1);
    lags.push(0);
    for l in 1..=max_lag as i64 {
        lags.push(-l);
        lags.push(l);
    }
    for s in lags {
        let lo = (-s).max(0) as usize;
        let hi = x.len().min((y.len() as i64 - s).max(0) as usize);
        if hi < lo + 3 {
            continue;
        }
        let n = (hi - lo) as f64;
        let (ylo, yhi) = ((lo as i64 + s) as usize, (hi as i64 + s) as usize);
        let mut sxy = 0.0;
        for (a, b) in xc[lo..hi].iter().zip(&yc[ylo..yhi]) {
            sxy += a * b;
        }
        let sx = px[hi] - px[lo];
        let sxx = pxx[hi] - pxx[lo];
        let sy = py[yhi] - py[ylo];
        let syy = pyy[yhi] - pyy[ylo];
        let var_x = sxx - sx * sx / n;
        let var_y = syy - sy * sy / n;
        // Degenerate when the window variance vanishes relative to its raw
        // energy (a constant window leaves only rounding residue).
        if var_x <= 1e-12 * sxx.abs() || var_y <= 1e-12 * syy.abs() {
            continue;
        }
        let cov = sxy - sx * sy / n;
        let r = (cov / (var_x.sqrt() * var_y.sqrt())).clamp(-1.0, 1.0);
        if best.map_or(true, |(br, _, _)| r.abs() > br.abs()) {
            best = Some((r, s, hi - lo));
        }
    }
    match best {
        Some((r, lag, n)) => Ok(CorrelationResult {
            r,
            lag,
            p_value: pearson_p_value(r, n),
        }),
        None => Err(Error::UndefinedCorrelation {
            detail: "every lag produced a degenerate correlation".into(),
        }),
    }
}

/// Correlations at |r| = 1 are clamped to this before atanh; Fisher-z
/// diverges at exactly +-1, which noiseless synthetic trials do reach.
pub const FISHER_CLAMP: f64 = 1.0 - 1e-7;

/// Fisher-z mean of correlations: tanh(mean(atanh(r_i))).
pub fn fisher_mean(rs: &[f64]) -> Result<f64> {
    if rs.is_empty() {
        return Err(Error::Degenerate {
            detail: "fisher mean of an empty set".into(),
        });
    }
    let mut sum = 0.0;
    for &r in rs {
        if !r.is_finite() {
            return Err(Error::invalid_parameter("r", "non-finite correlation"));
        }
        sum += r.clamp(-FISHER_CLAMP, FISHER_CLAMP).atanh();
    }
    Ok((sum / rs.len() as f64).tanh())
}

/// Average ranks (1-based) with ties sharing their mean rank.
fn rank_with_ties(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0; // mean of ranks i+1 ..= j+1
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn chi_squared_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(df / 2.0, x / 2.0).clamp(0.0, 1.0)
}

/// Friedman rank test over a subjects x treatments matrix.
///
/// Uses within-subject average ranks with the tie-corrected chi-square
/// approximation on k-1 degrees of freedom. Returns (statistic, p).
pub fn friedman(matrix: &[Vec<f64>]) -> Result<(f64, f64)> {
    let n = matrix.len();
    if n < 2 {
        return Err(Error::Degenerate {
            detail: format!("friedman needs >= 2 subjects, got {n}"),
        });
    }
    let k = matrix[0].len();
    if k < 2 {
        return Err(Error::Degenerate {
            detail: format!("friedman needs >= 2 treatments, got {k}"),
        });
    }
    if matrix.iter().any(|row| row.len() != k) {
        return Err(Error::Degenerate {
            detail: "ragged friedman matrix".into(),
        });
    }

    let mut column_rank_sums = vec![0.0; k];
    let mut tie_term = 0.0;
    for row in matrix {
        let ranks = rank_with_ties(row);
        for (j, r) in ranks.iter().enumerate() {
            column_rank_sums[j] += r;
        }
        // Tie groups within this row.
        let mut sorted = row.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        let mut i = 0;
        while i < k {
            let mut j = i;
            while j + 1 < k && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
    }

    let nf = n as f64;
    let kf = k as f64;
    let ssbn: f64 = column_rank_sums.iter().map(|&r| r * r).sum();
    let raw = 12.0 * ssbn / (nf * kf * (kf + 1.0)) - 3.0 * nf * (kf + 1.0);
    let correction = 1.0 - tie_term / (nf * (kf * kf * kf - kf));
    if correction <= 0.0 {
        // Every row fully tied: no rank variation at all.
        return Ok((0.0, 1.0));
    }
    let statistic = (raw / correction).max(0.0);
    let p = chi_squared_sf(statistic, kf - 1.0);
    Ok((statistic, p))
}

/// Sample sizes up to this run the exact signed-rank null distribution;
/// above it the normal approximation with tie and continuity correction is
/// used. Covers the 16-subject study scale exactly.
pub const WILCOXON_EXACT_LIMIT: usize = 20;

/// Two-sided Wilcoxon signed-rank test on paired samples.
///
/// Zero differences are dropped (classic Wilcoxon rule, not Pratt).
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair_lengths(x, y, 1)?;
    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Err(Error::Degenerate {
            detail: "all paired differences are zero".into(),
        });
    }
    let n = diffs.len();
    if n < 5 {
        return Err(Error::invalid_parameter(
            "pairs",
            format!("need >= 5 nonzero differences, got {n}"),
        ));
    }

    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = rank_with_ties(&abs);
    let w_plus: f64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();

    if n <= WILCOXON_EXACT_LIMIT {
        Ok(wilcoxon_exact_p(&ranks, w_plus))
    } else {
        let mu = n as f64 * (n + 1) as f64 / 4.0;
        // Tie-corrected variance.
        let mut tie_term = 0.0;
        let mut sorted = abs;
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
        let var = (n as f64 * (n + 1) as f64 * (2 * n + 1) as f64 - tie_term / 2.0) / 24.0;
        if var <= 0.0 {
            return Err(Error::Degenerate {
                detail: "zero variance in signed-rank statistic".into(),
            });
        }
        let dev = w_plus - mu;
        let z = (dev - 0.5 * dev.signum()) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        Ok((2.0 * normal.cdf(-z.abs())).clamp(0.0, 1.0))
    }
}

/// Exact two-sided p via the full null distribution of W+.
///
/// Ranks are multiples of 1/2, so everything is scaled by 2 and compared in
/// integer arithmetic; the result is independent of enumeration order.
fn wilcoxon_exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len();
    let ranks2: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total2: usize = ranks2.iter().sum();
    // counts[s] = number of sign assignments with 2*W+ == s.
    let mut counts = vec![0u64; total2 + 1];
    counts[0] = 1;
    for &r2 in &ranks2 {
        for s in (r2..=total2).rev() {
            counts[s] += counts[s - r2];
        }
    }
    let w2_obs = (2.0 * w_plus).round() as i64;
    let dev4 = (2 * w2_obs - total2 as i64).abs();
    let mut extreme = 0u64;
    for (s, &c) in counts.iter().enumerate() {
        if (2 * s as i64 - total2 as i64).abs() >= dev4 {
            extreme += c;
        }
    }
    extreme as f64 / (1u64 << n) as f64
}

/// Spearman rank correlation: Pearson on average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair_lengths(x, y, 3)?;
    pearson(&rank_with_ties(x), &rank_with_ties(y))
}

/// Bonferroni correction: p_i -> min(1, m * p_i).
pub fn bonferroni(p_values: &[f64]) -> Result<Vec<f64>> {
    let m = p_values.len() as f64;
    p_values
        .iter()
        .map(|&p| {
            if !(0.0..=1.0).contains(&p) {
                Err(Error::invalid_parameter(
                    "p_values",
                    format!("p must lie in [0, 1], got {p}"),
                ))
            } else {
                Ok((m * p).min(1.0))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pearson_perfect_linear() {
        assert_abs_diff_eq!(
            pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pearson_hand_computed_example() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 2.0, 4.0];
        // Oracle: direct covariance / (sigma_x * sigma_y) arithmetic.
        let mx = 2.5;
        let my = 2.5;
        let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        let vy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
        let oracle = cov / (vx.sqrt() * vy.sqrt());
        assert_abs_diff_eq!(oracle, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(pearson(&x, &y).unwrap(), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn pearson_rejects_constant_input() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation { .. })
        ));
    }

    proptest! {
        #[test]
        fn pearson_affine_invariance(
            seed in 0u64..1000,
            scale in 0.1..10.0f64,
            offset in -100.0..100.0f64,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
            let y: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
            let r = pearson(&x, &y).unwrap();
            let x_scaled: Vec<f64> = x.iter().map(|v| scale * v + offset).collect();
            prop_assert!((pearson(&x_scaled, &y).unwrap() - r).abs() < 1e-9);
            let x_flipped: Vec<f64> = x.iter().map(|v| -scale * v + offset).collect();
            prop_assert!((pearson(&x_flipped, &y).unwrap() + r).abs() < 1e-9);
        }
    }

    fn shifted_sine(freq: f64, n: usize, shift: i64) -> (Vec<f64>, Vec<f64>) {
        // y[i] = x[i - shift], built from one longer master series.
        let pad = 128usize;
        let master: Vec<f64> = (0..n + 2 * pad)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / 125.0).sin())
            .collect();
        let x = master[pad..pad + n].to_vec();
        let y = master[(pad as i64 - shift) as usize..(pad as i64 - shift) as usize + n].to_vec();
        (x, y)
    }

    #[test]
    fn lag_recovery_on_constructed_shift() {
        let (x, y) = shifted_sine(1.0, 750, 8);
        let res = max_lagged_correlation(&x, &y, 12).unwrap();
        assert_eq!(res.lag, 8);
        assert!(res.r >= 0.999, "r = {}", res.r);
    }

    #[test]
    fn zero_lag_on_identical_series() {
        let (x, _) = shifted_sine(0.7, 400, 0);
        let res = max_lagged_correlation(&x, &x, 12).unwrap();
        assert_eq!(res.lag, 0);
        assert!(res.r >= 1.0 - 1e-12);
    }

    #[test]
    fn shift_beyond_window_caps_the_correlation() {
        let (x, y) = shifted_sine(1.0, 750, 15);
        let capped = max_lagged_correlation(&x, &y, 12).unwrap();
        // Oracle: a full-range scan that can reach the true alignment.
        let full = max_lagged_correlation(&x, &y, 20).unwrap();
        assert_eq!(full.lag, 15);
        assert!(capped.r.abs() < full.r.abs());
    }

    proptest! {
        #[test]
        fn lag_is_antisymmetric(freq in 0.3..3.0f64, shift in -12i64..=12) {
            let (x, y) = shifted_sine(freq, 600, shift);
            let fwd = max_lagged_correlation(&x, &y, 12).unwrap();
            let rev = max_lagged_correlation(&y, &x, 12).unwrap();
            prop_assert_eq!(fwd.lag, shift);
            prop_assert_eq!(fwd.lag, -rev.lag);
        }
    }

    #[test]
    fn fisher_mean_basics() {
        assert_abs_diff_eq!(fisher_mean(&[0.5, 0.5]).unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(fisher_mean(&[0.0]).unwrap(), 0.0);
        // atanh(0.5) = ln(3)/2 = 0.549306...
        assert_abs_diff_eq!(0.5f64.atanh(), 0.5 * 3.0f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(0.5f64.atanh(), 0.549306, epsilon = 1e-6);
        assert!(fisher_mean(&[]).is_err());
        assert!(fisher_mean(&[1.0, 0.5]).unwrap().is_finite());
    }

    proptest! {
        #[test]
        fn fisher_mean_is_odd_and_bounded(r in -0.999..0.999f64, s in -0.999..0.999f64) {
            let z = fisher_mean(&[r, -r]).unwrap();
            prop_assert!(z.abs() < 1e-12);
            let m = fisher_mean(&[r, s]).unwrap();
            prop_assert!(m >= r.min(s) - 1e-12 && m <= r.max(s) + 1e-12);
        }
    }

    #[test]
    fn friedman_no_variation() {
        let matrix = vec![vec![5.0, 5.0, 5.0]; 4];
        let (stat, p) = friedman(&matrix).unwrap();
        assert_eq!(stat, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn friedman_strict_ordering_example() {
        // 4 subjects, 3 treatments, t3 > t2 > t1 for every subject:
        // ranks (1,2,3) per row, column sums (4,8,12),
        // chi2 = 12/(4*3*4) * (16+64+144) - 3*4*4 = 56 - 48 = 8,
        // p = exp(-4) = 0.0183156...
        let matrix = vec![
            vec![0.1, 0.2, 0.3],
            vec![1.0, 2.0, 3.0],
            vec![0.0, 5.0, 9.0],
            vec![-1.0, 0.0, 1.0],
        ];
        let (stat, p) = friedman(&matrix).unwrap();
        assert_abs_diff_eq!(stat, 8.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p, (-4.0f64).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(p, 0.0183156, epsilon = 1e-6);
    }

    #[test]
    fn friedman_column_permutation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let matrix: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..4).map(|_| rng.random::<f64>()).collect())
            .collect();
        let (stat, _) = friedman(&matrix).unwrap();
        let permuted: Vec<Vec<f64>> = matrix
            .iter()
            .map(|row| vec![row[2], row[0], row[3], row[1]])
            .collect();
        let (stat_p, _) = friedman(&permuted).unwrap();
        assert_abs_diff_eq!(stat, stat_p, epsilon = 1e-12);
    }

    #[test]
    fn friedman_ties_use_average_ranks() {
        assert_eq!(rank_with_ties(&[1.0, 1.0, 2.0]), vec![1.5, 1.5, 3.0]);
        assert_eq!(rank_with_ties(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn friedman_matches_permutation_oracle_for_small_n() {
        // Exact permutation null: every subject's ranks are an independent
        // uniform permutation. The chi-square approximation should land
        // near the exact tail probability.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let matrix: Vec<Vec<f64>> = (0..6)
                .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
                .collect();
            let (observed, p_approx) = friedman(&matrix).unwrap();

            let perms: [[f64; 3]; 6] = [
                [1.0, 2.0, 3.0],
                [1.0, 3.0, 2.0],
                [2.0, 1.0, 3.0],
                [2.0, 3.0, 1.0],
                [3.0, 1.0, 2.0],
                [3.0, 2.0, 1.0],
            ];
            let n = matrix.len();
            let mut extreme = 0usize;
            let mut total = 0usize;
            let mut idx = vec![0usize; n];
            loop {
                let mut sums = [0.0f64; 3];
                for (s, &pi) in idx.iter().enumerate() {
                    let _ = s;
                    for j in 0..3 {
                        sums[j] += perms[pi][j];
                    }
                }
                let ssbn: f64 = sums.iter().map(|r| r * r).sum();
                let stat = 12.0 * ssbn / (n as f64 * 3.0 * 4.0) - 3.0 * n as f64 * 4.0;
                if stat >= observed - 1e-9 {
                    extreme += 1;
                }
                total += 1;
                // Odometer over 6^n permutations.
                let mut carry = true;
                for d in idx.iter_mut() {
                    if carry {
                        *d += 1;
                        if *d == 6 {
                            *d = 0;
                        } else {
                            carry = false;
                        }
                    }
                }
                if carry {
                    break;
                }
            }
            let p_exact = extreme as f64 / total as f64;
            assert!(
                (p_exact - p_approx).abs() < 0.06,
                "exact {p_exact} vs approx {p_approx}"
            );
        }
    }

    #[test]
    fn friedman_p_decreases_as_ordering_spreads() {
        // n subjects, 3 treatments: j subjects carry a strict ordering and
        // the rest are fully tied (neutral ranks). Column rank sums become
        // (2n-j, 2n, 2n+j) and the tie correction is j/n, so the corrected
        // statistic is 2j and p = exp(-j) on 2 dof: strictly decreasing in
        // j. Seeds shuffle subject and column order, which the test is
        // invariant to.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..3 {
            let n = 12;
            let mut last_p = f64::INFINITY;
            for j in 1..=n {
                let mut rows: Vec<Vec<f64>> = Vec::new();
                for s in 0..n {
                    if s < j {
                        rows.push(vec![1.0, 2.0, 3.0]);
                    } else {
                        rows.push(vec![5.0, 5.0, 5.0]);
                    }
                }
                // Shuffle subjects; permute columns consistently.
                for i in (1..rows.len()).rev() {
                    let k = rng.random_range(0..=i);
                    rows.swap(i, k);
                }
                let (stat, p) = friedman(&rows).unwrap();
                assert_abs_diff_eq!(stat, 2.0 * j as f64, epsilon = 1e-9);
                assert_abs_diff_eq!(p, (-(j as f64)).exp(), epsilon = 1e-9);
                assert!(p < last_p, "p not decreasing at j = {j}");
                last_p = p;
            }
        }
    }

    #[test]
    fn wilcoxon_all_positive_n6() {
        // All six differences positive: only the all-plus and all-minus
        // assignments are as extreme, so p = 2/2^6.
        let x = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let y = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        assert_eq!(wilcoxon_signed_rank(&x, &y).unwrap(), 2.0 / 64.0);
    }

    #[test]
    fn wilcoxon_identical_inputs_error() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!(matches!(
            wilcoxon_signed_rank(&x, &x),
            Err(Error::Degenerate { .. })
        ));
    }

    /// Independent oracle: brute-force bitmask enumeration of all sign
    /// assignments, counting assignments at least as extreme two-sided.
    fn wilcoxon_enumeration_oracle(diffs: &[f64]) -> f64 {
        let n = diffs.len();
        let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
        let ranks = rank_with_ties(&abs);
        let ranks2: Vec<i64> = ranks.iter().map(|r| (2.0 * r).round() as i64).collect();
        let total2: i64 = ranks2.iter().sum();
        let w2_obs: i64 = ranks2
            .iter()
            .zip(diffs)
            .filter(|(_, d)| **d > 0.0)
            .map(|(r, _)| r)
            .sum();
        let dev = (2 * w2_obs - total2).abs();
        let mut extreme = 0u64;
        for mask in 0u64..(1 << n) {
            let w2: i64 = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| ranks2[i])
                .sum();
            if (2 * w2 - total2).abs() >= dev {
                extreme += 1;
            }
        }
        extreme as f64 / (1u64 << n) as f64
    }

    #[test]
    fn wilcoxon_matches_enumeration_for_small_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 5..=10usize {
            for _ in 0..10 {
                let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0).collect();
                let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0).collect();
                let diffs: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
                let p = wilcoxon_signed_rank(&x, &y).unwrap();
                let oracle = wilcoxon_enumeration_oracle(&diffs);
                assert_eq!(p, oracle, "n={n}");
            }
        }
    }

    proptest! {
        #[test]
        fn wilcoxon_is_symmetric_in_arguments(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 5 + (seed % 20) as usize;
            let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let pxy = wilcoxon_signed_rank(&x, &y);
            let pyx = wilcoxon_signed_rank(&y, &x);
            match (pxy, pyx) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
                (Err(_), Err(_)) => {}
                other => prop_assert!(false, "asymmetric outcome {:?}", other),
            }
        }
    }

    #[test]
    fn wilcoxon_normal_approximation_regime() {
        // n = 25 all positive differences: far beyond the exact cutoff.
        let x: Vec<f64> = (1..=25).map(|i| i as f64 + 10.0).collect();
        let y: Vec<f64> = (1..=25).map(|i| i as f64).collect();
        let p = wilcoxon_signed_rank(&x, &y).unwrap();
        assert!(p < 1e-4, "p = {p}");
    }

    #[test]
    fn spearman_is_rank_based() {
        // Any monotone transform leaves it at 1.
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.0, 8.0, 27.0, 64.0, 125.0];
        assert_abs_diff_eq!(spearman(&x, &y).unwrap(), 1.0, epsilon = 1e-12);
        let rev = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert_abs_diff_eq!(spearman(&x, &rev).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn bonferroni_examples() {
        assert_eq!(bonferroni(&[0.01]).unwrap(), vec![0.01]);
        let got = bonferroni(&[0.01, 0.02, 0.03]).unwrap();
        for (g, w) in got.iter().zip([0.03, 0.06, 0.09]) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-12);
        }
        assert_eq!(bonferroni(&[0.5, 0.5, 0.5]).unwrap(), vec![1.0, 1.0, 1.0]);
        assert!(bonferroni(&[1.5]).is_err());
    }
}
