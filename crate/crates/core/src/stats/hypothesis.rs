//! Two-sample rank tests: Kruskal-Wallis (via the chi-squared tail) and
//! Kolmogorov-Smirnov (via the asymptotic Kolmogorov distribution).

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Significance stars at the 0.05 / 0.01 / 0.001 levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stars {
    Ns,
    One,
    Two,
    Three,
}

impl Stars {
    pub fn from_p(p: f64) -> Stars {
        if p < 0.001 {
            Stars::Three
        } else if p < 0.01 {
            Stars::Two
        } else if p < 0.05 {
            Stars::One
        } else {
            Stars::Ns
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stars::Ns => "ns",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        }
    }

    pub fn is_significant(self) -> bool {
        self != Stars::Ns
    }
}

impl std::fmt::Display for Stars {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one hypothesis test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub name: &'static str,
    pub statistic: f64,
    pub p_value: f64,
    pub stars: Stars,
}

impl TestResult {
    fn new(name: &'static str, statistic: f64, p_value: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        TestResult {
            name,
            statistic,
            p_value,
            stars: Stars::from_p(p_value),
        }
    }
}

fn require_sizes(name: &'static str, a: &[f64], b: &[f64]) -> Result<()> {
    for sample in [a, b] {
        if sample.len() < 3 {
            return Err(Error::SampleTooSmall {
                what: name,
                min: 3,
                got: sample.len(),
            });
        }
    }
    Ok(())
}

/// Midranks of the pooled sample: tied values share the average of the
/// positions they occupy (1-based).
fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&i, &j| values[i].total_cmp(&values[j]));

    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end) as f64 / 2.0 + 1.0;
        for &index in &order[start..=end] {
            ranks[index] = rank;
        }
        let t = (end - start + 1) as f64;
        tie_term += t * t * t - t;
        start = end + 1;
    }
    (ranks, tie_term)
}

/// Two-group Kruskal-Wallis test with midrank tie handling and the standard
/// tie correction. The p-value is the chi-squared (1 df) upper tail of H,
/// computed as `erfc(sqrt(H / 2))`. When every pooled value is identical the
/// correction vanishes and the result is `H = 0, p = 1`.
pub fn kruskal_wallis(a: &[f64], b: &[f64]) -> Result<TestResult> {
    require_sizes("kruskal-wallis", a, b)?;
    let n_a = a.len() as f64;
    let n_b = b.len() as f64;
    let n = n_a + n_b;

    let pooled: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    let (ranks, tie_term) = midranks(&pooled);
    let r_a: f64 = ranks[..a.len()].iter().sum();
    let r_b: f64 = ranks[a.len()..].iter().sum();

    let uncorrected =
        12.0 / (n * (n + 1.0)) * (r_a * r_a / n_a + r_b * r_b / n_b) - 3.0 * (n + 1.0);
    let correction = 1.0 - tie_term / (n * n * n - n);
    let h = if correction <= 0.0 {
        // Every value tied: no rank information at all.
        0.0
    } else {
        (uncorrected / correction).max(0.0)
    };
    Ok(TestResult::new("kruskal_wallis", h, erfc((h / 2.0).sqrt())))
}

/// Survival function of the Kolmogorov distribution,
/// `Q(λ) = 2 Σ_{j≥1} (-1)^{j-1} exp(-2 j² λ²)`.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=200 {
        let j = j as f64;
        let term = 2.0 * (-2.0 * j * j * lambda * lambda).exp();
        sum += if j as u64 % 2 == 1 { term } else { -term };
        if term < 1e-12 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test. The statistic is the largest gap
/// between the two empirical CDFs; the p-value uses the asymptotic
/// Kolmogorov distribution at `sqrt(n_a n_b / (n_a + n_b)) * D`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    require_sizes("kolmogorov-smirnov", a, b)?;
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_unstable_by(f64::total_cmp);
    sb.sort_unstable_by(f64::total_cmp);
    let n_a = sa.len() as f64;
    let n_b = sb.len() as f64;

    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n_a - j as f64 / n_b).abs());
    }

    let n_eff = n_a * n_b / (n_a + n_b);
    let p = kolmogorov_sf(n_eff.sqrt() * d);
    Ok(TestResult::new("ks_two_sample", d, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stars_use_strict_thresholds() {
        assert_eq!(Stars::from_p(0.5), Stars::Ns);
        assert_eq!(Stars::from_p(0.05), Stars::Ns);
        assert_eq!(Stars::from_p(0.049), Stars::One);
        assert_eq!(Stars::from_p(0.01), Stars::One);
        assert_eq!(Stars::from_p(0.009), Stars::Two);
        assert_eq!(Stars::from_p(0.001), Stars::Two);
        assert_eq!(Stars::from_p(0.0009), Stars::Three);
    }

    #[test]
    fn kw_matches_the_closed_form_for_untied_samples() {
        // (1,2,3) vs (4,5,6): rank sums 6 and 15, H = 27/7.
        let result = kruskal_wallis(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((result.statistic - 27.0 / 7.0).abs() < 1e-12);
        // The erfc backing the chi-squared tail is good to a few 1e-12.
        assert!((result.p_value - 0.049534613435626741).abs() < 1e-9);
        assert_eq!(result.stars, Stars::One);
    }

    #[test]
    fn kw_applies_the_tie_correction() {
        // a = [1,1,2], b = [2,3,3]: three ties of two, H = 10/3 after
        // correction.
        let result = kruskal_wallis(&[1.0, 1.0, 2.0], &[2.0, 3.0, 3.0]).unwrap();
        assert!((result.statistic - 10.0 / 3.0).abs() < 1e-12);
        assert!((result.p_value - 0.067889154861829024).abs() < 1e-9);
        assert_eq!(result.stars, Stars::Ns);
    }

    #[test]
    fn kw_of_identical_multisets_is_null() {
        let result = kruskal_wallis(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap();
        assert!(result.statistic.abs() < 1e-9);
        assert!((result.p_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kw_survives_a_single_giant_tie() {
        let result = kruskal_wallis(&[5.0, 5.0, 5.0], &[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(result.statistic, 0.0);
        assert_eq!(result.p_value, 1.0);
    }

    #[test]
    fn kw_needs_three_values_per_group() {
        assert!(matches!(
            kruskal_wallis(&[1.0, 2.0], &[3.0, 4.0, 5.0]),
            Err(Error::SampleTooSmall { .. })
        ));
    }

    #[test]
    fn ks_of_separated_samples_is_one() {
        let result = ks_two_sample(&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0, 7.0, 8.0]).unwrap();
        assert_eq!(result.statistic, 1.0);
        assert!((result.p_value - 0.036631052707119386).abs() < 1e-12);
        assert_eq!(result.stars, Stars::One);
    }

    #[test]
    fn ks_of_interleaved_samples_matches_hand_count() {
        // Distinct values alternate, largest ECDF gap is 0.5.
        let result =
            ks_two_sample(&[1.0, 2.0, 3.0, 4.0], &[2.5, 3.5, 4.5, 5.5]).unwrap();
        assert_eq!(result.statistic, 0.5);
        assert!((result.p_value - 0.69937419913101563).abs() < 1e-12);
    }

    #[test]
    fn ks_of_identical_samples_is_null() {
        let result = ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(result.statistic, 0.0);
        assert_eq!(result.p_value, 1.0);
    }

    /// Direct ECDF evaluation at every sample point, the slow way.
    fn brute_force_d(a: &[f64], b: &[f64]) -> f64 {
        let ecdf = |sample: &[f64], x: f64| {
            sample.iter().filter(|&&v| v <= x).count() as f64 / sample.len() as f64
        };
        a.iter()
            .chain(b.iter())
            .map(|&x| (ecdf(a, x) - ecdf(b, x)).abs())
            .fold(0.0, f64::max)
    }

    fn arb_sample() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec((-50i32..50).prop_map(|v| v as f64 / 4.0), 3..40)
    }

    proptest! {
        #[test]
        fn ks_sweep_equals_brute_force(a in arb_sample(), b in arb_sample()) {
            let result = ks_two_sample(&a, &b).unwrap();
            prop_assert!((result.statistic - brute_force_d(&a, &b)).abs() < 1e-10);
        }

        #[test]
        fn both_tests_are_invariant_under_monotone_transforms(
            a in arb_sample(),
            b in arb_sample(),
        ) {
            let shift = |x: f64| 2.0 * x + 1.0;
            let a2: Vec<f64> = a.iter().map(|&x| shift(x)).collect();
            let b2: Vec<f64> = b.iter().map(|&x| shift(x)).collect();

            let kw1 = kruskal_wallis(&a, &b).unwrap();
            let kw2 = kruskal_wallis(&a2, &b2).unwrap();
            prop_assert_eq!(kw1.statistic.to_bits(), kw2.statistic.to_bits());
            prop_assert_eq!(kw1.p_value.to_bits(), kw2.p_value.to_bits());

            let ks1 = ks_two_sample(&a, &b).unwrap();
            let ks2 = ks_two_sample(&a2, &b2).unwrap();
            prop_assert_eq!(ks1.statistic.to_bits(), ks2.statistic.to_bits());
            prop_assert_eq!(ks1.p_value.to_bits(), ks2.p_value.to_bits());
        }

        #[test]
        fn statistics_and_p_values_stay_in_range(a in arb_sample(), b in arb_sample()) {
            let kw = kruskal_wallis(&a, &b).unwrap();
            prop_assert!(kw.statistic >= 0.0);
            prop_assert!((0.0..=1.0).contains(&kw.p_value));

            let ks = ks_two_sample(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&ks.statistic));
            prop_assert!((0.0..=1.0).contains(&ks.p_value));
        }

        #[test]
        fn swapping_groups_changes_nothing(a in arb_sample(), b in arb_sample()) {
            let kw_ab = kruskal_wallis(&a, &b).unwrap();
            let kw_ba = kruskal_wallis(&b, &a).unwrap();
            prop_assert!((kw_ab.statistic - kw_ba.statistic).abs() < 1e-9);

            let ks_ab = ks_two_sample(&a, &b).unwrap();
            let ks_ba = ks_two_sample(&b, &a).unwrap();
            prop_assert_eq!(ks_ab.statistic.to_bits(), ks_ba.statistic.to_bits());
        }
    }
}
