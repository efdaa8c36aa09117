use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    /// Decision rule: match iff `score >= threshold`.
    pub threshold: f64,
    pub fnmr: f64,
    /// Impostor acceptance rate at `threshold`.
    pub fmr: f64,
    /// Set when the impostor list is too short for the target.
    pub fallback: bool,
}

fn fraction_below(sorted: &[f64], t: f64) -> f64 {
    sorted.partition_point(|&s| s < t) as f64 / sorted.len() as f64
}

/// Least strict observed threshold whose false match rate meets `fmr_target`,
/// and the false non-match rate there.
///
/// Candidates are the impostor scores plus one value just above the largest
/// of them, which accepts no impostor and stands in for an infinite threshold.
/// With fewer than `1 / fmr_target` impostor scores only that last candidate
/// can qualify; a warning is logged and `fallback` is set.
pub fn fnmr_at_fmr(genuine: &[f64], impostor: &[f64], fmr_target: f64) -> Result<OperatingPoint> {
    if genuine.is_empty() || impostor.is_empty() {
        return Err(Error::Contract("fnmr_at_fmr needs non-empty genuine and impostor scores".into()));
    }
    if !(fmr_target > 0.0 && fmr_target <= 1.0) {
        return Err(Error::Contract(format!("fmr target {fmr_target} outside (0, 1]")));
    }
    let mut imp = impostor.to_vec();
    imp.sort_by(f64::total_cmp);
    let mut gen = genuine.to_vec();
    gen.sort_by(f64::total_cmp);
    let n = imp.len() as f64;
    let fallback = n * fmr_target < 1.0;
    if fallback {
        log::warn!("{} impostor scores cannot certify fmr {fmr_target}; using the threshold above the largest", imp.len());
    }

    // Ascending candidates; the accepted fraction only shrinks as t grows.
    let mut threshold = imp[imp.len() - 1].next_up();
    let mut i = 0;
    while i < imp.len() {
        if (imp.len() - i) as f64 / n <= fmr_target {
            threshold = imp[i];
            break;
        }
        let v = imp[i];
        while i < imp.len() && imp[i] == v {
            i += 1;
        }
    }
    Ok(OperatingPoint {
        threshold,
        fnmr: fraction_below(&gen, threshold),
        fmr: 1.0 - fraction_below(&imp, threshold),
        fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_example() {
        let p = fnmr_at_fmr(&[0.9, 0.8, 0.7, 0.2], &[0.6, 0.3, 0.1, 0.05], 0.25).unwrap();
        assert_eq!(p.threshold, 0.6);
        assert_eq!(p.fnmr, 0.25);
    }

    #[test]
    fn fmr_one_uses_minimum() {
        let p = fnmr_at_fmr(&[0.9, 0.1, 0.0], &[0.6, 0.3, 0.2], 1.0).unwrap();
        assert_eq!(p.threshold, 0.2);
        assert_eq!(p.fnmr, 2.0 / 3.0);
    }

    #[test]
    fn separated_scores_have_zero_fnmr() {
        let p = fnmr_at_fmr(&[0.9, 0.95, 0.8], &[0.1; 100], 0.01).unwrap();
        assert_eq!(p.fnmr, 0.0);
        assert_eq!(p.fmr, 0.0);
        let imp: Vec<f64> = (0..100).map(|i| i as f64 / 200.0).collect();
        assert_eq!(fnmr_at_fmr(&[0.9, 0.95, 0.8], &imp, 0.01).unwrap().fnmr, 0.0);
    }

    #[test]
    fn short_impostor_list_falls_back() {
        let p = fnmr_at_fmr(&[0.9, 0.4], &[0.6, 0.3], 0.01).unwrap();
        assert!(p.fallback);
        assert!(p.threshold > 0.6 && p.threshold < 0.61);
        assert_eq!(p.fnmr, 0.5);
        assert_eq!(p.fmr, 0.0);
    }

    #[test]
    fn empty_lists_are_rejected() {
        assert!(fnmr_at_fmr(&[], &[0.1], 0.1).is_err());
        assert!(fnmr_at_fmr(&[0.1], &[], 0.1).is_err());
    }

    proptest! {
        #[test]
        fn threshold_is_optimal(
            gen in prop::collection::vec(0u8..20, 1..50),
            imp in prop::collection::vec(0u8..20, 10..200),
            target in prop::sample::select(vec![0.1, 0.05, 0.2, 0.5]),
        ) {
            let g: Vec<f64> = gen.iter().map(|&v| v as f64 / 20.0).collect();
            let i: Vec<f64> = imp.iter().map(|&v| v as f64 / 20.0).collect();
            let p = fnmr_at_fmr(&g, &i, target).unwrap();
            prop_assume!(!p.fallback);
            let fmr = |t: f64| i.iter().filter(|&&s| s >= t).count() as f64 / i.len() as f64;
            prop_assert!(fmr(p.threshold) <= target);
            for &s in &i {
                if s < p.threshold {
                    prop_assert!(fmr(s) > target);
                }
            }
            let fnmr = g.iter().filter(|&&s| s < p.threshold).count() as f64 / g.len() as f64;
            prop_assert_eq!(p.fnmr, fnmr);
        }
    }
}
