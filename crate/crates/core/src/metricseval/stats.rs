use super::{RelativeRanking, ScoreTable};
use crate::{Error, Result, Scalar};

/// For each judgment, whether the metric agrees with it. Ties count as disagreement.
pub fn darr_concordance<T: Scalar>(
    scores: &ScoreTable<T>,
    judgments: &[RelativeRanking],
) -> Result<Vec<bool>> {
    judgments
        .iter()
        .map(|j| Ok(scores.get(&j.seg_id, &j.better)? > scores.get(&j.seg_id, &j.worse)?))
        .collect()
}

/// `(C - D) / (C + D)` from per-judgment concordance flags.
pub fn tau_from_concordance<T: Scalar, B: std::borrow::Borrow<bool>>(flags: &[B]) -> Result<T> {
    if flags.is_empty() {
        return Err(Error::Degenerate("no judgments (C + D = 0)"));
    }
    let concordant = flags.iter().filter(|f| *(*f).borrow()).count();
    let discordant = flags.len() - concordant;
    Ok((T::from_count(concordant) - T::from_count(discordant)) / T::from_count(flags.len()))
}

/// Kendall's tau variant over relative-ranking judgments, as used by the WMT
/// metrics task: a judgment is concordant iff the metric scores the better
/// system strictly higher.
pub fn kendall_darr<T: Scalar>(scores: &ScoreTable<T>, judgments: &[RelativeRanking]) -> Result<T> {
    tau_from_concordance(&darr_concordance(scores, judgments)?)
}

/// Sample Pearson correlation.
pub fn pearson<T: Scalar>(xs: &[T], ys: &[T]) -> Result<T> {
    if xs.len() != ys.len() {
        return Err(Error::param(
            "pearson",
            format!("lengths differ: {} vs {}", xs.len(), ys.len()),
        ));
    }
    if xs.len() < 2 {
        return Err(Error::Degenerate("pearson needs at least two points"));
    }
    let n = T::from_count(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(Error::Degenerate("zero variance"));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn judgments(rows: &[(&str, &str, &str)]) -> Vec<RelativeRanking> {
        rows.iter()
            .map(|(s, b, w)| RelativeRanking::new(*s, *b, *w).unwrap())
            .collect()
    }

    fn table(rows: &[(&str, &str, f64)]) -> ScoreTable<f64> {
        rows.iter()
            .map(|(s, y, v)| (s.to_string(), y.to_string(), *v))
            .collect()
    }

    #[test]
    fn all_concordant() {
        let t = table(&[
            ("1", "a", 1.0),
            ("1", "b", 0.0),
            ("2", "a", 3.0),
            ("2", "b", 2.0),
        ]);
        let j = judgments(&[("1", "a", "b"), ("2", "a", "b")]);
        assert_eq!(kendall_darr(&t, &j).unwrap(), 1.0);
    }

    #[test]
    fn half_concordant() {
        let t = table(&[("1", "a", 1.0), ("1", "b", 0.0)]);
        let j = judgments(&[("1", "a", "b"), ("1", "b", "a")]);
        assert_eq!(kendall_darr(&t, &j).unwrap(), 0.0);
    }

    #[test]
    fn tie_is_discordant() {
        // C = 3 (j1, j2, j3), D = 2 (j4 reversed, j5 tied)
        let t = table(&[
            ("1", "a", 0.9),
            ("1", "b", 0.5),
            ("1", "c", 0.1),
            ("2", "a", 0.2),
            ("2", "b", 0.2),
            ("2", "c", 0.7),
        ]);
        let j = judgments(&[
            ("1", "a", "b"),
            ("1", "b", "c"),
            ("1", "a", "c"),
            ("2", "a", "c"),
            ("2", "a", "b"),
        ]);
        assert!((kendall_darr(&t, &j).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn kendall_errors() {
        let t = table(&[("1", "a", 1.0)]);
        let j = judgments(&[("1", "a", "b")]);
        assert!(matches!(
            kendall_darr(&t, &j),
            Err(Error::MissingScore { .. })
        ));
        assert!(matches!(kendall_darr(&t, &[]), Err(Error::Degenerate(_))));
        assert!(RelativeRanking::new("1", "a", "a").is_err());
    }

    #[test]
    fn pearson_cases() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((pearson(&xs, &ys).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-15);
        // {(1,2),(2,1),(3,3)}: sxy = 1, sxx = syy = 2 => r = 0.5
        assert!((pearson::<f64>(&[1.0, 2.0, 3.0], &[2.0, 1.0, 3.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(pearson(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
    }
}
