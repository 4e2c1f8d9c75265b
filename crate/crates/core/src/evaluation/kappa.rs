use std::collections::BTreeMap;

use serde::Serialize;

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgreementResult {
    pub kappa: f64,
    pub observed: f64,
    pub expected: f64,
    pub items: usize,
    /// Both raters used one and the same label throughout, so chance
    /// agreement is 1 and kappa is reported as 1.0 by convention.
    pub degenerate: bool,
}

/// Cohen's kappa between two raters over the same items.
pub fn cohens_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<AgreementResult, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvalError::NoItems);
    }
    let n = a.len() as f64;
    let observed = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;

    let mut marginals: BTreeMap<&T, (usize, usize)> = BTreeMap::new();
    for x in a {
        marginals.entry(x).or_default().0 += 1;
    }
    for y in b {
        marginals.entry(y).or_default().1 += 1;
    }
    let expected = marginals
        .values()
        .map(|&(ca, cb)| (ca as f64 / n) * (cb as f64 / n))
        .sum::<f64>();

    let degenerate = marginals.len() == 1;
    let kappa = if degenerate {
        1.0
    } else {
        (observed - expected) / (1.0 - expected)
    };
    Ok(AgreementResult {
        kappa,
        observed,
        expected,
        items: a.len(),
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_lists() {
        let a = ["x", "y", "y", "z"];
        let r = cohens_kappa(&a, &a).unwrap();
        assert_eq!(r.kappa, 1.0);
        assert!(!r.degenerate);
    }

    #[test]
    fn six_item_example() {
        let a = ['X', 'X', 'X', 'Y', 'Y', 'Y'];
        let b = ['X', 'X', 'Y', 'X', 'Y', 'Y'];
        let r = cohens_kappa(&a, &b).unwrap();
        assert!((r.observed - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.expected - 0.5).abs() < 1e-12);
        assert!((r.kappa - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn constant_and_equal_is_degenerate() {
        let r = cohens_kappa(&[1, 1, 1], &[1, 1, 1]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.kappa, 1.0);
        assert_eq!(r.expected, 1.0);
    }

    #[test]
    fn complete_disagreement_two_classes() {
        let r = cohens_kappa(&[0, 1, 0, 1], &[1, 0, 1, 0]).unwrap();
        assert_eq!(r.kappa, -1.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(cohens_kappa(&[1], &[1, 2]), Err(EvalError::LengthMismatch(1, 2))));
        assert!(matches!(cohens_kappa::<u8>(&[], &[]), Err(EvalError::NoItems)));
    }

    proptest! {
        #[test]
        fn symmetric_and_relabel_invariant(pairs in proptest::collection::vec((0u8..4, 0u8..4), 1..60)) {
            let a: Vec<u8> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<u8> = pairs.iter().map(|p| p.1).collect();
            let ab = cohens_kappa(&a, &b).unwrap();
            let ba = cohens_kappa(&b, &a).unwrap();
            prop_assert!((ab.kappa - ba.kappa).abs() < 1e-12);
            let relabel = |v: &[u8]| v.iter().map(|x| (3 - x) * 10).collect::<Vec<_>>();
            let rr = cohens_kappa(&relabel(&a), &relabel(&b)).unwrap();
            prop_assert!((ab.kappa - rr.kappa).abs() < 1e-12);
            prop_assert!(ab.kappa <= 1.0 + 1e-12 && ab.kappa >= -1.0 - 1e-12);
        }
    }
}
