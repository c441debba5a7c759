use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Assigns each item a fold in `0..n_folds`, stratified jointly by
/// `(digit, speaker)`.
///
/// Items of each group are shuffled, dealt out in whole rounds, and the
/// remainder goes one per fold to the folds currently holding the fewest
/// items of that digit, then of that speaker, then overall. Every digit and
/// every speaker must have at least `n_folds` items.
pub fn stratified_folds(keys: &[(u8, String)], n_folds: usize, seed: u64) -> Result<Vec<usize>> {
    if n_folds < 2 {
        return Err(Error::arg("need at least two folds"));
    }
    let mut groups: BTreeMap<(u8, &str), Vec<usize>> = BTreeMap::new();
    let mut digit_total: BTreeMap<u8, usize> = BTreeMap::new();
    let mut speaker_total: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, (d, s)) in keys.iter().enumerate() {
        groups.entry((*d, s.as_str())).or_default().push(i);
        *digit_total.entry(*d).or_default() += 1;
        *speaker_total.entry(s.as_str()).or_default() += 1;
    }
    if let Some((d, n)) = digit_total.iter().find(|(_, &n)| n < n_folds) {
        return Err(Error::Stratification(format!("digit {d} has {n} items for {n_folds} folds")));
    }
    if let Some((s, n)) = speaker_total.iter().find(|(_, &n)| n < n_folds) {
        return Err(Error::Stratification(format!("speaker '{s}' has {n} items for {n_folds} folds")));
    }

    let mut rng = rng_from_seed(seed);
    let mut fold_of = vec![0; keys.len()];
    let mut size = vec![0usize; n_folds];
    let mut by_digit: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    let mut by_speaker: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for ((d, s), mut items) in groups {
        items.shuffle(&mut rng);
        let dc = by_digit.entry(d).or_insert_with(|| vec![0; n_folds]);
        let sc = by_speaker.entry(s).or_insert_with(|| vec![0; n_folds]);
        let full = items.len() / n_folds * n_folds;
        for (k, &i) in items[..full].iter().enumerate() {
            fold_of[i] = k % n_folds;
        }
        for f in 0..n_folds {
            let per = full / n_folds;
            dc[f] += per;
            sc[f] += per;
            size[f] += per;
        }
        let mut order: Vec<usize> = (0..n_folds).collect();
        order.sort_by_key(|&f| (dc[f], sc[f], size[f], f));
        for (&i, &f) in items[full..].iter().zip(&order) {
            fold_of[i] = f;
            dc[f] += 1;
            sc[f] += 1;
            size[f] += 1;
        }
    }
    Ok(fold_of)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spread(fold_of: &[usize], keys: &[(u8, String)], n_folds: usize, by_digit: bool) -> usize {
        let mut hist: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, (d, s)) in keys.iter().enumerate() {
            let k = if by_digit { d.to_string() } else { s.clone() };
            hist.entry(k).or_insert_with(|| vec![0; n_folds])[fold_of[i]] += 1;
        }
        hist.values().map(|h| h.iter().max().unwrap() - h.iter().min().unwrap()).max().unwrap()
    }

    fn keys(counts: &[(u8, &str, usize)]) -> Vec<(u8, String)> {
        counts
            .iter()
            .flat_map(|&(d, s, n)| std::iter::repeat((d, s.to_string())).take(n))
            .collect()
    }

    #[test]
    fn balanced_grid() {
        let mut spec = Vec::new();
        for d in 0..10u8 {
            for s in ["a", "b", "c", "d", "e", "f"] {
                spec.push((d, s, 7));
            }
        }
        let k = keys(&spec);
        let f = stratified_folds(&k, 5, 1).unwrap();
        assert!(spread(&f, &k, 5, true) <= 1);
        assert!(spread(&f, &k, 5, false) <= 1);
        assert_eq!(f, stratified_folds(&k, 5, 1).unwrap());
        assert_ne!(f, stratified_folds(&k, 5, 2).unwrap());
    }

    #[test]
    fn too_few_items() {
        let k = keys(&[(0, "a", 3), (1, "a", 9)]);
        assert!(matches!(stratified_folds(&k, 5, 0), Err(Error::Stratification(_))));
    }

    proptest! {
        #[test]
        fn digit_histograms_within_one(counts in proptest::collection::vec(1usize..9, 6), n_folds in 2usize..6, seed: u64) {
            let names = ["p", "q"];
            let mut spec = Vec::new();
            for (i, &c) in counts.iter().enumerate() {
                spec.push(((i / 2) as u8, names[i % 2], c));
            }
            let k = keys(&spec);
            match stratified_folds(&k, n_folds, seed) {
                Ok(f) => {
                    prop_assert!(f.iter().all(|&x| x < n_folds));
                    prop_assert!(spread(&f, &k, n_folds, true) <= 1);
                }
                Err(e) => prop_assert!(matches!(e, Error::Stratification(_))),
            }
        }
    }
}
