use crate::dataset::Dataset;
use crate::rng::DetRng;

/// Grow every class to the majority count by drawing rows of that class
/// uniformly with replacement. Copies are appended class by class, in class
/// id order; original rows are untouched.
pub fn random_oversample(dataset: &Dataset, rng: &mut DetRng) -> Dataset {
    let members = dataset.class_members();
    let majority = members.iter().map(Vec::len).max().unwrap_or(0);
    let mut copies = Vec::new();
    for rows in members.iter().filter(|m| !m.is_empty()) {
        for _ in rows.len()..majority {
            copies.push(rows[rng.below(rows.len())]);
        }
    }
    dataset.append_copies(&copies)
}

/// Shrink every class to the minority count by sampling without replacement.
/// Kept rows stay in their original order.
pub fn random_undersample(dataset: &Dataset, rng: &mut DetRng) -> Dataset {
    let members = dataset.class_members();
    let minority = members
        .iter()
        .map(Vec::len)
        .filter(|&c| c > 0)
        .min()
        .unwrap_or(0);
    let mut keep = Vec::with_capacity(minority * members.len());
    for rows in members.iter().filter(|m| !m.is_empty()) {
        if rows.len() == minority {
            keep.extend_from_slice(rows);
            continue;
        }
        // Partial Fisher-Yates: the first `minority` slots are a uniform sample.
        let mut pool = rows.clone();
        for i in 0..minority {
            let j = i + rng.below(pool.len() - i);
            pool.swap(i, j);
        }
        keep.extend_from_slice(&pool[..minority]);
    }
    keep.sort_unstable();
    dataset.select(&keep)
}
