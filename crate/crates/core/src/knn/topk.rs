use crate::scalar::Real;

/// Inserts `d` into the ascending slice `best` if it beats the current
/// largest entry. Ties with the largest entry are dropped; they cannot change
/// any order statistic.
#[inline]
pub(crate) fn insert<T: Real>(best: &mut [T], d: T) {
    let k = best.len();
    if !(d < best[k - 1]) {
        return;
    }
    let mut pos = k - 1;
    while pos > 0 && best[pos - 1] > d {
        best[pos] = best[pos - 1];
        pos -= 1;
    }
    best[pos] = d;
}

/// Merges `other` into `best`, both ascending, keeping the `k` smallest.
pub(crate) fn merge<T: Real>(best: &mut [T], other: &[T]) {
    for &d in other {
        if !(d < best[best.len() - 1]) {
            break;
        }
        insert(best, d);
    }
}
