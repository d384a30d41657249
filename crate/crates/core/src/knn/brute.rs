use super::Neighbor;

/// Squared Euclidean distance, summed in axis order.
///
/// Both search paths must use this exact function so that distance ties are
/// identical bit for bit.
#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        s += t * t;
    }
    s
}

/// The `k` smallest `(dist2, index)` keys by full scan, sorted ascending.
pub fn k_nearest(coords: &[f64], dim: usize, query: &[f64], k: usize) -> Vec<Neighbor> {
    let mut all: Vec<Neighbor> = coords
        .chunks_exact(dim)
        .enumerate()
        .map(|(index, p)| Neighbor {
            index,
            dist2: dist2(p, query),
        })
        .collect();
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, Neighbor::cmp_key);
        all.truncate(k);
    }
    all.sort_unstable_by(Neighbor::cmp_key);
    all
}
