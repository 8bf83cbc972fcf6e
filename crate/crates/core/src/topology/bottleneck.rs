use crate::model::{DiagramPoint, PersistenceDiagram};

fn linf(a: &DiagramPoint, b: &DiagramPoint) -> f64 {
    (a.birth - b.birth).abs().max((a.death - b.death).abs())
}

fn half_persistence(p: &DiagramPoint) -> f64 {
    (p.death - p.birth) / 2.0
}

/// Bottleneck distance with the L-infinity ground cost.
///
/// Essential points are matched among themselves by sorted birth; a different
/// number of essential points gives infinity. Finite points are matched by
/// binary search over the candidate costs, testing each threshold for a
/// perfect matching between `A + diag(B)` and `B + diag(A)`.
pub fn bottleneck(a: &PersistenceDiagram, b: &PersistenceDiagram) -> f64 {
    if a.degree != b.degree {
        log::warn!("bottleneck between degrees {} and {}", a.degree, b.degree);
    }
    let mut ea: Vec<f64> = a.essential().map(|p| p.birth).collect();
    let mut eb: Vec<f64> = b.essential().map(|p| p.birth).collect();
    if ea.len() != eb.len() {
        log::debug!("essential counts differ ({} vs {}); bottleneck is infinite", ea.len(), eb.len());
        return f64::INFINITY;
    }
    ea.sort_by(f64::total_cmp);
    eb.sort_by(f64::total_cmp);
    let essential = ea.iter().zip(&eb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);

    let fa: Vec<DiagramPoint> = a.finite().copied().collect();
    let fb: Vec<DiagramPoint> = b.finite().copied().collect();
    essential.max(finite_bottleneck(&fa, &fb))
}

fn finite_bottleneck(a: &[DiagramPoint], b: &[DiagramPoint]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let mut candidates: Vec<f64> = Vec::with_capacity(a.len() * b.len() + a.len() + b.len() + 1);
    candidates.push(0.0);
    candidates.extend(a.iter().map(half_persistence));
    candidates.extend(b.iter().map(half_persistence));
    for p in a {
        for q in b {
            candidates.push(linf(p, q));
        }
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    // the largest candidate (every point to the diagonal) always works
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching(a, b, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

/// Left side: `a[i]` for `i < na`, then the diagonal copy of `b[j]`.
/// Right side: `b[j]` for `j < nb`, then the diagonal copy of `a[i]`.
fn perfect_matching(a: &[DiagramPoint], b: &[DiagramPoint], t: f64) -> bool {
    let (na, nb) = (a.len(), b.len());
    let size = na + nb;
    let adjacency: Vec<Vec<usize>> = (0..size)
        .map(|left| {
            if left < na {
                let p = &a[left];
                let mut adj: Vec<usize> = (0..nb).filter(|&j| linf(p, &b[j]) <= t).collect();
                if half_persistence(p) <= t {
                    adj.push(nb + left);
                }
                adj
            } else {
                let j = left - na;
                let mut adj = Vec::new();
                if half_persistence(&b[j]) <= t {
                    adj.push(j);
                }
                // diagonal to diagonal is free
                adj.extend(nb..nb + na);
                adj
            }
        })
        .collect();
    let mut match_right = vec![usize::MAX; size];
    for left in 0..size {
        let mut seen = vec![false; size];
        if !augment(left, &adjacency, &mut match_right, &mut seen) {
            return false;
        }
    }
    true
}

fn augment(left: usize, adjacency: &[Vec<usize>], match_right: &mut [usize], seen: &mut [bool]) -> bool {
    for &right in &adjacency[left] {
        if seen[right] {
            continue;
        }
        seen[right] = true;
        if match_right[right] == usize::MAX || augment(match_right[right], adjacency, match_right, seen) {
            match_right[right] = left;
            return true;
        }
    }
    false
}
