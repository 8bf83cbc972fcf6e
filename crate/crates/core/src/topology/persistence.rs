use crate::model::{DiagramPoint, PersistenceDiagram};

use super::filtration::CubicalFiltration;

const NONE: usize = usize::MAX;

/// Diagrams of degrees `0..=max_degree` (capped at `d`) over Z/2.
///
/// Degree 0 comes from a union-find sweep with the elder rule. Higher degrees
/// come from column reduction of the boundary matrix, processed from the top
/// dimension down so that columns of cells already known to create a class are
/// skipped. Pairs with zero persistence are dropped; classes that never die
/// get an infinite death.
pub fn persistence(filt: &CubicalFiltration, max_degree: usize) -> Vec<PersistenceDiagram> {
    let d = filt.dim();
    let top = max_degree.min(d);
    let n = filt.len();
    let mut rank = vec![0usize; n];
    for (r, &cell) in filt.order().iter().enumerate() {
        rank[cell] = r;
    }
    let mut points: Vec<Vec<DiagramPoint>> = vec![vec![]; top + 1];

    // killed[r]: the cell at rank r creates a class that some coface kills
    let mut killed = vec![false; n];
    // positive[r]: the cell at rank r creates a class
    let mut positive = vec![false; n];
    let mut boundary = Vec::with_capacity(2 * d);

    for k in (2..=(top + 1).min(d)).rev() {
        let mut pivot_col: Vec<usize> = vec![NONE; n];
        let mut reduced: Vec<Vec<usize>> = vec![vec![]; n];
        for (j, &cell) in filt.order().iter().enumerate() {
            if filt.cell_dim(cell) != k || killed[j] {
                continue;
            }
            filt.boundary(cell, &mut boundary);
            let mut col: Vec<usize> = boundary.iter().map(|&f| rank[f]).collect();
            col.sort_unstable();
            while let Some(&low) = col.last() {
                let owner = pivot_col[low];
                if owner == NONE {
                    break;
                }
                col = xor(&col, &reduced[owner]);
            }
            match col.last() {
                Some(&low) => {
                    pivot_col[low] = j;
                    killed[low] = true;
                    positive[low] = true;
                    let (birth, death) = (filt.value(filt.order()[low]), filt.value(cell));
                    if death > birth {
                        points[k - 1].push(DiagramPoint::new(birth, death));
                    }
                    reduced[j] = col;
                }
                None => positive[j] = true,
            }
        }
    }

    // union-find over vertices and edges
    let mut parent = vec![NONE; n];
    for (j, &cell) in filt.order().iter().enumerate() {
        match filt.cell_dim(cell) {
            0 => parent[j] = j,
            1 => {
                filt.boundary(cell, &mut boundary);
                let a = find(&mut parent, rank[boundary[0]]);
                let b = find(&mut parent, rank[boundary[1]]);
                if a == b {
                    positive[j] = true;
                } else {
                    let (old, young) = if a < b { (a, b) } else { (b, a) };
                    parent[young] = old;
                    let (birth, death) = (filt.value(filt.order()[young]), filt.value(cell));
                    if death > birth {
                        points[0].push(DiagramPoint::new(birth, death));
                    }
                }
            }
            _ => {}
        }
    }
    for (j, &p) in parent.iter().enumerate() {
        if p == j {
            points[0].push(DiagramPoint::essential(filt.value(filt.order()[j])));
        }
    }
    for (j, &cell) in filt.order().iter().enumerate() {
        let s = filt.cell_dim(cell);
        if s >= 1 && s <= top && positive[j] && !killed[j] {
            points[s].push(DiagramPoint::essential(filt.value(cell)));
        }
    }
    points.into_iter().enumerate().map(|(s, p)| PersistenceDiagram::new(s, p)).collect()
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    let mut root = x;
    while parent[root] != root {
        root = parent[root];
    }
    while parent[x] != root {
        let next = parent[x];
        parent[x] = root;
        x = next;
    }
    root
}

fn xor(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else if b[j] < a[i] {
            out.push(b[j]);
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}
