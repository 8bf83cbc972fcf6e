//! Slow reference implementations used to cross-check the fast paths.
//!
//! Each routine follows the definition directly (all-pairs scans, naive matrix
//! reduction, exhaustive matching) and shares no code with the module it
//! checks beyond the basic lattice types.

use std::collections::{HashMap, HashSet};

use crate::error::{invalid, Error, Result};
use crate::model::{lattice, CubicalMask, DiagramPoint, ObservationGrid, PersistenceDiagram};

fn centre_distance(a: &[usize], b: &[usize], m: usize) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| ((x as f64 - y as f64) / m as f64).powi(2)).sum::<f64>().sqrt()
}

/// Centre-to-centre distance from every cell to the nearest set cell, by
/// scanning all pairs in integer squared cell units. An empty mask yields
/// `sqrt(d) + 1` everywhere.
pub fn brute_distance_transform(mask: &CubicalMask) -> Vec<f64> {
    let m = mask.resolution();
    let set: Vec<Vec<usize>> = mask.set_cells().map(|i| mask.coords(i)).collect();
    (0..mask.len())
        .map(|i| {
            let c = mask.coords(i);
            let nearest = set.iter().map(|s| c.iter().zip(s).map(|(&a, &b)| a.abs_diff(b).pow(2)).sum::<usize>()).min();
            match nearest {
                Some(sq) => (sq as f64).sqrt() / m as f64,
                None => (mask.dim() as f64).sqrt() + 1.0,
            }
        })
        .collect()
}

/// Hausdorff distance between cell centres after refining both masks to a
/// common resolution.
pub fn brute_hausdorff(a: &CubicalMask, b: &CubicalMask) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyMask);
    }
    let (a, b) = CubicalMask::common_resolution(a, b)?;
    let m = a.resolution();
    let pa: Vec<Vec<usize>> = a.set_cells().map(|i| a.coords(i)).collect();
    let pb: Vec<Vec<usize>> = b.set_cells().map(|i| b.coords(i)).collect();
    let directed = |from: &[Vec<usize>], to: &[Vec<usize>]| {
        from.iter()
            .map(|p| to.iter().map(|q| centre_distance(p, q, m)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(directed(&pa, &pb).max(directed(&pb, &pa)))
}

/// Cell averages found by testing every lattice point against every cell.
/// Cell `j` along an axis is `(j/m, (j+1)/m]`, with cell 0 closed at 0.
pub fn block_average_histogram(grid: &ObservationGrid, m: usize) -> Result<Vec<f64>> {
    let d = grid.dim();
    let n = grid.side();
    let cells = lattice::volume(m, d).ok_or_else(|| invalid("m^d overflows"))?;
    let mut sums = vec![0.0; cells];
    let mut counts = vec![0usize; cells];
    // point coordinate (2k+1)/(2N) against face j/m, compared as integers
    let inside = |k: usize, j: usize| {
        let p = (2 * k + 1) * m;
        let lo = 2 * n * j;
        let hi = 2 * n * (j + 1);
        (p > lo || j == 0) && p <= hi
    };
    for (idx, k) in lattice::indices(n, d).enumerate() {
        for (cell, j) in lattice::indices(m, d).enumerate() {
            if k.iter().zip(&j).all(|(&k, &j)| inside(k, j)) {
                sums[cell] += grid.values()[idx];
                counts[cell] += 1;
            }
        }
    }
    let mut out = Vec::with_capacity(cells);
    for cell in 0..cells {
        if counts[cell] == 0 {
            let mut c = vec![0; d];
            lattice::unravel(cell, m, &mut c);
            return Err(Error::EmptyCell { cell: c });
        }
        out.push(sums[cell] / counts[cell] as f64);
    }
    Ok(out)
}

/// `max - min` of the cell values over all cells whose closed boxes lie within
/// `r` of the cell's box.
pub fn brute_local_range(values: &[f64], dim: usize, m: usize, r: f64) -> Vec<f64> {
    let radius = r * m as f64;
    let limit = radius * radius * (1.0 + 1e-12) + 1e-12;
    let cells: Vec<Vec<usize>> = lattice::indices(m, dim).collect();
    cells
        .iter()
        .map(|a| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (j, b) in cells.iter().enumerate() {
                let gap: usize = a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y).saturating_sub(1).pow(2)).sum();
                if gap as f64 <= limit {
                    lo = lo.min(values[j]);
                    hi = hi.max(values[j]);
                }
            }
            hi - lo
        })
        .collect()
}

/// A cell of the cubical complex of `[0,1]^d` in doubled coordinates: each
/// coordinate lies in `0..=2m`, odd coordinates span an interval.
type Cell = Vec<usize>;

fn cell_dim(c: &Cell) -> usize {
    c.iter().filter(|&&x| x % 2 == 1).count()
}

fn top_cells_of(c: &Cell, m: usize) -> Vec<Vec<usize>> {
    // top cells containing c, as cube indices
    let mut out = vec![vec![]];
    for &x in c {
        let choices: Vec<usize> = if x % 2 == 1 {
            vec![x / 2]
        } else {
            let v = x / 2;
            let mut ch = vec![];
            if v > 0 {
                ch.push(v - 1);
            }
            if v < m {
                ch.push(v);
            }
            ch
        };
        out = out
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                choices.iter().map(move |&k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    out
}

fn boundary(c: &Cell) -> Vec<Cell> {
    let mut out = vec![];
    for (axis, &x) in c.iter().enumerate() {
        if x % 2 == 1 {
            for y in [x - 1, x + 1] {
                let mut f = c.clone();
                f[axis] = y;
                out.push(f);
            }
        }
    }
    out
}

/// Diagrams of the sublevel filtration of the centre distance to `mask`, for
/// degrees `0..=d`, by the textbook column reduction over Z/2. Zero-length
/// pairs are dropped.
pub fn brute_persistence(mask: &CubicalMask) -> Result<Vec<PersistenceDiagram>> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let d = mask.dim();
    let m = mask.resolution();
    let dt = brute_distance_transform(mask);
    let mut cells: Vec<(f64, usize, Cell)> = lattice::indices(2 * m + 1, d)
        .map(|c| {
            let value = top_cells_of(&c, m).iter().map(|t| dt[lattice::ravel(t, m)]).fold(f64::INFINITY, f64::min);
            (value, cell_dim(&c), c)
        })
        .collect();
    cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let position: HashMap<Cell, usize> = cells.iter().enumerate().map(|(i, c)| (c.2.clone(), i)).collect();

    let mut columns: Vec<Vec<usize>> = cells
        .iter()
        .map(|(_, _, c)| {
            let mut col: Vec<usize> = boundary(c).iter().map(|f| position[f]).collect();
            col.sort_unstable();
            col
        })
        .collect();
    let mut pivot_owner: HashMap<usize, usize> = HashMap::new();
    let mut paired: HashSet<usize> = HashSet::new();
    let mut points: Vec<Vec<DiagramPoint>> = vec![vec![]; d + 1];
    for j in 0..columns.len() {
        while let Some(&low) = columns[j].last() {
            match pivot_owner.get(&low) {
                Some(&k) => {
                    let other = columns[k].clone();
                    columns[j] = symmetric_difference(&columns[j], &other);
                }
                None => break,
            }
        }
        if let Some(&low) = columns[j].last() {
            pivot_owner.insert(low, j);
            paired.insert(low);
            paired.insert(j);
            let (birth, death) = (cells[low].0, cells[j].0);
            if death > birth {
                points[cells[low].1].push(DiagramPoint::new(birth, death));
            }
        }
    }
    for (i, (value, dim, _)) in cells.iter().enumerate() {
        if !paired.contains(&i) {
            points[*dim].push(DiagramPoint::essential(*value));
        }
    }
    Ok(points.into_iter().enumerate().map(|(s, p)| PersistenceDiagram::new(s, p)).collect())
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Betti numbers `beta_0..=beta_d` of the union of closed set cells, for
/// `d <= 3`. `beta_0` counts vertex-connected components, `beta_{d-1}` counts
/// bounded face-connected components of the complement, and the remaining
/// number follows from the Euler characteristic.
pub fn brute_betti(mask: &CubicalMask) -> Result<Vec<usize>> {
    let d = mask.dim();
    if d > 3 {
        return Err(invalid(format!("brute-force Betti numbers support d <= 3, got {d}")));
    }
    let m = mask.resolution();
    let mut betti = vec![0usize; d + 1];
    if mask.is_empty() {
        return Ok(betti);
    }
    let set_label = components(mask, |c| mask.get(c), true);
    betti[0] = set_label.iter().flatten().collect::<HashSet<_>>().len();
    if d == 1 {
        return Ok(betti);
    }
    // complement cells; a component touching the outer layer is unbounded
    let comp_label = components(mask, |c| !mask.get(c), false);
    let mut unbounded = HashSet::new();
    for (i, l) in comp_label.iter().enumerate() {
        if let Some(l) = l {
            if mask.coords(i).iter().any(|&k| k == 0 || k == m - 1) {
                unbounded.insert(*l);
            }
        }
    }
    let bounded = comp_label.iter().flatten().filter(|l| !unbounded.contains(l)).collect::<HashSet<_>>().len();

    let mut chi: i64 = 0;
    for c in lattice::indices(2 * m + 1, d) {
        if top_cells_of(&c, m).iter().any(|t| mask.get_at(t)) {
            chi += if cell_dim(&c).is_multiple_of(2) { 1 } else { -1 };
        }
    }
    let b0 = betti[0] as i64;
    if d == 2 {
        let b1 = b0 - chi;
        if b1 != bounded as i64 {
            return Err(Error::Format(format!("Euler characteristic {chi} inconsistent with {bounded} holes")));
        }
        betti[1] = bounded;
    } else {
        betti[2] = bounded;
        let b1 = b0 + bounded as i64 - chi;
        betti[1] = usize::try_from(b1).map_err(|_| Error::Format(format!("negative beta_1 = {b1}")))?;
    }
    Ok(betti)
}

/// Connected components of the cells selected by `keep`; `full` selects
/// vertex adjacency, otherwise face adjacency.
fn components(mask: &CubicalMask, keep: impl Fn(usize) -> bool, full: bool) -> Vec<Option<usize>> {
    let d = mask.dim();
    let m = mask.resolution() as isize;
    let offsets: Vec<Vec<isize>> = lattice::indices(3, d)
        .map(|c| c.into_iter().map(|k| k as isize - 1).collect::<Vec<_>>())
        .filter(|o| {
            let nz = o.iter().filter(|&&v| v != 0).count();
            nz > 0 && (full || nz == 1)
        })
        .collect();
    let mut label = vec![None; mask.len()];
    let mut next = 0;
    for start in 0..mask.len() {
        if label[start].is_some() || !keep(start) {
            continue;
        }
        label[start] = Some(next);
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            let c = mask.coords(i);
            for o in &offsets {
                let nb: Vec<isize> = c.iter().zip(o).map(|(&a, &b)| a as isize + b).collect();
                if nb.iter().any(|&v| v < 0 || v >= m) {
                    continue;
                }
                let nb: Vec<usize> = nb.into_iter().map(|v| v as usize).collect();
                let j = lattice::ravel(&nb, m as usize);
                if label[j].is_none() && keep(j) {
                    label[j] = Some(next);
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    label
}

fn linf(a: &DiagramPoint, b: &DiagramPoint) -> f64 {
    let db = (a.birth - b.birth).abs();
    let dd = if a.is_essential() && b.is_essential() { 0.0 } else { (a.death - b.death).abs() };
    db.max(dd)
}

fn to_diagonal(p: &DiagramPoint) -> f64 {
    (p.death - p.birth) / 2.0
}

/// Bottleneck distance by trying every partial matching. Exponential; meant
/// for diagrams with a handful of points.
pub fn brute_bottleneck(a: &PersistenceDiagram, b: &PersistenceDiagram) -> f64 {
    let ea: Vec<DiagramPoint> = a.essential().copied().collect();
    let eb: Vec<DiagramPoint> = b.essential().copied().collect();
    if ea.len() != eb.len() {
        return f64::INFINITY;
    }
    let fa: Vec<DiagramPoint> = a.finite().copied().collect();
    let fb: Vec<DiagramPoint> = b.finite().copied().collect();
    let essential = best(&ea, &eb, &mut vec![false; eb.len()], 0, false);
    let finite = best(&fa, &fb, &mut vec![false; fb.len()], 0, true);
    essential.max(finite)
}

fn best(a: &[DiagramPoint], b: &[DiagramPoint], used: &mut Vec<bool>, i: usize, diagonal: bool) -> f64 {
    if i == a.len() {
        return b
            .iter()
            .zip(used.iter())
            .filter(|(_, &u)| !u)
            .map(|(p, _)| if diagonal { to_diagonal(p) } else { f64::INFINITY })
            .fold(0.0, f64::max);
    }
    let mut out = if diagonal { to_diagonal(&a[i]).max(best(a, b, used, i + 1, diagonal)) } else { f64::INFINITY };
    for j in 0..b.len() {
        if !used[j] {
            used[j] = true;
            let cost = linf(&a[i], &b[j]).max(best(a, b, used, i + 1, diagonal));
            used[j] = false;
            out = out.min(cost);
        }
    }
    out
}
