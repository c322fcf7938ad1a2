use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::union_find::UnionFind;
use crate::error::{domain, Result};
use crate::lattice::{Boundary, SpinConfig};

/// A closed loop of dual-lattice edges separating `+` from `-`.
///
/// Dual vertices sit at lattice corners `(x, y)`, `0 ≤ x, y ≤ L`; site
/// `(row, col)` occupies the unit square `[col, col+1] × [row, row+1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    /// Number of dual edges.
    pub length: usize,
    /// `max(extent_x, extent_y)`, the L∞ diameter of the vertex set.
    pub diameter: usize,
    pub extent_x: usize,
    pub extent_y: usize,
    /// Sites enclosed, nested islands included.
    pub volume: usize,
    /// Minus spins among the enclosed sites (volume net of plus islands).
    pub enclosed_minus: usize,
    /// Number of contours enclosing this one.
    pub depth: usize,
    pub exterior: bool,
    /// Interior as `(row, col_start, col_end)` half-open spans.
    pub spans: Vec<(u32, u32, u32)>,
}

impl Contour {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        let (row, col) = (row as u32, col as u32);
        self.spans.iter().any(|&(r, a, b)| r == row && a <= col && col < b)
    }
}

// Edge numbering: horizontal edges (between rows r-1 and r, column c) come
// first, r in 0..=L, c in 0..L; then vertical edges (between columns c-1 and c,
// row r), r in 0..L, c in 0..=L.
struct DualEdges {
    l: usize,
}

impl DualEdges {
    fn count(&self) -> usize {
        2 * self.l * (self.l + 1)
    }

    fn horizontal(&self, r: usize, c: usize) -> usize {
        r * self.l + c
    }

    fn vertical(&self, r: usize, c: usize) -> usize {
        (self.l + 1) * self.l + r * (self.l + 1) + c
    }

    /// `(is_vertical, r, c)`
    fn decode(&self, e: usize) -> (bool, usize, usize) {
        let h = (self.l + 1) * self.l;
        if e < h {
            (false, e / self.l, e % self.l)
        } else {
            let e = e - h;
            (true, e / (self.l + 1), e % (self.l + 1))
        }
    }
}

/// Extracts every Peierls contour of a plus-boundary configuration.
///
/// Where four contour edges meet (checkerboard corner), the edges are paired
/// so that the north-west and south-east sites are cut off; diagonal
/// north-east/south-west neighbors therefore count as connected.
pub fn extract_contours(config: &SpinConfig) -> Result<Vec<Contour>> {
    if config.boundary() != Boundary::Plus {
        return domain("contours are only closed with plus boundary conditions");
    }
    let l = config.side();
    let w = l + 2;
    let edges = DualEdges { l };
    // Padded spin lookup by unpadded (possibly -1 or L) coordinates.
    let spin = |r: isize, c: isize| config.spin_at(((r + 1) as usize) * w + (c + 1) as usize);

    let mut present = vec![false; edges.count()];
    for r in 0..=l {
        for c in 0..l {
            present[edges.horizontal(r, c)] = spin(r as isize - 1, c as isize) != spin(r as isize, c as isize);
        }
    }
    for r in 0..l {
        for c in 0..=l {
            present[edges.vertical(r, c)] = spin(r as isize, c as isize - 1) != spin(r as isize, c as isize);
        }
    }

    let mut loops = UnionFind::new(edges.count());
    for y in 0..=l {
        for x in 0..=l {
            let n = (y >= 1).then(|| edges.vertical(y - 1, x)).filter(|&e| present[e]);
            let s = (y < l).then(|| edges.vertical(y, x)).filter(|&e| present[e]);
            let wst = (x >= 1).then(|| edges.horizontal(y, x - 1)).filter(|&e| present[e]);
            let est = (x < l).then(|| edges.horizontal(y, x)).filter(|&e| present[e]);
            match (n, s, wst, est) {
                (Some(n), Some(s), Some(wst), Some(est)) => {
                    loops.union(n, wst);
                    loops.union(s, est);
                }
                _ => {
                    let mut it = [n, s, wst, est].into_iter().flatten();
                    if let (Some(a), Some(b)) = (it.next(), it.next()) {
                        loops.union(a, b);
                    }
                }
            }
        }
    }

    // 6-connected clusters of equal spins; node l*l is everything outside.
    let outside = l * l;
    let mut clusters = UnionFind::new(l * l + 1);
    for r in 0..l {
        for c in 0..l {
            let i = r * l + c;
            let s = spin(r as isize, c as isize);
            if c + 1 < l && spin(r as isize, c as isize + 1) == s {
                clusters.union(i, i + 1);
            }
            if r + 1 < l && spin(r as isize + 1, c as isize) == s {
                clusters.union(i, i + l);
            }
            if r + 1 < l && c >= 1 && spin(r as isize + 1, c as isize - 1) == s {
                clusters.union(i, i + l - 1);
            }
            if s > 0 && (r == 0 || c == 0 || r + 1 == l || c + 1 == l) {
                clusters.union(i, outside);
            }
        }
    }
    let side_cluster = |clusters: &mut UnionFind, r: isize, c: isize| {
        if r < 0 || c < 0 || r >= l as isize || c >= l as isize {
            clusters.find(outside)
        } else {
            clusters.find(r as usize * l + c as usize)
        }
    };

    struct Acc {
        length: usize,
        min_x: usize,
        max_x: usize,
        min_y: usize,
        max_y: usize,
        crossings: Vec<(u32, u32)>,
        sides: (usize, usize),
    }
    let mut by_root: BTreeMap<usize, Acc> = BTreeMap::new();
    for e in (0..edges.count()).filter(|&e| present[e]) {
        let root = loops.find(e);
        let (vertical, r, c) = edges.decode(e);
        // Endpoints and the two sites on either side.
        let ((x0, y0), (x1, y1), a, b) = if vertical {
            ((c, r), (c, r + 1), (r as isize, c as isize - 1), (r as isize, c as isize))
        } else {
            ((c, r), (c + 1, r), (r as isize - 1, c as isize), (r as isize, c as isize))
        };
        let ca = side_cluster(&mut clusters, a.0, a.1);
        let cb = side_cluster(&mut clusters, b.0, b.1);
        let acc = by_root.entry(root).or_insert(Acc {
            length: 0,
            min_x: usize::MAX,
            max_x: 0,
            min_y: usize::MAX,
            max_y: 0,
            crossings: Vec::new(),
            sides: (ca.min(cb), ca.max(cb)),
        });
        debug_assert_eq!(acc.sides, (ca.min(cb), ca.max(cb)));
        acc.length += 1;
        acc.min_x = acc.min_x.min(x0.min(x1));
        acc.max_x = acc.max_x.max(x0.max(x1));
        acc.min_y = acc.min_y.min(y0.min(y1));
        acc.max_y = acc.max_y.max(y0.max(y1));
        if vertical {
            acc.crossings.push((r as u32, c as u32));
        }
    }

    // Nesting depth: breadth-first over the cluster tree from the outside.
    let mut by_cluster: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let accs: Vec<Acc> = by_root.into_values().collect();
    for (i, acc) in accs.iter().enumerate() {
        by_cluster.entry(acc.sides.0).or_default().push(i);
        by_cluster.entry(acc.sides.1).or_default().push(i);
    }
    let mut depth = vec![usize::MAX; accs.len()];
    let mut queue = VecDeque::from([(clusters.find(outside), 0usize)]);
    while let Some((cluster, d)) = queue.pop_front() {
        for &i in by_cluster.get(&cluster).map(Vec::as_slice).unwrap_or(&[]) {
            if depth[i] == usize::MAX {
                depth[i] = d;
                let (a, b) = accs[i].sides;
                queue.push_back((if a == cluster { b } else { a }, d + 1));
            }
        }
    }

    Ok(accs
        .into_iter()
        .zip(depth)
        .map(|(mut acc, depth)| {
            acc.crossings.sort_unstable();
            let spans: Vec<(u32, u32, u32)> =
                acc.crossings.chunks_exact(2).map(|p| (p[0].0, p[0].1, p[1].1)).collect();
            debug_assert!(acc.crossings.chunks_exact(2).all(|p| p[0].0 == p[1].0));
            let volume = spans.iter().map(|&(_, a, b)| (b - a) as usize).sum();
            let enclosed_minus = spans
                .iter()
                .map(|&(r, a, b)| (a..b).filter(|&c| spin(r as isize, c as isize) < 0).count())
                .sum();
            let (extent_x, extent_y) = (acc.max_x - acc.min_x, acc.max_y - acc.min_y);
            Contour {
                length: acc.length,
                diameter: extent_x.max(extent_y),
                extent_x,
                extent_y,
                volume,
                enclosed_minus,
                depth,
                exterior: depth == 0,
                spans,
            }
        })
        .collect())
}

/// Rebuilds the spins from a contour set: a site is minus iff it lies inside
/// an odd number of contours.
pub fn render_from_contours(l: usize, contours: &[Contour]) -> Vec<i8> {
    let mut spins = vec![1i8; l * l];
    for c in contours {
        for &(r, a, b) in &c.spans {
            for col in a..b {
                let s = &mut spins[r as usize * l + col as usize];
                *s = -*s;
            }
        }
    }
    spins
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(text: &str) -> SpinConfig {
        SpinConfig::from_grid_text(text, 0.7).unwrap()
    }

    #[test]
    fn all_plus_has_no_contours() {
        assert!(extract_contours(&SpinConfig::all_plus(6, 0.7).unwrap()).unwrap().is_empty());
    }

    #[test]
    fn single_minus_spin() {
        let cs = extract_contours(&grid("+++\n+-+\n+++")).unwrap();
        assert_eq!(cs.len(), 1);
        let c = &cs[0];
        assert_eq!((c.length, c.diameter, c.volume), (4, 1, 1));
        assert!(c.exterior);
        assert!(c.contains(1, 1));
    }

    #[test]
    fn minus_block() {
        let cs = extract_contours(&grid("++++\n+--+\n+--+\n++++")).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!((cs[0].length, cs[0].diameter, cs[0].volume), (8, 2, 4));
    }

    #[test]
    fn corner_site_touches_boundary() {
        let cs = extract_contours(&grid("-++\n+++\n+++")).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!((cs[0].length, cs[0].volume), (4, 1));
    }

    #[test]
    fn checkerboard_corner_splitting() {
        // Minus on the NW/SE diagonal: cut off into two unit loops.
        let cs = extract_contours(&grid("++++\n+-++\n++-+\n++++")).unwrap();
        assert_eq!(cs.len(), 2);
        assert!(cs.iter().all(|c| c.length == 4 && c.volume == 1));
        // Minus on the NE/SW diagonal: one pinched loop.
        let cs = extract_contours(&grid("++++\n++-+\n+-++\n++++")).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!((cs[0].length, cs[0].volume, cs[0].diameter), (8, 2, 2));
    }

    #[test]
    fn nested_island() {
        let g = "+++++\n+---+\n+-+-+\n+---+\n+++++";
        let cs = extract_contours(&grid(g)).unwrap();
        assert_eq!(cs.len(), 2);
        let outer = cs.iter().find(|c| c.exterior).unwrap();
        let inner = cs.iter().find(|c| !c.exterior).unwrap();
        assert_eq!((outer.volume, outer.length, outer.diameter), (9, 12, 3));
        assert_eq!((inner.volume, inner.depth), (1, 1));
        assert_eq!((outer.enclosed_minus, inner.enclosed_minus), (8, 0));
        let minus: i64 = cs.iter().map(|c| if c.depth % 2 == 0 { 1 } else { -1 } * c.volume as i64).sum();
        assert_eq!(minus, 8);
        assert_eq!(render_from_contours(5, &cs), grid(g).to_spins());
    }

    #[test]
    fn free_boundary_is_rejected() {
        let cfg = SpinConfig::uniform(3, 0.7, Boundary::Free, -1).unwrap();
        assert!(extract_contours(&cfg).is_err());
    }
}
