use std::cell::RefCell;
use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bits::Configuration;
use crate::dynamics::axial_position;
use crate::error::{invalid, Error, Result};

/// Which finite piece of the triangular lattice to use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum PatchShape {
    /// The `side × side` rhombus in axial coordinates (the Hex board). Its
    /// left-right open crossing has probability exactly 1/2 at `p = 1/2`.
    Rhombus { side: usize },
    /// Sites whose plane position lies in `[0, a·n] × [0, b·n]`.
    Rectangle { a: f64, b: f64, n: usize },
}

impl PatchShape {
    /// The same shape at scale `n`.
    pub fn rescaled(&self, n: usize) -> Self {
        match *self {
            Self::Rhombus { .. } => Self::Rhombus { side: n },
            Self::Rectangle { a, b, .. } => Self::Rectangle { a, b, n },
        }
    }

    pub fn build(&self) -> Result<LatticePatch> {
        match *self {
            Self::Rhombus { side } => LatticePatch::rhombus(side),
            Self::Rectangle { a, b, n } => LatticePatch::rectangle(a, b, n),
        }
    }
}

/// Sites of the triangular lattice in axial coordinates `(i, j)` (see
/// [`crate::dynamics::RangeGeometry`] for the embedding), numbered row by row,
/// with each row's first site on the left boundary and last site on the right.
#[derive(Clone, Debug)]
pub struct LatticePatch {
    coords: Vec<(i32, i32)>,
    /// Neighbours with a smaller index: `(i−1, j)`, `(i, j−1)`, `(i−1, j−1)`.
    back: Vec<[u32; 3]>,
    left: Vec<bool>,
    right: Vec<bool>,
}

const NONE: u32 = u32::MAX;

impl LatticePatch {
    /// Build from rows: `rows[j] = (first i, last i)` for `j = 0, 1, …`.
    fn from_rows(rows: &[(i32, i32)]) -> Result<Self> {
        let mut coords = Vec::new();
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (j, &(lo, hi)) in rows.iter().enumerate() {
            for i in lo..=hi {
                coords.push((i, j as i32));
                left.push(i == lo);
                right.push(i == hi);
            }
        }
        if coords.is_empty() {
            return Err(invalid("empty patch"));
        }
        let index: HashMap<(i32, i32), u32> = coords.iter().enumerate().map(|(k, &c)| (c, k as u32)).collect();
        let back = coords
            .iter()
            .map(|&(i, j)| {
                let at = |c| index.get(&c).copied().unwrap_or(NONE);
                [at((i - 1, j)), at((i, j - 1)), at((i - 1, j - 1))]
            })
            .collect();
        Ok(Self {
            coords,
            back,
            left,
            right,
        })
    }

    pub fn rhombus(side: usize) -> Result<Self> {
        if side == 0 {
            return Err(invalid("rhombus side must be at least 1"));
        }
        let s = side as i32;
        Self::from_rows(&vec![(0, s - 1); side])
    }

    /// Sites in `[0, a·n] × [0, b·n]`, at least two rows of at least two sites.
    pub fn rectangle(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) || n == 0 {
            return Err(invalid(format!("rectangle needs a, b > 0 and n >= 1, got a={a} b={b} n={n}")));
        }
        let (w, h) = (a * n as f64, b * n as f64);
        let row_height = 3f64.sqrt() / 2.0;
        let row_count = ((h / row_height + 1e-9).floor() as usize + 1).max(2);
        let rows: Vec<(i32, i32)> = (0..row_count as i32)
            .map(|j| {
                // x = i − j/2 ∈ [0, w]
                let lo = (j as f64 / 2.0 - 1e-9).ceil() as i32;
                let hi = ((w + j as f64 / 2.0) + 1e-9).floor() as i32;
                (lo, hi.max(lo + 1))
            })
            .collect();
        Self::from_rows(&rows)
    }

    pub fn site_count(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[(i32, i32)] {
        &self.coords
    }

    /// Plane position of a site.
    pub fn position(&self, site: usize) -> (f64, f64) {
        let (i, j) = self.coords[site];
        axial_position(i, j)
    }

    pub fn left_boundary(&self) -> impl Iterator<Item = usize> + '_ {
        self.left.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k)
    }

    pub fn right_boundary(&self) -> impl Iterator<Item = usize> + '_ {
        self.right.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k)
    }

    /// All neighbours of a site inside the patch.
    pub fn neighbours(&self, site: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.back[site].iter().filter(|&&b| b != NONE).map(|&b| b as usize).collect();
        for (k, b) in self.back.iter().enumerate() {
            if b.contains(&(site as u32)) {
                out.push(k);
            }
        }
        out.sort_unstable();
        out
    }

    /// Whether an open path joins the left boundary to the right boundary.
    pub fn crossing(&self, omega: &Configuration) -> Result<bool> {
        if omega.width() != self.site_count() {
            return Err(Error::WidthMismatch {
                expected: self.site_count(),
                found: omega.width(),
            });
        }
        Ok(self.crossing_unchecked(omega))
    }

    /// [`Self::crossing`] without the width check.
    pub fn crossing_unchecked(&self, omega: &Configuration) -> bool {
        self.crossing_with(|s| omega.get(s))
    }

    /// Crossing for an arbitrary open-site predicate on site indices.
    pub fn crossing_with(&self, open: impl Fn(usize) -> bool) -> bool {
        SCRATCH.with(|cell| {
            let mut uf = cell.borrow_mut();
            let v = self.site_count();
            let (l, r) = (v as u32, v as u32 + 1);
            uf.reset(v + 2);
            for s in 0..v {
                if !open(s) {
                    continue;
                }
                for &b in &self.back[s] {
                    if b != NONE && open(b as usize) {
                        uf.union(s as u32, b);
                    }
                }
                if self.left[s] {
                    uf.union(s as u32, l);
                }
                if self.right[s] {
                    uf.union(s as u32, r);
                }
            }
            uf.find(l) == uf.find(r)
        })
    }

    /// Geometry as CSV `site,x,y`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "site,x,y")?;
        for k in 0..self.site_count() {
            let (x, y) = self.position(k);
            writeln!(w, "{k},{x},{y}")?;
        }
        Ok(())
    }
}

thread_local! {
    static SCRATCH: RefCell<UnionFind> = RefCell::new(UnionFind::default());
}

/// Union-find with path halving and union by size, reset in place between uses.
#[derive(Debug, Default)]
pub(crate) struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub(crate) fn reset(&mut self, n: usize) {
        self.parent.clear();
        self.parent.extend(0..n as u32);
        self.size.clear();
        self.size.resize(n, 1);
    }

    pub(crate) fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    pub(crate) fn union(&mut self, a: u32, b: u32) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use std::collections::VecDeque;

    // Independent oracle: breadth-first search over the 6-neighbour rule.
    fn bfs_crossing(p: &LatticePatch, w: &Configuration) -> bool {
        let index: HashMap<(i32, i32), usize> = p.coords().iter().enumerate().map(|(k, &c)| (c, k)).collect();
        let mut seen = vec![false; p.site_count()];
        let mut queue: VecDeque<usize> = p.left_boundary().filter(|&s| w.get(s)).collect();
        for &s in &queue {
            seen[s] = true;
        }
        let rights: Vec<usize> = p.right_boundary().collect();
        while let Some(s) = queue.pop_front() {
            if rights.contains(&s) {
                return true;
            }
            let (i, j) = p.coords()[s];
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)] {
                if let Some(&t) = index.get(&(i + di, j + dj)) {
                    if w.get(t) && !seen[t] {
                        seen[t] = true;
                        queue.push_back(t);
                    }
                }
            }
        }
        false
    }

    #[test]
    fn small_rectangle() {
        let p = LatticePatch::rectangle(1.0, 1.0, 1).unwrap();
        assert!(p.site_count() >= 4);
        assert_eq!(p.left_boundary().count(), 2);
        assert_eq!(p.right_boundary().count(), 2);
        assert!(LatticePatch::rectangle(0.0, 1.0, 1).is_err());
        assert!(LatticePatch::rhombus(0).is_err());
    }

    #[test]
    fn interior_degree_is_six_and_adjacency_symmetric() {
        let p = LatticePatch::rectangle(2.0, 1.5, 6).unwrap();
        let mut six = 0;
        for s in 0..p.site_count() {
            let nb = p.neighbours(s);
            assert!(nb.len() <= 6);
            if nb.len() == 6 {
                six += 1;
            }
            for &t in &nb {
                assert!(p.neighbours(t).contains(&s));
                let ((x1, y1), (x2, y2)) = (p.position(s), p.position(t));
                assert!(((x1 - x2).hypot(y1 - y2) - 1.0).abs() < 1e-12);
            }
        }
        assert!(six > 0);
        let r = LatticePatch::rhombus(5).unwrap();
        assert_eq!(r.neighbours(12).len(), 6);
    }

    #[test]
    fn boundaries_disjoint() {
        for n in 2..6 {
            let p = LatticePatch::rectangle(1.0, 1.0, n).unwrap();
            assert!(p.left_boundary().all(|s| !p.right_boundary().any(|t| t == s)));
        }
    }

    #[test]
    fn crossing_examples() {
        let p = LatticePatch::rhombus(4).unwrap();
        let n = p.site_count();
        assert!(p.crossing(&Configuration::ones(n).unwrap()).unwrap());
        assert!(!p.crossing(&Configuration::zeros(n).unwrap()).unwrap());
        let mut row = Configuration::from_indices(n, 4..8).unwrap();
        assert!(p.crossing(&row).unwrap());
        row.set(6, false);
        assert!(!p.crossing(&row).unwrap());
        assert!(p.crossing(&Configuration::zeros(n + 1).unwrap()).is_err());
    }

    #[test]
    fn crossing_matches_bfs() {
        let mut r = rng::stream(1, 0);
        for shape in [PatchShape::Rhombus { side: 7 }, PatchShape::Rectangle { a: 1.5, b: 1.0, n: 6 }] {
            let p = shape.build().unwrap();
            for _ in 0..500 {
                let w = Configuration::uniform(p.site_count(), &mut r).unwrap();
                assert_eq!(p.crossing_unchecked(&w), bfs_crossing(&p, &w));
            }
        }
    }

    #[test]
    fn rhombus_exact_half_by_enumeration() {
        // 3 × 3 rhombus, 512 configurations
        let p = LatticePatch::rhombus(3).unwrap();
        let hits = (0..512u64)
            .filter(|&m| p.crossing_unchecked(&Configuration::from_mask(9, m).unwrap()))
            .count();
        assert_eq!(hits, 256);
    }

    #[test]
    fn csv_export() {
        let mut out = Vec::new();
        LatticePatch::rhombus(2).unwrap().write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("site,x,y\n0,0,0\n1,1,0\n2,-0.5,"));
    }
}
