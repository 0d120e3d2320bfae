use std::cell::RefCell;

use crate::bits::Configuration;
use crate::error::{invalid, Error, Result};

use super::lattice::UnionFind;

/// Left-right crossing of the `n × n` square box (bit `y·n + x`) by subboxes
/// of side `s = n^α`, where a subbox is open when most of its sites are.
/// Open subboxes connect through shared edges.
#[derive(Clone, Debug)]
pub struct CoarseMajority {
    n: usize,
    side: usize,
}

impl CoarseMajority {
    /// Requires `n^alpha` to be an odd integer dividing `n`.
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n == 0 || !(0.0..=1.0).contains(&alpha) {
            return Err(invalid(format!("coarse majority needs n >= 1 and alpha in [0, 1], got n={n} alpha={alpha}")));
        }
        let exact = (n as f64).powf(alpha);
        let side = exact.round() as usize;
        if side == 0 || (exact - side as f64).abs() > 1e-9 * exact.max(1.0) {
            return Err(Error::OutOfRange {
                what: "subbox side",
                detail: format!("n^alpha = {exact} is not an integer"),
            });
        }
        Self::with_side(n, side)
    }

    /// Subboxes of an explicit odd side dividing `n`.
    pub fn with_side(n: usize, side: usize) -> Result<Self> {
        if side % 2 == 0 || n % side != 0 {
            return Err(Error::OutOfRange {
                what: "subbox side",
                detail: format!("side {side} must be odd and divide n = {n}"),
            });
        }
        Ok(Self { n, side })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn subbox_side(&self) -> usize {
        self.side
    }

    /// Subboxes per row.
    pub fn coarse_width(&self) -> usize {
        self.n / self.side
    }

    /// Whether subbox `(bx, by)` has a strict majority of open sites.
    pub fn subbox_open(&self, omega: &Configuration, bx: usize, by: usize) -> bool {
        let s = self.side;
        let open = (by * s..(by + 1) * s)
            .map(|y| (bx * s..(bx + 1) * s).filter(|&x| omega.get(y * self.n + x)).count())
            .sum::<usize>();
        2 * open > s * s
    }

    pub fn crossing(&self, omega: &Configuration) -> Result<bool> {
        omega.check_width(self.n * self.n)?;
        Ok(self.crossing_unchecked(omega))
    }

    pub fn crossing_unchecked(&self, omega: &Configuration) -> bool {
        let m = self.coarse_width();
        let open: Vec<bool> = (0..m * m).map(|b| self.subbox_open(omega, b % m, b / m)).collect();
        COARSE.with(|cell| {
            let mut uf = cell.borrow_mut();
            let (l, r) = ((m * m) as u32, (m * m + 1) as u32);
            uf.reset(m * m + 2);
            for b in 0..m * m {
                if !open[b] {
                    continue;
                }
                let (x, y) = (b % m, b / m);
                if x > 0 && open[b - 1] {
                    uf.union(b as u32, (b - 1) as u32);
                }
                if y > 0 && open[b - m] {
                    uf.union(b as u32, (b - m) as u32);
                }
                if x == 0 {
                    uf.union(b as u32, l);
                }
                if x == m - 1 {
                    uf.union(b as u32, r);
                }
            }
            uf.find(l) == uf.find(r)
        })
    }
}

thread_local! {
    static COARSE: RefCell<UnionFind> = RefCell::new(UnionFind::default());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_checks() {
        assert_eq!(CoarseMajority::new(9, 0.5).unwrap().subbox_side(), 3);
        assert_eq!(CoarseMajority::new(81, 0.25).unwrap().subbox_side(), 3);
        assert!(CoarseMajority::new(16, 0.5).is_err());
        assert!(CoarseMajority::new(10, 0.5).is_err());
        assert!(CoarseMajority::with_side(12, 3).is_ok());
        assert!(CoarseMajority::with_side(12, 4).is_err());
    }

    #[test]
    fn extremes() {
        let c = CoarseMajority::new(9, 0.5).unwrap();
        assert!(c.crossing(&Configuration::ones(81).unwrap()).unwrap());
        assert!(!c.crossing(&Configuration::zeros(81).unwrap()).unwrap());
        assert!(c.crossing(&Configuration::ones(80).unwrap()).is_err());
    }

    #[test]
    fn one_majority_row() {
        // n = 9, side 3: in the middle band of boxes open 5 of 9 sites each
        let c = CoarseMajority::new(9, 0.5).unwrap();
        let mut w = Configuration::zeros(81).unwrap();
        for x in 0..9 {
            w.set(3 * 9 + x, true);
            w.set(4 * 9 + x, (x % 3) != 2);
        }
        assert!((0..3).all(|bx| c.subbox_open(&w, bx, 1)));
        assert!(c.crossing(&w).unwrap());
        w.set(3 * 9 + 4, false);
        assert!(!c.subbox_open(&w, 1, 1));
        assert!(!c.crossing(&w).unwrap());
    }

    #[test]
    fn side_one_is_square_site_crossing() {
        let c = CoarseMajority::with_side(4, 1).unwrap();
        let mut w = Configuration::zeros(16).unwrap();
        for (x, y) in [(0, 0), (1, 0), (1, 1), (2, 1), (3, 1)] {
            w.set(y * 4 + x, true);
        }
        assert!(c.crossing(&w).unwrap());
        // diagonal contact does not connect on the square grid
        let diag = Configuration::from_indices(16, [0, 5, 10, 15]).unwrap();
        assert!(!c.crossing(&diag).unwrap());
    }
}
