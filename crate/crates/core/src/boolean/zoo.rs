//! The named families of Boolean functions used throughout the experiments.
//!
//! Sign convention: an event that occurs maps to +1 (`f = 2·1_A − 1`).
//! Parity maps an even number of ones on its support to +1, so parity on the
//! full support is exactly the character `χ_V`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::function::{BooleanFunction, DEFAULT_TABULATION_CAP, MAX_TABULATION};
use crate::bits::{Configuration, SubsetMask};
use crate::error::{invalid, Error, Result};
use crate::percolation::{self, PatchShape};

/// Which bits a parity function reads.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    #[default]
    All,
    /// Bits `0..n/2`.
    FirstHalf,
    /// Explicit 0-based bit positions.
    Bits(Vec<usize>),
}

/// A zoo member with its parameters. Serializes with a `family` tag, e.g.
/// `{"family": "majority", "n": 9}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FunctionSpec {
    Constant {
        n: usize,
        #[serde(default = "plus_one")]
        value: i8,
    },
    Parity {
        n: usize,
        #[serde(default)]
        support: Support,
    },
    Dictator {
        n: usize,
        #[serde(default)]
        bit: usize,
    },
    Majority {
        n: usize,
    },
    /// OR of `tribes` disjoint ANDs of `width` bits each.
    Tribes {
        width: usize,
        tribes: usize,
    },
    /// `+1` iff `⌊|ω|/width⌋` is even; with `centered`, the bands are laid out
    /// symmetrically around `n/2` and `+1` marks the odd-indexed bands.
    CountBand {
        n: usize,
        width: usize,
        #[serde(default)]
        centered: bool,
    },
    /// Recursive majority of three, `3^levels` bits.
    IteratedMajority {
        levels: u32,
    },
    /// The pair-band function on `edges` isolated edges read through `σ_B`,
    /// where `B` holds the second endpoint (odd bit) of every edge.
    FlippedPairs {
        edges: usize,
    },
    /// Left-right open crossing of a triangular-lattice patch.
    Crossing {
        #[serde(flatten)]
        shape: PatchShape,
    },
    /// Left-right crossing of an `n × n` square box by odd subboxes of side
    /// `n^alpha` whose majority is open.
    CoarseMajorityCrossing {
        n: usize,
        alpha: f64,
    },
}

fn plus_one() -> i8 {
    1
}

/// Build options.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZooOptions {
    /// Functions with at most this many bits are tabulated.
    pub tabulation_cap: usize,
}

impl Default for ZooOptions {
    fn default() -> Self {
        Self {
            tabulation_cap: DEFAULT_TABULATION_CAP,
        }
    }
}

type Event = Arc<dyn Fn(&Configuration) -> bool + Send + Sync>;

impl FunctionSpec {
    /// Build with the default tabulation cap.
    pub fn build(&self) -> Result<BooleanFunction> {
        self.build_with(&ZooOptions::default())
    }

    pub fn build_with(&self, opts: &ZooOptions) -> Result<BooleanFunction> {
        if opts.tabulation_cap > MAX_TABULATION {
            return Err(invalid(format!(
                "tabulation cap {} exceeds the hard limit {MAX_TABULATION}",
                opts.tabulation_cap
            )));
        }
        let (n, event) = self.event()?;
        let f = if n <= opts.tabulation_cap {
            BooleanFunction::tabulate(n, |m| {
                event(&Configuration::from_mask(n, m).expect("mask within width"))
            })?
        } else {
            BooleanFunction::from_predicate(n, move |w| event(w))?
        };
        Ok(f.named(self.family_name(), self.param_record()))
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "constant",
            Self::Parity { .. } => "parity",
            Self::Dictator { .. } => "dictator",
            Self::Majority { .. } => "majority",
            Self::Tribes { .. } => "tribes",
            Self::CountBand { .. } => "count_band",
            Self::IteratedMajority { .. } => "iterated_majority",
            Self::FlippedPairs { .. } => "flipped_pairs",
            Self::Crossing { .. } => "crossing",
            Self::CoarseMajorityCrossing { .. } => "coarse_majority_crossing",
        }
    }

    fn param_record(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        if let Ok(serde_json::Value::Object(obj)) = serde_json::to_value(self) {
            for (k, v) in obj {
                if k != "family" {
                    m.insert(k, v.to_string());
                }
            }
        }
        m
    }

    /// Number of input bits.
    pub fn width(&self) -> Result<usize> {
        Ok(self.event()?.0)
    }

    /// The same family at a different size, for sweeps. `n` is the bit count
    /// except for crossings, where it is the patch scale.
    pub fn resized(&self, n: usize) -> Result<Self> {
        let bad = |why: &str| invalid(format!("cannot resize {} to {n}: {why}", self.family_name()));
        Ok(match self {
            Self::Constant { value, .. } => Self::Constant { n, value: *value },
            Self::Parity { support, .. } => {
                if let Support::Bits(b) = support {
                    if b.iter().any(|&i| i >= n) {
                        return Err(bad("explicit support does not fit"));
                    }
                }
                Self::Parity {
                    n,
                    support: support.clone(),
                }
            }
            Self::Dictator { bit, .. } => Self::Dictator { n, bit: *bit },
            Self::Majority { .. } => Self::Majority { n },
            Self::Tribes { width, .. } => {
                if n % width != 0 {
                    return Err(bad("not a multiple of the tribe width"));
                }
                Self::Tribes {
                    width: *width,
                    tribes: n / width,
                }
            }
            Self::CountBand { width, centered, .. } => Self::CountBand {
                n,
                width: *width,
                centered: *centered,
            },
            Self::IteratedMajority { .. } => {
                let mut levels = 0;
                let mut size = 1;
                while size < n {
                    size *= 3;
                    levels += 1;
                }
                if size != n {
                    return Err(bad("not a power of three"));
                }
                Self::IteratedMajority { levels }
            }
            Self::FlippedPairs { .. } => {
                if n % 2 != 0 {
                    return Err(bad("odd bit count"));
                }
                Self::FlippedPairs { edges: n / 2 }
            }
            Self::Crossing { shape } => Self::Crossing {
                shape: shape.rescaled(n),
            },
            Self::CoarseMajorityCrossing { alpha, .. } => Self::CoarseMajorityCrossing { n, alpha: *alpha },
        })
    }

    fn event(&self) -> Result<(usize, Event)> {
        let need = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(invalid(msg.to_string())) };
        Ok(match self {
            Self::Constant { n, value } => {
                need(*n >= 1, "constant needs n >= 1")?;
                need(*value == 1 || *value == -1, "constant value must be ±1")?;
                let v = *value == 1;
                (*n, Arc::new(move |_: &Configuration| v))
            }
            Self::Parity { n, support } => {
                need(*n >= 1, "parity needs n >= 1")?;
                let bits: Vec<usize> = match support {
                    Support::All => (0..*n).collect(),
                    Support::FirstHalf => {
                        need(*n >= 2, "first-half parity needs n >= 2")?;
                        (0..*n / 2).collect()
                    }
                    Support::Bits(b) => {
                        need(b.iter().all(|&i| i < *n), "parity support outside width")?;
                        b.clone()
                    }
                };
                let mask = SubsetMask::from_indices(*n, bits)?;
                (
                    *n,
                    Arc::new(move |w: &Configuration| {
                        w.support().intersection(&mask).expect("width").count() % 2 == 0
                    }),
                )
            }
            Self::Dictator { n, bit } => {
                need(*bit < *n, "dictator bit outside width")?;
                let b = *bit;
                (*n, Arc::new(move |w: &Configuration| w.get(b)))
            }
            Self::Majority { n } => {
                need(*n % 2 == 1, "majority needs an odd number of bits")?;
                let n = *n;
                (n, Arc::new(move |w: &Configuration| 2 * w.count() > n))
            }
            Self::Tribes { width, tribes } => {
                need(*width >= 1 && *tribes >= 1, "tribes needs width, tribes >= 1")?;
                let (w_, t_) = (*width, *tribes);
                (
                    w_ * t_,
                    Arc::new(move |w: &Configuration| {
                        (0..t_).any(|t| (t * w_..(t + 1) * w_).all(|i| w.get(i)))
                    }),
                )
            }
            Self::CountBand { n, width, centered } => {
                need(*n >= 1 && *width >= 1, "count band needs n, width >= 1")?;
                let (n, width, centered) = (*n as i64, *width as i64, *centered);
                (
                    n as usize,
                    Arc::new(move |w: &Configuration| count_band(w.count() as i64, n, width, centered)),
                )
            }
            Self::IteratedMajority { levels } => {
                need(*levels >= 1 && *levels <= 10, "iterated majority needs 1..=10 levels")?;
                let n = 3usize.pow(*levels);
                (n, Arc::new(move |w: &Configuration| iterated_majority(w, 0, n)))
            }
            Self::FlippedPairs { edges } => {
                need(*edges >= 1, "flipped pairs needs at least one edge")?;
                let n = 2 * edges;
                let b = SubsetMask::from_indices(n, (0..*edges).map(|k| 2 * k + 1))?;
                (
                    n,
                    Arc::new(move |w: &Configuration| {
                        let flipped = w.flip(&b).expect("width");
                        count_band(flipped.count() as i64, n as i64, 2, false)
                    }),
                )
            }
            Self::Crossing { shape } => {
                let patch = shape.build()?;
                let n = patch.site_count();
                let patch = Arc::new(patch);
                (n, Arc::new(move |w: &Configuration| patch.crossing_unchecked(w)))
            }
            Self::CoarseMajorityCrossing { n, alpha } => {
                let coarse = percolation::CoarseMajority::new(*n, *alpha)?;
                (n * n, Arc::new(move |w: &Configuration| coarse.crossing_unchecked(w)))
            }
        })
    }
}

fn count_band(ones: i64, n: i64, width: i64, centered: bool) -> bool {
    if centered {
        // band index k with |ω| − n/2 ∈ [k·w, (k+1)·w); +1 on odd k
        (2 * ones - n).div_euclid(2 * width).rem_euclid(2) == 1
    } else {
        (ones / width) % 2 == 0
    }
}

fn iterated_majority(w: &Configuration, start: usize, len: usize) -> bool {
    if len == 1 {
        return w.get(start);
    }
    let third = len / 3;
    let votes = (0..3)
        .filter(|k| iterated_majority(w, start + k * third, third))
        .count();
    votes >= 2
}

/// Build a zoo function from a family name and a JSON parameter object.
pub fn zoo_build(name: &str, params: &serde_json::Value) -> Result<BooleanFunction> {
    zoo_spec(name, params)?.build()
}

/// Parse a family name plus parameters into a [`FunctionSpec`].
pub fn zoo_spec(name: &str, params: &serde_json::Value) -> Result<FunctionSpec> {
    const FAMILIES: [&str; 10] = [
        "constant",
        "parity",
        "dictator",
        "majority",
        "tribes",
        "count_band",
        "iterated_majority",
        "flipped_pairs",
        "crossing",
        "coarse_majority_crossing",
    ];
    if !FAMILIES.contains(&name) {
        return Err(Error::UnknownFamily {
            kind: "function",
            name: name.to_string(),
        });
    }
    let mut obj = match params {
        serde_json::Value::Object(m) => m.clone(),
        serde_json::Value::Null => serde_json::Map::new(),
        other => return Err(invalid(format!("parameters must be an object, got {other}"))),
    };
    obj.insert("family".into(), serde_json::Value::String(name.into()));
    serde_json::from_value(serde_json::Value::Object(obj))
        .map_err(|e| invalid(format!("{name}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn at(f: &BooleanFunction, s: &str) -> i8 {
        f.eval(&Configuration::parse(s).unwrap())
    }

    #[test]
    fn parity_examples() {
        let f = zoo_build("parity", &json!({"n": 4, "support": "all"})).unwrap();
        assert_eq!(at(&f, "0000"), 1);
        assert_eq!(at(&f, "1000"), -1);
        assert_eq!(at(&f, "1111"), 1);
        let g = zoo_build("parity", &json!({"n": 4, "support": "first_half"})).unwrap();
        assert_eq!(at(&g, "0011"), 1);
        assert_eq!(at(&g, "0111"), -1);
        assert_eq!(at(&g, "1100"), 1);
    }

    #[test]
    fn count_band_rule() {
        let f = zoo_build("count_band", &json!({"n": 8, "width": 2})).unwrap();
        assert_eq!(at(&f, "00000000"), 1);
        assert_eq!(at(&f, "10000000"), 1);
        assert_eq!(at(&f, "11000000"), -1);
        assert_eq!(at(&f, "11100000"), -1);
        assert_eq!(at(&f, "11110000"), 1);
        assert_eq!(at(&f, "11111111"), 1);
    }

    #[test]
    fn centered_count_band_has_zero_mean_at_odd_width() {
        for (n, w) in [(9, 2), (11, 3), (13, 1), (15, 4)] {
            let f = FunctionSpec::CountBand { n, width: w, centered: true }.build().unwrap();
            assert_eq!(f.mean().unwrap(), 0.0, "n={n} w={w}");
        }
    }

    #[test]
    fn tribes_and_iterated_majority() {
        let t = FunctionSpec::Tribes { width: 2, tribes: 2 }.build().unwrap();
        assert_eq!(at(&t, "1100"), 1);
        assert_eq!(at(&t, "1010"), -1);
        assert_eq!(at(&t, "0011"), 1);
        let m = FunctionSpec::IteratedMajority { levels: 2 }.build().unwrap();
        assert_eq!(m.n(), 9);
        assert_eq!(at(&m, "110110000"), 1);
        assert_eq!(at(&m, "110100100"), -1);
    }

    #[test]
    fn flipped_pairs_is_band_composed_with_flip() {
        let g = FunctionSpec::FlippedPairs { edges: 3 }.build().unwrap();
        let f = FunctionSpec::CountBand { n: 6, width: 2, centered: false }.build().unwrap();
        let b = SubsetMask::from_indices(6, [1, 3, 5]).unwrap();
        let h = f.compose_flip(&b).unwrap();
        assert_eq!(g.table(), h.table());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            zoo_build("nope", &json!({})),
            Err(Error::UnknownFamily { .. })
        ));
        assert!(zoo_build("majority", &json!({"n": 4})).is_err());
        assert!(zoo_build("dictator", &json!({"n": 3, "bit": 3})).is_err());
        assert!(zoo_build("majority", &json!(3)).is_err());
    }

    #[test]
    fn large_members_are_predicates() {
        let f = FunctionSpec::Majority { n: 101 }.build().unwrap();
        assert!(!f.is_tabulated());
        let opts = ZooOptions { tabulation_cap: 4 };
        assert!(!FunctionSpec::Majority { n: 5 }.build_with(&opts).unwrap().is_tabulated());
    }

    #[test]
    fn resize_rules() {
        let s = FunctionSpec::Parity { n: 8, support: Support::FirstHalf };
        assert_eq!(s.resized(16).unwrap(), FunctionSpec::Parity { n: 16, support: Support::FirstHalf });
        assert!(FunctionSpec::IteratedMajority { levels: 1 }.resized(10).is_err());
        assert_eq!(
            FunctionSpec::IteratedMajority { levels: 1 }.resized(27).unwrap(),
            FunctionSpec::IteratedMajority { levels: 3 }
        );
    }
}
