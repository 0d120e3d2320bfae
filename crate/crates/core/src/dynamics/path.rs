use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp1};

use super::graph::{DynamicsGraph, EdgeSet, RangeGeometry};
use crate::error::{invalid, nonnegative_time, Result};

/// One clock ring: the endpoints of `{u, v}` trade values at `time`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub u: u32,
    pub v: u32,
}

/// A realization of the random permutation `π_t` on `[0, horizon]`, as the
/// time-ordered transpositions that compose it.
#[derive(Clone, Debug, PartialEq)]
pub struct PermutationPath {
    vertices: usize,
    horizon: f64,
    events: Vec<Event>,
}

impl PermutationPath {
    /// An event-free path.
    pub fn empty(vertices: usize, horizon: f64) -> Result<Self> {
        nonnegative_time(horizon)?;
        Ok(Self {
            vertices,
            horizon,
            events: Vec::new(),
        })
    }

    /// A path from explicit events; times must increase strictly within `(0, horizon]`.
    pub fn from_events(vertices: usize, horizon: f64, events: Vec<Event>) -> Result<Self> {
        nonnegative_time(horizon)?;
        let mut last = 0.0;
        for e in &events {
            if !(e.time > last && e.time <= horizon) {
                return Err(invalid(format!("event time {} out of order or past {horizon}", e.time)));
            }
            if e.u == e.v || e.u as usize >= vertices || e.v as usize >= vertices {
                return Err(invalid(format!("bad transposition ({}, {})", e.u, e.v)));
            }
            last = e.time;
        }
        Ok(Self {
            vertices,
            horizon,
            events,
        })
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// The prefix of the path up to time `s ≤ horizon`.
    pub fn truncated(&self, s: f64) -> Result<Self> {
        nonnegative_time(s)?;
        let keep = self.events.partition_point(|e| e.time <= s);
        Ok(Self {
            vertices: self.vertices,
            horizon: s.min(self.horizon),
            events: self.events[..keep].to_vec(),
        })
    }

    /// Events as CSV `time,u,v`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time,u,v")?;
        for e in &self.events {
            writeln!(w, "{},{},{}", e.time, e.u, e.v)?;
        }
        Ok(())
    }
}

#[derive(Clone)]
enum Picker {
    Single(u32, u32),
    Uniform(Arc<[(u32, u32)]>),
    Alias(Arc<[(u32, u32)]>, Arc<WeightedAliasIndex<f64>>),
    Complete(u32),
    Range(Arc<RangeGeometry>),
}

/// Samples exclusion paths for one graph. A single superposed clock rings at
/// the total rate; each ring picks an edge with probability proportional to
/// its rate (alias table for explicit edges). Range graphs propose a uniform
/// site and a uniform disk offset and reject targets outside the patch.
#[derive(Clone)]
pub struct PathSampler {
    vertices: usize,
    clock_rate: f64,
    picker: Picker,
}

impl PathSampler {
    pub fn new(g: &DynamicsGraph) -> Result<Self> {
        let vertices = g.vertices();
        let (clock_rate, picker) = match g.edge_set() {
            EdgeSet::Complete { rate } => (g.total_rate(), {
                debug_assert!(*rate > 0.0);
                Picker::Complete(vertices as u32)
            }),
            EdgeSet::Range { geometry, rate } => {
                let proposals = geometry.sites() as f64 * geometry.offsets.len() as f64;
                (proposals * rate / 2.0, Picker::Range(Arc::clone(geometry)))
            }
            EdgeSet::Explicit(list) => {
                let pairs: Arc<[(u32, u32)]> = list.iter().map(|e| (e.u as u32, e.v as u32)).collect();
                let total: f64 = list.iter().map(|e| e.rate).sum();
                let picker = if list.is_empty() {
                    Picker::Uniform(pairs)
                } else if list.len() == 1 {
                    Picker::Single(pairs[0].0, pairs[0].1)
                } else if list.iter().all(|e| e.rate == list[0].rate) {
                    Picker::Uniform(pairs)
                } else {
                    let alias = WeightedAliasIndex::new(list.iter().map(|e| e.rate).collect())
                        .map_err(|e| invalid(format!("edge rates unusable: {e}")))?;
                    Picker::Alias(pairs, Arc::new(alias))
                };
                (total, picker)
            }
        };
        Ok(Self {
            vertices,
            clock_rate,
            picker,
        })
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    /// A fresh path on `[0, t]`.
    pub fn sample<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Result<PermutationPath> {
        let mut p = PermutationPath::empty(self.vertices, t)?;
        self.sample_into(&mut p, t, rng)?;
        Ok(p)
    }

    /// Refill `path` in place, reusing its allocation.
    pub fn sample_into<R: Rng + ?Sized>(&self, path: &mut PermutationPath, t: f64, rng: &mut R) -> Result<()> {
        nonnegative_time(t)?;
        path.vertices = self.vertices;
        path.horizon = t;
        path.events.clear();
        self.for_each_event(t, rng, |e| path.events.push(e));
        Ok(())
    }

    /// Stream the events of a fresh path on `[0, t]` without storing them.
    /// `t` must be nonnegative and finite.
    #[inline]
    pub fn for_each_event<R: Rng + ?Sized>(&self, t: f64, rng: &mut R, mut visit: impl FnMut(Event)) {
        if self.clock_rate <= 0.0 || t <= 0.0 {
            return;
        }
        let mut time = 0.0;
        loop {
            let gap: f64 = Exp1.sample(rng);
            time += gap / self.clock_rate;
            if time > t {
                return;
            }
            if let Some((u, v)) = self.pick(rng) {
                visit(Event { time, u, v });
            }
        }
    }

    #[inline]
    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<(u32, u32)> {
        match &self.picker {
            &Picker::Single(u, v) => Some((u, v)),
            Picker::Uniform(pairs) => Some(pairs[rng.random_range(0..pairs.len() as u32) as usize]),
            Picker::Alias(pairs, alias) => Some(pairs[alias.sample(rng)]),
            &Picker::Complete(n) => {
                let u = rng.random_range(0..n);
                let mut v = rng.random_range(0..n - 1);
                if v >= u {
                    v += 1;
                }
                Some((u, v))
            }
            Picker::Range(geo) => {
                let i = rng.random_range(0..geo.width as u32) as usize;
                let j = rng.random_range(0..geo.height as u32) as usize;
                let (di, dj) = geo.offsets[rng.random_range(0..geo.offsets.len() as u32) as usize];
                geo.site(i as i32 + di, j as i32 + dj)
                    .map(|y| ((j * geo.width + i) as u32, y as u32))
            }
        }
    }
}

/// One path on `[0, t]` for `g`.
pub fn sample_path<R: Rng + ?Sized>(g: &DynamicsGraph, t: f64, rng: &mut R) -> Result<PermutationPath> {
    PathSampler::new(g)?.sample(t, rng)
}
