use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use crate::bits::{Configuration, SubsetMask};
use crate::error::{invalid, Error, Result};

/// Largest `n` tabulated by default: a 16 MiB table at one byte per value.
pub const DEFAULT_TABULATION_CAP: usize = 24;

/// Hard ceiling for explicit tabulation requests.
pub const MAX_TABULATION: usize = 30;

const MAGIC: &[u8; 4] = b"XSBF";
const TABLE_VERSION: u16 = 1;

type Predicate = Arc<dyn Fn(&Configuration) -> bool + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Table(Arc<[i8]>),
    Predicate(Predicate),
}

/// `f : {0,1}^n → {−1,+1}`, either as a full truth table or as an event
/// predicate (`true` ↦ +1) for inputs too wide to tabulate.
///
/// Cloning is cheap; the table or predicate is shared.
#[derive(Clone)]
pub struct BooleanFunction {
    n: usize,
    repr: Repr,
    name: String,
    params: BTreeMap<String, String>,
}

impl fmt::Debug for BooleanFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BooleanFunction")
            .field("n", &self.n)
            .field("name", &self.name)
            .field("params", &self.params)
            .field("tabulated", &self.is_tabulated())
            .finish()
    }
}

impl BooleanFunction {
    /// Wrap a truth table of `2^n` entries, each exactly ±1, in mask order.
    pub fn from_table(n: usize, table: Vec<i8>) -> Result<Self> {
        if n == 0 || n > MAX_TABULATION {
            return Err(invalid(format!("tabulated width must be in 1..={MAX_TABULATION}, got {n}")));
        }
        if table.len() != 1usize << n {
            return Err(invalid(format!(
                "table for n = {n} needs {} entries, got {}",
                1usize << n,
                table.len()
            )));
        }
        if let Some(pos) = table.iter().position(|&v| v != 1 && v != -1) {
            return Err(invalid(format!("table entry {pos} is {}, not ±1", table[pos])));
        }
        Ok(Self {
            n,
            repr: Repr::Table(table.into()),
            name: "table".into(),
            params: BTreeMap::new(),
        })
    }

    /// Tabulate an event given on `u64` masks.
    pub fn tabulate(n: usize, event: impl Fn(u64) -> bool) -> Result<Self> {
        if n == 0 || n > MAX_TABULATION {
            return Err(invalid(format!("tabulated width must be in 1..={MAX_TABULATION}, got {n}")));
        }
        let table = (0..1u64 << n).map(|m| if event(m) { 1 } else { -1 }).collect();
        Self::from_table(n, table)
    }

    /// A predicate-form function. Spectral and exhaustive operations refuse it.
    pub fn from_predicate(
        n: usize,
        event: impl Fn(&Configuration) -> bool + Send + Sync + 'static,
    ) -> Result<Self> {
        if n == 0 {
            return Err(invalid("function width must be at least 1"));
        }
        Ok(Self {
            n,
            repr: Repr::Predicate(Arc::new(event)),
            name: "predicate".into(),
            params: BTreeMap::new(),
        })
    }

    /// Attach a family name and parameter record.
    pub fn named(mut self, name: impl Into<String>, params: BTreeMap<String, String>) -> Self {
        self.name = name.into();
        self.params = params;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &BTreeMap<String, String> {
        &self.params
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.repr, Repr::Table(_))
    }

    /// The truth table, or [`Error::NotTabulated`] naming `op`.
    pub fn table_for(&self, op: &'static str) -> Result<&[i8]> {
        match &self.repr {
            Repr::Table(t) => Ok(t),
            Repr::Predicate(_) => Err(Error::NotTabulated(op)),
        }
    }

    pub fn table(&self) -> Option<&[i8]> {
        match &self.repr {
            Repr::Table(t) => Some(t),
            Repr::Predicate(_) => None,
        }
    }

    /// `f(ω)`. Panics on a width mismatch; use [`Self::try_eval`] to check.
    #[inline]
    pub fn eval(&self, omega: &Configuration) -> i8 {
        debug_assert_eq!(omega.width(), self.n);
        match &self.repr {
            Repr::Table(t) => t[omega.mask().expect("tabulated width fits a mask") as usize],
            Repr::Predicate(p) => {
                if p(omega) {
                    1
                } else {
                    -1
                }
            }
        }
    }

    pub fn try_eval(&self, omega: &Configuration) -> Result<i8> {
        omega.check_width(self.n)?;
        Ok(self.eval(omega))
    }

    /// `f ∘ σ_B`: the same function read through flipped coordinates.
    pub fn compose_flip(&self, b: &SubsetMask) -> Result<Self> {
        b.check_width(self.n)?;
        let mut params = self.params.clone();
        params.insert("flip".into(), b.to_string());
        let name = format!("{}∘σ", self.name);
        let out = match &self.repr {
            Repr::Table(t) => {
                let bm = b.mask().expect("tabulated width fits a mask") as usize;
                let table = (0..t.len()).map(|m| t[m ^ bm]).collect();
                Self::from_table(self.n, table)?
            }
            Repr::Predicate(p) => {
                let p = Arc::clone(p);
                let b = b.clone();
                Self::from_predicate(self.n, move |w| p(&w.flip(&b).expect("width checked")))?
            }
        };
        Ok(out.named(name, params))
    }

    /// Exact mean `E[f]` under the uniform measure.
    pub fn mean(&self) -> Result<f64> {
        let t = self.table_for("mean")?;
        let s: i64 = t.iter().map(|&v| v as i64).sum();
        Ok(s as f64 / t.len() as f64)
    }

    /// Write the binary truth-table format: `"XSBF"`, version (u16 LE),
    /// `n` (u16 LE), then `2^n` signed bytes in mask order.
    pub fn write_table<W: Write>(&self, mut w: W) -> Result<()> {
        let t = self.table_for("write_table")?;
        w.write_all(MAGIC)?;
        w.write_all(&TABLE_VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u16).to_le_bytes())?;
        let bytes: Vec<u8> = t.iter().map(|&v| v as u8).collect();
        w.write_all(&bytes)?;
        Ok(())
    }

    /// Read the format written by [`Self::write_table`].
    pub fn read_table<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 8];
        r.read_exact(&mut header)
            .map_err(|_| Error::Format("truncated header".into()))?;
        if &header[..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != TABLE_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n = u16::from_le_bytes([header[6], header[7]]) as usize;
        if n == 0 || n > MAX_TABULATION {
            return Err(Error::Format(format!("width {n} out of range")));
        }
        let mut bytes = vec![0u8; 1 << n];
        r.read_exact(&mut bytes)
            .map_err(|_| Error::Format("truncated table".into()))?;
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::Format("trailing bytes after table".into()));
        }
        let table = bytes.into_iter().map(|b| b as i8).collect();
        Self::from_table(n, table).map_err(|e| Error::Format(e.to_string()))
    }
}
