use std::fmt;
use std::str::FromStr;

use gtrace_core::numerics::{lin_space, log_space};
use serde::{Deserialize, Serialize};

/// `lo..hi[:count]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RangeSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: Option<usize>,
}

impl RangeSpec {
    pub fn new(lo: f64, hi: f64, count: Option<usize>) -> Self {
        RangeSpec { lo, hi, count }
    }

    pub fn linear(&self, default_count: usize) -> Vec<f64> {
        lin_space(self.lo, self.hi, self.count.unwrap_or(default_count))
    }

    /// Geometric spacing; both ends must be positive.
    pub fn logarithmic(&self, default_count: usize) -> Result<Vec<f64>, String> {
        if !(self.lo > 0.0 && self.hi > 0.0) {
            return Err(format!("range {self} must be positive for logarithmic spacing"));
        }
        Ok(log_space(self.lo, self.hi, self.count.unwrap_or(default_count)))
    }
}

impl FromStr for RangeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (bounds, count) = match s.rsplit_once(':') {
            Some((b, c)) => {
                let n: usize = c.trim().parse().map_err(|_| format!("bad count in range `{s}`"))?;
                if n == 0 {
                    return Err(format!("range `{s}` has zero points"));
                }
                (b, Some(n))
            }
            None => (s, None),
        };
        let (lo, hi) =
            bounds.split_once("..").ok_or_else(|| format!("range `{s}` is not of the form lo..hi[:count]"))?;
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("bad bound `{x}` in range `{s}`"));
        let (lo, hi) = (num(lo)?, num(hi)?);
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(format!("range `{s}` must satisfy lo ≤ hi"));
        }
        if lo == hi && count.is_some_and(|n| n > 1) {
            return Err(format!("range `{s}` is a single point"));
        }
        Ok(RangeSpec { lo, hi, count })
    }
}

impl TryFrom<String> for RangeSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<RangeSpec> for String {
    fn from(r: RangeSpec) -> String {
        r.to_string()
    }
}

impl fmt::Display for RangeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}..{:?}", self.lo, self.hi)?;
        if let Some(n) = self.count {
            write!(f, ":{n}")?;
        }
        Ok(())
    }
}
