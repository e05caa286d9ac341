//! Convex even weights `Q` and their textual descriptors.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// How the minimizing constant of `c ↦ ⟨Q(φ - c)⟩` can be found without a search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FastPath {
    /// `Q(t) = t²`: the mean.
    Mean,
    /// `Q(t) = |t|`: a weighted median.
    Median,
    None,
}

/// A user supplied weight. The caller vouches for convexity and evenness.
#[derive(Clone)]
pub struct CustomWeight {
    pub name: String,
    pub eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub strictly_convex: bool,
}

impl fmt::Debug for CustomWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomWeight")
            .field("name", &self.name)
            .field("strictly_convex", &self.strictly_convex)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub enum WeightKind {
    /// `|t|^p`, `p ≥ 1`.
    Power(f64),
    /// `e^{|t|}`.
    Exp,
    Cosh,
    /// `Q(t) + t²/n`.
    Regularized { base: Box<ConvexWeight>, n: u32 },
    Custom(CustomWeight),
}

#[derive(Clone, Debug)]
pub struct ConvexWeight {
    kind: WeightKind,
    strictly_convex: bool,
    fast_path: FastPath,
}

impl ConvexWeight {
    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::Argument(format!("power weight needs p >= 1, got {p}")));
        }
        let fast_path = if p == 2.0 {
            FastPath::Mean
        } else if p == 1.0 {
            FastPath::Median
        } else {
            FastPath::None
        };
        Ok(ConvexWeight {
            kind: WeightKind::Power(p),
            strictly_convex: p > 1.0,
            fast_path,
        })
    }

    pub fn exp() -> Self {
        ConvexWeight { kind: WeightKind::Exp, strictly_convex: true, fast_path: FastPath::None }
    }

    pub fn cosh() -> Self {
        ConvexWeight { kind: WeightKind::Cosh, strictly_convex: true, fast_path: FastPath::None }
    }

    /// `Q_n(t) = Q(t) + t²/n`.
    pub fn regularized(&self, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("regularization index must be at least 1".into()));
        }
        Ok(ConvexWeight {
            kind: WeightKind::Regularized { base: Box::new(self.clone()), n },
            strictly_convex: true,
            fast_path: FastPath::None,
        })
    }

    pub fn custom(
        name: impl Into<String>,
        strictly_convex: bool,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ConvexWeight {
            kind: WeightKind::Custom(CustomWeight {
                name: name.into(),
                eval: Arc::new(eval),
                strictly_convex,
            }),
            strictly_convex,
            fast_path: FastPath::None,
        }
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn strictly_convex(&self) -> bool {
        self.strictly_convex
    }

    pub fn fast_path(&self) -> FastPath {
        self.fast_path
    }

    /// `Q(t)`. May be infinite for huge arguments; see [`ConvexWeight::try_eval`].
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            WeightKind::Power(p) => {
                let a = t.abs();
                if *p == 2.0 {
                    a * a
                } else if *p == 1.0 {
                    a
                } else {
                    a.powf(*p)
                }
            }
            WeightKind::Exp => t.abs().exp(),
            WeightKind::Cosh => t.cosh(),
            WeightKind::Regularized { base, n } => base.eval(t) + t * t / f64::from(*n),
            WeightKind::Custom(c) => (c.eval)(t),
        }
    }

    pub fn try_eval(&self, t: f64) -> Result<f64> {
        let y = self.eval(t);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Evaluation { weight: self.descriptor(), value: t })
        }
    }

    /// Solves `Q(t) = y` for `t ≥ 0`; `None` when `y < Q(0)` or no finite
    /// solution is found.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        let q0 = self.eval(0.0);
        if !(y >= q0) {
            return None;
        }
        if y == q0 {
            return Some(0.0);
        }
        let mut hi = 1.0;
        while self.eval(hi) < y {
            hi *= 2.0;
            if hi > 1e6 {
                return None;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(hi)
    }

    /// Textual form accepted by [`ConvexWeight::parse`]: `power:2`, `exp`,
    /// `cosh`, `reg:exp:10`, `reg:power:1:10`.
    pub fn descriptor(&self) -> String {
        match &self.kind {
            WeightKind::Power(p) => format!("power:{p}"),
            WeightKind::Exp => "exp".into(),
            WeightKind::Cosh => "cosh".into(),
            WeightKind::Regularized { base, n } => format!("reg:{}:{n}", base.descriptor()),
            WeightKind::Custom(c) => format!("custom:{}", c.name),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        Self::parse_parts(&parts).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("weight '{s}': {msg}")),
            other => other,
        })
    }

    fn parse_parts(parts: &[&str]) -> Result<Self> {
        match parts {
            ["power", p] => {
                let p: f64 = p.parse().map_err(|_| Error::Parse(format!("bad exponent '{p}'")))?;
                Self::power(p)
            }
            ["exp"] => Ok(Self::exp()),
            ["cosh"] => Ok(Self::cosh()),
            ["reg", base @ .., n] if !base.is_empty() => {
                let n: u32 = n.parse().map_err(|_| Error::Parse(format!("bad index '{n}'")))?;
                Self::parse_parts(base)?.regularized(n)
            }
            _ => Err(Error::Parse("expected power:P, exp, cosh or reg:<weight>:N".into())),
        }
    }
}

impl fmt::Display for ConvexWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}
