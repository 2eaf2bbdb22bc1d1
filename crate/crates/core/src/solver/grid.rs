use std::fmt;

use crate::error::{Error, Result};
use crate::system::Interval;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKind {
    Uniform,
    Dyadic { x0: f64 },
    Custom,
}

/// Panel breakpoints plus the Chebyshev order used on every panel.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    breakpoints: Vec<f64>,
    order: usize,
    kind: GridKind,
}

impl Grid {
    pub fn new(breakpoints: Vec<f64>, order: usize) -> Result<Self> {
        Self::with_kind(breakpoints, order, GridKind::Custom)
    }

    fn with_kind(breakpoints: Vec<f64>, order: usize, kind: GridKind) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::Invalid("a grid needs at least one panel".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) || breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::Invalid("grid breakpoints must be finite and strictly increasing".into()));
        }
        if order < 4 {
            return Err(Error::Invalid(format!("panel order {order} is below 4")));
        }
        Ok(Grid {
            breakpoints,
            order,
            kind,
        })
    }

    pub fn uniform(interval: Interval, panels: usize, order: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::Invalid("a grid needs at least one panel".into()));
        }
        let h = interval.len() / panels as f64;
        let mut bp: Vec<f64> = (0..panels).map(|i| interval.a + h * i as f64).collect();
        bp.push(interval.c);
        Self::with_kind(bp, order, GridKind::Uniform)
    }

    /// `2 m` panels (`m` on a side that touches an endpoint) clustered
    /// geometrically towards `x0`: breakpoints `x0 +- d (1/2)^(m - i)`, `i = 1..m`.
    pub fn dyadic(interval: Interval, m: usize, x0: f64, order: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Invalid("dyadic grid needs m >= 1".into()));
        }
        if !interval.contains(x0) {
            return Err(Error::Invalid(format!("cluster point {x0} is outside the interval")));
        }
        let mut bp = Vec::with_capacity(2 * m + 1);
        let left = x0 - interval.a;
        if left > 0.0 {
            bp.push(interval.a);
            for i in (1..m).rev() {
                bp.push(x0 - left * 0.5f64.powi((m - i) as i32));
            }
        }
        bp.push(x0);
        let right = interval.c - x0;
        if right > 0.0 {
            for i in 1..m {
                bp.push(x0 + right * 0.5f64.powi((m - i) as i32));
            }
            bp.push(interval.c);
        }
        Self::with_kind(bp, order, GridKind::Dyadic { x0 })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn panels(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn interval(&self) -> Interval {
        Interval {
            a: self.breakpoints[0],
            c: *self.breakpoints.last().unwrap(),
        }
    }

    pub fn span(&self, i: usize) -> (f64, f64) {
        (self.breakpoints[i], self.breakpoints[i + 1])
    }

    /// Panel containing `x`; breakpoints belong to the panel on their right
    /// except the last one.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let iv = self.interval();
        if !iv.contains(x) {
            return None;
        }
        let k = self.breakpoints.partition_point(|&b| b <= x);
        Some(k.saturating_sub(1).min(self.panels() - 1))
    }

    /// Every panel split in half.
    pub fn refined(&self) -> Grid {
        let mut bp = Vec::with_capacity(2 * self.breakpoints.len());
        for w in self.breakpoints.windows(2) {
            bp.push(w[0]);
            bp.push(0.5 * (w[0] + w[1]));
        }
        bp.push(*self.breakpoints.last().unwrap());
        let kind = match self.kind {
            GridKind::Uniform => GridKind::Uniform,
            _ => GridKind::Custom,
        };
        Grid {
            breakpoints: bp,
            order: self.order,
            kind,
        }
    }

    pub fn with_order(&self, order: usize) -> Result<Grid> {
        Self::with_kind(self.breakpoints.clone(), order, self.kind)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GridKind::Uniform => write!(f, "uniform:{}", self.panels()),
            GridKind::Dyadic { x0 } => write!(f, "dyadic:{}@{}", self.panels() / 2, x0),
            GridKind::Custom => write!(f, "custom:{}", self.panels()),
        }
    }
}
