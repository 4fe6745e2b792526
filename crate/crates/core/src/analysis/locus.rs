//! Closed-loop root loci over `alpha` or `g_dob`, and bisection on the
//! stability boundary.
//!
//! Sweep points are independent, so [`root_locus`] evaluates them on the
//! current rayon pool; rows come back in parameter order and are bitwise
//! identical to a sequential run.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dob::{
    inner_open_loop_ct, inner_open_loop_dt, outer_open_loop_ct, outer_open_loop_dt, DObParams, OuterGains,
};
use crate::error::{Error, Result};
use crate::tf::{classify_poles, TransferFunction};

/// Relative bracket width at which [`critical_parameter`] stops.
pub const CRITICAL_REL_WIDTH: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoopKind {
    InnerContinuous,
    InnerDiscrete,
    OuterContinuous,
    OuterDiscrete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweptParam {
    Alpha,
    GDob,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// Rebuilds an open loop with one parameter replaced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopBuilder {
    pub kind: LoopKind,
    pub params: DObParams,
    pub gains: OuterGains,
}

impl LoopBuilder {
    pub fn new(kind: LoopKind, params: DObParams, gains: OuterGains) -> Self {
        LoopBuilder { kind, params, gains }
    }

    pub fn open_loop(&self, param: SweptParam, value: f64) -> Result<TransferFunction> {
        let p = match param {
            SweptParam::Alpha => self.params.with_alpha(value)?,
            SweptParam::GDob => self.params.with_g_dob(value)?,
        };
        match self.kind {
            LoopKind::InnerContinuous => inner_open_loop_ct(&p),
            LoopKind::InnerDiscrete => inner_open_loop_dt(&p),
            LoopKind::OuterContinuous => outer_open_loop_ct(&p, &self.gains),
            LoopKind::OuterDiscrete => outer_open_loop_dt(&p, &self.gains),
        }
    }

    /// Closed-loop roots of `1 + L = 0` and whether they are all stable.
    pub fn closed_loop(&self, param: SweptParam, value: f64) -> Result<LocusRow> {
        let at = |e: Error| Error::AtParameter { value, source: Box::new(e) };
        let l = self.open_loop(param, value).map_err(at)?;
        let char_poly = l.characteristic();
        let roots = char_poly.roots().map_err(at)?;
        let stable = classify_poles(l.domain(), &roots).is_stable();
        let max_residual = roots.iter().map(|&r| loop_residual(&l, r)).fold(0.0, f64::max);
        Ok(LocusRow { param: value, roots, stable, max_residual })
    }

    pub fn is_stable_at(&self, param: SweptParam, value: f64) -> Result<bool> {
        Ok(self.closed_loop(param, value)?.stable)
    }
}

/// `|1 + L(r)|`, computed as `|den(r) + num(r)| / max(|den(r)|, |num(r)|)`
/// so it stays bounded next to open-loop poles.
pub fn loop_residual(l: &TransferFunction, r: Complex64) -> f64 {
    let n = l.num().eval_complex(r);
    let d = l.den().eval_complex(r);
    let scale = n.norm().max(d.norm());
    if scale == 0.0 {
        0.0
    } else {
        (n + d).norm() / scale
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sweep {
    pub param: SweptParam,
    pub start: f64,
    pub end: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Sweep {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.start > 0.0 && self.end > 0.0 && self.start.is_finite() && self.end.is_finite()) {
            return Err(Error::invalid("sweep range must be positive and finite"));
        }
        if self.count < 2 {
            return Err(Error::invalid("sweep count must be at least 2"));
        }
        let n = self.count - 1;
        Ok((0..self.count)
            .map(|i| {
                if i == 0 {
                    return self.start;
                }
                if i == n {
                    return self.end;
                }
                let f = i as f64 / n as f64;
                match self.spacing {
                    Spacing::Linear => self.start + (self.end - self.start) * f,
                    Spacing::Log => (self.start.ln() + (self.end.ln() - self.start.ln()) * f).exp(),
                }
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocusRow {
    pub param: f64,
    pub roots: Vec<Complex64>,
    pub stable: bool,
    /// Largest `|1 + L(root)|` over the row's roots.
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootLocusTable {
    pub param: SweptParam,
    pub rows: Vec<LocusRow>,
}

impl RootLocusTable {
    /// Indices `i` where `rows[i].stable != rows[i + 1].stable`.
    pub fn stability_flips(&self) -> Vec<usize> {
        self.rows.windows(2).enumerate().filter(|(_, w)| w[0].stable != w[1].stable).map(|(i, _)| i).collect()
    }
}

pub fn root_locus(builder: &LoopBuilder, sweep: &Sweep) -> Result<RootLocusTable> {
    let values = sweep.values()?;
    let rows: Vec<Result<LocusRow>> = values.par_iter().map(|&v| builder.closed_loop(sweep.param, v)).collect();
    Ok(RootLocusTable { param: sweep.param, rows: rows.into_iter().collect::<Result<Vec<_>>>()? })
}

/// Bisects (geometrically, parameters being positive) between two values
/// with opposite stability verdicts until the bracket's relative width is
/// below [`CRITICAL_REL_WIDTH`]; returns the bracket midpoint.
pub fn critical_parameter(builder: &LoopBuilder, param: SweptParam, bracket: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = if bracket.0 <= bracket.1 { bracket } else { (bracket.1, bracket.0) };
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(Error::invalid("bracket must be positive and finite"));
    }
    let lo_stable = builder.is_stable_at(param, lo)?;
    if lo_stable == builder.is_stable_at(param, hi)? {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > CRITICAL_REL_WIDTH * hi {
        let mid = (lo * hi).sqrt();
        if builder.is_stable_at(param, mid)? == lo_stable {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
