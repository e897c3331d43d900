//! Piecewise-linear shape of the 1-D reflected proximity operator of a
//! piecewise-linear function.
//!
//! With `s = sqrt(eps) * a`, a smooth piece of slope `m` is traced by the pair
//! `u(x) = s x + m / s`, `D(u(x)) = s x − m / s`, i.e. the +1-sloped line
//! `D(u) = u − 2m / s`. A breakpoint `x_k` contributes the −1-sloped line
//! `D(u) = 2 s x_k − u` between `s x_k + m_left / s` and `s x_k + m_right / s`.

use alloc::vec::Vec;

use crate::contraction::h;
use crate::error::{Error, Result};
use crate::problem::PiecewiseLinear1D;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentOrigin {
    /// Smooth piece `j` of the function (slope `m_j`).
    Piece(usize),
    /// Breakpoint `k`.
    Kink(usize),
}

/// `D(u) = slope * u + intercept` for `u` in `[start, end]`; the outer segments
/// extend to infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub slope: f64,
    pub intercept: f64,
    pub origin: SegmentOrigin,
}

impl Segment {
    pub fn eval(&self, u: f64) -> f64 {
        self.slope * u + self.intercept
    }
}

/// Slope of the operator at a point; set-valued at segment junctions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope {
    Single(f64),
    Junction { left: f64, right: f64 },
}

impl Slope {
    pub fn contains(&self, v: f64) -> bool {
        match *self {
            Slope::Single(s) => s == v,
            Slope::Junction { left, right } => left.min(right) <= v && v <= left.max(right),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseOperator {
    segments: Vec<Segment>,
    function: PiecewiseLinear1D,
    scale: f64,
    eps: f64,
}

impl StaircaseOperator {
    pub fn build(function: &PiecewiseLinear1D, scale: f64, eps: f64) -> Result<Self> {
        if !(scale != 0.0 && scale.is_finite()) {
            return Err(Error::InvalidPiecewise("constraint coefficient must be non-zero".into()));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidPiecewise("augmentation must be positive".into()));
        }
        let s = libm::sqrt(eps) * scale;
        let xs = function.breakpoints();
        let ms = function.slopes();
        let v = |k: usize, j: usize| s * xs[k] + ms[j] / s;
        // u(x) runs towards +inf or -inf with x depending on the sign of s
        let far = f64::INFINITY.copysign(s);

        // segments in increasing x order, as (u at left x-end, u at right x-end)
        let mut raw: Vec<(f64, f64, f64, f64, SegmentOrigin)> = Vec::new();
        for j in 0..ms.len() {
            let from = if j == 0 { -far } else { v(j - 1, j) };
            let to = if j == xs.len() { far } else { v(j, j) };
            raw.push((from, to, 1.0, -2.0 * ms[j] / s, SegmentOrigin::Piece(j)));
            if j < xs.len() {
                let (a, b) = (v(j, j), v(j, j + 1));
                if a != b {
                    raw.push((a, b, -1.0, 2.0 * s * xs[j], SegmentOrigin::Kink(j)));
                }
            }
        }

        let mut segments: Vec<Segment> = raw
            .into_iter()
            .map(|(a, b, slope, intercept, origin)| Segment {
                start: a.min(b),
                end: a.max(b),
                slope,
                intercept,
                origin,
            })
            .collect();
        segments.sort_by(|x, y| x.start.total_cmp(&y.start));

        // collinear neighbours (equal slopes across a breakpoint) merge into one line
        let mut merged: Vec<Segment> = Vec::with_capacity(segments.len());
        for seg in segments {
            if let Some(last) = merged.last_mut() {
                if last.slope == seg.slope
                    && (last.intercept - seg.intercept).abs() <= 1e-12 * (1.0 + last.intercept.abs())
                {
                    last.end = seg.end;
                    continue;
                }
            }
            merged.push(seg);
        }

        Ok(Self { segments: merged, function: function.clone(), scale, eps })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn function(&self) -> &PiecewiseLinear1D {
        &self.function
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn locate(&self, u: f64) -> usize {
        let idx = self.segments.partition_point(|s| s.end < u);
        idx.min(self.segments.len() - 1)
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.segments[self.locate(u)].eval(u)
    }

    /// Slope at `u`; a pair when `u` is exactly a junction.
    pub fn slope(&self, u: f64) -> Slope {
        self.slope_with_tolerance(u, 0.0)
    }

    /// Slope at `u`, reporting a junction when `u` lies within `tol` of one.
    pub fn slope_with_tolerance(&self, u: f64, tol: f64) -> Slope {
        let k = self.locate(u);
        let seg = &self.segments[k];
        if k > 0 && (u - seg.start).abs() <= tol {
            return Slope::Junction { left: self.segments[k - 1].slope, right: seg.slope };
        }
        if k + 1 < self.segments.len() && (seg.end - u).abs() <= tol {
            return Slope::Junction { left: seg.slope, right: self.segments[k + 1].slope };
        }
        Slope::Single(seg.slope)
    }
}

/// Slope of the reflected operator along a smooth piece with second derivative
/// `curvature`: `h(f'' / (eps a²))`.
pub fn smooth_piece_slope(curvature: f64, eps: f64, scale: f64) -> f64 {
    h(curvature / (eps * scale * scale))
}
