//! Model problems `-div(K grad u) = f` with Dirichlet data on the whole
//! boundary.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::geometry::Point2;

pub trait Problem {
    /// Constant diffusivity of the cell with the given centroid.
    fn diffusivity(&self, _centroid: Point2) -> f64 {
        1.0
    }

    fn source(&self, _p: Point2) -> f64 {
        0.0
    }

    /// Lets assembly skip load quadrature when `f` vanishes identically.
    fn zero_source(&self) -> bool {
        false
    }

    fn dirichlet(&self, p: Point2) -> f64;

    /// Gradient of the exact solution, when known.
    fn exact_gradient(&self, _p: Point2) -> Option<Result<Point2>> {
        None
    }

    /// A point where the exact gradient blows up; error quadrature is
    /// graded toward it.
    fn singular_point(&self) -> Option<Point2> {
        None
    }
}

/// Harmonic corner solution on `(-1,1)^2 \ (-1,0)^2`:
/// `u = r^(2/3) sin(2/3 (θ + π/2))`, `θ ∈ [-π/2, π]`.
#[derive(Clone, Copy, Debug, Default)]
pub struct LShape;

impl LShape {
    /// Polar angle on the branch `[-π/2, π]`.
    fn angle(p: Point2) -> f64 {
        let t = p.y.atan2(p.x);
        if t < -FRAC_PI_2 - 1e-15 {
            t + 2.0 * PI
        } else {
            t
        }
    }

    pub fn exact_solution(p: Point2) -> f64 {
        let r = p.norm();
        if r == 0.0 {
            return 0.0;
        }
        r.powf(2.0 / 3.0) * ((2.0 / 3.0) * (Self::angle(p) + FRAC_PI_2)).sin()
    }

    pub fn exact_gradient(p: Point2) -> Result<Point2> {
        let r = p.norm();
        if r < 1e-14 {
            return Err(Error::CornerSingularity { x: p.x, y: p.y });
        }
        let t = Self::angle(p);
        let phi = (2.0 / 3.0) * (t + FRAC_PI_2);
        let scale = (2.0 / 3.0) * r.powf(-1.0 / 3.0);
        let ur = scale * phi.sin();
        let ut = scale * phi.cos();
        let (s, c) = t.sin_cos();
        Ok(Point2::new(ur * c - ut * s, ur * s + ut * c))
    }
}

impl Problem for LShape {
    fn zero_source(&self) -> bool {
        true
    }

    fn dirichlet(&self, p: Point2) -> f64 {
        Self::exact_solution(p)
    }

    fn exact_gradient(&self, p: Point2) -> Option<Result<Point2>> {
        Some(Self::exact_gradient(p))
    }

    fn singular_point(&self) -> Option<Point2> {
        Some(Point2::new(0.0, 0.0))
    }
}

/// `u = a x + b y + c` with `f = 0`; the discrete solution is exact.
#[derive(Clone, Copy, Debug)]
pub struct LinearPatch {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LinearPatch {
    pub fn value(&self, p: Point2) -> f64 {
        self.a * p.x + self.b * p.y + self.c
    }
}

impl Problem for LinearPatch {
    fn zero_source(&self) -> bool {
        true
    }

    fn dirichlet(&self, p: Point2) -> f64 {
        self.value(p)
    }

    fn exact_gradient(&self, _p: Point2) -> Option<Result<Point2>> {
        Some(Ok(Point2::new(self.a, self.b)))
    }
}
