use std::f64::consts::PI;

use crate::netgeom::{Point2, TriodFrame};

/// Quintic smoothstep `6t^5 - 15t^4 + 10t^3` clamped to `[0, 1]`, and its derivative.
fn smoothstep(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0)
    } else {
        let t2 = t * t;
        (
            t2 * t * (10.0 + t * (-15.0 + 6.0 * t)),
            30.0 * t2 * (1.0 - t) * (1.0 - t),
        )
    }
}

/// Radial bump equal to 1 on `B_inner`, 0 outside `B_outer`; value and gradient.
fn radial_bump(x: Point2, inner: f64, outer: f64) -> (f64, Point2) {
    let r = x.norm();
    let width = outer - inner;
    let (s, ds) = smoothstep((r - inner) / width);
    let grad = if ds == 0.0 || r == 0.0 {
        Point2::ZERO
    } else {
        x * (-ds / (width * r))
    };
    (1.0 - s, grad)
}

/// `int phi_hat(s, 0) ds` for the smoothstep profile.
pub const C_HAT: f64 = 0.75;

/// `int_J phi_rad^2 dH^1` for the smoothstep profile, `3 (1 + (1/2) int_0^1 S^2)`.
pub const C_RAD: f64 = 1105.0 / 308.0;

/// The fixed test functions of the triod analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    /// Radial cutoff, 1 on `B_{1/4}`, supported in `B_{1/2}`.
    PhiHat,
    /// `phi_hat` centered at distance `r` along ray `j` (1, 2 or 3) of `frame`,
    /// scaled by `r`.
    PhiJ { j: usize, frame: TriodFrame, r: f64 },
    /// Radial cutoff, 1 on `B_1`, supported in `B_{3/2}`.
    PhiRad,
}

impl TestFunction {
    pub fn phi_j(j: usize, frame: TriodFrame, r: f64) -> Self {
        assert!((1..=3).contains(&j), "ray index must be 1, 2 or 3");
        assert!(r > 0.0, "scale must be positive");
        TestFunction::PhiJ { j, frame, r }
    }

    /// Value and gradient at `x`.
    pub fn eval_grad(&self, x: Point2) -> (f64, Point2) {
        match *self {
            TestFunction::PhiHat => radial_bump(x, 0.25, 0.5),
            TestFunction::PhiRad => radial_bump(x, 1.0, 1.5),
            TestFunction::PhiJ { j, frame, r } => {
                let alpha = frame.theta() + 2.0 * PI * (j - 1) as f64 / 3.0;
                let z = ((x - frame.xi) / r).rotate(-alpha) - Point2::new(1.0, 0.0);
                let (v, g) = radial_bump(z, 0.25, 0.5);
                (v, g.rotate(alpha) / r)
            }
        }
    }

    pub fn eval(&self, x: Point2) -> f64 {
        self.eval_grad(x).0
    }

    pub fn grad(&self, x: Point2) -> Point2 {
        self.eval_grad(x).1
    }

    /// Radius of a ball about the origin containing the support.
    pub fn support_radius(&self) -> f64 {
        match *self {
            TestFunction::PhiHat => 0.5,
            TestFunction::PhiRad => 1.5,
            TestFunction::PhiJ { frame, r, .. } => frame.xi.norm() + 1.5 * r,
        }
    }
}

/// A nonnegative space-time test function with its spatial gradient and
/// time derivative.
pub trait SpaceTimeTest: Sync {
    fn eval(&self, x: Point2, t: f64) -> f64;
    fn grad(&self, x: Point2, t: f64) -> Point2;
    fn time_derivative(&self, _x: Point2, _t: f64) -> f64 {
        0.0
    }
}

impl SpaceTimeTest for TestFunction {
    fn eval(&self, x: Point2, _t: f64) -> f64 {
        TestFunction::eval(self, x)
    }

    fn grad(&self, x: Point2, _t: f64) -> Point2 {
        TestFunction::grad(self, x)
    }
}

/// A time-independent test function composed with `x -> (x - center) / scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub phi: TestFunction,
    pub center: Point2,
    pub scale: f64,
}

impl SpaceTimeTest for Scaled {
    fn eval(&self, x: Point2, _t: f64) -> f64 {
        self.phi.eval((x - self.center) / self.scale)
    }

    fn grad(&self, x: Point2, _t: f64) -> Point2 {
        self.phi.grad((x - self.center) / self.scale) / self.scale
    }
}

/// Space-time test function assembled from closures.
pub struct FnTest<F, G, H> {
    pub value: F,
    pub grad: G,
    pub time_derivative: H,
}

impl<F, G, H> SpaceTimeTest for FnTest<F, G, H>
where
    F: Fn(Point2, f64) -> f64 + Sync,
    G: Fn(Point2, f64) -> Point2 + Sync,
    H: Fn(Point2, f64) -> f64 + Sync,
{
    fn eval(&self, x: Point2, t: f64) -> f64 {
        (self.value)(x, t)
    }

    fn grad(&self, x: Point2, t: f64) -> Point2 {
        (self.grad)(x, t)
    }

    fn time_derivative(&self, x: Point2, t: f64) -> f64 {
        (self.time_derivative)(x, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn profile_constants_match_quadrature() {
        let phi_hat = |s: f64| TestFunction::PhiHat.eval(Point2::new(s, 0.0));
        let c_hat = simpson(phi_hat, -0.5, 0.5, 20000);
        assert!((c_hat - C_HAT).abs() < 1e-10);
        assert!(C_HAT > 0.5 && C_HAT < 1.0);

        let rad2 = |s: f64| TestFunction::PhiRad.eval(Point2::new(s, 0.0)).powi(2);
        let c = 3.0 * simpson(rad2, 0.0, 1.5, 30000);
        assert!((c - C_RAD).abs() < 1e-10, "{c}");
        assert!(C_RAD > 3.0 && C_RAD < 4.5);
    }

    #[test]
    fn bump_shape_and_gradient_bounds() {
        let mut max_hat: f64 = 0.0;
        let mut max_rad: f64 = 0.0;
        for i in 0..=2000 {
            let r = i as f64 * 1e-3;
            let x = Point2::from_angle(0.3 * i as f64) * r;
            let (v, g) = TestFunction::PhiHat.eval_grad(x);
            assert!((0.0..=1.0).contains(&v));
            if r <= 0.25 {
                assert_eq!(v, 1.0);
            }
            if r >= 0.5 {
                assert_eq!(v, 0.0);
            }
            max_hat = max_hat.max(g.norm());
            let (v, g) = TestFunction::PhiRad.eval_grad(x);
            if r <= 1.0 {
                assert_eq!(v, 1.0);
            }
            if r >= 1.5 {
                assert_eq!(v, 0.0);
            }
            max_rad = max_rad.max(g.norm());
        }
        assert!(max_hat <= 8.0 && max_hat > 7.0);
        assert!(max_rad <= 4.0 && max_rad > 3.5);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let frame = TriodFrame::new(0.4, Point2::new(0.2, -0.1));
        let fns = [
            TestFunction::PhiHat,
            TestFunction::PhiRad,
            TestFunction::phi_j(2, frame, 0.7),
        ];
        let e = 1e-6;
        for f in fns {
            for k in 0..200 {
                let x = Point2::new(-1.5 + 0.013 * k as f64, 0.9 - 0.011 * k as f64);
                let g = f.grad(x);
                let fd = Point2::new(
                    (f.eval(x + Point2::new(e, 0.0)) - f.eval(x - Point2::new(e, 0.0))) / (2.0 * e),
                    (f.eval(x + Point2::new(0.0, e)) - f.eval(x - Point2::new(0.0, e))) / (2.0 * e),
                );
                assert!((g - fd).norm() < 1e-5, "{f:?} at {x:?}");
            }
        }
    }

    #[test]
    fn phi_j_sits_on_its_ray() {
        let frame = TriodFrame::new(0.2, Point2::new(1.0, 2.0));
        for j in 1..=3 {
            let f = TestFunction::phi_j(j, frame, 2.0);
            assert_eq!(f.eval(frame.xi + frame.direction(j - 1) * 2.0), 1.0);
            assert_eq!(f.eval(frame.xi), 0.0);
        }
        let id = TestFunction::phi_j(1, TriodFrame::IDENTITY, 1.0);
        for k in 0..50 {
            let x = Point2::new(0.02 * k as f64, 0.3);
            assert_eq!(
                id.eval(x),
                TestFunction::PhiHat.eval(x - Point2::new(1.0, 0.0))
            );
        }
    }
}
