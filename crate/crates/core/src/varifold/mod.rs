//! Discrete one-dimensional varifolds carried by networks.

mod brakke;
mod test_fn;

use serde::{Deserialize, Serialize};

use crate::netgeom::{Network, Point2};

pub use brakke::{
    brakke_residual, brakke_terms, forcing_term, vertex_curvatures, BrakkeTerms, ForcingTerm,
    VertexSample,
};
pub(crate) use brakke::{time_nodes, trapezoid};
pub use test_fn::{FnTest, Scaled, SpaceTimeTest, TestFunction, C_HAT, C_RAD};

/// Closed disc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point2,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point2, radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.dist(self.center) <= self.radius
    }

    /// Parameter interval of `a + s (b - a)`, `s` in `[0, 1]`, lying in the ball.
    pub fn clip_segment(&self, a: Point2, b: Point2) -> Option<(f64, f64)> {
        let d = b - a;
        let f = a - self.center;
        let qa = d.norm_sq();
        if qa == 0.0 {
            return None;
        }
        let qb = f.dot(d);
        let qc = f.norm_sq() - self.radius * self.radius;
        let disc = qb * qb - qa * qc;
        if disc <= 0.0 {
            return None;
        }
        let root = disc.sqrt();
        // Stable roots of qa s^2 + 2 qb s + qc.
        let q = -(qb + qb.signum() * root);
        let (mut s0, mut s1) = if q == 0.0 {
            (-root / qa, root / qa)
        } else {
            (q / qa, qc / q)
        };
        if s0 > s1 {
            std::mem::swap(&mut s0, &mut s1);
        }
        let (lo, hi) = (s0.max(0.0), s1.min(1.0));
        (hi > lo).then_some((lo, hi))
    }
}

/// A straight piece of the support: `length` units centered at `center`
/// along the unit vector `tangent`, carried with integer multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub center: Point2,
    pub tangent: Point2,
    pub length: f64,
    pub multiplicity: u32,
}

impl Atom {
    pub fn weight(&self) -> f64 {
        self.length * self.multiplicity as f64
    }

    pub fn endpoints(&self) -> (Point2, Point2) {
        let half = self.tangent * (0.5 * self.length);
        (self.center - half, self.center + half)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiscreteVarifold {
    pub atoms: Vec<Atom>,
}

/// Rank-one projection `tau tau^T` contracted with the Jacobian `dg`
/// (`dg[i][j] = d g_i / d x_j`).
#[inline]
fn tangential_divergence(tau: Point2, dg: [[f64; 2]; 2]) -> f64 {
    let t = [tau.x, tau.y];
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            s += t[i] * dg[i][j] * t[j];
        }
    }
    s
}

impl DiscreteVarifold {
    /// One atom per segment of `net`, each clipped to `clip` when given.
    pub fn from_network(net: &Network, clip: Option<&Ball>) -> Self {
        let mut atoms = Vec::with_capacity(net.node_count());
        for c in &net.curves {
            for (a, b) in c.segments() {
                let (p, q) = match clip {
                    None => (a, b),
                    Some(ball) => match ball.clip_segment(a, b) {
                        Some((s0, s1)) => (a.lerp(b, s0), a.lerp(b, s1)),
                        None => continue,
                    },
                };
                let length = p.dist(q);
                if let Some(tangent) = (q - p).normalized() {
                    atoms.push(Atom {
                        center: (p + q) * 0.5,
                        tangent,
                        length,
                        multiplicity: 1,
                    });
                }
            }
        }
        DiscreteVarifold { atoms }
    }

    /// Exact restriction to a ball.
    pub fn restrict(&self, ball: &Ball) -> Self {
        let atoms = self
            .atoms
            .iter()
            .filter_map(|atom| {
                let (a, b) = atom.endpoints();
                let (s0, s1) = ball.clip_segment(a, b)?;
                let (p, q) = (a.lerp(b, s0), a.lerp(b, s1));
                Some(Atom {
                    center: (p + q) * 0.5,
                    length: p.dist(q),
                    ..*atom
                })
            })
            .collect();
        DiscreteVarifold { atoms }
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(Atom::weight).sum()
    }

    /// `||V||(phi)` by midpoint quadrature.
    pub fn weigh(&self, phi: impl Fn(Point2) -> f64) -> f64 {
        self.atoms.iter().map(|a| phi(a.center) * a.weight()).sum()
    }

    /// `delta V(g) = int grad g . S dV` for a vector field with Jacobian `dg`.
    pub fn first_variation(&self, dg: impl Fn(Point2) -> [[f64; 2]; 2]) -> f64 {
        self.atoms
            .iter()
            .map(|a| tangential_divergence(a.tangent, dg(a.center)) * a.weight())
            .sum()
    }

    /// Largest `||V||(B_r(x)) / (2r)` over the given centers and radii.
    pub fn mass_ratio_sup(&self, centers: &[Point2], radii: &[f64]) -> f64 {
        let mut best: f64 = 0.0;
        for &c in centers {
            for &r in radii {
                let m = self.restrict(&Ball::new(c, r)).mass();
                best = best.max(m / (2.0 * r));
            }
        }
        best
    }
}

/// `to_varifold` of the operation list.
pub fn to_varifold(net: &Network, clip: Option<&Ball>) -> DiscreteVarifold {
    DiscreteVarifold::from_network(net, clip)
}

/// `||V||(phi)` by midpoint quadrature.
pub fn weigh(v: &DiscreteVarifold, phi: impl Fn(Point2) -> f64) -> f64 {
    v.weigh(phi)
}

pub fn first_variation(v: &DiscreteVarifold, dg: impl Fn(Point2) -> [[f64; 2]; 2]) -> f64 {
    v.first_variation(dg)
}

/// Mass defects of a triod-like varifold against the standard triod.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthDefect {
    /// `H^1(spt V cap B_1) - 3`.
    pub mass: f64,
    /// `||V||(phi_rad^2) - c`.
    pub phi_rad: f64,
    /// `alpha mu + beta^2`, the quantity both defects are compared against.
    pub scale: f64,
}

pub fn length_defect(v: &DiscreteVarifold, mu: f64, alpha: f64, beta: f64) -> LengthDefect {
    let v2 = v.restrict(&Ball::new(Point2::ZERO, 2.0));
    let mass = v2.restrict(&Ball::new(Point2::ZERO, 1.0)).mass() - 3.0;
    let phi_rad = v2.weigh(|x| TestFunction::PhiRad.eval(x).powi(2)) - C_RAD;
    LengthDefect {
        mass,
        phi_rad,
        scale: alpha * mu + beta * beta,
    }
}

#[cfg(test)]
mod tests;
