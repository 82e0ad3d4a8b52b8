//! Analytic solid primitives: containment, distance, surface area and
//! uniform surface sampling.
//!
//! All solids live in the normalized cube [-0.5, 0.5]^3 and treat their
//! boundary as inside (closed predicates); `strictly_contains` is the open
//! variant used to decide whether a surface point is buried in another solid.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::UnitSphere;

use crate::rng::uniform;

pub type Point = [f64; 3];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// The two axes spanning the plane perpendicular to this one.
    fn cross(self) -> (usize, usize) {
        match self {
            Axis::X => (1, 2),
            Axis::Y => (0, 2),
            Axis::Z => (0, 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Solid {
    Box {
        center: Point,
        half: [f64; 3],
    },
    /// Circular cylinder with its axis parallel to a coordinate axis.
    Cylinder {
        axis: Axis,
        center: Point,
        half_len: f64,
        radius: f64,
    },
    Sphere {
        center: Point,
        radius: f64,
    },
    /// Tube of radius `tube_radius` around an arc of the circle of radius
    /// `ring_radius` in the x-y plane through `center`; the arc covers ring
    /// angles (atan2 of the in-plane offset) in `[a0, a1]`.
    TorusArc {
        center: Point,
        ring_radius: f64,
        tube_radius: f64,
        a0: f64,
        a1: f64,
    },
}

impl Solid {
    pub fn contains(&self, p: Point) -> bool {
        self.inside(p, false)
    }

    pub fn strictly_contains(&self, p: Point) -> bool {
        self.inside(p, true)
    }

    fn inside(&self, p: Point, strict: bool) -> bool {
        let le = |a: f64, b: f64| if strict { a < b } else { a <= b };
        match *self {
            Solid::Box { center, half } => (0..3).all(|i| le((p[i] - center[i]).abs(), half[i])),
            Solid::Cylinder {
                axis,
                center,
                half_len,
                radius,
            } => {
                let a = axis.index();
                let (u, v) = axis.cross();
                let r2 = (p[u] - center[u]).powi(2) + (p[v] - center[v]).powi(2);
                le(r2, radius * radius) && le((p[a] - center[a]).abs(), half_len)
            }
            Solid::Sphere { center, radius } => {
                let d2 = (0..3).map(|i| (p[i] - center[i]).powi(2)).sum::<f64>();
                le(d2, radius * radius)
            }
            Solid::TorusArc {
                center,
                ring_radius,
                tube_radius,
                a0,
                a1,
            } => {
                let qx = p[0] - center[0];
                let qy = p[1] - center[1];
                let qz = p[2] - center[2];
                let rho = qx.hypot(qy);
                let d = (rho - ring_radius).hypot(qz);
                let angle = qy.atan2(qx);
                le(d, tube_radius) && le(a0, angle) && le(angle, a1)
            }
        }
    }

    /// Euclidean distance from `p` to the solid (0 if inside). The torus arc
    /// ignores its angular clamp, which only loosens the nearest-part
    /// fallback for points outside every part.
    pub fn distance(&self, p: Point) -> f64 {
        match *self {
            Solid::Box { center, half } => {
                let mut acc = 0.0;
                for i in 0..3 {
                    let excess = ((p[i] - center[i]).abs() - half[i]).max(0.0);
                    acc += excess * excess;
                }
                acc.sqrt()
            }
            Solid::Cylinder {
                axis,
                center,
                half_len,
                radius,
            } => {
                let a = axis.index();
                let (u, v) = axis.cross();
                let radial = (p[u] - center[u]).hypot(p[v] - center[v]);
                let dr = (radial - radius).max(0.0);
                let da = ((p[a] - center[a]).abs() - half_len).max(0.0);
                dr.hypot(da)
            }
            Solid::Sphere { center, radius } => {
                let d = (0..3)
                    .map(|i| (p[i] - center[i]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                (d - radius).max(0.0)
            }
            Solid::TorusArc {
                center,
                ring_radius,
                tube_radius,
                ..
            } => {
                let rho = (p[0] - center[0]).hypot(p[1] - center[1]);
                let d = (rho - ring_radius).hypot(p[2] - center[2]);
                (d - tube_radius).max(0.0)
            }
        }
    }

    pub fn surface_area(&self) -> f64 {
        match *self {
            Solid::Box { half, .. } => {
                8.0 * (half[0] * half[1] + half[1] * half[2] + half[2] * half[0])
            }
            Solid::Cylinder {
                half_len, radius, ..
            } => 2.0 * PI * radius * (2.0 * half_len) + 2.0 * PI * radius * radius,
            Solid::Sphere { radius, .. } => 4.0 * PI * radius * radius,
            Solid::TorusArc {
                ring_radius,
                tube_radius,
                a0,
                a1,
                ..
            } => 2.0 * PI * ring_radius * tube_radius * (a1 - a0),
        }
    }

    /// Axis-aligned bounding box (conservative for the torus arc).
    pub fn aabb(&self) -> ([f64; 3], [f64; 3]) {
        match *self {
            Solid::Box { center, half } => bounds(center, half),
            Solid::Cylinder {
                axis,
                center,
                half_len,
                radius,
            } => {
                let mut half_ext = [radius; 3];
                half_ext[axis.index()] = half_len;
                bounds(center, half_ext)
            }
            Solid::Sphere { center, radius } => bounds(center, [radius; 3]),
            Solid::TorusArc {
                center,
                ring_radius,
                tube_radius,
                ..
            } => {
                let reach = ring_radius + tube_radius;
                bounds(center, [reach, reach, tube_radius])
            }
        }
    }

    /// Uniform-by-area point on the solid's sampled surface. The torus arc
    /// samples its tube surface only; its end disks are expected to be buried
    /// inside an adjacent solid.
    pub fn sample_surface(&self, rng: &mut ChaCha8Rng) -> Point {
        match *self {
            Solid::Box { center, half } => {
                let areas = [
                    4.0 * half[1] * half[2],
                    4.0 * half[2] * half[0],
                    4.0 * half[0] * half[1],
                ];
                let total: f64 = 2.0 * areas.iter().sum::<f64>();
                let mut pick = uniform(rng, 0.0, total);
                let mut face = 0;
                for (i, &a) in areas.iter().enumerate() {
                    if pick < 2.0 * a {
                        face = i;
                        break;
                    }
                    pick -= 2.0 * a;
                }
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let mut p = center;
                p[face] += sign * half[face];
                let (u, v) = [(1, 2), (0, 2), (0, 1)][face];
                p[u] = center[u] + uniform(rng, -half[u], half[u]);
                p[v] = center[v] + uniform(rng, -half[v], half[v]);
                p
            }
            Solid::Cylinder {
                axis,
                center,
                half_len,
                radius,
            } => {
                let a = axis.index();
                let (u, v) = axis.cross();
                let lateral = 2.0 * PI * radius * (2.0 * half_len);
                let caps = 2.0 * PI * radius * radius;
                let mut p = center;
                if uniform(rng, 0.0, lateral + caps) < lateral {
                    let psi = uniform(rng, 0.0, 2.0 * PI);
                    p[a] += uniform(rng, -half_len, half_len);
                    p[u] += radius * psi.cos();
                    p[v] += radius * psi.sin();
                } else {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    let s = radius * rng.random::<f64>().sqrt();
                    let psi = uniform(rng, 0.0, 2.0 * PI);
                    p[a] += sign * half_len;
                    p[u] += s * psi.cos();
                    p[v] += s * psi.sin();
                }
                p
            }
            Solid::Sphere { center, radius } => {
                let dir: [f64; 3] = rng.sample(UnitSphere);
                [
                    center[0] + radius * dir[0],
                    center[1] + radius * dir[1],
                    center[2] + radius * dir[2],
                ]
            }
            Solid::TorusArc {
                center,
                ring_radius,
                tube_radius,
                a0,
                a1,
            } => {
                let phi = uniform(rng, a0, a1);
                // Rejection on the tube angle: area density along the tube
                // circle is proportional to ring_radius + tube_radius*cos.
                let theta = loop {
                    let theta = uniform(rng, -PI, PI);
                    let w = ring_radius + tube_radius * theta.cos();
                    if uniform(rng, 0.0, ring_radius + tube_radius) <= w {
                        break theta;
                    }
                };
                let rho = ring_radius + tube_radius * theta.cos();
                [
                    center[0] + rho * phi.cos(),
                    center[1] + rho * phi.sin(),
                    center[2] + tube_radius * theta.sin(),
                ]
            }
        }
    }
}

fn bounds(center: Point, half_ext: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let lo = [
        center[0] - half_ext[0],
        center[1] - half_ext[1],
        center[2] - half_ext[2],
    ];
    let hi = [
        center[0] + half_ext[0],
        center[1] + half_ext[1],
        center[2] + half_ext[2],
    ];
    (lo, hi)
}
