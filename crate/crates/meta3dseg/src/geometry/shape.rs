//! Procedural shape generators with exact analytic part predicates.
//!
//! Each category builds a small family of solids grouped into named parts.
//! Occupancy is the union of all parts; where parts overlap, the lowest part
//! index wins so ground-truth labels are deterministic.

use serde::{Deserialize, Serialize};

use crate::geometry::solid::{Axis, Point, Solid};
use crate::rng::{stream, uniform};
use crate::{Error, Result};

/// How far support solids sink into the slab they carry, so their contact
/// faces are strictly interior and never ambiguous for surface sampling.
const EMBED: f64 = 0.01;

/// Axis-aligned extent all shapes must fit in.
pub const CUBE_HALF: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Table,
    Chair,
    Mug,
    AirplaneToy,
}

impl Category {
    pub fn all() -> [Category; 4] {
        [
            Category::Table,
            Category::Chair,
            Category::Mug,
            Category::AirplaneToy,
        ]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Table => "table",
            Category::Chair => "chair",
            Category::Mug => "mug",
            Category::AirplaneToy => "airplane_toy",
        }
    }

    pub fn n_parts(self) -> usize {
        match self {
            Category::Table | Category::Mug => 2,
            Category::Chair | Category::AirplaneToy => 3,
        }
    }
}

impl std::str::FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Category::Table),
            "chair" => Ok(Category::Chair),
            "mug" => Ok(Category::Mug),
            "airplane_toy" => Ok(Category::AirplaneToy),
            other => Err(Error::InvalidArgument(format!("unknown category '{other}'"))),
        }
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A named group of solids treated as one segmentation part.
#[derive(Clone, Debug, PartialEq)]
pub struct Part {
    pub name: String,
    pub solids: Vec<Solid>,
}

impl Part {
    pub fn new(name: &str, solids: Vec<Solid>) -> Self {
        Part {
            name: name.to_string(),
            solids,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.solids.iter().any(|s| s.contains(p))
    }

    pub fn distance(&self, p: Point) -> f64 {
        self.solids
            .iter()
            .map(|s| s.distance(p))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Flat slab on four cylindrical legs. Ranges give the sampled interval for
/// each field; explicit values must stay inside them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableParams {
    /// Slab half-extent along x, in [0.28, 0.40].
    pub top_half_x: f64,
    /// Slab half-extent along z, in [0.28, 0.40].
    pub top_half_z: f64,
    /// Top surface height, in [0.38, 0.48].
    pub top_y_max: f64,
    /// Slab thickness, in [0.05, 0.10].
    pub top_thickness: f64,
    /// Leg radius, in [0.02, 0.05].
    pub leg_radius: f64,
    /// Distance from slab edge to leg center, in [0.06, 0.10]; must be at
    /// least the leg radius so legs stay under the slab.
    pub leg_inset: f64,
}

/// Seat slab, back panel rising from its rear edge and four legs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChairParams {
    /// Seat half-extent along x, in [0.20, 0.30].
    pub seat_half_x: f64,
    /// Seat half-extent along z, in [0.20, 0.30].
    pub seat_half_z: f64,
    /// Seat top height, in [0.00, 0.10].
    pub seat_y_max: f64,
    /// Seat thickness, in [0.04, 0.08].
    pub seat_thickness: f64,
    /// Back panel height above the seat top, in [0.25, 0.38].
    pub back_height: f64,
    /// Back panel thickness, in [0.03, 0.06].
    pub back_thickness: f64,
    /// Leg radius, in [0.02, 0.04].
    pub leg_radius: f64,
    /// Distance from seat edge to leg center, in [0.05, 0.09]; at least the
    /// leg radius.
    pub leg_inset: f64,
}

/// Solid cylindrical body with a half-torus handle on its +x side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MugParams {
    /// Body radius, in [0.16, 0.24].
    pub body_radius: f64,
    /// Body half-height, in [0.25, 0.38].
    pub body_half_height: f64,
    /// Handle ring radius, in [0.10, 0.14].
    pub handle_ring_radius: f64,
    /// Handle tube radius, in [0.045, 0.060]; must stay below the ring
    /// radius.
    pub handle_tube_radius: f64,
}

/// Cylindrical fuselage along x with thin wing and tail boxes through it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AirplaneToyParams {
    /// Fuselage half-length, in [0.35, 0.45].
    pub fuselage_half_len: f64,
    /// Fuselage radius, in [0.05, 0.08].
    pub fuselage_radius: f64,
    /// Wing half-span along z, in [0.30, 0.42].
    pub wing_half_span: f64,
    /// Wing chord along x, in [0.10, 0.16].
    pub wing_chord: f64,
    /// Wing and tail half-thickness, in [0.010, 0.020].
    pub wing_half_thickness: f64,
    /// Tail half-span along z, in [0.10, 0.18].
    pub tail_half_span: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShapeParams {
    Table(TableParams),
    Chair(ChairParams),
    Mug(MugParams),
    AirplaneToy(AirplaneToyParams),
}

impl ShapeParams {
    pub fn category(&self) -> Category {
        match self {
            ShapeParams::Table(_) => Category::Table,
            ShapeParams::Chair(_) => Category::Chair,
            ShapeParams::Mug(_) => Category::Mug,
            ShapeParams::AirplaneToy(_) => Category::AirplaneToy,
        }
    }

    /// Draw parameters uniformly from the documented ranges.
    pub fn sample(category: Category, seed: u64) -> ShapeParams {
        let rng = &mut stream(seed, &format!("shape-params/{category}"));
        match category {
            Category::Table => ShapeParams::Table(TableParams {
                top_half_x: uniform(rng, 0.28, 0.40),
                top_half_z: uniform(rng, 0.28, 0.40),
                top_y_max: uniform(rng, 0.38, 0.48),
                top_thickness: uniform(rng, 0.05, 0.10),
                leg_radius: uniform(rng, 0.02, 0.05),
                leg_inset: uniform(rng, 0.06, 0.10),
            }),
            Category::Chair => ShapeParams::Chair(ChairParams {
                seat_half_x: uniform(rng, 0.20, 0.30),
                seat_half_z: uniform(rng, 0.20, 0.30),
                seat_y_max: uniform(rng, 0.00, 0.10),
                seat_thickness: uniform(rng, 0.04, 0.08),
                back_height: uniform(rng, 0.25, 0.38),
                back_thickness: uniform(rng, 0.03, 0.06),
                leg_radius: uniform(rng, 0.02, 0.04),
                leg_inset: uniform(rng, 0.05, 0.09),
            }),
            Category::Mug => ShapeParams::Mug(MugParams {
                body_radius: uniform(rng, 0.16, 0.24),
                body_half_height: uniform(rng, 0.25, 0.38),
                handle_ring_radius: uniform(rng, 0.10, 0.14),
                handle_tube_radius: uniform(rng, 0.045, 0.060),
            }),
            Category::AirplaneToy => ShapeParams::AirplaneToy(AirplaneToyParams {
                fuselage_half_len: uniform(rng, 0.35, 0.45),
                fuselage_radius: uniform(rng, 0.05, 0.08),
                wing_half_span: uniform(rng, 0.30, 0.42),
                wing_chord: uniform(rng, 0.10, 0.16),
                wing_half_thickness: uniform(rng, 0.010, 0.020),
                tail_half_span: uniform(rng, 0.10, 0.18),
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn check(name: &str, value: f64, lo: f64, hi: f64) -> Result<()> {
            if !(lo..=hi).contains(&value) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {value} outside [{lo}, {hi}]"
                )));
            }
            Ok(())
        }
        match *self {
            ShapeParams::Table(p) => {
                check("top_half_x", p.top_half_x, 0.28, 0.40)?;
                check("top_half_z", p.top_half_z, 0.28, 0.40)?;
                check("top_y_max", p.top_y_max, 0.38, 0.48)?;
                check("top_thickness", p.top_thickness, 0.05, 0.10)?;
                check("leg_radius", p.leg_radius, 0.02, 0.05)?;
                check("leg_inset", p.leg_inset, 0.06, 0.10)?;
                if p.leg_inset < p.leg_radius {
                    return Err(Error::InvalidArgument(
                        "leg_inset must be at least leg_radius".into(),
                    ));
                }
            }
            ShapeParams::Chair(p) => {
                check("seat_half_x", p.seat_half_x, 0.20, 0.30)?;
                check("seat_half_z", p.seat_half_z, 0.20, 0.30)?;
                check("seat_y_max", p.seat_y_max, 0.00, 0.10)?;
                check("seat_thickness", p.seat_thickness, 0.04, 0.08)?;
                check("back_height", p.back_height, 0.25, 0.38)?;
                check("back_thickness", p.back_thickness, 0.03, 0.06)?;
                check("leg_radius", p.leg_radius, 0.02, 0.04)?;
                check("leg_inset", p.leg_inset, 0.05, 0.09)?;
                if p.leg_inset < p.leg_radius {
                    return Err(Error::InvalidArgument(
                        "leg_inset must be at least leg_radius".into(),
                    ));
                }
            }
            ShapeParams::Mug(p) => {
                check("body_radius", p.body_radius, 0.16, 0.24)?;
                check("body_half_height", p.body_half_height, 0.25, 0.38)?;
                check("handle_ring_radius", p.handle_ring_radius, 0.10, 0.14)?;
                check("handle_tube_radius", p.handle_tube_radius, 0.045, 0.060)?;
            }
            ShapeParams::AirplaneToy(p) => {
                check("fuselage_half_len", p.fuselage_half_len, 0.35, 0.45)?;
                check("fuselage_radius", p.fuselage_radius, 0.05, 0.08)?;
                check("wing_half_span", p.wing_half_span, 0.30, 0.42)?;
                check("wing_chord", p.wing_chord, 0.10, 0.16)?;
                check("wing_half_thickness", p.wing_half_thickness, 0.010, 0.020)?;
                check("tail_half_span", p.tail_half_span, 0.10, 0.18)?;
            }
        }
        Ok(())
    }
}

/// A shape with exact analytic occupancy and per-part predicates.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledShape {
    pub category: Category,
    pub seed: u64,
    pub parts: Vec<Part>,
}

impl LabeledShape {
    /// Assemble a shape from explicit parts; every solid must fit in the
    /// normalized cube. The category is bookkeeping and does not constrain
    /// the part layout.
    pub fn from_parts(category: Category, seed: u64, parts: Vec<Part>) -> Result<Self> {
        for part in &parts {
            for solid in &part.solids {
                let (lo, hi) = solid.aabb();
                let eps = 1e-12;
                if lo.iter().any(|&v| v < -CUBE_HALF - eps)
                    || hi.iter().any(|&v| v > CUBE_HALF + eps)
                {
                    return Err(Error::InvalidArgument(format!(
                        "part '{}' leaves the normalized cube: aabb {lo:?}..{hi:?}",
                        part.name
                    )));
                }
            }
        }
        Ok(LabeledShape {
            category,
            seed,
            parts,
        })
    }

    pub fn n_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn part_names(&self) -> Vec<&str> {
        self.parts.iter().map(|p| p.name.as_str()).collect()
    }

    /// Union occupancy over all parts.
    pub fn occupied(&self, p: Point) -> bool {
        self.parts.iter().any(|part| part.contains(p))
    }

    /// Lowest index of a part containing `p`, if any.
    pub fn part_label(&self, p: Point) -> Option<usize> {
        self.parts.iter().position(|part| part.contains(p))
    }

    /// Index of the part nearest to `p` (lowest index on ties).
    pub fn nearest_part(&self, p: Point) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, part) in self.parts.iter().enumerate() {
            let d = part.distance(p);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Containing part if any, else the nearest part.
    pub fn label_point(&self, p: Point) -> usize {
        self.part_label(p).unwrap_or_else(|| self.nearest_part(p))
    }
}

/// Build a shape from explicit parameters.
pub fn generate_shape(category: Category, seed: u64, params: &ShapeParams) -> Result<LabeledShape> {
    if params.category() != category {
        return Err(Error::InvalidArgument(format!(
            "params are for {}, not {category}",
            params.category()
        )));
    }
    params.validate()?;
    let parts = match *params {
        ShapeParams::Table(p) => table_parts(&p),
        ShapeParams::Chair(p) => chair_parts(&p),
        ShapeParams::Mug(p) => mug_parts(&p),
        ShapeParams::AirplaneToy(p) => airplane_toy_parts(&p),
    };
    LabeledShape::from_parts(category, seed, parts)
}

/// Build a shape whose parameters are drawn from the seed.
pub fn generate_shape_sampled(category: Category, seed: u64) -> Result<LabeledShape> {
    generate_shape(category, seed, &ShapeParams::sample(category, seed))
}

fn four_legs(half_x: f64, half_z: f64, inset: f64, radius: f64, y_min: f64, y_max: f64) -> Vec<Solid> {
    let cx = half_x - inset;
    let cz = half_z - inset;
    let mut legs = Vec::with_capacity(4);
    for &sx in &[-1.0, 1.0] {
        for &sz in &[-1.0, 1.0] {
            legs.push(Solid::Cylinder {
                axis: Axis::Y,
                center: [sx * cx, (y_min + y_max) / 2.0, sz * cz],
                half_len: (y_max - y_min) / 2.0,
                radius,
            });
        }
    }
    legs
}

fn table_parts(p: &TableParams) -> Vec<Part> {
    let y_min = p.top_y_max - p.top_thickness;
    let top = Solid::Box {
        center: [0.0, (y_min + p.top_y_max) / 2.0, 0.0],
        half: [p.top_half_x, p.top_thickness / 2.0, p.top_half_z],
    };
    let legs = four_legs(
        p.top_half_x,
        p.top_half_z,
        p.leg_inset,
        p.leg_radius,
        -0.48,
        y_min + EMBED,
    );
    vec![Part::new("top", vec![top]), Part::new("legs", legs)]
}

fn chair_parts(p: &ChairParams) -> Vec<Part> {
    let seat_y_min = p.seat_y_max - p.seat_thickness;
    let seat = Solid::Box {
        center: [0.0, (seat_y_min + p.seat_y_max) / 2.0, 0.0],
        half: [p.seat_half_x, p.seat_thickness / 2.0, p.seat_half_z],
    };
    let back_y_min = p.seat_y_max - EMBED;
    let back_y_max = p.seat_y_max + p.back_height;
    let back = Solid::Box {
        center: [
            0.0,
            (back_y_min + back_y_max) / 2.0,
            p.seat_half_z - p.back_thickness / 2.0,
        ],
        half: [
            p.seat_half_x,
            (back_y_max - back_y_min) / 2.0,
            p.back_thickness / 2.0,
        ],
    };
    let legs = four_legs(
        p.seat_half_x,
        p.seat_half_z,
        p.leg_inset,
        p.leg_radius,
        -0.48,
        seat_y_min + EMBED,
    );
    vec![
        Part::new("seat", vec![seat]),
        Part::new("back", vec![back]),
        Part::new("legs", legs),
    ]
}

fn mug_parts(p: &MugParams) -> Vec<Part> {
    let body = Solid::Cylinder {
        axis: Axis::Y,
        center: [0.0, 0.0, 0.0],
        half_len: p.body_half_height,
        radius: p.body_radius,
    };
    // The handle ring center sits one tube radius inside the body wall, so
    // both open tube ends are strictly interior to the body.
    let handle = Solid::TorusArc {
        center: [p.body_radius - p.handle_tube_radius, 0.0, 0.0],
        ring_radius: p.handle_ring_radius,
        tube_radius: p.handle_tube_radius,
        a0: -std::f64::consts::FRAC_PI_2,
        a1: std::f64::consts::FRAC_PI_2,
    };
    vec![Part::new("body", vec![body]), Part::new("handle", vec![handle])]
}

fn airplane_toy_parts(p: &AirplaneToyParams) -> Vec<Part> {
    let fuselage = Solid::Cylinder {
        axis: Axis::X,
        center: [0.0, 0.0, 0.0],
        half_len: p.fuselage_half_len,
        radius: p.fuselage_radius,
    };
    let wings = Solid::Box {
        center: [0.05, 0.0, 0.0],
        half: [p.wing_chord / 2.0, p.wing_half_thickness, p.wing_half_span],
    };
    let tail = Solid::Box {
        center: [-p.fuselage_half_len + 0.05, 0.0, 0.0],
        half: [0.04, p.wing_half_thickness, p.tail_half_span],
    };
    vec![
        Part::new("fuselage", vec![fuselage]),
        Part::new("wings", vec![wings]),
        Part::new("tail", vec![tail]),
    ]
}
