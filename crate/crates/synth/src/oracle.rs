//! Brute-force reference implementations on the sphere.
//!
//! Nothing here calls into the projection, grid or zone code of the core
//! crate: distances are great-circle distances computed from unit vectors and
//! the haversine formula.

use transitflow::model::{LatLng, MotionLabel};

/// Mean Earth radius, meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

pub fn haversine(a: LatLng, b: LatLng) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lng - a.lng).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Stop/move labels by thresholding consecutive great-circle distances.
pub fn oracle_stop_move(points: &[LatLng], threshold_m: f64) -> Vec<MotionLabel> {
    let mut out = Vec::with_capacity(points.len());
    let mut prev: Option<LatLng> = None;
    for &p in points {
        out.push(match prev {
            Some(q) if haversine(q, p) > threshold_m => MotionLabel::Move,
            _ => MotionLabel::Stop,
        });
        prev = Some(p);
    }
    out
}

type V3 = [f64; 3];

fn unit(p: LatLng) -> V3 {
    let (lat, lng) = (p.lat.to_radians(), p.lng.to_radians());
    [lat.cos() * lng.cos(), lat.cos() * lng.sin(), lat.sin()]
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn scale(a: V3, k: f64) -> V3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Great-circle distance from `p` to the minor arc between `a` and `b`.
pub fn distance_to_arc(p: LatLng, a: LatLng, b: LatLng) -> f64 {
    let (ua, ub, up) = (unit(a), unit(b), unit(p));
    let n = cross(ua, ub);
    let n_len = dot(n, n).sqrt();
    if n_len < 1e-15 {
        return haversine(p, a).min(haversine(p, b));
    }
    let n = scale(n, 1.0 / n_len);
    let off_plane = dot(up, n);
    let foot = sub(up, scale(n, off_plane));
    let within = dot(cross(ua, foot), n) >= 0.0 && dot(cross(foot, ub), n) >= 0.0;
    if within {
        EARTH_RADIUS_M * off_plane.abs().min(1.0).asin()
    } else {
        haversine(p, a).min(haversine(p, b))
    }
}

/// One named leg of a route polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedLeg {
    pub name: String,
    pub from: LatLng,
    pub to: LatLng,
}

pub fn legs_of(points: &[LatLng], names: &[String]) -> Vec<NamedLeg> {
    points.windows(2).zip(names).map(|(w, name)| NamedLeg { name: name.clone(), from: w[0], to: w[1] }).collect()
}

/// Distances from `p` to every leg, in leg order.
pub fn leg_distances(p: LatLng, legs: &[NamedLeg]) -> Vec<f64> {
    legs.iter().map(|l| distance_to_arc(p, l.from, l.to)).collect()
}

/// Name of the nearest leg within `half_width_m`, or `None` when every leg is
/// farther. Legs within 0.1 mm of each other (the precision of
/// [`distance_to_arc`]) tie, and the earlier one wins.
pub fn oracle_grid_lookup(p: LatLng, legs: &[NamedLeg], half_width_m: f64) -> Option<String> {
    let mut best: Option<(f64, usize)> = None;
    for (i, d) in leg_distances(p, legs).into_iter().enumerate() {
        if d <= half_width_m && best.is_none_or(|(bd, _)| d < bd - 1e-4) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| legs[i].name.clone())
}

/// Offsets `origin` by `east_m` and `north_m` along the local tangent plane
/// using spherical destination formulas (first north, then east).
pub fn offset(origin: LatLng, east_m: f64, north_m: f64) -> LatLng {
    let lat = origin.lat + (north_m / EARTH_RADIUS_M).to_degrees();
    let lng = origin.lng + (east_m / (EARTH_RADIUS_M * lat.to_radians().cos())).to_degrees();
    LatLng::new(lat, lng)
}
