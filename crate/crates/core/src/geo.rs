//! City-scale planar geometry on an equirectangular local tangent frame.
//!
//! Positions are projected as `x = Δlng · R · cos(lat₀)`, `y = Δlat · R` around
//! the frame origin. Point-to-point distances use the mean latitude of the two
//! points for the east scale, which keeps them within 0.1% of the great-circle
//! distance anywhere inside the 50 km validity radius.

use serde::{Deserialize, Serialize};

use crate::error::FrameError;
use crate::model::LatLng;

/// Mean Earth radius (IUGG), meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Frames are valid up to this distance from their origin.
pub const FRAME_VALIDITY_M: f64 = 50_000.0;

pub(crate) const METERS_PER_DEGREE: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

/// Planar coordinates in meters, east (`x`) and north (`y`) of a frame origin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Xy {
    pub x: f64,
    pub y: f64,
}

impl Xy {
    pub fn new(x: f64, y: f64) -> Self {
        Xy { x, y }
    }

    pub fn dist(self, other: Xy) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(self, other: Xy, t: f64) -> Xy {
        Xy::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }
}

/// Distance from `p` to the closed segment `a`–`b`.
pub fn point_segment_distance(p: Xy, a: Xy, b: Xy) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.dist(Xy::new(a.x + t * dx, a.y + t * dy))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalFrame {
    pub origin: LatLng,
    /// Meters per degree of latitude.
    pub north_scale: f64,
    /// Meters per degree of longitude at the origin latitude.
    pub east_scale: f64,
}

impl LocalFrame {
    pub fn new(origin: LatLng) -> Self {
        LocalFrame {
            origin,
            north_scale: METERS_PER_DEGREE,
            east_scale: METERS_PER_DEGREE * origin.lat.to_radians().cos(),
        }
    }

    /// Projection without the range check.
    pub fn project_unchecked(&self, p: LatLng) -> Xy {
        Xy::new((p.lng - self.origin.lng) * self.east_scale, (p.lat - self.origin.lat) * self.north_scale)
    }

    pub fn project(&self, p: LatLng) -> Result<Xy, FrameError> {
        self.check_range(p)?;
        Ok(self.project_unchecked(p))
    }

    pub fn unproject(&self, xy: Xy) -> LatLng {
        LatLng::new(self.origin.lat + xy.y / self.north_scale, self.origin.lng + xy.x / self.east_scale)
    }

    pub fn check_range(&self, p: LatLng) -> Result<(), FrameError> {
        let xy = self.project_unchecked(p);
        let d = xy.x.hypot(xy.y);
        if d.is_finite() && d <= FRAME_VALIDITY_M {
            Ok(())
        } else {
            Err(FrameError::OutOfRange { lat: p.lat, lng: p.lng, distance_m: d, limit_m: FRAME_VALIDITY_M })
        }
    }

    /// Euclidean distance between two points in this frame, meters.
    pub fn distance(&self, a: LatLng, b: LatLng) -> Result<f64, FrameError> {
        self.check_range(a)?;
        self.check_range(b)?;
        Ok(equirectangular(a, b))
    }
}

/// Euclidean distance between `a` and `b` in `frame`; symmetric and nonnegative.
pub fn planar_distance(a: LatLng, b: LatLng, frame: &LocalFrame) -> Result<f64, FrameError> {
    frame.distance(a, b)
}

/// Frame-independent form of [`planar_distance`] without the range check.
pub(crate) fn equirectangular(a: LatLng, b: LatLng) -> f64 {
    let mean_lat = (0.5 * (a.lat + b.lat)).to_radians();
    let dx = (b.lng - a.lng) * METERS_PER_DEGREE * mean_lat.cos();
    let dy = (b.lat - a.lat) * METERS_PER_DEGREE;
    dx.hypot(dy)
}

/// Planar polyline with cumulative arc lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcPath {
    points: Vec<Xy>,
    cumulative: Vec<f64>,
}

impl ArcPath {
    pub fn new(points: Vec<Xy>) -> Self {
        let mut cumulative = Vec::with_capacity(points.len());
        let mut total = 0.0;
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                total += points[i - 1].dist(*p);
            }
            cumulative.push(total);
        }
        ArcPath { points, cumulative }
    }

    pub fn points(&self) -> &[Xy] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Point at arc length `s` (clamped to the path) and the index of the leg it lies on.
    pub fn point_at(&self, s: f64) -> (Xy, usize) {
        if self.points.len() < 2 {
            return (self.points.first().copied().unwrap_or_default(), 0);
        }
        let s = s.clamp(0.0, self.length());
        // first leg whose end is at or beyond s
        let leg = self.cumulative[1..].partition_point(|&c| c < s).min(self.points.len() - 2);
        let (start, end) = (self.cumulative[leg], self.cumulative[leg + 1]);
        let t = if end > start { (s - start) / (end - start) } else { 0.0 };
        (self.points[leg].lerp(self.points[leg + 1], t), leg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const MONCTON: LatLng = LatLng { lat: 46.0878, lng: -64.7782 };

    // Test-local great-circle reference.
    fn haversine(a: LatLng, b: LatLng) -> f64 {
        let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
        let dp = p2 - p1;
        let dl = (b.lng - a.lng).to_radians();
        let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
        2.0 * 6_371_008.8 * h.sqrt().asin()
    }

    fn random_point(rng: &mut ChaCha8Rng, frame: &LocalFrame, radius: f64) -> LatLng {
        loop {
            let xy = Xy::new(rng.random_range(-radius..radius), rng.random_range(-radius..radius));
            if xy.x.hypot(xy.y) <= radius * 0.999 {
                return frame.unproject(xy);
            }
        }
    }

    #[test]
    fn identity_is_zero() {
        let frame = LocalFrame::new(MONCTON);
        assert_eq!(planar_distance(MONCTON, MONCTON, &frame).unwrap(), 0.0);
    }

    #[test]
    fn thousandth_degree_of_latitude() {
        // haversine oracle: 0.001° of latitude on a 6371008.8 m sphere
        let expected = 111.19508;
        let frame = LocalFrame::new(MONCTON);
        let b = LatLng::new(MONCTON.lat + 0.001, MONCTON.lng);
        let d = planar_distance(MONCTON, b, &frame).unwrap();
        assert!((haversine(MONCTON, b) - expected).abs() < 1e-4);
        assert!((d - expected).abs() < 1e-4, "{d}");
    }

    #[test]
    fn symmetric_on_random_pairs() {
        let frame = LocalFrame::new(MONCTON);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let a = random_point(&mut rng, &frame, 20_000.0);
            let b = random_point(&mut rng, &frame, 20_000.0);
            assert_eq!(planar_distance(a, b, &frame).unwrap(), planar_distance(b, a, &frame).unwrap());
        }
    }

    #[test]
    fn matches_haversine_within_validity_radius() {
        let frame = LocalFrame::new(MONCTON);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5000 {
            let a = random_point(&mut rng, &frame, FRAME_VALIDITY_M);
            let b = random_point(&mut rng, &frame, FRAME_VALIDITY_M);
            let h = haversine(a, b);
            if h < 1.0 {
                continue;
            }
            let d = planar_distance(a, b, &frame).unwrap();
            assert!(((d - h) / h).abs() < 1e-3, "{d} vs {h}");
        }
    }

    #[test]
    fn triangle_inequality() {
        let frame = LocalFrame::new(MONCTON);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let [a, b, c] = [0; 3].map(|_| random_point(&mut rng, &frame, 10_000.0));
            let ab = planar_distance(a, b, &frame).unwrap();
            let bc = planar_distance(b, c, &frame).unwrap();
            let ac = planar_distance(a, c, &frame).unwrap();
            assert!(ac <= ab + bc + 1e-6);
        }
    }

    #[test]
    fn out_of_range_is_rejected() {
        let frame = LocalFrame::new(MONCTON);
        let far = LatLng::new(MONCTON.lat + 1.0, MONCTON.lng);
        assert!(matches!(planar_distance(MONCTON, far, &frame), Err(FrameError::OutOfRange { .. })));
    }

    #[test]
    fn projection_round_trips() {
        let frame = LocalFrame::new(MONCTON);
        let p = LatLng::new(46.1, -64.8);
        let q = frame.unproject(frame.project(p).unwrap());
        assert!((p.lat - q.lat).abs() < 1e-12 && (p.lng - q.lng).abs() < 1e-12);
    }

    #[test]
    fn arc_path_walks_legs() {
        let path = ArcPath::new(vec![Xy::new(0.0, 0.0), Xy::new(0.0, 60.0), Xy::new(40.0, 60.0)]);
        assert_eq!(path.length(), 100.0);
        assert_eq!(path.point_at(50.0), (Xy::new(0.0, 50.0), 0));
        assert_eq!(path.point_at(60.0), (Xy::new(0.0, 60.0), 0));
        assert_eq!(path.point_at(70.0), (Xy::new(10.0, 60.0), 1));
        assert_eq!(path.point_at(500.0), (Xy::new(40.0, 60.0), 1));
    }

    #[test]
    fn segment_distance() {
        let a = Xy::new(0.0, 0.0);
        let b = Xy::new(10.0, 0.0);
        assert_eq!(point_segment_distance(Xy::new(5.0, 3.0), a, b), 3.0);
        assert_eq!(point_segment_distance(Xy::new(13.0, 4.0), a, b), 5.0);
        assert_eq!(point_segment_distance(Xy::new(1.0, 1.0), a, a), 2f64.sqrt());
    }
}
