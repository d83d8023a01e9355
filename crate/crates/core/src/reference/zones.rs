//! Circular station and intersection zones with a hashed lookup.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::geo::{equirectangular, METERS_PER_DEGREE};
use crate::model::LatLng;
use crate::reference::gtfs::{GtfsBundle, Station};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneKind {
    Station,
    Intersection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircularZone {
    pub id: String,
    pub kind: ZoneKind,
    pub center: LatLng,
    pub radius_m: f64,
}

impl CircularZone {
    pub fn distance_to(&self, p: LatLng) -> f64 {
        equirectangular(p, self.center)
    }

    /// Inside means at most `radius_m` from the center.
    pub fn contains(&self, p: LatLng) -> bool {
        self.distance_to(p) <= self.radius_m
    }
}

fn station_zone(station: &Station, radius_m: f64) -> CircularZone {
    CircularZone { id: station.id.clone(), kind: ZoneKind::Station, center: station.position(), radius_m }
}

/// One zone per GTFS station.
pub fn build_station_zones(bundle: &GtfsBundle, radius_m: f64) -> Vec<CircularZone> {
    bundle.stations.iter().map(|s| station_zone(s, radius_m)).collect()
}

/// Zones of the stations served by `route_id`.
pub fn route_station_zones(bundle: &GtfsBundle, route_id: &str, radius_m: f64) -> Vec<CircularZone> {
    bundle.stations_for_route(route_id).into_iter().map(|s| station_zone(s, radius_m)).collect()
}

/// Bucketed zone set answering "nearest zone containing this point".
///
/// Buckets are sized in degrees so that any point within a zone's radius is
/// found in the 3×3 block around its bucket, at every latitude up to one
/// degree beyond the zones' own.
#[derive(Debug, Clone)]
pub struct ZoneIndex {
    zones: Vec<CircularZone>,
    buckets: HashMap<(i64, i64), Vec<u32>>,
    lat_step: f64,
    lng_step: f64,
}

impl ZoneIndex {
    pub fn new(zones: Vec<CircularZone>) -> Self {
        let max_radius = zones.iter().map(|z| z.radius_m).fold(1.0_f64, f64::max);
        let max_abs_lat = zones.iter().map(|z| z.center.lat.abs()).fold(0.0_f64, f64::max);
        let widest = (max_abs_lat + 1.0).min(89.0).to_radians().cos();
        let lat_step = max_radius / METERS_PER_DEGREE;
        let lng_step = max_radius / (METERS_PER_DEGREE * widest);
        let mut index = ZoneIndex { zones, buckets: HashMap::new(), lat_step, lng_step };
        for i in 0..index.zones.len() {
            let bucket = index.bucket(index.zones[i].center);
            index.buckets.entry(bucket).or_default().push(i as u32);
        }
        index
    }

    fn bucket(&self, p: LatLng) -> (i64, i64) {
        ((p.lat / self.lat_step).floor() as i64, (p.lng / self.lng_step).floor() as i64)
    }

    pub fn zones(&self) -> &[CircularZone] {
        &self.zones
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    /// The zone containing `p` with the nearest center; equal distances go to
    /// the lexicographically smaller id.
    pub fn nearest(&self, p: LatLng) -> Option<&CircularZone> {
        let (bi, bj) = self.bucket(p);
        let mut best: Option<(f64, &CircularZone)> = None;
        for di in -1..=1 {
            for dj in -1..=1 {
                let Some(members) = self.buckets.get(&(bi + di, bj + dj)) else { continue };
                for &m in members {
                    let zone = &self.zones[m as usize];
                    let d = zone.distance_to(p);
                    if d > zone.radius_m {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((bd, bz)) => d < bd || (d == bd && zone.id < bz.id),
                    };
                    if better {
                        best = Some((d, zone));
                    }
                }
            }
        }
        best.map(|(_, z)| z)
    }

    /// Linear-scan reference for [`ZoneIndex::nearest`].
    pub fn nearest_scan(&self, p: LatLng) -> Option<&CircularZone> {
        self.zones
            .iter()
            .map(|z| (z.distance_to(p), z))
            .filter(|(d, z)| *d <= z.radius_m)
            .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)))
            .map(|(_, z)| z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{LocalFrame, Xy};
    use rand::{Rng, SeedableRng};

    const ORIGIN: LatLng = LatLng { lat: 46.0878, lng: -64.7782 };

    fn zone(id: &str, center: LatLng) -> CircularZone {
        CircularZone { id: id.into(), kind: ZoneKind::Station, center, radius_m: 30.0 }
    }

    #[test]
    fn membership_boundary() {
        let frame = LocalFrame::new(ORIGIN);
        let z = zone("7", ORIGIN);
        assert!(z.contains(frame.unproject(Xy::new(0.0, 29.9))));
        assert!(!z.contains(frame.unproject(Xy::new(0.0, 30.1))));
        assert!(z.contains(frame.unproject(Xy::new(29.9, 0.0))));
        assert!(!z.contains(frame.unproject(Xy::new(-30.1, 0.0))));
    }

    #[test]
    fn overlap_goes_to_nearest_then_smaller_id() {
        let frame = LocalFrame::new(ORIGIN);
        let a = zone("b", frame.unproject(Xy::new(-20.0, 0.0)));
        let b = zone("a", frame.unproject(Xy::new(20.0, 0.0)));
        let index = ZoneIndex::new(vec![a, b]);
        assert_eq!(index.nearest(frame.unproject(Xy::new(-5.0, 0.0))).unwrap().id, "b");
        assert_eq!(index.nearest(frame.unproject(Xy::new(5.0, 0.0))).unwrap().id, "a");
        // same center, so equal distances
        let twins = ZoneIndex::new(vec![zone("s2", ORIGIN), zone("s10", ORIGIN)]);
        assert_eq!(twins.nearest(ORIGIN).unwrap().id, "s10");
        assert!(index.nearest(frame.unproject(Xy::new(0.0, 200.0))).is_none());
    }

    #[test]
    fn hashed_lookup_matches_scan() {
        let frame = LocalFrame::new(ORIGIN);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let zones: Vec<CircularZone> = (0..300)
            .map(|i| {
                let xy = Xy::new(rng.random_range(-2000.0..2000.0), rng.random_range(-2000.0..2000.0));
                zone(&format!("z{i}"), frame.unproject(xy))
            })
            .collect();
        let index = ZoneIndex::new(zones);
        for _ in 0..20_000 {
            let p = frame.unproject(Xy::new(rng.random_range(-2100.0..2100.0), rng.random_range(-2100.0..2100.0)));
            assert_eq!(index.nearest(p).map(|z| &z.id), index.nearest_scan(p).map(|z| &z.id));
        }
    }
}
