//! Route and road polylines read from GeoJSON `LineString` features.
//!
//! A route feature carries `route_id` and either `street_names` (one name per
//! leg) or `street_name` (the whole feature is one named segment; several such
//! features of one route are joined in file order). Road features carry
//! `"kind": "road"` and an optional `name`.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::ReferenceError;
use crate::model::LatLng;

#[derive(Debug, Clone, PartialEq)]
pub struct RouteLine {
    pub route_id: String,
    pub points: Vec<LatLng>,
    /// One street-segment name per leg (`points.len() - 1` entries).
    pub leg_names: Vec<String>,
}

impl RouteLine {
    pub fn legs(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn check(&self) -> Result<(), ReferenceError> {
        if self.points.len() < 2 {
            return Err(ReferenceError::DegeneratePolyline(format!(
                "route {} has fewer than two points",
                self.route_id
            )));
        }
        if let Some(bad) = self.points.iter().find(|p| !p.is_valid()) {
            return Err(ReferenceError::Geometry(format!("route {}: invalid point {bad:?}", self.route_id)));
        }
        if self.leg_names.len() != self.legs() {
            return Err(ReferenceError::Geometry(format!(
                "route {} has {} legs but {} street names",
                self.route_id,
                self.legs(),
                self.leg_names.len()
            )));
        }
        match self.leg_names.iter().position(|n| n.trim().is_empty()) {
            Some(leg) => Err(ReferenceError::UnnamedLeg(leg, self.route_id.clone())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Road {
    pub name: String,
    pub points: Vec<LatLng>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeometryLayer {
    pub routes: BTreeMap<String, RouteLine>,
    pub roads: Vec<Road>,
}

fn geometry_err(msg: impl Into<String>) -> ReferenceError {
    ReferenceError::Geometry(msg.into())
}

fn line_points(feature: &Value, index: usize) -> Result<Vec<LatLng>, ReferenceError> {
    let geometry = &feature["geometry"];
    if geometry["type"] != "LineString" {
        return Err(geometry_err(format!("feature {index} is not a LineString")));
    }
    let coords = geometry["coordinates"]
        .as_array()
        .ok_or_else(|| geometry_err(format!("feature {index} has no coordinates")))?;
    coords
        .iter()
        .map(|c| match (c.get(0).and_then(Value::as_f64), c.get(1).and_then(Value::as_f64)) {
            (Some(lng), Some(lat)) => Ok(LatLng::new(lat, lng)),
            _ => Err(geometry_err(format!("feature {index} has a malformed coordinate"))),
        })
        .collect()
}

impl GeometryLayer {
    pub fn from_geojson_str(text: &str) -> Result<Self, ReferenceError> {
        let doc: Value = serde_json::from_str(text).map_err(|e| geometry_err(e.to_string()))?;
        let features = doc["features"].as_array().ok_or_else(|| geometry_err("expected a FeatureCollection"))?;
        let mut layer = GeometryLayer::default();
        for (index, feature) in features.iter().enumerate() {
            let props = &feature["properties"];
            let points = line_points(feature, index)?;
            if props["kind"] == "road" {
                let name = props["name"].as_str().unwrap_or_default().to_string();
                layer.roads.push(Road { name, points });
                continue;
            }
            let route_id = props["route_id"]
                .as_str()
                .ok_or_else(|| geometry_err(format!("feature {index} has neither kind=road nor route_id")))?
                .to_string();
            let names: Vec<String> = if let Some(list) = props["street_names"].as_array() {
                list.iter().map(|n| n.as_str().unwrap_or_default().to_string()).collect()
            } else {
                let name = props["street_name"].as_str().unwrap_or_default().to_string();
                vec![name; points.len().saturating_sub(1)]
            };
            let line = layer.routes.entry(route_id.clone()).or_insert_with(|| RouteLine {
                route_id,
                points: Vec::new(),
                leg_names: Vec::new(),
            });
            let mut points = points.into_iter();
            if let (Some(last), Some(first)) = (line.points.last().copied(), points.clone().next()) {
                if last == first {
                    points.next();
                } else {
                    // bridge the gap with a leg named after the next segment
                    line.leg_names.push(names.first().cloned().unwrap_or_default());
                }
            }
            line.points.extend(points);
            line.leg_names.extend(names);
        }
        for route in layer.routes.values() {
            route.check()?;
        }
        Ok(layer)
    }

    pub fn load(path: &Path) -> Result<Self, ReferenceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ReferenceError::Parse { path: path.to_path_buf(), reason: e.to_string() })?;
        Self::from_geojson_str(&text)
    }

    pub fn to_geojson(&self) -> Value {
        let coords = |pts: &[LatLng]| pts.iter().map(|p| json!([p.lng, p.lat])).collect::<Vec<_>>();
        let mut features: Vec<Value> = self
            .routes
            .values()
            .map(|r| {
                json!({
                    "type": "Feature",
                    "properties": {"route_id": r.route_id, "street_names": r.leg_names},
                    "geometry": {"type": "LineString", "coordinates": coords(&r.points)},
                })
            })
            .collect();
        features.extend(self.roads.iter().map(|r| {
            json!({
                "type": "Feature",
                "properties": {"kind": "road", "name": r.name},
                "geometry": {"type": "LineString", "coordinates": coords(&r.points)},
            })
        }));
        json!({"type": "FeatureCollection", "features": features})
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_route_encodings_and_roads() {
        let text = r#"{"type":"FeatureCollection","features":[
          {"type":"Feature","properties":{"route_id":"51","street_names":["Main St","Elm St"]},
           "geometry":{"type":"LineString","coordinates":[[-64.78,46.08],[-64.78,46.09],[-64.77,46.09]]}},
          {"type":"Feature","properties":{"route_id":"52","street_name":"King St"},
           "geometry":{"type":"LineString","coordinates":[[-64.70,46.00],[-64.70,46.01]]}},
          {"type":"Feature","properties":{"route_id":"52","street_name":"Queen St"},
           "geometry":{"type":"LineString","coordinates":[[-64.70,46.01],[-64.69,46.01],[-64.68,46.01]]}},
          {"type":"Feature","properties":{"kind":"road","name":"Cross"},
           "geometry":{"type":"LineString","coordinates":[[-64.79,46.085],[-64.77,46.085]]}}
        ]}"#;
        let layer = GeometryLayer::from_geojson_str(text).unwrap();
        assert_eq!(layer.routes["51"].leg_names, ["Main St", "Elm St"]);
        let r52 = &layer.routes["52"];
        assert_eq!(r52.points.len(), 4);
        assert_eq!(r52.leg_names, ["King St", "Queen St", "Queen St"]);
        assert_eq!(layer.roads.len(), 1);
        let again = GeometryLayer::from_geojson_str(&layer.to_geojson().to_string()).unwrap();
        assert_eq!(again, layer);
    }

    #[test]
    fn unnamed_leg_is_an_error() {
        let text = r#"{"type":"FeatureCollection","features":[
          {"type":"Feature","properties":{"route_id":"51","street_names":["Main St",""]},
           "geometry":{"type":"LineString","coordinates":[[-64.78,46.08],[-64.78,46.09],[-64.77,46.09]]}}]}"#;
        assert!(matches!(GeometryLayer::from_geojson_str(text), Err(ReferenceError::UnnamedLeg(1, _))));
    }

    #[test]
    fn rejects_non_linestrings() {
        let text = r#"{"type":"FeatureCollection","features":[
          {"type":"Feature","properties":{"kind":"road"},"geometry":{"type":"Point","coordinates":[0,0]}}]}"#;
        assert!(GeometryLayer::from_geojson_str(text).is_err());
    }
}
