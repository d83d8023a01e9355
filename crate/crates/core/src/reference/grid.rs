//! Square-cell buffer along a route polyline, each cell tagged with the name
//! of the nearest leg.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use crate::error::ReferenceError;
use crate::geo::{point_segment_distance, LocalFrame, Xy};
use crate::model::{LatLng, StreetAnnotation};
use crate::reference::geometry::RouteLine;

/// Distances this close count as equal when choosing between legs.
const TIE_EPSILON_M: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct RouteBufferGrid {
    pub route_id: String,
    /// Centered on the first route vertex, which is also a cell center.
    pub frame: LocalFrame,
    pub cell_size_m: f64,
    pub half_width_m: f64,
    leg_names: Vec<Arc<str>>,
    cells: HashMap<(i32, i32), u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellIndex {
    pub i: i32,
    pub j: i32,
}

impl RouteBufferGrid {
    pub fn build(route: &RouteLine, cell_size_m: f64, half_width_m: f64) -> Result<Self, ReferenceError> {
        route.check()?;
        if !(cell_size_m > 0.0 && half_width_m >= 0.0) {
            return Err(ReferenceError::Geometry(format!(
                "cell size {cell_size_m} and half width {half_width_m} must be positive"
            )));
        }
        let frame = LocalFrame::new(route.points[0]);
        let pts: Vec<Xy> = route.points.iter().map(|p| frame.project(*p)).collect::<Result<_, _>>()?;
        let reach = half_width_m + TIE_EPSILON_M;

        let mut best: HashMap<(i32, i32), (f64, u32)> = HashMap::new();
        for (leg, w) in pts.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let lo_i = ((a.x.min(b.x) - reach) / cell_size_m).floor() as i32;
            let hi_i = ((a.x.max(b.x) + reach) / cell_size_m).ceil() as i32;
            let lo_j = ((a.y.min(b.y) - reach) / cell_size_m).floor() as i32;
            let hi_j = ((a.y.max(b.y) + reach) / cell_size_m).ceil() as i32;
            for i in lo_i..=hi_i {
                for j in lo_j..=hi_j {
                    let center = Xy::new(i as f64 * cell_size_m, j as f64 * cell_size_m);
                    let d = point_segment_distance(center, a, b);
                    if d > reach {
                        continue;
                    }
                    best.entry((i, j))
                        .and_modify(|cur| {
                            if d < cur.0 - TIE_EPSILON_M {
                                *cur = (d, leg as u32);
                            }
                        })
                        .or_insert((d, leg as u32));
                }
            }
        }

        let mut names: HashMap<&str, Arc<str>> = HashMap::new();
        let leg_names = route
            .leg_names
            .iter()
            .map(|n| names.entry(n.as_str()).or_insert_with(|| Arc::from(n.as_str())).clone())
            .collect();
        Ok(RouteBufferGrid {
            route_id: route.route_id.clone(),
            frame,
            cell_size_m,
            half_width_m,
            leg_names,
            cells: best.into_iter().map(|(k, (_, leg))| (k, leg)).collect(),
        })
    }

    pub fn cell_of(&self, p: LatLng) -> CellIndex {
        let xy = self.frame.project_unchecked(p);
        CellIndex { i: (xy.x / self.cell_size_m).round() as i32, j: (xy.y / self.cell_size_m).round() as i32 }
    }

    pub fn cell_center(&self, cell: CellIndex) -> LatLng {
        self.frame.unproject(Xy::new(cell.i as f64 * self.cell_size_m, cell.j as f64 * self.cell_size_m))
    }

    /// Leg index tagging the cell that contains `p`.
    pub fn leg_at(&self, p: LatLng) -> Option<usize> {
        if self.frame.check_range(p).is_err() {
            return None;
        }
        let c = self.cell_of(p);
        self.cells.get(&(c.i, c.j)).map(|&leg| leg as usize)
    }

    pub fn lookup(&self, p: LatLng) -> StreetAnnotation {
        match self.leg_at(p) {
            Some(leg) => StreetAnnotation::Segment(self.leg_names[leg].clone()),
            None => StreetAnnotation::WrongSegment,
        }
    }

    pub fn leg_name(&self, leg: usize) -> &str {
        &self.leg_names[leg]
    }

    pub fn tagged_cells(&self) -> usize {
        self.cells.len()
    }

    /// CSV of `cell_i,cell_j,center_lat,center_lng,tag`, sorted by cell.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut cells: Vec<(&(i32, i32), &u32)> = self.cells.iter().collect();
        cells.sort();
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["cell_i", "cell_j", "center_lat", "center_lng", "tag"])?;
        for (&(i, j), &leg) in cells {
            let center = self.cell_center(CellIndex { i, j });
            writer.write_record([
                i.to_string(),
                j.to_string(),
                format!("{:.7}", center.lat),
                format!("{:.7}", center.lng),
                self.leg_names[leg as usize].to_string(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}
