//! Geographic primitives: WGS84 coordinates, great-circle distance and
//! polygon containment.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

/// Mean Earth radius in meters (IUGG).
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// A WGS84 coordinate in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub const fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }

    pub fn is_finite(&self) -> bool {
        self.lat.is_finite() && self.lon.is_finite()
    }

    /// Great-circle distance in meters (haversine).
    pub fn distance_m(&self, other: &LatLon) -> f64 {
        haversine_m(*self, *other)
    }

    /// Initial compass bearing towards `other` in degrees, clockwise from north.
    pub fn bearing_deg(&self, other: &LatLon) -> f64 {
        let (lat1, lat2) = (self.lat.to_radians(), other.lat.to_radians());
        let dlon = (other.lon - self.lon).to_radians();
        let y = dlon.sin() * lat2.cos();
        let x = lat1.cos() * lat2.sin() - lat1.sin() * lat2.cos() * dlon.cos();
        y.atan2(x).to_degrees().rem_euclid(360.0)
    }

    /// Point reached by moving `north_m` / `east_m` meters on a local tangent plane.
    pub fn offset_m(&self, north_m: f64, east_m: f64) -> LatLon {
        let dlat = north_m / EARTH_RADIUS_M;
        let dlon = east_m / (EARTH_RADIUS_M * self.lat.to_radians().cos());
        LatLon::new(self.lat + dlat.to_degrees(), self.lon + dlon.to_degrees())
    }

    /// Linear interpolation in coordinate space; adequate at city scale.
    pub fn lerp(&self, other: &LatLon, t: f64) -> LatLon {
        LatLon::new(
            self.lat + (other.lat - self.lat) * t,
            self.lon + (other.lon - self.lon) * t,
        )
    }
}

impl fmt::Display for LatLon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6})", self.lat, self.lon)
    }
}

pub fn haversine_m(a: LatLon, b: LatLon) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

#[derive(Debug, thiserror::Error)]
pub enum PolygonError {
    #[error("polygon needs at least 3 distinct vertices, got {0}")]
    Degenerate(usize),
    #[error("polygon has non-finite coordinates")]
    NonFinite,
    #[error("cannot read polygon file: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid polygon file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported geometry type `{0}`, expected Polygon")]
    GeometryType(String),
}

/// A simple polygon in lat/lon. The ring is stored open (closing vertex
/// dropped if present).
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    ring: Vec<LatLon>,
}

#[derive(Deserialize)]
struct GeoJsonPolygon {
    #[serde(rename = "type")]
    kind: String,
    coordinates: Vec<Vec<[f64; 2]>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GeoJsonDoc {
    Feature { geometry: GeoJsonPolygon },
    Geometry(GeoJsonPolygon),
}

impl Polygon {
    pub fn new(mut ring: Vec<LatLon>) -> Result<Self, PolygonError> {
        if ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        if ring.iter().any(|p| !p.is_finite()) {
            return Err(PolygonError::NonFinite);
        }
        if ring.len() < 3 {
            return Err(PolygonError::Degenerate(ring.len()));
        }
        Ok(Self { ring })
    }

    /// Axis-aligned rectangle, convenient for tests and synthetic scenarios.
    pub fn rectangle(south_west: LatLon, north_east: LatLon) -> Self {
        Self {
            ring: vec![
                south_west,
                LatLon::new(south_west.lat, north_east.lon),
                north_east,
                LatLon::new(north_east.lat, south_west.lon),
            ],
        }
    }

    pub fn vertices(&self) -> &[LatLon] {
        &self.ring
    }

    /// Reads a GeoJSON `Polygon` geometry (or a `Feature` wrapping one).
    /// Only the outer ring is used; coordinates are `[lon, lat]`.
    pub fn from_geojson_str(s: &str) -> Result<Self, PolygonError> {
        let geom = match serde_json::from_str::<GeoJsonDoc>(s)? {
            GeoJsonDoc::Feature { geometry } => geometry,
            GeoJsonDoc::Geometry(g) => g,
        };
        if geom.kind != "Polygon" {
            return Err(PolygonError::GeometryType(geom.kind));
        }
        let outer = geom.coordinates.into_iter().next().unwrap_or_default();
        Self::new(outer.into_iter().map(|[lon, lat]| LatLon::new(lat, lon)).collect())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PolygonError> {
        Self::from_geojson_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_geojson(&self) -> String {
        let mut coords: Vec<[f64; 2]> = self.ring.iter().map(|p| [p.lon, p.lat]).collect();
        coords.push([self.ring[0].lon, self.ring[0].lat]);
        serde_json::json!({ "type": "Polygon", "coordinates": [coords] }).to_string()
    }

    /// Winding-number containment test. Points on the boundary count as inside.
    pub fn contains(&self, p: LatLon) -> bool {
        let n = self.ring.len();
        let mut winding = 0i32;
        for i in 0..n {
            let a = self.ring[i];
            let b = self.ring[(i + 1) % n];
            let cross = (b.lon - a.lon) * (p.lat - a.lat) - (p.lon - a.lon) * (b.lat - a.lat);
            let on_segment = cross == 0.0
                && p.lon >= a.lon.min(b.lon)
                && p.lon <= a.lon.max(b.lon)
                && p.lat >= a.lat.min(b.lat)
                && p.lat <= a.lat.max(b.lat);
            if on_segment {
                return true;
            }
            if a.lat <= p.lat {
                if b.lat > p.lat && cross > 0.0 {
                    winding += 1;
                }
            } else if b.lat <= p.lat && cross < 0.0 {
                winding -= 1;
            }
        }
        winding != 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haversine_one_degree_of_latitude() {
        let d = haversine_m(LatLon::new(52.0, 13.0), LatLon::new(53.0, 13.0));
        assert!((d - 111_195.0).abs() < 10.0, "{d}");
    }

    #[test]
    fn offset_roundtrips_distance() {
        let c = LatLon::new(52.5, 13.4);
        let p = c.offset_m(300.0, 400.0);
        assert!((c.distance_m(&p) - 500.0).abs() < 0.5);
    }

    #[test]
    fn bearing_cardinal_directions() {
        let c = LatLon::new(52.5, 13.4);
        assert!((c.bearing_deg(&c.offset_m(100.0, 0.0)) - 0.0).abs() < 1e-6);
        assert!((c.bearing_deg(&c.offset_m(0.0, 100.0)) - 90.0).abs() < 0.01);
        assert!((c.bearing_deg(&c.offset_m(-100.0, 0.0)) - 180.0).abs() < 1e-6);
        assert!((c.bearing_deg(&c.offset_m(0.0, -100.0)) - 270.0).abs() < 0.01);
    }

    #[test]
    fn polygon_rejects_degenerate() {
        let r = Polygon::new(vec![LatLon::new(0.0, 0.0), LatLon::new(1.0, 1.0), LatLon::new(0.0, 0.0)]);
        assert!(matches!(r, Err(PolygonError::Degenerate(2))));
    }

    #[test]
    fn polygon_contains_concave() {
        // U-shape opening north
        let poly = Polygon::new(vec![
            LatLon::new(0.0, 0.0),
            LatLon::new(0.0, 3.0),
            LatLon::new(3.0, 3.0),
            LatLon::new(3.0, 2.0),
            LatLon::new(1.0, 2.0),
            LatLon::new(1.0, 1.0),
            LatLon::new(3.0, 1.0),
            LatLon::new(3.0, 0.0),
        ])
        .unwrap();
        assert!(poly.contains(LatLon::new(0.5, 1.5)));
        assert!(poly.contains(LatLon::new(2.0, 0.5)));
        assert!(!poly.contains(LatLon::new(2.0, 1.5)));
        assert!(!poly.contains(LatLon::new(-1.0, 1.5)));
        assert!(poly.contains(LatLon::new(0.0, 1.5)));
    }

    #[test]
    fn geojson_roundtrip() {
        let poly = Polygon::rectangle(LatLon::new(52.0, 13.0), LatLon::new(53.0, 14.0));
        let back = Polygon::from_geojson_str(&poly.to_geojson()).unwrap();
        assert_eq!(poly, back);
        let feature = format!(r#"{{"type":"Feature","properties":{{}},"geometry":{}}}"#, poly.to_geojson());
        assert_eq!(Polygon::from_geojson_str(&feature).unwrap(), poly);
    }
}
