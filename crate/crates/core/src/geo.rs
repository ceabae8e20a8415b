//! Coordinates on a spherical Earth and straight-line motion between them.

use core::f64::consts::PI;

use thiserror::Error;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    Longitude(f64),
    #[error("interpolation fraction {0} outside [0, 1]")]
    Fraction(f64),
    #[error("path needs at least two vertices, got {0}")]
    TooFewVertices(usize),
    #[error("path has zero length")]
    DegeneratePath,
    #[error("negative distance {0}")]
    NegativeDistance(f64),
}

/// A latitude/longitude pair in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WayPoint {
    lat: f64,
    lon: f64,
}

impl WayPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::Latitude(lat));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::Longitude(lon));
        }
        Ok(Self { lat, lon })
    }

    /// Converts degrees/minutes/seconds (sign carried by `deg`) to a waypoint.
    pub fn from_dms(lat: (f64, f64, f64), lon: (f64, f64, f64)) -> Result<Self, GeoError> {
        fn decimal((d, m, s): (f64, f64, f64)) -> f64 {
            let magnitude = d.abs() + m / 60.0 + s / 3600.0;
            if d.is_sign_negative() {
                -magnitude
            } else {
                magnitude
            }
        }
        Self::new(decimal(lat), decimal(lon))
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Point displaced `east_m`/`north_m` meters using a local
    /// equirectangular approximation around `self`.
    pub fn offset_m(&self, east_m: f64, north_m: f64) -> Result<Self, GeoError> {
        let lat = self.lat + to_degrees(north_m / EARTH_RADIUS_M);
        let lon = self.lon + to_degrees(east_m / (EARTH_RADIUS_M * libm::cos(to_radians(self.lat))));
        Self::new(lat, lon)
    }
}

pub(crate) fn to_radians(deg: f64) -> f64 {
    deg * PI / 180.0
}

pub(crate) fn to_degrees(rad: f64) -> f64 {
    rad * 180.0 / PI
}

/// Trigonometric terms of a waypoint, computed once so that many distance
/// queries against the same point stay cheap. Distances computed through
/// `Prepared` are bit-identical to [`great_circle_distance`].
#[derive(Debug, Clone, Copy)]
pub struct Prepared {
    sin_lat: f64,
    cos_lat: f64,
    lon: f64,
}

impl Prepared {
    pub fn new(p: &WayPoint) -> Self {
        let lat = to_radians(p.lat);
        Self {
            sin_lat: libm::sin(lat),
            cos_lat: libm::cos(lat),
            lon: to_radians(p.lon),
        }
    }

    pub fn distance(&self, other: &Prepared) -> f64 {
        let cos_sigma = self.sin_lat * other.sin_lat
            + self.cos_lat * other.cos_lat * libm::cos(other.lon - self.lon);
        EARTH_RADIUS_M * libm::acos(cos_sigma.clamp(-1.0, 1.0))
    }
}

/// Great-circle distance in meters by the spherical law of cosines.
pub fn great_circle_distance(p: &WayPoint, q: &WayPoint) -> f64 {
    if p == q {
        return 0.0;
    }
    Prepared::new(p).distance(&Prepared::new(q))
}

/// Linear interpolation in latitude/longitude.
pub fn interpolate(p: &WayPoint, q: &WayPoint, f: f64) -> Result<WayPoint, GeoError> {
    if !(0.0..=1.0).contains(&f) {
        return Err(GeoError::Fraction(f));
    }
    Ok(lerp(p, q, f))
}

fn lerp(p: &WayPoint, q: &WayPoint, f: f64) -> WayPoint {
    if f <= 0.0 {
        return *p;
    }
    if f >= 1.0 {
        return *q;
    }
    WayPoint {
        lat: p.lat + (q.lat - p.lat) * f,
        lon: p.lon + (q.lon - p.lon) * f,
    }
}

/// A validated polyline with cached cumulative segment lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: alloc::vec::Vec<WayPoint>,
    cumulative: alloc::vec::Vec<f64>,
}

impl Polyline {
    pub fn new(vertices: alloc::vec::Vec<WayPoint>) -> Result<Self, GeoError> {
        if vertices.len() < 2 {
            return Err(GeoError::TooFewVertices(vertices.len()));
        }
        let mut cumulative = alloc::vec::Vec::with_capacity(vertices.len());
        let mut total = 0.0;
        cumulative.push(0.0);
        for pair in vertices.windows(2) {
            let d = great_circle_distance(&pair[0], &pair[1]);
            if d == 0.0 {
                return Err(GeoError::DegeneratePath);
            }
            total += d;
            cumulative.push(total);
        }
        Ok(Self {
            vertices,
            cumulative,
        })
    }

    pub fn vertices(&self) -> &[WayPoint] {
        &self.vertices
    }

    pub fn length(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1]
    }

    pub fn start(&self) -> WayPoint {
        self.vertices[0]
    }

    pub fn end(&self) -> WayPoint {
        self.vertices[self.vertices.len() - 1]
    }

    /// Point at `offset_m` meters along the line, clamped to the ends.
    pub fn point_at(&self, offset_m: f64) -> WayPoint {
        if offset_m <= 0.0 {
            return self.start();
        }
        if offset_m >= self.length() {
            return self.end();
        }
        // first vertex whose cumulative distance exceeds the offset
        let seg = self.cumulative.partition_point(|&c| c <= offset_m).max(1) - 1;
        let seg_len = self.cumulative[seg + 1] - self.cumulative[seg];
        let f = (offset_m - self.cumulative[seg]) / seg_len;
        lerp(&self.vertices[seg], &self.vertices[seg + 1], f)
    }

    /// Advances `step_m` from `offset_m`; see [`advance_along`].
    pub fn advance(&self, offset_m: f64, step_m: f64) -> (WayPoint, f64, bool) {
        let total = self.length();
        let new_offset = (offset_m + step_m).min(total);
        (self.point_at(new_offset), new_offset, new_offset >= total)
    }

    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        let total = self.length();
        let mut cumulative: alloc::vec::Vec<f64> =
            self.cumulative.iter().rev().map(|c| total - c).collect();
        cumulative[0] = 0.0;
        Self {
            vertices,
            cumulative,
        }
    }
}

/// Moves `step_m` meters along `path` starting at `offset_m`.
///
/// Returns the new position, the new offset (clamped at the path length)
/// and whether the end of the path was reached.
pub fn advance_along(
    path: &[WayPoint],
    offset_m: f64,
    step_m: f64,
) -> Result<(WayPoint, f64, bool), GeoError> {
    if offset_m < 0.0 {
        return Err(GeoError::NegativeDistance(offset_m));
    }
    if step_m < 0.0 {
        return Err(GeoError::NegativeDistance(step_m));
    }
    let line = Polyline::new(path.to_vec())?;
    Ok(line.advance(offset_m, step_m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn wp(lat: f64, lon: f64) -> WayPoint {
        WayPoint::new(lat, lon).unwrap()
    }

    fn london() -> (WayPoint, WayPoint) {
        (wp(51.501427, -0.180414), wp(51.492243, -0.178214))
    }

    /// Equirectangular meters between nearby points, used as an
    /// independent metric for positional comparisons.
    fn local_m(p: &WayPoint, q: &WayPoint) -> f64 {
        let mean_lat = to_radians((p.lat + q.lat) / 2.0);
        let dy = to_radians(q.lat - p.lat) * EARTH_RADIUS_M;
        let dx = to_radians(q.lon - p.lon) * EARTH_RADIUS_M * libm::cos(mean_lat);
        libm::sqrt(dx * dx + dy * dy)
    }

    #[test]
    fn london_pipe_length() {
        let (a, b) = london();
        let d = great_circle_distance(&a, &b);
        assert!((d - 1032.458).abs() / 1032.458 < 0.001, "{d}");
    }

    #[test]
    fn identical_points_are_zero() {
        assert_eq!(great_circle_distance(&wp(10.0, 20.0), &wp(10.0, 20.0)), 0.0);
    }

    #[test]
    fn equatorial_degree() {
        // spherical law of cosines worked by hand: sin0 sin0 + cos0 cos0 cos(1deg)
        // = cos(1deg), so sigma = 1deg = pi/180 rad.
        let expected = 6_371_000.0 * PI / 180.0;
        assert!((expected - 111_194.93).abs() < 0.01);
        let d = great_circle_distance(&wp(0.0, 0.0), &wp(0.0, 1.0));
        assert!((d - expected).abs() < 1e-6, "{d}");
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(WayPoint::new(91.0, 0.0), Err(GeoError::Latitude(_))));
        assert!(matches!(WayPoint::new(0.0, -180.5), Err(GeoError::Longitude(_))));
        assert!(WayPoint::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn dms_conversion() {
        let p = WayPoint::from_dms((51.0, 30.0, 5.137), (-0.0, 10.0, 49.49)).unwrap();
        assert!((p.lat() - 51.501427).abs() < 1e-6);
        assert!((p.lon() + 0.180414).abs() < 1e-6);
    }

    #[test]
    fn interpolation_endpoints_and_midpoint() {
        let (a, b) = london();
        assert_eq!(interpolate(&a, &b, 0.0).unwrap(), a);
        assert_eq!(interpolate(&a, &b, 1.0).unwrap(), b);
        assert_eq!(interpolate(&wp(0.0, 0.0), &wp(0.0, 2.0), 0.5).unwrap(), wp(0.0, 1.0));
        assert!(matches!(interpolate(&a, &b, 1.5), Err(GeoError::Fraction(_))));
        assert!(interpolate(&a, &b, -0.1).is_err());
    }

    #[test]
    fn london_midpoint_is_half_way() {
        let (a, b) = london();
        let mid = interpolate(&a, &b, 0.5).unwrap();
        let half = great_circle_distance(&a, &b) / 2.0;
        let d = great_circle_distance(&a, &mid);
        assert!((d - half).abs() / half < 0.005, "{d} vs {half}");
    }

    #[test]
    fn advance_step_zero_and_overshoot() {
        let (a, b) = london();
        let path = [a, b];
        let (p, off, end) = advance_along(&path, 0.0, 0.0).unwrap();
        assert_eq!((p, off, end), (a, 0.0, false));

        let total = great_circle_distance(&a, &b);
        let (p, off, end) = advance_along(&path, 0.0, 2000.0).unwrap();
        assert_eq!(p, b);
        assert_eq!(off, total);
        assert!(end);
    }

    #[test]
    fn advance_matches_interpolation() {
        let (a, b) = london();
        let total = great_circle_distance(&a, &b);
        let (p, off, end) = advance_along(&[a, b], 100.0, 60.0).unwrap();
        assert_eq!(off, 160.0);
        assert!(!end);
        let expected = interpolate(&a, &b, 160.0 / total).unwrap();
        assert!(local_m(&p, &expected) < 1e-6);
    }

    #[test]
    fn advance_rejects_bad_input() {
        let (a, b) = london();
        assert!(matches!(advance_along(&[a], 0.0, 1.0), Err(GeoError::TooFewVertices(1))));
        assert!(matches!(advance_along(&[a, a], 0.0, 1.0), Err(GeoError::DegeneratePath)));
        assert!(advance_along(&[a, b], -1.0, 1.0).is_err());
        assert!(advance_along(&[a, b], 0.0, -1.0).is_err());
    }

    #[test]
    fn multi_segment_polyline() {
        let a = wp(51.5, -0.18);
        let b = a.offset_m(300.0, 0.0).unwrap();
        let c = b.offset_m(0.0, 400.0).unwrap();
        let line = Polyline::new(vec![a, b, c]).unwrap();
        let l1 = great_circle_distance(&a, &b);
        assert_eq!(line.point_at(l1), b);
        let p = line.point_at(l1 + 100.0);
        assert!((great_circle_distance(&b, &p) - 100.0).abs() < 0.5);
        let rev = line.reversed();
        assert_eq!(rev.start(), c);
        assert!((rev.length() - line.length()).abs() < 1e-9);
    }

    fn any_point() -> impl Strategy<Value = WayPoint> {
        (-89.0f64..89.0, -179.0f64..179.0).prop_map(|(lat, lon)| wp(lat, lon))
    }

    proptest! {
        #[test]
        fn distance_is_symmetric(p in any_point(), q in any_point()) {
            prop_assert_eq!(great_circle_distance(&p, &q), great_circle_distance(&q, &p));
        }

        #[test]
        fn triangle_inequality(p in any_point(), q in any_point(), r in any_point()) {
            let pr = great_circle_distance(&p, &r);
            let via = great_circle_distance(&p, &q) + great_circle_distance(&q, &r);
            prop_assert!(pr <= via + 1e-6, "{} > {}", pr, via);
        }

        #[test]
        fn zero_distance_to_self(p in any_point()) {
            prop_assert_eq!(great_circle_distance(&p, &p), 0.0);
        }

        #[test]
        fn interpolation_distance_monotone(f1 in 0.0f64..=1.0, f2 in 0.0f64..=1.0) {
            let (a, b) = london();
            let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
            let d_lo = great_circle_distance(&a, &interpolate(&a, &b, lo).unwrap());
            let d_hi = great_circle_distance(&a, &interpolate(&a, &b, hi).unwrap());
            // acos resolution near zero angle is about 0.1 m
            prop_assert!(d_lo <= d_hi + 0.2);
        }

        #[test]
        fn advance_is_cumulative(a in 0.0f64..800.0, b in 0.0f64..800.0) {
            let (s, e) = london();
            let path = [s, e];
            let (_, mid, _) = advance_along(&path, 0.0, a).unwrap();
            let (p1, off1, end1) = advance_along(&path, mid, b).unwrap();
            let (p2, off2, end2) = advance_along(&path, 0.0, a + b).unwrap();
            prop_assert!((off1 - off2).abs() < 1e-9);
            prop_assert_eq!(end1, end2);
            prop_assert!(local_m(&p1, &p2) < 1e-6);
        }
    }
}
