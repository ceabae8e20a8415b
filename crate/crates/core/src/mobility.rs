//! Peer populations and motion: pipes, grids, bounded fields and beacons,
//! under uniform-speed or start-stop (irregular) movement.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use thiserror::Error;

use crate::geo::{GeoError, Polyline, WayPoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MobilityError {
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("path spawns no peers")]
    NoPeers,
    #[error("interval must be positive, got {0}")]
    Interval(f64),
    #[error("grid spacing must be positive, got {0}")]
    Spacing(f64),
    #[error("grid needs at least one line per axis")]
    NoLines,
    #[error("field side must be positive, got {0}")]
    FieldSide(f64),
    #[error("speed must be positive, got {0}")]
    Speed(f64),
    #[error("seed slot {index} out of range for {count} peers")]
    SeedSlot { index: usize, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MobilityMode {
    Uniform,
    Irregular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    EastWest,
    NorthSouth,
}

/// Which grid line a generated path runs along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridLine {
    pub grid: u32,
    pub axis: Axis,
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub mode: MobilityMode,
    pub line: Polyline,
    pub n_sellers: u32,
    pub n_buyers: u32,
    /// Paired with a path running the opposite way.
    pub bidirectional: bool,
    pub grid_line: Option<GridLine>,
}

impl PathSpec {
    pub fn new(
        mode: MobilityMode,
        vertices: Vec<WayPoint>,
        n_sellers: u32,
        n_buyers: u32,
    ) -> Result<Self, MobilityError> {
        Ok(Self {
            mode,
            line: Polyline::new(vertices)?,
            n_sellers,
            n_buyers,
            bidirectional: false,
            grid_line: None,
        })
    }

    pub fn peer_count(&self) -> u32 {
        self.n_sellers + self.n_buyers
    }

    /// The same path travelled in the opposite direction.
    pub fn reversed(&self) -> Self {
        Self {
            line: self.line.reversed(),
            ..self.clone()
        }
    }
}

/// Square field with reflecting walls; `anchor` is the southwest corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpec {
    pub side_m: f64,
    pub n_peers: u32,
    pub anchor: WayPoint,
}

impl FieldSpec {
    pub fn new(anchor: WayPoint, side_m: f64, n_peers: u32) -> Result<Self, MobilityError> {
        if !(side_m > 0.0) {
            return Err(MobilityError::FieldSide(side_m));
        }
        if n_peers == 0 {
            return Err(MobilityError::NoPeers);
        }
        Ok(Self {
            side_m,
            n_peers,
            anchor,
        })
    }

    pub fn to_waypoint(&self, x_m: f64, y_m: f64) -> WayPoint {
        // Anchors are validated and fields are small, so the offset stays valid.
        self.anchor
            .offset_m(x_m, y_m)
            .unwrap_or(self.anchor)
    }
}

/// Start-stop movement parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrregularModel {
    /// Chance per moving tick of starting a pause.
    pub pause_probability: f64,
    pub pause_min_s: u32,
    pub pause_max_s: u32,
    /// Speeds are drawn from `(min_speed_fraction * v_max, v_max]`.
    pub min_speed_fraction: f64,
}

impl Default for IrregularModel {
    fn default() -> Self {
        Self {
            pause_probability: 0.1,
            pause_min_s: 1,
            pause_max_s: 30,
            min_speed_fraction: 0.2,
        }
    }
}

impl IrregularModel {
    pub fn draw_speed<R: Rng + ?Sized>(&self, v_max: f64, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        v_max * (1.0 - (1.0 - self.min_speed_fraction) * u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotionState {
    OnPath {
        offset_m: f64,
        speed_mps: f64,
        pause_remaining_s: f64,
        finished: bool,
    },
    RandomWalk {
        x_m: f64,
        y_m: f64,
        heading: f64,
        speed_mps: f64,
    },
    Static,
}

impl MotionState {
    pub fn on_path(offset_m: f64, speed_mps: f64) -> Self {
        MotionState::OnPath {
            offset_m,
            speed_mps,
            pause_remaining_s: 0.0,
            finished: false,
        }
    }

    pub fn is_finished(&self) -> bool {
        matches!(self, MotionState::OnPath { finished: true, .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Seller,
    Buyer,
}

/// Which slot on a path holds the seller(s).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedPosition {
    #[default]
    First,
    Middle,
    Last,
    Index(usize),
}

impl SeedPosition {
    pub fn slot(self, count: usize) -> Result<usize, MobilityError> {
        if count == 0 {
            return Err(MobilityError::NoPeers);
        }
        match self {
            SeedPosition::First => Ok(0),
            SeedPosition::Middle => Ok(count / 2),
            SeedPosition::Last => Ok(count - 1),
            SeedPosition::Index(index) if index < count => Ok(index),
            SeedPosition::Index(index) => Err(MobilityError::SeedSlot { index, count }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpawnedPeer {
    /// Position in the entry queue, 0 at the head.
    pub slot: u32,
    pub role: Role,
    /// Seconds after the start at which the peer reaches the first vertex.
    pub entry_delay_s: f64,
    pub motion: MotionState,
}

/// Queues a path's peers at its start vertex, `interval_m` apart.
///
/// Peer `k` reaches the start vertex `interval_m * k / speed_mps` seconds in.
/// Sellers occupy consecutive slots beginning at `seed`.
pub fn spawn_peers(
    spec: &PathSpec,
    interval_m: f64,
    speed_mps: f64,
    seed: SeedPosition,
) -> Result<Vec<SpawnedPeer>, MobilityError> {
    if !(interval_m > 0.0) {
        return Err(MobilityError::Interval(interval_m));
    }
    if !(speed_mps > 0.0) {
        return Err(MobilityError::Speed(speed_mps));
    }
    let count = spec.peer_count() as usize;
    if count == 0 {
        return Err(MobilityError::NoPeers);
    }
    let first_seller = if spec.n_sellers > 0 { seed.slot(count)? } else { 0 };
    let is_seller = |k: usize| {
        let rel = (k + count - first_seller) % count;
        rel < spec.n_sellers as usize
    };
    Ok((0..count)
        .map(|k| SpawnedPeer {
            slot: k as u32,
            role: if is_seller(k) { Role::Seller } else { Role::Buyer },
            entry_delay_s: interval_m * k as f64 / speed_mps,
            motion: MotionState::on_path(0.0, speed_mps),
        })
        .collect())
}

/// Uniform random position and heading inside the field, with a constant
/// speed drawn from the irregular model's speed band.
pub fn spawn_field_peer<R: Rng + ?Sized>(
    field: &FieldSpec,
    max_speed_mps: f64,
    model: &IrregularModel,
    rng: &mut R,
) -> MotionState {
    let x_m = rng.random::<f64>() * field.side_m;
    let y_m = rng.random::<f64>() * field.side_m;
    let heading = rng.random::<f64>() * 2.0 * PI;
    MotionState::RandomWalk {
        x_m,
        y_m,
        heading,
        speed_mps: model.draw_speed(max_speed_mps, rng),
    }
}

/// Constant-speed advance along the path, clamped at its end.
pub fn step_uniform(m: MotionState, path: &Polyline, dt: f64, speed_mps: f64) -> MotionState {
    match m {
        MotionState::OnPath { finished: true, .. } => m,
        MotionState::OnPath {
            offset_m,
            pause_remaining_s,
            ..
        } => {
            let (_, offset_m, finished) = path.advance(offset_m, speed_mps * dt);
            MotionState::OnPath {
                offset_m,
                speed_mps,
                pause_remaining_s,
                finished,
            }
        }
        other => other,
    }
}

/// Start-stop advance: count down an active pause, otherwise maybe begin
/// one, otherwise move at a freshly drawn speed.
pub fn step_irregular<R: Rng + ?Sized>(
    m: MotionState,
    path: &Polyline,
    dt: f64,
    v_max: f64,
    model: &IrregularModel,
    rng: &mut R,
) -> MotionState {
    let MotionState::OnPath {
        offset_m,
        pause_remaining_s,
        finished,
        ..
    } = m
    else {
        return m;
    };
    if finished {
        return m;
    }
    if pause_remaining_s > 0.0 {
        return MotionState::OnPath {
            offset_m,
            speed_mps: 0.0,
            pause_remaining_s: (pause_remaining_s - dt).max(0.0),
            finished,
        };
    }
    if rng.random_bool(model.pause_probability) {
        let pause = rng.random_range(model.pause_min_s..=model.pause_max_s) as f64;
        // the current tick is the first paused one
        return MotionState::OnPath {
            offset_m,
            speed_mps: 0.0,
            pause_remaining_s: (pause - dt).max(0.0),
            finished,
        };
    }
    let speed_mps = model.draw_speed(v_max, rng);
    let (_, offset_m, finished) = path.advance(offset_m, speed_mps * dt);
    MotionState::OnPath {
        offset_m,
        speed_mps,
        pause_remaining_s: 0.0,
        finished,
    }
}

/// Straight-line motion inside the field with specular reflection at walls.
pub fn step_random_walk(m: MotionState, field: &FieldSpec, dt: f64) -> MotionState {
    let MotionState::RandomWalk {
        mut x_m,
        mut y_m,
        mut heading,
        speed_mps,
    } = m
    else {
        return m;
    };
    let side = field.side_m;
    let dist = speed_mps * dt;
    x_m += dist * libm::cos(heading);
    y_m += dist * libm::sin(heading);
    let mut flip_x = false;
    let mut flip_y = false;
    // steps longer than the side fold several times
    while !(0.0..=side).contains(&x_m) {
        x_m = if x_m > side { 2.0 * side - x_m } else { -x_m };
        flip_x = !flip_x;
    }
    while !(0.0..=side).contains(&y_m) {
        y_m = if y_m > side { 2.0 * side - y_m } else { -y_m };
        flip_y = !flip_y;
    }
    if flip_x {
        heading = PI - heading;
    }
    if flip_y {
        heading = -heading;
    }
    heading = libm::remainder(heading, 2.0 * PI);
    MotionState::RandomWalk {
        x_m,
        y_m,
        heading,
        speed_mps,
    }
}

/// Rows of east-west lines and columns of north-south lines, `spacing_m`
/// apart, each travelled in both directions.
///
/// The grid covers `(cols + 1) * spacing_m` by `(rows + 1) * spacing_m`
/// meters north-east of `anchor`; lines sit at whole multiples of the
/// spacing, so every line crosses every line of the other axis. All sellers
/// go on the first path.
pub fn build_grid(
    anchor: WayPoint,
    rows: u32,
    cols: u32,
    spacing_m: f64,
    sellers: u32,
    buyers_per_path: u32,
    mode: MobilityMode,
    grid: u32,
) -> Result<Vec<PathSpec>, MobilityError> {
    if !(spacing_m > 0.0) {
        return Err(MobilityError::Spacing(spacing_m));
    }
    if rows == 0 || cols == 0 {
        return Err(MobilityError::NoLines);
    }
    let width = f64::from(cols + 1) * spacing_m;
    let height = f64::from(rows + 1) * spacing_m;
    let mut paths = Vec::with_capacity(2 * (rows + cols) as usize);
    let mut push_line = |a: WayPoint, b: WayPoint, axis: Axis, index: u32| -> Result<(), MobilityError> {
        let mut forward = PathSpec::new(mode, alloc::vec![a, b], 0, buyers_per_path)?;
        forward.bidirectional = true;
        forward.grid_line = Some(GridLine { grid, axis, index });
        let backward = forward.reversed();
        paths.push(forward);
        paths.push(backward);
        Ok(())
    };
    for i in 0..rows {
        let y = f64::from(i + 1) * spacing_m;
        push_line(anchor.offset_m(0.0, y)?, anchor.offset_m(width, y)?, Axis::EastWest, i)?;
    }
    for j in 0..cols {
        let x = f64::from(j + 1) * spacing_m;
        push_line(anchor.offset_m(x, 0.0)?, anchor.offset_m(x, height)?, Axis::NorthSouth, j)?;
    }
    paths[0].n_sellers = sellers;
    Ok(paths)
}

/// Crossing point of two grid paths on different axes of the same grid.
pub fn junction(a: &PathSpec, b: &PathSpec) -> Option<WayPoint> {
    let (la, lb) = (a.grid_line?, b.grid_line?);
    if la.grid != lb.grid || la.axis == lb.axis {
        return None;
    }
    let (p1, p2) = (a.line.start(), a.line.end());
    let (q1, q2) = (b.line.start(), b.line.end());
    let (x1, y1, x2, y2) = (p1.lon(), p1.lat(), p2.lon(), p2.lat());
    let (x3, y3, x4, y4) = (q1.lon(), q1.lat(), q2.lon(), q2.lat());
    let denom = (x1 - x2) * (y3 - y4) - (y1 - y2) * (x3 - x4);
    if denom == 0.0 {
        return None;
    }
    let t = ((x1 - x3) * (y3 - y4) - (y1 - y3) * (x3 - x4)) / denom;
    WayPoint::new(y1 + t * (y2 - y1), x1 + t * (x2 - x1)).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::great_circle_distance;
    use crate::rng::peer_rng;
    use alloc::vec;

    fn london_path(mode: MobilityMode, sellers: u32, buyers: u32) -> PathSpec {
        PathSpec::new(
            mode,
            vec![
                WayPoint::new(51.501427, -0.180414).unwrap(),
                WayPoint::new(51.492243, -0.178214).unwrap(),
            ],
            sellers,
            buyers,
        )
        .unwrap()
    }

    #[test]
    fn degenerate_path_rejected() {
        let p = WayPoint::new(0.0, 0.0).unwrap();
        assert!(matches!(
            PathSpec::new(MobilityMode::Uniform, vec![p, p], 1, 1),
            Err(MobilityError::Geo(GeoError::DegeneratePath))
        ));
    }

    #[test]
    fn entry_schedule() {
        let spec = london_path(MobilityMode::Uniform, 1, 2);
        let peers = spawn_peers(&spec, 8.0, 1.0, SeedPosition::First).unwrap();
        let delays: Vec<f64> = peers.iter().map(|p| p.entry_delay_s).collect();
        assert_eq!(delays, vec![0.0, 8.0, 16.0]);
        assert_eq!(peers[0].role, Role::Seller);
        assert!(peers[1..].iter().all(|p| p.role == Role::Buyer));

        let slow = spawn_peers(&spec, 8.0, 0.5, SeedPosition::First).unwrap();
        assert_eq!(slow[2].entry_delay_s, 32.0);
        assert_eq!(spawn_peers(&spec, 8.0, 1.0, SeedPosition::First).unwrap(), peers);
    }

    #[test]
    fn seed_positions() {
        let spec = london_path(MobilityMode::Uniform, 1, 4);
        let seller = |pos| {
            spawn_peers(&spec, 8.0, 1.0, pos)
                .unwrap()
                .iter()
                .position(|p| p.role == Role::Seller)
                .unwrap()
        };
        assert_eq!(seller(SeedPosition::First), 0);
        assert_eq!(seller(SeedPosition::Middle), 2);
        assert_eq!(seller(SeedPosition::Last), 4);
        assert_eq!(seller(SeedPosition::Index(3)), 3);
        assert!(matches!(
            spawn_peers(&spec, 8.0, 1.0, SeedPosition::Index(5)),
            Err(MobilityError::SeedSlot { index: 5, count: 5 })
        ));
    }

    #[test]
    fn spawn_validation() {
        let spec = london_path(MobilityMode::Uniform, 1, 2);
        assert!(matches!(
            spawn_peers(&spec, 0.0, 1.0, SeedPosition::First),
            Err(MobilityError::Interval(_))
        ));
        let empty = london_path(MobilityMode::Uniform, 0, 0);
        assert!(matches!(
            spawn_peers(&empty, 8.0, 1.0, SeedPosition::First),
            Err(MobilityError::NoPeers)
        ));
    }

    #[test]
    fn uniform_step_and_finish() {
        let spec = london_path(MobilityMode::Uniform, 1, 0);
        let m = step_uniform(MotionState::on_path(0.0, 1.0), &spec.line, 60.0, 1.0);
        assert!(matches!(m, MotionState::OnPath { offset_m, .. } if offset_m == 60.0));

        let mut m = MotionState::on_path(0.0, 1.0);
        let mut ticks = 0;
        while !m.is_finished() {
            m = step_uniform(m, &spec.line, 1.0, 1.0);
            ticks += 1;
        }
        let expected = libm::ceil(spec.line.length()) as i32;
        assert!((ticks - expected).abs() <= 1, "{ticks}");
        assert!((1032..=1034).contains(&ticks));
        assert_eq!(step_uniform(m, &spec.line, 1.0, 1.0), m);
    }

    #[test]
    fn pause_counts_down() {
        let spec = london_path(MobilityMode::Irregular, 1, 0);
        let m = MotionState::OnPath {
            offset_m: 10.0,
            speed_mps: 0.0,
            pause_remaining_s: 5.0,
            finished: false,
        };
        let mut rng = peer_rng(1, 0);
        let next = step_irregular(m, &spec.line, 1.0, 1.0, &IrregularModel::default(), &mut rng);
        assert_eq!(
            next,
            MotionState::OnPath {
                offset_m: 10.0,
                speed_mps: 0.0,
                pause_remaining_s: 4.0,
                finished: false
            }
        );
    }

    fn irregular_run(seed: u64, ticks: usize) -> Vec<f64> {
        // long enough that nothing finishes
        let a = WayPoint::new(0.0, 0.0).unwrap();
        let b = WayPoint::new(0.0, 0.1).unwrap();
        let line = Polyline::new(vec![a, b]).unwrap();
        let model = IrregularModel::default();
        let mut rng = peer_rng(seed, 0);
        let mut m = MotionState::on_path(0.0, 1.0);
        let mut out = Vec::with_capacity(ticks);
        for _ in 0..ticks {
            m = step_irregular(m, &line, 1.0, 1.0, &model, &mut rng);
            if let MotionState::OnPath { offset_m, .. } = m {
                out.push(offset_m);
            }
        }
        out
    }

    #[test]
    fn irregular_is_deterministic_and_monotone() {
        let a = irregular_run(9, 500);
        assert_eq!(a, irregular_run(9, 500));
        assert!(a.windows(2).all(|w| w[1] >= w[0]));
        assert_ne!(a, irregular_run(10, 500));
    }

    #[test]
    fn irregular_mean_speed() {
        // Renewal argument for the default model: a free tick moves with
        // probability 0.9 at mean speed 0.6 v, or starts a pause lasting
        // E[U{1..30}] = 15.5 ticks. Mean advance per tick is therefore
        // 0.9 * 0.6 / (0.9 + 0.1 * 15.5) = 0.54 / 2.45 of v_max.
        let expected = 0.54 / 2.45;
        let mut total = 0.0;
        let runs = 40;
        for seed in 0..runs {
            total += irregular_run(seed, 3600).last().copied().unwrap() / 3600.0;
        }
        let mean = total / runs as f64;
        assert!((mean - expected).abs() < 0.01, "{mean} vs {expected}");
        assert!(mean < 1.0);
    }

    fn field() -> FieldSpec {
        FieldSpec::new(WayPoint::new(51.5, -0.18).unwrap(), 300.0, 10).unwrap()
    }

    #[test]
    fn wall_reflection() {
        let f = field();
        let m = MotionState::RandomWalk {
            x_m: 299.5,
            y_m: 100.0,
            heading: 0.0,
            speed_mps: 1.0,
        };
        let MotionState::RandomWalk { x_m, y_m, heading, .. } = step_random_walk(m, &f, 1.0) else {
            panic!()
        };
        assert!((x_m - 299.5).abs() < 1e-9);
        assert!((y_m - 100.0).abs() < 1e-9);
        assert!((heading.abs() - PI).abs() < 1e-12);

        let m = MotionState::RandomWalk {
            x_m: 10.0,
            y_m: 10.0,
            heading: PI / 2.0,
            speed_mps: 2.0,
        };
        let MotionState::RandomWalk { x_m, y_m, .. } = step_random_walk(m, &f, 1.0) else {
            panic!()
        };
        assert!((x_m - 10.0).abs() < 1e-9 && (y_m - 12.0).abs() < 1e-9);
    }

    #[test]
    fn random_walk_stays_inside() {
        let f = field();
        let model = IrregularModel::default();
        for seed in 0..10 {
            let mut rng = peer_rng(seed, 1);
            let mut m = spawn_field_peer(&f, 5.0, &model, &mut rng);
            for _ in 0..10_000 {
                m = step_random_walk(m, &f, 1.0);
                let MotionState::RandomWalk { x_m, y_m, .. } = m else { panic!() };
                assert!((0.0..=f.side_m).contains(&x_m) && (0.0..=f.side_m).contains(&y_m));
            }
        }
        // a step several sides long still folds back inside
        let m = MotionState::RandomWalk { x_m: 1.0, y_m: 1.0, heading: 0.3, speed_mps: 1000.0 };
        let MotionState::RandomWalk { x_m, y_m, .. } = step_random_walk(m, &f, 1.0) else { panic!() };
        assert!((0.0..=300.0).contains(&x_m) && (0.0..=300.0).contains(&y_m));
    }

    #[test]
    fn grid_construction() {
        let anchor = WayPoint::new(51.5, -0.18).unwrap();
        let g = build_grid(anchor, 2, 2, 340.0, 1, 50, MobilityMode::Uniform, 0).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g.iter().map(|p| p.n_sellers).sum::<u32>(), 1);
        assert_eq!(g[0].n_sellers, 1);
        for p in &g {
            let len = p.line.length();
            assert!((1000.0..=1030.0).contains(&len), "{len}");
            assert!(p.bidirectional);
        }
        assert_eq!(g[1].line.start(), g[0].line.end());
        assert_eq!(build_grid(anchor, 1, 1, 500.0, 1, 1, MobilityMode::Uniform, 0).unwrap().len(), 4);
        assert!(matches!(
            build_grid(anchor, 2, 2, 0.0, 1, 1, MobilityMode::Uniform, 0),
            Err(MobilityError::Spacing(_))
        ));
    }

    #[test]
    fn grid_junctions() {
        let anchor = WayPoint::new(51.5, -0.18).unwrap();
        let g = build_grid(anchor, 2, 2, 340.0, 1, 1, MobilityMode::Uniform, 0).unwrap();
        let j = junction(&g[0], &g[4]).unwrap();
        let expected = anchor.offset_m(340.0, 340.0).unwrap();
        assert!(great_circle_distance(&j, &expected) < 0.5);
        assert!(junction(&g[0], &g[1]).is_none());
        assert!(junction(&g[0], &g[2]).is_none());
    }

    #[test]
    fn mirrored_trajectories() {
        let fwd = london_path(MobilityMode::Uniform, 1, 3);
        let rev = fwd.reversed();
        let (s, e) = (fwd.line.start(), fwd.line.end());
        let mut a = MotionState::on_path(0.0, 1.0);
        let mut b = MotionState::on_path(0.0, 1.0);
        for _ in 0..400 {
            a = step_uniform(a, &fwd.line, 1.0, 1.0);
            b = step_uniform(b, &rev.line, 1.0, 1.0);
            let (MotionState::OnPath { offset_m: oa, .. }, MotionState::OnPath { offset_m: ob, .. }) = (a, b) else {
                panic!()
            };
            let pa = fwd.line.point_at(oa);
            let pb = rev.line.point_at(ob);
            // reflection about the midpoint in the linear lat/lon frame
            assert!((pa.lat() + pb.lat() - s.lat() - e.lat()).abs() < 1e-9);
            assert!((pa.lon() + pb.lon() - s.lon() - e.lon()).abs() < 1e-9);
        }
    }
}
