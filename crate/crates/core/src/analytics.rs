//! Heat grid, centroid tracking, line-crossing footfall, occupancy and
//! gender tallies.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::detection::Detection;
use crate::imgcore::{GrayImage, PixelBuffer, Rect};

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("heat grid has no counts")]
    EmptyGrid,
    #[error("track {0} has no previous centroid")]
    MissingHistory(u64),
    #[error("counting line endpoints coincide")]
    DegenerateLine,
    #[error("bad grid size {0}")]
    BadGridSize(usize),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T, E = AnalyticsError> = std::result::Result<T, E>;

pub type Point = (f64, f64);

/// `n x n` visit counts over the frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeatGrid {
    n: usize,
    frame_w: u32,
    frame_h: u32,
    counts: Vec<u64>,
}

impl HeatGrid {
    pub fn new(n: usize, frame_w: u32, frame_h: u32) -> Result<Self> {
        if n == 0 || frame_w == 0 || frame_h == 0 {
            return Err(AnalyticsError::BadGridSize(n));
        }
        Ok(Self {
            n,
            frame_w,
            frame_h,
            counts: vec![0; n * n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn frame_size(&self) -> (u32, u32) {
        (self.frame_w, self.frame_h)
    }

    /// Count at column `cx`, row `cy`.
    pub fn get(&self, cx: usize, cy: usize) -> u64 {
        self.counts[cy * self.n + cx]
    }

    /// Row-major counts.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Cell holding the center of `r`, clamped to the grid.
    pub fn cell_of(&self, r: &Rect) -> (usize, usize) {
        let (cx, cy) = r.center();
        let col = (cx * self.n as f64 / self.frame_w as f64).floor();
        let row = (cy * self.n as f64 / self.frame_h as f64).floor();
        let clamp = |v: f64| (v.max(0.0) as usize).min(self.n - 1);
        (clamp(col), clamp(row))
    }

    pub fn update(&mut self, dets: &[Detection]) {
        for d in dets {
            let (cx, cy) = self.cell_of(&d.rect);
            self.counts[cy * self.n + cx] += 1;
        }
    }

    /// Share of all visits per cell, in percent, row-major.
    pub fn percentages(&self) -> Result<Vec<f64>> {
        let total = self.total();
        if total == 0 {
            return Err(AnalyticsError::EmptyGrid);
        }
        Ok(self
            .counts
            .iter()
            .map(|&c| c as f64 * 100.0 / total as f64)
            .collect())
    }

    fn block(&self) -> (u32, u32) {
        let n = self.n as u32;
        ((self.frame_w / n).max(1), (self.frame_h / n).max(1))
    }

    fn ramp(&self, count: u64, max: u64) -> [u8; 3] {
        let t = if max == 0 { 0.0 } else { count as f64 / max as f64 };
        [
            (255.0 * t).round() as u8,
            0,
            (255.0 * (1.0 - t)).round() as u8,
        ]
    }

    /// Blue-to-red rendering, one solid block per cell.
    pub fn render_heat(&self) -> PixelBuffer {
        let (bw, bh) = self.block();
        let n = self.n as u32;
        let (w, h) = (bw * n, bh * n);
        let max = self.counts.iter().copied().max().unwrap_or(0);
        let mut data = Vec::with_capacity((w * h * 3) as usize);
        for y in 0..h {
            for x in 0..w {
                let c = self.get((x / bw) as usize, (y / bh) as usize);
                data.extend_from_slice(&self.ramp(c, max));
            }
        }
        PixelBuffer::new(w, h, 3, data).expect("sized buffer")
    }

    /// Blue-to-red rendering at the frame size the grid was built for.
    pub fn render_frame_sized(&self) -> PixelBuffer {
        let (fw, fh) = (self.frame_w, self.frame_h);
        let max = self.counts.iter().copied().max().unwrap_or(0);
        let mut data = Vec::with_capacity((fw * fh * 3) as usize);
        for y in 0..fh {
            let row = ((y as u64 * self.n as u64 / fh as u64) as usize).min(self.n - 1);
            for x in 0..fw {
                let col = ((x as u64 * self.n as u64 / fw as u64) as usize).min(self.n - 1);
                data.extend_from_slice(&self.ramp(self.get(col, row), max));
            }
        }
        PixelBuffer::new(fw, fh, 3, data).expect("sized buffer")
    }

    /// Tints `frame` with the heat colors, half and half.
    pub fn overlay(&self, frame: &GrayImage) -> PixelBuffer {
        let max = self.counts.iter().copied().max().unwrap_or(0);
        let (fw, fh) = (frame.width(), frame.height());
        let mut data = Vec::with_capacity((fw * fh * 3) as usize);
        for y in 0..fh {
            let row = ((y as u64 * self.n as u64 / fh as u64) as usize).min(self.n - 1);
            for x in 0..fw {
                let col = ((x as u64 * self.n as u64 / fw as u64) as usize).min(self.n - 1);
                let g = frame.get(x, y) as u16;
                let c = self.ramp(self.get(col, row), max);
                data.extend(c.iter().map(|&v| ((g + v as u16) / 2) as u8));
            }
        }
        PixelBuffer::new(fw, fh, 3, data).expect("sized buffer")
    }

    /// `GRID1` text: size line, then one row of counts per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("GRID1\n{} {} {}\n", self.n, self.frame_w, self.frame_h);
        for row in self.counts.chunks(self.n) {
            let line: Vec<String> = row.iter().map(u64::to_string).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| AnalyticsError::Parse(format!("grid: {m}"));
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("GRID1") {
            return Err(bad("missing GRID1 header"));
        }
        let dims: Vec<u64> = lines
            .next()
            .ok_or_else(|| bad("missing size line"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad size line")))
            .collect::<Result<_>>()?;
        let [n, fw, fh] = dims[..] else {
            return Err(bad("size line needs 3 numbers"));
        };
        let mut grid = HeatGrid::new(n as usize, fw as u32, fh as u32)?;
        let counts: Vec<u64> = lines
            .flat_map(str::split_whitespace)
            .map(|t| t.parse().map_err(|_| bad("bad count")))
            .collect::<Result<_>>()?;
        if counts.len() != grid.counts.len() {
            return Err(bad("count total does not match n*n"));
        }
        grid.counts = counts;
        Ok(grid)
    }
}

/// Direction of a line crossing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    In,
    Out,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::Out => "out",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in" => Ok(Direction::In),
            "out" => Ok(Direction::Out),
            _ => Err(AnalyticsError::Parse(format!("direction {s:?}"))),
        }
    }
}

/// A named counting segment in frame coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CountingLine {
    pub name: String,
    pub p1: Point,
    pub p2: Point,
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

/// Closed-segment intersection test.
pub fn segments_intersect(a1: Point, a2: Point, b1: Point, b2: Point) -> bool {
    let d1 = cross(b1, b2, a1);
    let d2 = cross(b1, b2, a2);
    let d3 = cross(a1, a2, b1);
    let d4 = cross(a1, a2, b2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(a1, b1, b2))
        || (d2 == 0.0 && on_segment(a2, b1, b2))
        || (d3 == 0.0 && on_segment(b1, a1, a2))
        || (d4 == 0.0 && on_segment(b2, a1, a2))
}

impl CountingLine {
    pub fn new(name: impl Into<String>, p1: Point, p2: Point) -> Result<Self> {
        if p1 == p2 {
            return Err(AnalyticsError::DegenerateLine);
        }
        Ok(Self {
            name: name.into(),
            p1,
            p2,
        })
    }

    /// Parses `LINE <name> <x1> <y1> <x2> <y2>`.
    pub fn parse(line: &str) -> Result<Self> {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 6 || t[0] != "LINE" {
            return Err(AnalyticsError::Parse(format!("expected LINE <name> x1 y1 x2 y2: {line:?}")));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| AnalyticsError::Parse(format!("bad coordinate {s:?}")))
        };
        CountingLine::new(t[1], (num(t[2])?, num(t[3])?), (num(t[4])?, num(t[5])?))
    }

    /// Sign of `(p - p1) x (p2 - p1)`: `-1`, `0` or `+1`.
    ///
    /// With image coordinates (y down) a walker moving left to right across
    /// a line drawn top to bottom goes from `-1` to `+1`.
    pub fn side(&self, p: Point) -> i8 {
        let c = cross(self.p1, p, self.p2);
        if c > 0.0 {
            1
        } else if c < 0.0 {
            -1
        } else {
            0
        }
    }
}

impl fmt::Display for CountingLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "LINE {} {} {} {} {}",
            self.name, self.p1.0, self.p1.1, self.p2.0, self.p2.1
        )
    }
}

/// One tracked person.
#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub id: u64,
    pub centroid: Point,
    pub prev_centroid: Option<Point>,
    pub age: u32,
    pub missed: u32,
}

/// A detection matched to (or spawning) a track in one step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub track_id: u64,
    pub detection: usize,
    pub spawned: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepResult {
    /// One entry per detection, in detection order.
    pub assignments: Vec<Assignment>,
    pub retired: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct Tracker {
    pub gate: f64,
    pub max_missed: u32,
    next_id: u64,
    tracks: Vec<Track>,
}

fn distance(a: Point, b: Point) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Default gate: a tenth of the frame diagonal.
pub fn default_gate(frame_w: u32, frame_h: u32) -> f64 {
    0.1 * (frame_w as f64).hypot(frame_h as f64)
}

impl Tracker {
    pub fn new(gate: f64, max_missed: u32) -> Self {
        assert!(gate > 0.0, "gate must be positive");
        Self {
            gate,
            max_missed,
            next_id: 0,
            tracks: Vec::new(),
        }
    }

    /// Live tracks in id order.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn track(&self, id: u64) -> Option<&Track> {
        self.tracks.iter().find(|t| t.id == id)
    }

    /// Greedy globally-nearest association of detection centers to tracks.
    pub fn step(&mut self, dets: &[Detection]) -> StepResult {
        let centers: Vec<Point> = dets.iter().map(|d| d.rect.center()).collect();
        self.step_points(&centers)
    }

    pub fn step_points(&mut self, centers: &[Point]) -> StepResult {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ti, t) in self.tracks.iter().enumerate() {
            for (di, &c) in centers.iter().enumerate() {
                let d = distance(t.centroid, c);
                if d <= self.gate {
                    pairs.push((d, ti, di));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut track_used = vec![false; self.tracks.len()];
        let mut det_track: Vec<Option<usize>> = vec![None; centers.len()];
        for (_, ti, di) in pairs {
            if !track_used[ti] && det_track[di].is_none() {
                track_used[ti] = true;
                det_track[di] = Some(ti);
            }
        }
        for t in &mut self.tracks {
            t.age += 1;
        }
        let mut assignments = Vec::with_capacity(centers.len());
        for (di, &c) in centers.iter().enumerate() {
            match det_track[di] {
                Some(ti) => {
                    let t = &mut self.tracks[ti];
                    t.prev_centroid = Some(t.centroid);
                    t.centroid = c;
                    t.missed = 0;
                    assignments.push(Assignment {
                        track_id: t.id,
                        detection: di,
                        spawned: false,
                    });
                }
                None => {
                    let id = self.next_id;
                    self.next_id += 1;
                    self.tracks.push(Track {
                        id,
                        centroid: c,
                        prev_centroid: None,
                        age: 0,
                        missed: 0,
                    });
                    assignments.push(Assignment {
                        track_id: id,
                        detection: di,
                        spawned: true,
                    });
                }
            }
        }
        let mut retired = Vec::new();
        let max_missed = self.max_missed;
        for (ti, used) in track_used.iter().enumerate() {
            if !used {
                let t = &mut self.tracks[ti];
                t.missed += 1;
                if t.missed > max_missed {
                    retired.push(t.id);
                }
            }
        }
        self.tracks.retain(|t| !retired.contains(&t.id));
        StepResult { assignments, retired }
    }
}

/// Crossing between two positions with sides already resolved.
///
/// `remembered` is the last nonzero side seen before `prev`, used when
/// `prev` lies exactly on the line.
pub fn crossing_between(prev: Point, curr: Point, line: &CountingLine, remembered: i8) -> Option<Direction> {
    let mut sp = line.side(prev);
    if sp == 0 {
        sp = remembered;
    }
    let mut sc = line.side(curr);
    if sc == 0 {
        sc = sp;
    }
    if sp * sc >= 0 || !segments_intersect(prev, curr, line.p1, line.p2) {
        return None;
    }
    Some(if sp < 0 { Direction::In } else { Direction::Out })
}

pub fn crossing_check(t: &Track, line: &CountingLine) -> Result<Option<Direction>> {
    let prev = t.prev_centroid.ok_or(AnalyticsError::MissingHistory(t.id))?;
    Ok(crossing_between(prev, t.centroid, line, 0))
}

/// Per-line in/out counter.
#[derive(Clone, Debug)]
pub struct FootfallCounter {
    pub line: CountingLine,
    pub in_count: u64,
    pub out_count: u64,
    last_side: HashMap<u64, i8>,
}

impl FootfallCounter {
    pub fn new(line: CountingLine) -> Self {
        Self {
            line,
            in_count: 0,
            out_count: 0,
            last_side: HashMap::new(),
        }
    }

    /// Checks a just-updated track and counts any crossing.
    pub fn observe(&mut self, t: &Track) -> Result<Option<Direction>> {
        let prev = t.prev_centroid.ok_or(AnalyticsError::MissingHistory(t.id))?;
        let remembered = self.last_side.get(&t.id).copied().unwrap_or(0);
        let dir = crossing_between(prev, t.centroid, &self.line, remembered);
        let side = [self.line.side(t.centroid), self.line.side(prev), remembered]
            .into_iter()
            .find(|&s| s != 0)
            .unwrap_or(0);
        self.last_side.insert(t.id, side);
        match dir {
            Some(Direction::In) => self.in_count += 1,
            Some(Direction::Out) => self.out_count += 1,
            None => {}
        }
        Ok(dir)
    }

    /// Drops side memory for a retired track.
    pub fn forget(&mut self, id: u64) {
        self.last_side.remove(&id);
    }

    pub fn occupancy(&self) -> (i64, u64) {
        occupancy(self)
    }
}

/// Entries minus exits, raw and clamped at zero.
pub fn occupancy(fc: &FootfallCounter) -> (i64, u64) {
    let raw = fc.in_count as i64 - fc.out_count as i64;
    (raw, raw.max(0) as u64)
}

/// Counts per classifier label.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GenderTally {
    counts: BTreeMap<String, u64>,
}

impl GenderTally {
    pub fn add(&mut self, label: &str) {
        *self.counts.entry(label.to_string()).or_insert(0) += 1;
    }

    pub fn get(&self, label: &str) -> u64 {
        self.counts.get(label).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det(x: u32, y: u32, w: u32, h: u32) -> Detection {
        Detection::new(Rect::new(x, y, w, h), 1.0)
    }

    #[test]
    fn grid_cells() {
        let mut g = HeatGrid::new(4, 100, 100).unwrap();
        assert_eq!(g.total(), 0);
        g.update(&[det(40, 40, 20, 20)]);
        assert_eq!(g.get(2, 2), 1);
        g.update(&[det(90, 0, 10, 10), det(99, 99, 1, 1)]);
        assert_eq!(g.get(3, 0), 1);
        assert_eq!(g.get(3, 3), 1);
        assert_eq!(g.total(), 3);
        assert!(HeatGrid::new(0, 10, 10).is_err());
    }

    #[test]
    fn grid_percentages() {
        let mut g = HeatGrid::new(3, 90, 90).unwrap();
        assert_eq!(g.percentages(), Err(AnalyticsError::EmptyGrid));
        g.update(&[det(0, 0, 10, 10)]);
        let p = g.percentages().unwrap();
        assert_eq!(p[0], 100.0);
        assert!(p[1..].iter().all(|&v| v == 0.0));
        g.update(&[det(80, 80, 10, 10)]);
        let p = g.percentages().unwrap();
        assert_eq!((p[0], p[8]), (50.0, 50.0));
    }

    #[test]
    fn render_ramp() {
        let g = HeatGrid::new(2, 10, 6).unwrap();
        let img = g.render_heat();
        assert_eq!((img.width(), img.height(), img.channels()), (10, 6, 3));
        assert!(img.data().chunks(3).all(|p| p == [0, 0, 255]));

        let mut g = HeatGrid::new(2, 10, 10).unwrap();
        g.update(&[det(0, 0, 2, 2), det(0, 0, 2, 2), det(8, 8, 2, 2)]);
        let img = g.render_heat();
        let px = |x: u32, y: u32| &img.data()[((y * img.width() + x) * 3) as usize..][..3];
        assert_eq!(px(0, 0), [255, 0, 0]);
        assert_eq!(px(9, 0), [0, 0, 255]);
        assert!((px(9, 9)[0] as i32 - 255 / 2).abs() <= 1);
        assert_eq!(HeatGrid::new(20, 10, 10).unwrap().render_heat().width(), 20);
    }

    #[test]
    fn grid_text_roundtrip() {
        let mut g = HeatGrid::new(3, 30, 60).unwrap();
        g.update(&[det(0, 0, 4, 4), det(20, 50, 4, 4)]);
        assert_eq!(HeatGrid::from_text(&g.to_text()).unwrap(), g);
        assert!(HeatGrid::from_text("GRID1\n2 4 4\n1 2 3\n").is_err());
    }

    #[test]
    fn tracker_spawns_and_matches() {
        let mut t = Tracker::new(20.0, 5);
        let r = t.step_points(&[(10.0, 10.0), (100.0, 100.0)]);
        assert_eq!(r.assignments.iter().map(|a| a.track_id).collect::<Vec<_>>(), vec![0, 1]);
        assert!(r.assignments.iter().all(|a| a.spawned));
        let r = t.step_points(&[(12.0, 10.0)]);
        assert_eq!(r.assignments[0], Assignment { track_id: 0, detection: 0, spawned: false });
        let tr = t.track(0).unwrap();
        assert_eq!(tr.prev_centroid, Some((10.0, 10.0)));
        assert_eq!(t.track(1).unwrap().missed, 1);
    }

    #[test]
    fn tracker_retires_after_max_missed() {
        let mut t = Tracker::new(5.0, 2);
        t.step_points(&[(0.0, 0.0)]);
        assert!(t.step_points(&[]).retired.is_empty());
        assert!(t.step_points(&[]).retired.is_empty());
        assert_eq!(t.step_points(&[]).retired, vec![0]);
        assert!(t.tracks().is_empty());
        // Ids keep increasing after retirement.
        assert_eq!(t.step_points(&[(0.0, 0.0)]).assignments[0].track_id, 1);
    }

    #[test]
    fn global_pairing_beats_row_greedy() {
        // Detection A is listed first and is nearer track 0 than track 1, so
        // a detection-by-detection matcher hands it track 0 and strands B.
        let tracks = [(0.0, 0.0), (10.0, 0.0)];
        let dets = [(4.0, 0.0), (-1.0, 0.0)];
        let mut t = Tracker::new(50.0, 5);
        t.step_points(&tracks);
        let r = t.step_points(&dets);
        assert_eq!(r.assignments[0].track_id, 1);
        assert_eq!(r.assignments[1].track_id, 0);
        let mut best = brute_force_pairs(&tracks, &dets, 50.0);
        best.sort();
        assert_eq!(best, vec![(0, 1), (1, 0)]);
    }

    /// Minimum total distance over all maximum-cardinality gated matchings.
    fn brute_force_pairs(tracks: &[Point], dets: &[Point], gate: f64) -> Vec<(usize, usize)> {
        fn rec(
            ti: usize,
            tracks: &[Point],
            dets: &[Point],
            gate: f64,
            used: &mut Vec<bool>,
            cur: &mut Vec<(usize, usize)>,
            best: &mut (usize, f64, Vec<(usize, usize)>),
        ) {
            if ti == tracks.len() {
                let cost: f64 = cur.iter().map(|&(t, d)| distance(tracks[t], dets[d])).sum();
                if cur.len() > best.0 || (cur.len() == best.0 && cost < best.1) {
                    *best = (cur.len(), cost, cur.clone());
                }
                return;
            }
            rec(ti + 1, tracks, dets, gate, used, cur, best);
            for di in 0..dets.len() {
                if !used[di] && distance(tracks[ti], dets[di]) <= gate {
                    used[di] = true;
                    cur.push((ti, di));
                    rec(ti + 1, tracks, dets, gate, used, cur, best);
                    cur.pop();
                    used[di] = false;
                }
            }
        }
        let mut best = (0, f64::INFINITY, Vec::new());
        rec(0, tracks, dets, gate, &mut vec![false; dets.len()], &mut Vec::new(), &mut best);
        best.2
    }

    proptest! {
        #[test]
        fn greedy_matches_brute_force_on_separated_objects(
            n in 1usize..=4,
            seed_pts in proptest::collection::vec((0u32..4, 0u32..4), 4),
            jitter in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 4),
            perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
        ) {
            // Distinct lattice sites 60 px apart; detections stay within 5 px.
            let mut sites: Vec<(u32, u32)> = Vec::new();
            for s in seed_pts {
                if !sites.contains(&s) { sites.push(s); }
            }
            let n = n.min(sites.len());
            let tracks: Vec<Point> = sites[..n].iter().map(|&(x, y)| (x as f64 * 60.0, y as f64 * 60.0)).collect();
            let order: Vec<usize> = perm.into_iter().filter(|&i| i < n).collect();
            let dets: Vec<Point> = order.iter().map(|&i| (tracks[i].0 + jitter[i].0, tracks[i].1 + jitter[i].1)).collect();
            let mut tracker = Tracker::new(40.0, 5);
            tracker.step_points(&tracks);
            let r = tracker.step_points(&dets);
            let mut greedy: Vec<(usize, usize)> = r.assignments.iter().map(|a| (a.track_id as usize, a.detection)).collect();
            greedy.sort();
            let mut best = brute_force_pairs(&tracks, &dets, 40.0);
            best.sort();
            prop_assert_eq!(greedy, best);
        }

        #[test]
        fn tracker_is_deterministic(pts in proptest::collection::vec(proptest::collection::vec((0.0f64..320.0, 0.0f64..240.0), 0..5), 1..10)) {
            let run = || {
                let mut t = Tracker::new(30.0, 2);
                pts.iter().map(|f| t.step_points(f)).collect::<Vec<_>>()
            };
            prop_assert_eq!(run(), run());
        }

        #[test]
        fn conservation(dets in proptest::collection::vec((0u32..300, 0u32..220, 1u32..20, 1u32..20), 0..200), n in 1usize..20) {
            let mut g = HeatGrid::new(n, 320, 240).unwrap();
            let ds: Vec<Detection> = dets.iter().map(|&(x, y, w, h)| det(x, y, w, h)).collect();
            for chunk in ds.chunks(7) {
                g.update(chunk);
            }
            prop_assert_eq!(g.total(), ds.len() as u64);
            if let Ok(p) = g.percentages() {
                prop_assert!((p.iter().sum::<f64>() - 100.0).abs() <= 1e-9);
            }
        }

        #[test]
        fn round_trip_crossing_parity(y in 1.0f64..9.0, steps in 2usize..6) {
            let line = CountingLine::new("door", (5.0, 0.0), (5.0, 10.0)).unwrap();
            let mut fc = FootfallCounter::new(line);
            let mut xs: Vec<f64> = (0..=steps).map(|i| i as f64 * 10.0 / steps as f64).collect();
            let back: Vec<f64> = xs.iter().rev().skip(1).copied().collect();
            xs.extend(back);
            let mut tr = Tracker::new(100.0, 5);
            let mut dirs = Vec::new();
            for x in xs {
                tr.step_points(&[(x, y)]);
                let t = tr.track(0).unwrap().clone();
                if t.prev_centroid.is_some() {
                    dirs.extend(fc.observe(&t).unwrap());
                }
            }
            prop_assert_eq!(dirs, vec![Direction::In, Direction::Out]);
            prop_assert_eq!(fc.occupancy(), (0, 0));
        }
    }

    fn track(prev: Point, curr: Point) -> Track {
        Track {
            id: 0,
            centroid: curr,
            prev_centroid: Some(prev),
            age: 1,
            missed: 0,
        }
    }

    #[test]
    fn crossing_examples() {
        let door = CountingLine::new("door", (5.0, 0.0), (5.0, 10.0)).unwrap();
        assert_eq!(crossing_check(&track((0.0, 5.0), (10.0, 5.0)), &door), Ok(Some(Direction::In)));
        assert_eq!(crossing_check(&track((10.0, 5.0), (0.0, 5.0)), &door), Ok(Some(Direction::Out)));
        assert_eq!(crossing_check(&track((0.0, 1.0), (0.0, 9.0)), &door), Ok(None));
        let stub = CountingLine::new("stub", (5.0, 0.0), (5.0, 1.0)).unwrap();
        assert_eq!(crossing_check(&track((0.0, 5.0), (10.0, 5.0)), &stub), Ok(None));
        let fresh = Track {
            prev_centroid: None,
            ..track((0.0, 0.0), (0.0, 0.0))
        };
        assert_eq!(crossing_check(&fresh, &door), Err(AnalyticsError::MissingHistory(0)));
    }

    #[test]
    fn stepping_onto_the_line_counts_once() {
        let door = CountingLine::new("door", (5.0, 0.0), (5.0, 10.0)).unwrap();
        let mut fc = FootfallCounter::new(door);
        let path = [(0.0, 5.0), (5.0, 5.0), (5.0, 5.0), (10.0, 5.0), (12.0, 5.0), (14.0, 5.0)];
        let mut got = Vec::new();
        for w in path.windows(2) {
            got.extend(fc.observe(&track(w[0], w[1])).unwrap());
        }
        assert_eq!(got, vec![Direction::In]);
        assert_eq!((fc.in_count, fc.out_count), (1, 0));
    }

    #[test]
    fn occupancy_clamps() {
        let line = CountingLine::new("l", (0.0, 0.0), (1.0, 0.0)).unwrap();
        let mut fc = FootfallCounter::new(line);
        assert_eq!(occupancy(&fc), (0, 0));
        fc.in_count = 3;
        fc.out_count = 1;
        assert_eq!(occupancy(&fc), (2, 2));
        fc.in_count = 0;
        fc.out_count = 2;
        assert_eq!(occupancy(&fc), (-2, 0));
    }

    #[test]
    fn line_parsing() {
        let l = CountingLine::parse("LINE door 160 0 160 240").unwrap();
        assert_eq!(l.name, "door");
        assert_eq!((l.p1, l.p2), ((160.0, 0.0), (160.0, 240.0)));
        assert_eq!(CountingLine::parse(&l.to_string()).unwrap(), l);
        assert_eq!(CountingLine::parse("LINE x 1 1 1 1"), Err(AnalyticsError::DegenerateLine));
        assert!(CountingLine::parse("LINE x 1 1 1").is_err());
    }

    #[test]
    fn tally() {
        let mut g = GenderTally::default();
        for _ in 0..7 {
            g.add("male");
        }
        for _ in 0..3 {
            g.add("female");
        }
        assert_eq!((g.get("male"), g.get("female"), g.total()), (7, 3, 10));
    }
}
