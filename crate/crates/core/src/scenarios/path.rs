use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Piece of a UGV path whose curvature is constant or varies linearly with
/// arc length (a clothoid transition).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    /// Arc length, m.
    pub length: f64,
    /// Signed curvature at the segment start, 1/m (positive turns towards +chi).
    pub curvature: f64,
    /// Curvature at the segment end when it differs from the start.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_curvature: Option<f64>,
}

impl Segment {
    pub const fn straight(length: f64) -> Self {
        Self {
            length,
            curvature: 0.0,
            end_curvature: None,
        }
    }

    pub const fn arc(length: f64, curvature: f64) -> Self {
        Self {
            length,
            curvature,
            end_curvature: None,
        }
    }

    /// Curvature ramping linearly from `from` to `to`.
    pub const fn clothoid(length: f64, from: f64, to: f64) -> Self {
        Self {
            length,
            curvature: from,
            end_curvature: Some(to),
        }
    }

    /// Curvature change per metre.
    fn rate(&self) -> f64 {
        match self.end_curvature {
            Some(end) => (end - self.curvature) / self.length,
            None => 0.0,
        }
    }

    /// Heading change after `ds` metres into the segment.
    fn turn<T: Scalar>(&self, ds: T) -> T {
        ds * self.curvature + ds * ds * (0.5 * self.rate())
    }

    fn curvature_at<T: Scalar>(&self, ds: T) -> T {
        ds * self.rate() + self.curvature
    }
}

/// Planar pose at the start of a path.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub chi: f64,
}

/// Result of a path lookup at one arc-length coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub sigma: f64,
    pub chi: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Knot {
    s: f64,
    x: f64,
    y: f64,
    chi: f64,
}

/// Path of constant- and linear-curvature segments parametrised by arc length.
///
/// Heading and position are exact within each segment; heading is continuous
/// across joints while curvature may jump.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    start: Pose,
    segments: Vec<Segment>,
    knots: Vec<Knot>,
}

const END_SLACK: f64 = 1e-9;

impl Path {
    pub fn new(start: Pose, segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::validation("path.segments", "at least one segment required"));
        }
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.length.is_finite() && seg.length > 0.0) {
                return Err(Error::validation(
                    format!("path.segments[{i}].length"),
                    "must be finite and positive",
                ));
            }
            if !seg.curvature.is_finite() {
                return Err(Error::validation(
                    format!("path.segments[{i}].curvature"),
                    "must be finite",
                ));
            }
            if seg.end_curvature.is_some_and(|c| !c.is_finite()) {
                return Err(Error::validation(
                    format!("path.segments[{i}].end_curvature"),
                    "must be finite",
                ));
            }
        }
        let mut knots = Vec::with_capacity(segments.len() + 1);
        let mut k = Knot {
            s: 0.0,
            x: start.x,
            y: start.y,
            chi: start.chi,
        };
        knots.push(k);
        for seg in &segments {
            let (dx, dy) = displacement(k.chi, seg, seg.length);
            k = Knot {
                s: k.s + seg.length,
                x: k.x + dx,
                y: k.y + dy,
                chi: k.chi + seg.turn(seg.length),
            };
            knots.push(k);
        }
        Ok(Self {
            start,
            segments,
            knots,
        })
    }

    pub fn straight(start: Pose, length: f64) -> Result<Self> {
        Self::new(start, vec![Segment::straight(length)])
    }

    pub fn start(&self) -> Pose {
        self.start
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn length(&self) -> f64 {
        self.knots.last().map(|k| k.s).unwrap_or(0.0)
    }

    fn index(&self, s: f64) -> Result<usize> {
        let length = self.length();
        if !(s >= -END_SLACK && s <= length + END_SLACK) {
            return Err(Error::Range { s, length });
        }
        // first knot strictly beyond s, minus one; the final segment owns its end point
        let i = self.knots.partition_point(|k| k.s <= s);
        Ok(i.saturating_sub(1).min(self.segments.len() - 1))
    }

    pub fn lookup(&self, s: f64) -> Result<PathPoint> {
        let i = self.index(s)?;
        let k = self.knots[i];
        let seg = &self.segments[i];
        let ds = s - k.s;
        let (dx, dy) = displacement(k.chi, seg, ds);
        Ok(PathPoint {
            sigma: seg.curvature_at(ds),
            chi: k.chi + seg.turn(ds),
            x: k.x + dx,
            y: k.y + dy,
        })
    }

    pub fn curvature(&self, s: f64) -> Result<f64> {
        let i = self.index(s)?;
        Ok(self.segments[i].curvature_at(s - self.knots[i].s))
    }

    /// Heading and curvature at `s`, both carrying derivatives.
    pub fn heading<T: Scalar>(&self, s: T) -> Result<(T, T)> {
        let i = self.index(s.re())?;
        Ok(self.heading_on(i, s))
    }

    /// Index of the segment owning `s`.
    pub(crate) fn segment_at(&self, s: f64) -> Result<usize> {
        self.index(s)
    }

    /// Arc length at the start of segment `i` (`i == segments.len()` gives the end).
    pub(crate) fn knot_s(&self, i: usize) -> f64 {
        self.knots[i].s
    }

    /// Heading and curvature of segment `i` continued analytically to `s`.
    pub(crate) fn heading_on<T: Scalar>(&self, i: usize, s: T) -> (T, T) {
        let k = self.knots[i];
        let seg = &self.segments[i];
        let ds = s - k.s;
        (seg.turn(ds) + k.chi, seg.curvature_at(ds))
    }

    /// Copy of the path with a terminal straight appended so that its length is
    /// at least `min_length`. Returns `None` when no extension is needed.
    pub fn extended_to(&self, min_length: f64) -> Option<Path> {
        let missing = min_length - self.length();
        if missing <= 0.0 {
            return None;
        }
        let mut segments = self.segments.clone();
        segments.push(Segment::straight(missing));
        Path::new(self.start, segments).ok()
    }
}

/// Planar displacement after travelling `ds` into a segment entered at heading `chi`.
fn displacement(chi: f64, seg: &Segment, ds: f64) -> (f64, f64) {
    if seg.rate() == 0.0 {
        return advance(chi, seg.curvature, ds);
    }
    // Gauss-Legendre panels, each spanning at most 0.25 rad of heading change
    let spread = seg.turn(ds).abs().max((seg.curvature * ds).abs()) + (seg.rate() * ds * ds).abs();
    let panels = ((spread / 0.25).ceil() as usize).max(1);
    let width = ds / panels as f64;
    let (mut dx, mut dy) = (0.0, 0.0);
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        for (node, weight) in GAUSS_8 {
            let t = mid + 0.5 * width * node;
            let (sn, cs) = (chi + seg.turn(t)).sin_cos();
            dx += 0.5 * width * weight * cs;
            dy += 0.5 * width * weight * sn;
        }
    }
    (dx, dy)
}

/// Eight-point Gauss-Legendre nodes and weights on [-1, 1].
const GAUSS_8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// Planar displacement after travelling `ds` from heading `chi` at curvature `sigma`.
fn advance(chi: f64, sigma: f64, ds: f64) -> (f64, f64) {
    let dchi = sigma * ds;
    if dchi.abs() < 1e-8 {
        // series form avoids cancellation for straights and tiny arcs
        let c = chi.cos();
        let s = chi.sin();
        let half = 0.5 * dchi;
        let sixth = dchi * dchi / 6.0;
        (ds * (c * (1.0 - sixth) - s * half), ds * (s * (1.0 - sixth) + c * half))
    } else {
        (
            ((chi + dchi).sin() - chi.sin()) / sigma,
            (chi.cos() - (chi + dchi).cos()) / sigma,
        )
    }
}
