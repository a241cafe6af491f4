use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::PwaParams;
use crate::period::PeriodEstimate;
use crate::stimulus::{Input, NoInput};

use super::affine::AffineFlow;
use super::region::{classify_with_drive, face_value, Face, PwaState, Region};

/// Crossing times are located to this absolute tolerance (hours).
pub const EVENT_TOL: f64 = 1e-10;

/// Default cap on the number of segments in one run.
pub const DEFAULT_SEGMENT_CAP: usize = 1_000_000;

/// One piece of a hybrid trajectory, spent inside a single region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineSegment {
    pub region: Region,
    pub t_start: f64,
    pub t_end: f64,
    pub entry_state: PwaState,
    pub exit_state: PwaState,
    /// Threshold crossed at `t_end`, `None` for a timeout or an input edge.
    pub exit_face: Option<Face>,
    /// Additive input on `x'` held during the segment.
    pub drive: f64,
}

impl AffineSegment {
    /// State at absolute time `t` inside the segment.
    pub fn state_at(&self, t: f64, p: &PwaParams) -> PwaState {
        if t >= self.t_end {
            return self.exit_state;
        }
        let e = &self.entry_state;
        let flow = AffineFlow::new(self.region, e.x, e.d, e.r, p, self.drive);
        let (x, d, r) = flow.at((t - self.t_start).max(0.0));
        PwaState { x, d, r, t }
    }

    /// Region entered at `t_end`.
    pub fn next_region(&self) -> Region {
        match self.exit_face {
            Some(face) => self.region.with(face, !self.region.is_high(face)),
            None => self.region,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridTrajectory {
    pub params: PwaParams,
    pub segments: Vec<AffineSegment>,
    pub transition_log: Vec<Region>,
}

/// Event marker on a hybrid trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    /// x crosses 0 from below.
    XUpward,
    /// A given region-to-region transition.
    Transition(Region, Region),
}

impl HybridTrajectory {
    pub fn t_start(&self) -> f64 {
        self.segments.first().map_or(0.0, |s| s.t_start)
    }

    pub fn t_end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t_end)
    }

    pub fn final_state(&self) -> Option<PwaState> {
        self.segments.last().map(|s| s.exit_state)
    }

    /// Region sequence with input-edge splits merged.
    pub fn region_sequence(&self) -> Vec<Region> {
        let mut out: Vec<Region> = Vec::new();
        for r in &self.transition_log {
            if out.last() != Some(r) {
                out.push(*r);
            }
        }
        out
    }

    /// Times of the threshold crossings matching `marker`.
    pub fn marker_times(&self, marker: Marker) -> Vec<f64> {
        self.segments
            .iter()
            .filter(|s| s.exit_face.is_some())
            .filter(|s| match marker {
                Marker::XUpward => s.exit_face == Some(Face::X) && !s.region.x_high,
                Marker::Transition(from, to) => s.region == from && s.next_region() == to,
            })
            .map(|s| s.t_end)
            .collect()
    }

    /// State at time `t` (clamped to the trajectory span).
    pub fn state_at(&self, t: f64) -> Option<PwaState> {
        if self.segments.is_empty() {
            return None;
        }
        let idx = self.segments.partition_point(|s| s.t_end < t);
        let seg = &self.segments[idx.min(self.segments.len() - 1)];
        Some(seg.state_at(t.max(seg.t_start), &self.params))
    }

    /// Rows `(state, region)` on a uniform grid of step `dt` plus one row at
    /// every region change.
    pub fn sample(&self, dt: f64) -> Result<Vec<(PwaState, Region)>> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidConfig(format!("output step {dt} must be > 0")));
        }
        let mut rows = Vec::new();
        let t0 = self.t_start();
        let mut k: u64 = 0;
        for seg in &self.segments {
            loop {
                let t = t0 + k as f64 * dt;
                if t >= seg.t_end {
                    break;
                }
                rows.push((seg.state_at(t, &self.params), seg.region));
                k += 1;
            }
            if seg.exit_face.is_some() {
                rows.push((seg.exit_state, seg.next_region()));
            }
        }
        if let Some(last) = self.segments.last() {
            let t = t0 + k as f64 * dt;
            if t <= last.t_end && last.exit_face.is_none() {
                rows.push((last.exit_state, last.region));
            }
        }
        Ok(rows)
    }

    /// Writes the `t,x,d,r,region` CSV export.
    pub fn write_csv<W: Write>(&self, mut w: W, dt: f64) -> std::io::Result<()> {
        writeln!(w, "t,x,d,r,region")?;
        let rows = self
            .sample(dt)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
        for (s, reg) in rows {
            writeln!(w, "{},{},{},{},{}", s.t, s.x, s.d, s.r, reg)?;
        }
        Ok(())
    }
}

/// Scan step for event search, short against every rate of the subsystem.
fn scan_step(p: &PwaParams, drive: f64) -> f64 {
    0.1 / (1.0 + p.epsilon().sqrt() + p.beta() + p.delta() + p.gamma() * 0.1 + drive.abs() * 0.1)
}

fn snap(face: Face, x: &mut f64, d: &mut f64, r: &mut f64, d_star: f64) {
    match face {
        Face::X => *x = 0.0,
        Face::D => *d = d_star,
        Face::R => *r = 1.0,
    }
}

/// Integrates one region's subsystem from `s0` until the first threshold
/// crossing or until `horizon` has elapsed.
fn advance_in_region(
    region: Region,
    s0: &PwaState,
    p: &PwaParams,
    drive: f64,
    horizon: f64,
) -> Result<AffineSegment> {
    let d_star = p.d_star();
    let flow = AffineFlow::new(region, s0.x, s0.d, s0.r, p, drive);
    let faces = [Face::X, Face::D, Face::R];
    let inside = |face: Face, tau: f64| -> bool {
        let (x, d, r) = flow.at(tau);
        let v = face_value(face, x, d, r, d_star);
        if region.is_high(face) {
            // r = 1 and d = d* belong to the upper side only through the flow
            v > 0.0 || (v == 0.0 && face == Face::R)
        } else {
            v < 0.0 || (v == 0.0 && face == Face::X)
        }
    };
    let h = scan_step(p, drive);
    let mut prev = 0.0_f64;
    let mut found: Option<(Face, f64)> = None;
    while prev < horizon {
        let tau = (prev + h).min(horizon);
        let (x, d, r) = flow.at(tau);
        if !(x.is_finite() && d.is_finite() && r.is_finite()) {
            return Err(Error::NonFinite { time: s0.t + tau });
        }
        let mut crossings: Vec<(Face, f64)> = Vec::new();
        for &face in &faces {
            if inside(face, tau) {
                continue;
            }
            // bracket [lo, hi]: inside at lo, outside at hi
            let mut lo = prev;
            if !inside(face, lo) {
                // only the entered face sits on its threshold at tau = 0
                let mut probe = tau;
                let mut ok = false;
                for _ in 0..60 {
                    probe *= 0.5;
                    if probe <= lo {
                        break;
                    }
                    if inside(face, probe) {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    return Err(Error::InvalidState(format!(
                        "tangential contact with face {} at t = {}",
                        face.name(),
                        s0.t + prev
                    )));
                }
                lo = probe;
            }
            let mut hi = tau;
            while hi - lo > EVENT_TOL {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if inside(face, mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            crossings.push((face, hi));
        }
        if !crossings.is_empty() {
            crossings.sort_by(|a, b| a.1.total_cmp(&b.1));
            if crossings.len() > 1 && crossings[1].1 - crossings[0].1 <= EVENT_TOL {
                return Err(Error::SimultaneousCrossing {
                    first: crossings[0].0.name(),
                    second: crossings[1].0.name(),
                    time: s0.t + crossings[0].1,
                });
            }
            found = Some(crossings[0]);
            break;
        }
        prev = tau;
    }

    let (exit_face, tau) = match found {
        Some((face, tau)) => (Some(face), tau),
        None => (None, horizon),
    };
    let (mut x, mut d, mut r) = flow.at(tau);
    if let Some(face) = exit_face {
        snap(face, &mut x, &mut d, &mut r, d_star);
    }
    // closed forms keep d, r >= 0 up to rounding
    let exit_state = PwaState {
        x,
        d: d.max(0.0),
        r: r.max(0.0),
        t: s0.t + tau,
    };
    Ok(AffineSegment {
        region,
        t_start: s0.t,
        t_end: exit_state.t,
        entry_state: *s0,
        exit_state,
        exit_face,
        drive,
    })
}

/// Segment from `s0` to the earliest threshold crossing, or to `s0.t + t_max`.
pub fn advance_to_event(s0: &PwaState, p: &PwaParams, t_max: f64) -> Result<AffineSegment> {
    if !(t_max > 0.0) {
        return Err(Error::InvalidConfig(format!("t_max = {t_max} must be > 0")));
    }
    let region = classify_with_drive(s0, p, 0.0)?;
    advance_in_region(region, s0, p, 0.0, t_max)
}

/// Like [`advance_to_event`] but with the region given instead of classified.
pub fn advance_in(region: Region, s0: &PwaState, p: &PwaParams, t_max: f64) -> Result<AffineSegment> {
    if !(t_max > 0.0) {
        return Err(Error::InvalidConfig(format!("t_max = {t_max} must be > 0")));
    }
    advance_in_region(region, s0, p, 0.0, t_max)
}

/// Options for [`simulate_pwa_with`].
#[derive(Debug, Clone, Copy)]
pub struct PwaOptions {
    pub segment_cap: usize,
}

impl Default for PwaOptions {
    fn default() -> Self {
        Self {
            segment_cap: DEFAULT_SEGMENT_CAP,
        }
    }
}

/// Autonomous event-driven simulation over `t_total` hours.
pub fn simulate_pwa(s0: &PwaState, p: &PwaParams, t_total: f64) -> Result<HybridTrajectory> {
    simulate_pwa_with(s0, p, t_total, &NoInput, PwaOptions::default())
}

/// Event-driven simulation with an additive piecewise-constant input on `x'`.
///
/// Input edges end segments with `exit_face == None`.
pub fn simulate_pwa_with(
    s0: &PwaState,
    p: &PwaParams,
    t_total: f64,
    input: &dyn Input,
    opts: PwaOptions,
) -> Result<HybridTrajectory> {
    if !(t_total > 0.0 && t_total.is_finite()) {
        return Err(Error::InvalidConfig(format!("t_total = {t_total} must be > 0")));
    }
    let t_end = s0.t + t_total;
    let mut segments = Vec::new();
    let mut state = *s0;
    let (mut drive, _) = input.piece(state.t);
    let mut region = classify_with_drive(&state, p, drive)?;
    while state.t < t_end {
        if segments.len() >= opts.segment_cap {
            return Err(Error::Chattering {
                cap: opts.segment_cap,
            });
        }
        let (u, edge) = input.piece(state.t);
        if u != drive {
            drive = u;
            region = classify_with_drive(&state, p, drive).or_else(|e| {
                // a state left on a face by the previous segment keeps its region
                if matches!(e, Error::DegeneratePoint) {
                    Err(e)
                } else {
                    Ok(region)
                }
            })?;
        }
        let stop = edge.min(t_end);
        let horizon = stop - state.t;
        if horizon <= 0.0 {
            // input edge already reached through rounding
            let (u_next, _) = input.piece(stop + EVENT_TOL);
            drive = u_next;
            state.t = stop.max(state.t);
            continue;
        }
        let mut seg = advance_in_region(region, &state, p, drive, horizon)?;
        if seg.exit_face.is_none() {
            seg.exit_state.t = stop;
            seg.t_end = stop;
        }
        if seg.t_end <= seg.t_start {
            return Err(Error::SimultaneousCrossing {
                first: seg.exit_face.map_or("none", Face::name),
                second: "entry",
                time: seg.t_start,
            });
        }
        state = seg.exit_state;
        region = seg.next_region();
        segments.push(seg);
    }
    let transition_log = segments.iter().map(|s| s.region).collect();
    Ok(HybridTrajectory {
        params: *p,
        segments,
        transition_log,
    })
}

/// Free-running period from the `x` upward crossings in the last half of the run.
pub fn extract_period_pwa(traj: &HybridTrajectory) -> Result<PeriodEstimate> {
    extract_period_marker(traj, Marker::XUpward)
}

pub fn extract_period_marker(traj: &HybridTrajectory, marker: Marker) -> Result<PeriodEstimate> {
    let mid = 0.5 * (traj.t_start() + traj.t_end());
    let times: Vec<f64> = traj
        .marker_times(marker)
        .into_iter()
        .filter(|&t| t >= mid)
        .collect();
    PeriodEstimate::from_event_times(&times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::presets;

    fn st(x: f64, d: f64, r: f64) -> PwaState {
        PwaState::new(x, d, r, 0.0).unwrap()
    }

    #[test]
    fn rxd_exits_through_x_at_one() {
        let p = presets::standard_pwa();
        let seg = advance_to_event(&st(-1.0, 0.0, 0.0), &p, 10.0).unwrap();
        assert_eq!(seg.region.code(), "rxd");
        assert_eq!(seg.exit_face, Some(Face::X));
        assert!((seg.t_end - 1.0).abs() < EVENT_TOL);
        assert_eq!(seg.exit_state.x, 0.0);
        assert_eq!(seg.next_region().code(), "rXd");
    }

    #[test]
    fn r_decay_exit_time() {
        let p = presets::standard_pwa();
        let seg = advance_to_event(&st(-1.0, 0.0, 2.0), &p, 10.0).unwrap();
        assert_eq!(seg.region.code(), "Rxd");
        assert_eq!(seg.exit_face, Some(Face::R));
        let expected = std::f64::consts::LN_2 / p.delta();
        assert!((seg.t_end - expected).abs() < 2.0 * EVENT_TOL);
    }

    #[test]
    fn timeout_has_no_face() {
        let p = presets::standard_pwa();
        let seg = advance_to_event(&st(-100.0, 0.0, 0.0), &p, 0.5).unwrap();
        assert_eq!(seg.exit_face, None);
        assert_eq!(seg.t_end, 0.5);
        let traj = simulate_pwa(&st(-100.0, 0.0, 0.0), &p, 0.5).unwrap();
        assert_eq!(traj.segments.len(), 1);
        assert_eq!(traj.segments[0].exit_face, None);
    }

    #[test]
    fn segments_are_continuous() {
        let p = presets::gamma_1_5().pwa();
        let traj = simulate_pwa(&st(0.5, 0.0, 0.0), &p, 200.0).unwrap();
        for w in traj.segments.windows(2) {
            assert_eq!(w[0].exit_state, w[1].entry_state);
            assert!(w[1].t_start > w[0].t_start);
            assert_eq!(w[0].next_region(), w[1].region);
        }
        assert_eq!(
            traj.transition_log,
            traj.segments.iter().map(|s| s.region).collect::<Vec<_>>()
        );
    }

    #[test]
    fn constant_trajectory_is_not_periodic() {
        let p = presets::standard_pwa();
        // stays in rxd for the whole run
        let traj = simulate_pwa(&st(-1000.0, 0.0, 0.0), &p, 50.0).unwrap();
        assert!(matches!(extract_period_pwa(&traj), Err(Error::NotPeriodic(_))));
    }

    #[test]
    fn segment_cap_reports_chattering() {
        let p = presets::gamma_1_5().pwa();
        let opts = PwaOptions { segment_cap: 5 };
        let r = simulate_pwa_with(&st(0.5, 0.0, 0.0), &p, 500.0, &NoInput, opts);
        assert_eq!(r.unwrap_err(), Error::Chattering { cap: 5 });
    }

    #[test]
    fn csv_has_header_and_events() {
        let p = presets::gamma_1_5().pwa();
        let traj = simulate_pwa(&st(0.5, 0.0, 0.0), &p, 30.0).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, 1.0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x,d,r,region"));
        let n_events = traj.segments.iter().filter(|s| s.exit_face.is_some()).count();
        assert!(text.lines().count() >= 1 + 30 + n_events);
    }
}
