//! Certificates and checks over recorded diagrams.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::machine::{InitialConfiguration, MachineError, SignalMachine, SignalSet, Site};
use crate::scalar::ExactScalar;
use crate::simulator::{run, Event, HaltReason, RunLimits, RunState, SpaceTimeDiagram, TimeIndex};

/// Configuration at `t2` is the image of the one at `t1` under the
/// homothety of ratio `ratio` centred on `(center_x, limit_time)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractionCertificate<S> {
    pub t1: S,
    pub t2: S,
    pub ratio: S,
    pub center_x: S,
    pub limit_time: S,
}

impl<S: ExactScalar> fmt::Display for ContractionCertificate<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ACCUMULATION center={} time={} ratio={}", self.center_x, self.limit_time, self.ratio)
    }
}

impl<S: ExactScalar> ContractionCertificate<S> {
    /// Image of a space-time point under the certified homothety.
    pub fn map_point(&self, x: &S, t: &S) -> (S, S) {
        let x2 = self.center_x.clone() + self.ratio.clone() * (x.clone() - &self.center_x);
        let t2 = self.limit_time.clone() + self.ratio.clone() * (t.clone() - &self.limit_time);
        (x2, t2)
    }
}

/// Returns `(ratio, center)` when `b` is `a` scaled by a ratio in `(0, 1)`,
/// site by site with identical signal sets.
fn homothety<S: ExactScalar>(a: &[Site<S>], b: &[Site<S>]) -> Option<(S, S)> {
    if a.len() < 2 || a.len() != b.len() {
        return None;
    }
    if a.iter().zip(b).any(|(p, q)| p.signals != q.signals) {
        return None;
    }
    let span_a = a[a.len() - 1].position.clone() - &a[0].position;
    let span_b = b[b.len() - 1].position.clone() - &b[0].position;
    let ratio = span_b.checked_div(&span_a).ok()?;
    if !ratio.is_positive_value() || ratio >= S::one() {
        return None;
    }
    // b0 = c + λ(a0 - c)  ⇒  c = (b0 - λ·a0) / (1 - λ)
    let center =
        (b[0].position.clone() - ratio.clone() * &a[0].position).checked_div(&(S::one() - ratio.clone())).ok()?;
    let fits =
        a.iter().zip(b).all(|(p, q)| q.position == center.clone() + ratio.clone() * (p.position.clone() - &center));
    fits.then_some((ratio, center))
}

fn certificate<S: ExactScalar>(first: &RunState<S>, second: &RunState<S>) -> Option<ContractionCertificate<S>> {
    let (ratio, center_x) = homothety(&first.sites, &second.sites)?;
    let span = second.time.clone() - &first.time;
    let limit_time = first.time.clone() + span.checked_div(&(S::one() - ratio.clone())).ok()?;
    Some(ContractionCertificate { t1: first.time.clone(), t2: second.time.clone(), ratio, center_x, limit_time })
}

/// Looks for two post-event configurations related by a contracting
/// homothety, among the first `search_budget` samples. `None` is
/// inconclusive.
pub fn detect_contraction<S: ExactScalar>(
    diagram: &SpaceTimeDiagram<S>,
    search_budget: usize,
) -> Option<ContractionCertificate<S>> {
    let mut watcher = ContractionWatcher::new(&diagram.initial, search_budget);
    for st in diagram.sampled_states().skip(1).take(search_budget) {
        if watcher.observe(&st) {
            return watcher.certificate;
        }
    }
    None
}

/// Incremental contraction search for [`crate::simulator::run_with`].
#[derive(Debug, Clone)]
pub struct ContractionWatcher<S> {
    seen: Vec<RunState<S>>,
    budget: usize,
    pub certificate: Option<ContractionCertificate<S>>,
}

impl<S: ExactScalar> ContractionWatcher<S> {
    pub fn new(initial: &InitialConfiguration<S>, budget: usize) -> Self {
        ContractionWatcher { seen: vec![RunState::initial(initial)], budget, certificate: None }
    }

    /// Records a state; `true` once a certificate is found.
    pub fn observe(&mut self, state: &RunState<S>) -> bool {
        if self.certificate.is_some() {
            return true;
        }
        if self.seen.len() >= self.budget {
            return false;
        }
        let shape = |s: &RunState<S>| s.sites.iter().map(|x| x.signals.clone()).collect::<Vec<_>>();
        let target = shape(state);
        for earlier in &self.seen {
            if earlier.sites.len() == state.sites.len() && shape(earlier) == target {
                if let Some(c) = certificate(earlier, state) {
                    self.certificate = Some(c);
                    return true;
                }
            }
        }
        self.seen.push(state.clone());
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodicityCertificate<S> {
    pub window: (S, S),
    pub transient: S,
    pub period: S,
    /// Whether the configurations already agree at `transient` itself, or
    /// only on the open interval after it.
    pub attained: bool,
    /// End of the verified range.
    pub horizon: S,
}

impl<S: ExactScalar> fmt::Display for PeriodicityCertificate<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "PERIODIC window=[{},{}] transient={} period={}",
            self.window.0, self.window.1, self.transient, self.period
        )
    }
}

/// Content of the closed window at one instant: signals with their
/// positions, plus the collisions happening there.
#[derive(Debug, Clone, PartialEq, Eq)]
struct WindowView<S> {
    sites: Vec<Site<S>>,
    collisions: Vec<(S, SignalSet, SignalSet)>,
}

struct Windowed<'a, S: ExactScalar> {
    index: TimeIndex<'a, S>,
    lo: S,
    hi: S,
    cache: HashMap<S, WindowView<S>>,
}

impl<S: ExactScalar> Windowed<'_, S> {
    fn view(&mut self, t: &S) -> WindowView<S> {
        if let Some(v) = self.cache.get(t) {
            return v.clone();
        }
        let st = self.index.configuration_at(t).expect("sample inside horizon");
        let inside = |x: &S| *x >= self.lo && *x <= self.hi;
        let v = WindowView {
            sites: st.sites.into_iter().filter(|s| inside(&s.position)).collect(),
            collisions: st
                .collisions
                .into_iter()
                .filter(|e| inside(&e.position))
                .map(|e| (e.position, e.incoming, e.outgoing))
                .collect(),
        };
        self.cache.insert(t.clone(), v.clone());
        v
    }
}

/// Instants in `[0, horizon]` where the windowed content can change
/// non-linearly: events in the window and boundary crossings. The flag
/// tells whether any signal enters the window from outside.
fn critical_times<S: ExactScalar>(diagram: &SpaceTimeDiagram<S>, lo: &S, hi: &S, horizon: &S) -> (BTreeSet<S>, bool) {
    let mut k = BTreeSet::new();
    let mut entered = false;
    k.insert(S::zero());
    for e in &diagram.events {
        if e.time <= *horizon && e.position >= *lo && e.position <= *hi {
            k.insert(e.time.clone());
        }
    }
    for seg in &diagram.segments {
        let v = diagram.machine.speed(seg.signal);
        if v.is_zero() {
            continue;
        }
        for (wall, inward) in [(lo, v.sign() > 0), (hi, v.sign() < 0)] {
            let Ok(dt) = (wall.clone() - &seg.start.0).checked_div(v) else { continue };
            let t = seg.start.1.clone() + dt;
            let ends_before = seg.end.as_ref().is_some_and(|e| t > e.1);
            if t >= seg.start.1 && !ends_before && t <= *horizon {
                entered |= inward && t > seg.start.1;
                k.insert(t);
            }
        }
    }
    (k, entered)
}

/// Finds the smallest period `T` (and the least transient for it) such
/// that the content of `[window.0, window.1]` at `t` equals that at `t + T`
/// for all `t` in `[transient, horizon - T]`, with `transient + 3T ≤
/// horizon`.
///
/// Between consecutive critical instants both sides move rigidly, so
/// checking at every critical instant and at every midpoint is exact.
pub fn detect_periodicity<S: ExactScalar>(
    diagram: &SpaceTimeDiagram<S>,
    window: (S, S),
    horizon: &S,
) -> Option<PeriodicityCertificate<S>> {
    periodicity(diagram, window, horizon, true)
}

fn periodicity<S: ExactScalar>(
    diagram: &SpaceTimeDiagram<S>,
    window: (S, S),
    horizon: &S,
    bisect: bool,
) -> Option<PeriodicityCertificate<S>> {
    if diagram.horizon.as_ref().is_some_and(|h| h < horizon) {
        return None;
    }
    let (lo, hi) = window;
    let (k, entered) = critical_times(diagram, &lo, &hi, horizon);
    let last = k.iter().next_back()?.clone();
    let mut candidates: BTreeSet<S> = k.iter().filter(|t| **t < last).map(|t| last.clone() - t).collect();
    candidates.insert(horizon.clone().checked_div(&S::from_int(4)).ok()?);
    let mut windowed = Windowed { index: diagram.time_index(), lo: lo.clone(), hi: hi.clone(), cache: HashMap::new() };
    let two = S::from_int(2);
    let third = horizon.clone().checked_div(&S::from_int(3)).ok()?;
    for period in candidates {
        if !period.is_positive_value() {
            continue;
        }
        if period > third {
            break;
        }
        let end = horizon.clone() - &period;
        // A mismatch at `end` already forces `transient + 3T > horizon`.
        if windowed.view(&end) != windowed.view(horizon) {
            continue;
        }
        let mut points: BTreeSet<S> = BTreeSet::new();
        for t in &k {
            for p in [t.clone(), t.clone() - &period] {
                if p.sign() >= 0 && p <= end {
                    points.insert(p);
                }
            }
        }
        points.insert(end.clone());
        let pts: Vec<S> = points.into_iter().collect();
        let mut samples: Vec<(S, bool)> = Vec::with_capacity(pts.len() * 2);
        for (i, p) in pts.iter().enumerate() {
            samples.push((p.clone(), true));
            if let Some(q) = pts.get(i + 1) {
                samples.push(((p.clone() + q).checked_div(&two).ok()?, false));
            }
        }
        let mut differs = |i: usize| {
            let (t, _) = &samples[i];
            windowed.view(t) != windowed.view(&(t.clone() + &period))
        };
        // With no inflow the window evolves on its own, so agreement at one
        // sample carries over to every later one and the last disagreement
        // can be bisected. Otherwise walk back from the end.
        let last_differs = if entered || !bisect {
            (0..samples.len()).rev().find(|&i| differs(i))
        } else {
            let (mut agree_from, mut lo_idx) = (samples.len(), 0);
            while lo_idx < agree_from {
                let mid = (lo_idx + agree_from) / 2;
                if differs(mid) {
                    lo_idx = mid + 1;
                } else {
                    agree_from = mid;
                }
            }
            agree_from.checked_sub(1)
        };
        let mut transient = S::zero();
        let mut attained = true;
        if let Some(idx) = last_differs {
            if samples[idx].1 {
                // Agreement on the open interval after the sample only.
                transient = samples[idx].0.clone();
                attained = false;
            } else {
                transient = samples[idx + 1].0.clone();
            }
        }
        if transient.clone() + S::from_int(3) * &period <= *horizon {
            return Some(PeriodicityCertificate {
                window: (lo, hi),
                transient,
                period,
                attained,
                horizon: horizon.clone(),
            });
        }
    }
    None
}

/// Common time range of two diagrams. When both are quiescent, a time past
/// both last events, beyond which every signal moves freely.
fn common_horizon<S: ExactScalar>(a: &SpaceTimeDiagram<S>, b: &SpaceTimeDiagram<S>) -> S {
    match (&a.horizon, &b.horizon) {
        (Some(x), Some(y)) => x.clone().min(y.clone()),
        (Some(x), None) | (None, Some(x)) => x.clone(),
        (None, None) => a.last_time().max(b.last_time()) + S::one(),
    }
}

/// Every point of `inner` (segments and events) up to the common horizon
/// lies on the support of `outer`.
pub fn diagram_included<S: ExactScalar>(inner: &SpaceTimeDiagram<S>, outer: &SpaceTimeDiagram<S>) -> bool {
    let h = common_horizon(inner, outer);
    // Outer segments grouped by supporting line (speed, position at t = 0).
    let mut lines: BTreeMap<(S, S), Vec<(S, S)>> = BTreeMap::new();
    for seg in &outer.segments {
        let v = outer.machine.speed(seg.signal).clone();
        let intercept = seg.start.0.clone() - v.clone() * &seg.start.1;
        let end = seg.end.as_ref().map(|e| e.1.clone()).unwrap_or_else(|| h.clone()).min(h.clone());
        if seg.start.1 <= end {
            lines.entry((v, intercept)).or_default().push((seg.start.1.clone(), end));
        }
    }
    for spans in lines.values_mut() {
        spans.sort();
    }
    for seg in &inner.segments {
        if seg.start.1 > h {
            continue;
        }
        let v = inner.machine.speed(seg.signal).clone();
        let intercept = seg.start.0.clone() - v.clone() * &seg.start.1;
        let end = seg.end.as_ref().map(|e| e.1.clone()).unwrap_or_else(|| h.clone()).min(h.clone());
        let Some(spans) = lines.get(&(v, intercept)) else { return false };
        if !covers(spans, &seg.start.1, &end) {
            return false;
        }
    }
    let outer_events: BTreeSet<(S, S)> = outer.events.iter().map(|e| (e.time.clone(), e.position.clone())).collect();
    inner.events.iter().filter(|e| e.time <= h).all(|e| {
        outer_events.contains(&(e.time.clone(), e.position.clone()))
            || outer
                .segments
                .iter()
                .any(|s| s.position_at(&e.time, outer.machine.speed(s.signal)).as_ref() == Some(&e.position))
    })
}

/// Whether the sorted closed intervals cover `[from, to]`.
fn covers<S: ExactScalar>(spans: &[(S, S)], from: &S, to: &S) -> bool {
    let mut reached = from.clone();
    let mut started = false;
    for (a, b) in spans {
        if *a > reached {
            break;
        }
        if *b >= reached {
            reached = b.clone();
            started = true;
        }
        if started && reached >= *to {
            return true;
        }
    }
    started && reached >= *to
}

/// Every event of `inner` up to the common horizon is an event of `outer`
/// at the same exact coordinates.
pub fn events_contained<S: ExactScalar>(inner: &SpaceTimeDiagram<S>, outer: &SpaceTimeDiagram<S>) -> bool {
    let h = common_horizon(inner, outer);
    let outer_events: BTreeSet<(S, S)> = outer.events.iter().map(|e| (e.time.clone(), e.position.clone())).collect();
    inner.events.iter().filter(|e| e.time <= h).all(|e| outer_events.contains(&(e.time.clone(), e.position.clone())))
}

/// Backward light cone of `apex` for the given extremal speeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalCone<S> {
    pub apex: (S, S),
    pub max_right_speed: S,
    pub max_left_speed: S,
}

impl<S: ExactScalar> CausalCone<S> {
    /// Cone bounded by the fastest and slowest speeds of `machine`.
    pub fn for_machine(machine: &SignalMachine<S>, x: S, t: S) -> Option<Self> {
        let speeds = machine.distinct_speeds();
        Some(CausalCone {
            apex: (x, t),
            max_right_speed: speeds.last()?.clone(),
            max_left_speed: speeds.first()?.clone(),
        })
    }

    /// Strictly inside: `t' < t` and `x - νmax·(t - t') < x' < x - νmin·(t - t')`.
    pub fn contains(&self, x: &S, t: &S) -> bool {
        let (ax, at) = &self.apex;
        if t >= at {
            return false;
        }
        let dt = at.clone() - t;
        let left = ax.clone() - self.max_right_speed.clone() * &dt;
        let right = ax.clone() - self.max_left_speed.clone() * &dt;
        left < *x && *x < right
    }
}

pub fn causal_past_contains<S: ExactScalar>(cone: &CausalCone<S>, point: (&S, &S)) -> bool {
    cone.contains(point.0, point.1)
}

pub fn collisions_in_cone<S: ExactScalar>(diagram: &SpaceTimeDiagram<S>, cone: &CausalCone<S>) -> usize {
    diagram.events.iter().filter(|e| cone.contains(&e.position, &e.time)).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoSpeedReport {
    pub count: usize,
    pub bound: usize,
    pub halted: bool,
}

/// Runs a two-speed machine and compares its event count with `i × j`,
/// where `i` and `j` count the initial signals of the fast and slow class.
pub fn two_speed_bound_check<S: ExactScalar>(
    machine: &SignalMachine<S>,
    config: &InitialConfiguration<S>,
) -> Result<TwoSpeedReport, MachineError> {
    let speeds = machine.distinct_speeds();
    if speeds.len() != 2 {
        return Err(MachineError::SpeedCount(speeds.len()));
    }
    let fast = config.placements().iter().filter(|(id, _)| *machine.speed(*id) == speeds[1]).count();
    let slow = config.signal_count() - fast;
    let bound = fast * slow;
    let d = run(machine, config, &RunLimits::events(bound + 1));
    Ok(TwoSpeedReport { count: d.events.len(), bound, halted: d.halt == HaltReason::Quiescent })
}

/// Events whose coordinates differ between two logs, for diagnostics.
pub fn first_mismatch<'a, S: ExactScalar>(a: &'a [Event<S>], b: &'a [Event<S>]) -> Option<usize> {
    a.iter()
        .zip(b)
        .position(|(x, y)| x.position != y.position || x.time != y.time)
        .or_else(|| (a.len() != b.len()).then(|| a.len().min(b.len())))
}
