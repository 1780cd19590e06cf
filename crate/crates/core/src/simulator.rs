//! Event-driven dynamics: next-collision search, simultaneous collision
//! resolution, and exact recording of the space-time diagram.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::machine::{InitialConfiguration, SignalId, SignalMachine, SignalSet, Site};
use crate::scalar::ExactScalar;

/// A collision: incoming signals meet at `(position, time)` and are replaced
/// by the outgoing ones. Indices start at 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event<S> {
    pub index: usize,
    pub position: S,
    pub time: S,
    pub incoming: SignalSet,
    pub outgoing: SignalSet,
}

/// The configuration at `time`. `collisions` lists the events happening at
/// exactly that instant; `sites` holds the signals leaving them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunState<S> {
    pub time: S,
    pub sites: Vec<Site<S>>,
    pub event_count: usize,
    pub collisions: Vec<Event<S>>,
}

impl<S: ExactScalar> RunState<S> {
    pub fn initial(config: &InitialConfiguration<S>) -> Self {
        RunState { time: S::zero(), sites: config.sites().to_vec(), event_count: 0, collisions: Vec::new() }
    }

    pub fn to_configuration(&self) -> InitialConfiguration<S> {
        InitialConfiguration::from_sites(self.sites.clone()).expect("run states are sorted")
    }

    pub fn signal_count(&self) -> usize {
        self.sites.iter().map(|s| s.signals.len()).sum()
    }

    /// Signal instances in site order: `(signal, position)`.
    fn instances(&self) -> impl Iterator<Item = (SignalId, &S)> {
        self.sites.iter().flat_map(|s| s.signals.iter().map(move |&id| (id, &s.position)))
    }
}

/// A maximal piece of a signal's trajectory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment<S> {
    pub signal: SignalId,
    pub start: (S, S),
    /// `None` while the signal is still alive at the end of the run.
    pub end: Option<(S, S)>,
    pub birth: Option<usize>,
    pub death: Option<usize>,
}

impl<S: ExactScalar> Segment<S> {
    /// Position at time `t`, if the segment exists then.
    pub fn position_at(&self, t: &S, speed: &S) -> Option<S> {
        if *t < self.start.1 || self.end.as_ref().is_some_and(|e| *t > e.1) {
            return None;
        }
        Some(self.start.0.clone() + speed.clone() * (t.clone() - &self.start.1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HaltReason<S> {
    Quiescent,
    TimeLimit,
    EventLimit,
    MissingRule { inputs: SignalSet, position: S, time: S },
    CertifiedAccumulation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunLimits<S> {
    pub max_events: usize,
    pub max_time: Option<S>,
}

impl<S> RunLimits<S> {
    pub fn events(max_events: usize) -> Self {
        RunLimits { max_events, max_time: None }
    }

    pub fn time(max_time: S) -> Self {
        RunLimits { max_events: usize::MAX, max_time: Some(max_time) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceTimeDiagram<S> {
    pub machine: SignalMachine<S>,
    pub initial: InitialConfiguration<S>,
    pub events: Vec<Event<S>>,
    pub segments: Vec<Segment<S>>,
    pub final_state: RunState<S>,
    pub halt: HaltReason<S>,
    /// Time up to which the diagram is complete; `None` when quiescent.
    pub horizon: Option<S>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("time {0} is outside the recorded diagram (horizon {1})")]
    OutsideHorizon(String, String),
    #[error("no rule for {set} at position {position}, time {time}")]
    MissingRule { set: String, position: String, time: String },
}

/// Time to the next collision and every meeting point realised then.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NextCollision<S> {
    pub delta: S,
    /// `(position, signals)` in increasing position order.
    pub groups: Vec<(S, SignalSet)>,
}

/// Adjacent-site scan: the earliest meeting is always between the fastest
/// signal of a site and the slowest of the next one.
pub fn next_collision_delta<S: ExactScalar>(
    state: &RunState<S>,
    machine: &SignalMachine<S>,
) -> Option<NextCollision<S>> {
    let delta = earliest_delta(state, machine)?;
    let moved = moved_instances(state, machine, &delta);
    let groups = meeting_runs(&moved)
        .filter(|r| r.len() >= 2)
        .map(|r| (moved[r.start].2.clone(), moved[r].iter().map(|m| m.1).collect()))
        .collect();
    Some(NextCollision { delta, groups })
}

fn earliest_delta<S: ExactScalar>(state: &RunState<S>, machine: &SignalMachine<S>) -> Option<S> {
    let mut best: Option<S> = None;
    for w in state.sites.windows(2) {
        let fast = w[0].signals.iter().copied().max_by_key(|&id| machine.speed_rank(id))?;
        let slow = w[1].signals.iter().copied().min_by_key(|&id| machine.speed_rank(id))?;
        if machine.speed_rank(fast) > machine.speed_rank(slow) {
            let d = (w[1].position.clone() - &w[0].position)
                .checked_div(&(machine.speed(fast).clone() - machine.speed(slow)))
                .expect("speeds differ");
            if best.as_ref().is_none_or(|b| d < *b) {
                best = Some(d);
            }
        }
    }
    let delta = best?;
    assert!(delta.is_positive_value(), "collision delay must be positive");
    Some(delta)
}

/// `(instance index, signal, position after delta)`, sites left to right
/// and each site by increasing speed. No two signals cross before the next
/// collision, so positions come out sorted.
fn moved_instances<S: ExactScalar>(
    state: &RunState<S>,
    machine: &SignalMachine<S>,
    delta: &S,
) -> Vec<(usize, SignalId, S)> {
    let mut out = Vec::with_capacity(state.signal_count());
    let mut k = 0;
    for site in &state.sites {
        let mut ids: Vec<(usize, SignalId)> = site.signals.iter().enumerate().map(|(i, &id)| (k + i, id)).collect();
        ids.sort_by_key(|&(_, id)| machine.speed_rank(id));
        for (i, id) in ids {
            let v = machine.speed(id);
            let x = if v.is_zero() { site.position.clone() } else { site.position.clone() + v.clone() * delta };
            out.push((i, id, x));
        }
        k += site.signals.len();
    }
    out
}

/// Maximal runs of equal positions.
fn meeting_runs<S: ExactScalar>(moved: &[(usize, SignalId, S)]) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
    let mut start = 0;
    (1..=moved.len()).filter_map(move |i| {
        if i == moved.len() || moved[i].2 != moved[start].2 {
            let r = start..i;
            start = i;
            Some(r)
        } else {
            None
        }
    })
}

/// All-pairs reference for [`next_collision_delta`].
pub fn brute_force_next_collision<S: ExactScalar>(
    state: &RunState<S>,
    machine: &SignalMachine<S>,
) -> Option<NextCollision<S>> {
    let inst: Vec<(SignalId, &S)> = state.instances().collect();
    let mut meetings: Vec<(S, S, SignalId, SignalId)> = Vec::new();
    for (i, &(a, xa)) in inst.iter().enumerate() {
        for &(b, xb) in &inst[i + 1..] {
            let (va, vb) = (machine.speed(a), machine.speed(b));
            if va == vb {
                continue;
            }
            let d = (xb.clone() - xa).checked_div(&(va.clone() - vb)).expect("speeds differ");
            if d.is_positive_value() {
                let x = xa.clone() + va.clone() * &d;
                meetings.push((d, x, a, b));
            }
        }
    }
    let delta = meetings.iter().map(|m| m.0.clone()).min()?;
    let mut groups: BTreeMap<S, SignalSet> = BTreeMap::new();
    for (d, x, a, b) in meetings {
        if d == delta {
            let g = groups.entry(x).or_default();
            g.insert(a);
            g.insert(b);
        }
    }
    Some(NextCollision { delta, groups: groups.into_iter().collect() })
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Origin {
    /// Index of the instance in the previous state.
    Carried(usize),
    /// Index into the events of this step.
    Born(usize),
}

struct Step<S> {
    state: RunState<S>,
    events: Vec<Event<S>>,
    /// One per instance of the new state.
    origins: Vec<Origin>,
    /// For each instance of the old state, the event of this step that
    /// absorbed it.
    deaths: Vec<Option<usize>>,
}

enum StepError<S> {
    MissingRule { inputs: SignalSet, position: S, time: S },
}

fn step<S: ExactScalar>(state: &RunState<S>, machine: &SignalMachine<S>, delta: &S) -> Result<Step<S>, StepError<S>> {
    let time = state.time.clone() + delta;
    let moved = moved_instances(state, machine, delta);
    let runs: Vec<_> = meeting_runs(&moved).collect();
    let mut groups = Vec::with_capacity(runs.len());
    for r in runs {
        let set: SignalSet = moved[r.clone()].iter().map(|m| m.1).collect();
        let rule = if r.len() >= 2 { machine.rule(&set) } else { None };
        if r.len() >= 2 && rule.is_none() && !machine.pass_through() {
            return Err(StepError::MissingRule { inputs: set, position: moved[r.start].2.clone(), time });
        }
        groups.push((r, set, rule));
    }
    let mut events = Vec::new();
    let mut deaths = vec![None; moved.len()];
    let mut sites = Vec::with_capacity(groups.len());
    let mut origins = Vec::with_capacity(moved.len());
    for (r, set, rule) in groups {
        let position = moved[r.start].2.clone();
        let mut members: Vec<(SignalId, Origin)> = match rule {
            Some(outgoing) => {
                let e = events.len();
                for m in &moved[r] {
                    deaths[m.0] = Some(e);
                }
                events.push(Event {
                    index: state.event_count + e + 1,
                    position: position.clone(),
                    time: time.clone(),
                    incoming: set,
                    outgoing: outgoing.clone(),
                });
                outgoing.iter().map(|&id| (id, Origin::Born(e))).collect()
            }
            None => moved[r].iter().map(|m| (m.1, Origin::Carried(m.0))).collect(),
        };
        if members.is_empty() {
            continue;
        }
        members.sort_by_key(|m| m.0);
        origins.extend(members.iter().map(|m| m.1.clone()));
        sites.push(Site { position, signals: members.into_iter().map(|m| m.0).collect() });
    }
    let event_count = state.event_count + events.len();
    Ok(Step { state: RunState { time, sites, event_count, collisions: events.clone() }, events, origins, deaths })
}

/// One step of the dynamics from `state`.
#[allow(clippy::type_complexity)]
pub fn advance<S: ExactScalar>(
    state: &RunState<S>,
    machine: &SignalMachine<S>,
) -> Result<Option<(RunState<S>, Vec<Event<S>>)>, SimError> {
    let Some(delta) = earliest_delta(state, machine) else { return Ok(None) };
    match step(state, machine, &delta) {
        Ok(s) => Ok(Some((s.state, s.events))),
        Err(StepError::MissingRule { inputs, position, time }) => Err(SimError::MissingRule {
            set: machine.format_set(&inputs),
            position: position.to_string(),
            time: time.to_string(),
        }),
    }
}

pub fn run<S: ExactScalar>(
    machine: &SignalMachine<S>,
    config: &InitialConfiguration<S>,
    limits: &RunLimits<S>,
) -> SpaceTimeDiagram<S> {
    run_with(machine, config, limits, |_| false)
}

/// Like [`run`], calling `watch` after every step; a `true` answer halts
/// the run as a certified accumulation.
pub fn run_with<S: ExactScalar>(
    machine: &SignalMachine<S>,
    config: &InitialConfiguration<S>,
    limits: &RunLimits<S>,
    mut watch: impl FnMut(&RunState<S>) -> bool,
) -> SpaceTimeDiagram<S> {
    let mut state = RunState::initial(config);
    let mut events: Vec<Event<S>> = Vec::new();
    let mut segments: Vec<Segment<S>> = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    for (id, x) in state.instances() {
        open.push(segments.len());
        segments.push(Segment { signal: id, start: (x.clone(), S::zero()), end: None, birth: None, death: None });
    }
    let halt = loop {
        let Some(delta) = earliest_delta(&state, machine) else { break HaltReason::Quiescent };
        if let Some(max) = &limits.max_time {
            if state.time.clone() + &delta > *max {
                break HaltReason::TimeLimit;
            }
        }
        if state.event_count >= limits.max_events {
            break HaltReason::EventLimit;
        }
        let step = match step(&state, machine, &delta) {
            Ok(s) => s,
            Err(StepError::MissingRule { inputs, position, time }) => {
                break HaltReason::MissingRule { inputs, position, time }
            }
        };
        for (k, death) in step.deaths.iter().enumerate() {
            if let Some(e) = death {
                let e = &step.events[*e];
                let seg = &mut segments[open[k]];
                seg.end = Some((e.position.clone(), e.time.clone()));
                seg.death = Some(e.index);
            }
        }
        let mut new_open = Vec::with_capacity(step.origins.len());
        for ((id, x), origin) in step.state.instances().zip(&step.origins) {
            match origin {
                Origin::Carried(k) => new_open.push(open[*k]),
                Origin::Born(e) => {
                    new_open.push(segments.len());
                    segments.push(Segment {
                        signal: id,
                        start: (x.clone(), step.state.time.clone()),
                        end: None,
                        birth: Some(step.events[*e].index),
                        death: None,
                    });
                }
            }
        }
        open = new_open;
        events.extend(step.events);
        state = step.state;
        if watch(&state) {
            break HaltReason::CertifiedAccumulation;
        }
    };
    let horizon = match &halt {
        HaltReason::Quiescent => None,
        HaltReason::TimeLimit => limits.max_time.clone(),
        _ => Some(state.time.clone()),
    };
    SpaceTimeDiagram {
        machine: machine.clone(),
        initial: config.clone(),
        events,
        segments,
        final_state: state,
        halt,
        horizon,
    }
}

/// Segments bucketed by the event-time intervals they span.
pub struct TimeIndex<'a, S> {
    diagram: &'a SpaceTimeDiagram<S>,
    times: Vec<S>,
    /// Bucket `j` covers `[times[j], times[j + 1])`.
    buckets: Vec<Vec<usize>>,
}

impl<S: ExactScalar> TimeIndex<'_, S> {
    /// Same result as [`SpaceTimeDiagram::configuration_at`].
    pub fn configuration_at(&self, t: &S) -> Result<RunState<S>, SimError> {
        let b = self.times.partition_point(|x| x <= t).saturating_sub(1);
        let segs = &self.diagram.segments;
        self.diagram.state_from(t, self.buckets[b].iter().map(|&i| &segs[i]))
    }
}

impl<S: ExactScalar> SpaceTimeDiagram<S> {
    /// Time of the last event, or 0.
    pub fn last_time(&self) -> S {
        self.events.last().map(|e| e.time.clone()).unwrap_or_else(S::zero)
    }

    /// Exact configuration at time `t`, rebuilt from the segments.
    pub fn configuration_at(&self, t: &S) -> Result<RunState<S>, SimError> {
        self.state_from(t, self.segments.iter())
    }

    fn state_from<'a>(
        &'a self,
        t: &S,
        segments: impl Iterator<Item = &'a Segment<S>>,
    ) -> Result<RunState<S>, SimError> {
        let beyond = self.horizon.as_ref().is_some_and(|h| t > h);
        if t.sign() < 0 || beyond {
            let h = self.horizon.as_ref().map(|h| h.to_string()).unwrap_or_else(|| "unbounded".into());
            return Err(SimError::OutsideHorizon(t.to_string(), h));
        }
        let mut at: BTreeMap<S, SignalSet> = BTreeMap::new();
        for seg in segments {
            // Signals ending at t are reported through the collision instead.
            if seg.end.as_ref().is_some_and(|e| e.1 == *t) {
                continue;
            }
            if let Some(x) = seg.position_at(t, self.machine.speed(seg.signal)) {
                at.entry(x).or_default().insert(seg.signal);
            }
        }
        let first = self.events.partition_point(|e| e.time < *t);
        let last = self.events.partition_point(|e| e.time <= *t);
        Ok(RunState {
            time: t.clone(),
            sites: at.into_iter().map(|(position, signals)| Site { position, signals }).collect(),
            event_count: last,
            collisions: self.events[first..last].to_vec(),
        })
    }

    /// Index for repeated [`Self::configuration_at`] queries.
    pub fn time_index(&self) -> TimeIndex<'_, S> {
        let mut times: Vec<S> = vec![S::zero()];
        for e in &self.events {
            if times.last() != Some(&e.time) {
                times.push(e.time.clone());
            }
        }
        let bucket = |t: &S| times.partition_point(|x| x <= t).saturating_sub(1);
        let mut buckets = vec![Vec::new(); times.len()];
        for (i, seg) in self.segments.iter().enumerate() {
            let last = seg.end.as_ref().map(|e| bucket(&e.1)).unwrap_or(times.len() - 1);
            for b in &mut buckets[bucket(&seg.start.1)..=last] {
                b.push(i);
            }
        }
        TimeIndex { diagram: self, times, buckets }
    }

    /// Post-event configurations: the initial one, then one per step that
    /// produced events. Obtained by replaying the dynamics.
    pub fn sampled_states(&self) -> impl Iterator<Item = RunState<S>> + '_ {
        let mut st = Some(RunState::initial(&self.initial));
        let mut first = true;
        std::iter::from_fn(move || {
            if std::mem::take(&mut first) {
                return st.clone();
            }
            while let Some(cur) = st.take() {
                if cur.event_count >= self.events.len() {
                    return None;
                }
                if let Ok(Some((next, events))) = advance(&cur, &self.machine) {
                    st = Some(next);
                    if !events.is_empty() {
                        return st.clone();
                    }
                }
            }
            None
        })
    }

    /// One `E <index> <time> <position> <in-set> -> <out-set>` line per event.
    pub fn event_log(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            writeln!(
                out,
                "E {} {} {} {} -> {}",
                e.index,
                e.time,
                e.position,
                self.machine.format_set(&e.incoming),
                self.machine.format_set(&e.outgoing)
            )
            .unwrap();
        }
        out
    }
}
