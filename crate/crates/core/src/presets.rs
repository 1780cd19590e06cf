//! Ready-made machines: the four-speed accumulation, the two-speed support
//! machine, and the geometric subtraction, modulo and gcd machines.

use num_traits::Zero;
use thiserror::Error;

use crate::machine::{InitialConfiguration, MachineError, SignalId, SignalMachine};
use crate::scalar::{ExactScalar, Quadratic, Rational};
use crate::simulator::{run, HaltReason, RunLimits, RunState, SpaceTimeDiagram};

pub const DEFAULT_EVENT_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PresetError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("ambiguous final state: {0}")]
    Ambiguous(String),
    #[error("zero-width result")]
    ZeroWidth,
    #[error("run did not halt within {0} events")]
    Budget(usize),
    #[error("run stopped early: {0}")]
    Halted(String),
    #[error(transparent)]
    Machine(#[from] MachineError),
}

type Built<S> = (SignalMachine<S>, InitialConfiguration<S>);

fn machine_from<S: ExactScalar>(signals: &[(&str, S)], rules: &[(&[&str], &[&str])]) -> SignalMachine<S> {
    let mut m = SignalMachine::new();
    for (name, speed) in signals {
        m.add_signal(name, speed.clone()).expect("preset names are unique");
    }
    for (ins, outs) in rules {
        m.add_named_rule(ins, outs).expect("preset rules are well formed");
    }
    m
}

fn place<S: ExactScalar>(m: &SignalMachine<S>, placements: &[(&str, S)]) -> InitialConfiguration<S> {
    InitialConfiguration::from_placements(
        placements.iter().map(|(n, x)| (m.signal_by_name(n).expect("preset signal"), x.clone())),
    )
}

/// Four speeds, two rules; accumulates at `(0, 2)`.
pub fn build_sm4<S: ExactScalar>() -> Built<S> {
    let m = machine_from(
        &[
            ("zig", S::from_int(4)),
            ("left", S::from_ratio(1, 2)),
            ("right", S::from_ratio(-1, 2)),
            ("zag", S::from_int(-4)),
        ],
        &[(&["left", "zag"], &["left", "zig"]), (&["zig", "right"], &["zag", "right"])],
    );
    let c = place(&m, &[("left", S::from_int(-1)), ("zig", S::from_int(-1)), ("right", S::from_int(1))]);
    (m, c)
}

/// How the fast and slow signals of the two-speed machine are laid out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Arrangement {
    /// Every `R` left of every `S`.
    Converging,
    /// Every `R` right of every `S`.
    Diverging,
    /// Left-to-right order, `true` for `R`; its length must be `i + j`.
    Custom(Vec<bool>),
}

/// `R` at speed 1, `S` at speed 0, rule `{R,S} -> {S,R}`; `i` copies of `R`
/// and `j` of `S` at unit spacing.
pub fn build_sm2_support<S: ExactScalar>(
    i: usize,
    j: usize,
    arrangement: &Arrangement,
) -> Result<Built<S>, PresetError> {
    let m = machine_from(&[("R", S::from_int(1)), ("S", S::from_int(0))], &[(&["R", "S"], &["S", "R"])]);
    let order: Vec<bool> = match arrangement {
        Arrangement::Converging => std::iter::repeat_n(true, i).chain(std::iter::repeat_n(false, j)).collect(),
        Arrangement::Diverging => std::iter::repeat_n(false, j).chain(std::iter::repeat_n(true, i)).collect(),
        Arrangement::Custom(o) => {
            let fast = o.iter().filter(|&&b| b).count();
            if o.len() != i + j || fast != i {
                return Err(PresetError::Precondition(format!("arrangement must hold {i} R and {j} S")));
            }
            o.clone()
        }
    };
    let (r, s) = (0, 1);
    let c = InitialConfiguration::from_placements(
        order.iter().enumerate().map(|(k, &fast)| (if fast { r } else { s }, S::from_int(k as i64))),
    );
    Ok((m, c))
}

fn unit_speed_signals<S: ExactScalar>(names: &[(&'static str, i64)]) -> Vec<(&'static str, S)> {
    names.iter().map(|&(n, v)| (n, S::from_int(v))).collect()
}

fn arithmetic_signals<S: ExactScalar>() -> Vec<(&'static str, S)> {
    unit_speed_signals(&[
        ("init", 1),
        ("zig", 1),
        ("ZIG", 1),
        ("wall0", 0),
        ("wall_a", 0),
        ("wall_b", 0),
        ("wall_r", 0),
        ("zag", -1),
        ("ZAG", -1),
    ])
}

// `init` crosses `wall0` without interacting.
fn crossing<S: ExactScalar>(mut m: SignalMachine<S>) -> SignalMachine<S> {
    m.set_pass_through(true);
    m
}

fn arithmetic_config<S: ExactScalar>(m: &SignalMachine<S>, a: &S, b: &S) -> InitialConfiguration<S> {
    place(m, &[("init", S::from_int(-1)), ("wall0", S::zero()), ("wall_b", b.clone()), ("wall_a", a.clone())])
}

fn positive_pair<S: ExactScalar>(a: &S, b: &S) -> Result<(), PresetError> {
    if !b.is_positive_value() || !a.is_positive_value() {
        return Err(PresetError::Precondition(format!("expected a, b > 0, got a = {a}, b = {b}")));
    }
    Ok(())
}

/// Computes `a - b` as the distance from `wall0` to `wall_r`.
pub fn build_subtraction<S: ExactScalar>(a: &S, b: &S) -> Result<Built<S>, PresetError> {
    positive_pair(a, b)?;
    if a <= b {
        return Err(PresetError::Precondition(format!("expected a > b, got a = {a}, b = {b}")));
    }
    let m = machine_from(
        &arithmetic_signals(),
        &[
            (&["init", "wall_b"], &["zag", "wall_b", "ZIG"]),
            (&["wall0", "zag"], &["wall0", "zig"]),
            (&["zig", "wall_b"], &["ZIG"]),
            (&["ZIG", "wall_a"], &["ZAG"]),
            (&["wall_b", "ZAG"], &["ZAG", "wall_b"]),
            (&["ZIG", "ZAG"], &["wall_r"]),
            (&["zig", "ZAG"], &["wall_r"]),
            (&["zig", "wall_b", "ZAG"], &["wall_r"]),
        ],
    );
    let c = arithmetic_config(&m, a, b);
    Ok((crossing(m), c))
}

/// Computes `a mod b` as the distance from `wall0` to `wall_r`.
///
/// Requires `a > b`: equal values would stack `wall_a` on `wall_b`, and
/// with `a < b`, `init` passes `wall_a` before `wall_b` and
/// every bounce sends a `ZIG` off to infinity.
pub fn build_modulo<S: ExactScalar>(a: &S, b: &S) -> Result<Built<S>, PresetError> {
    positive_pair(a, b)?;
    if a <= b {
        return Err(PresetError::Precondition(format!("expected a > b, got a = {a}, b = {b}")));
    }
    let m = machine_from(
        &arithmetic_signals(),
        &[
            (&["init", "wall_b"], &["zag", "wall_b", "ZIG"]),
            (&["wall0", "zag"], &["wall0", "zig"]),
            (&["zig", "wall_b"], &["zag", "wall_b", "ZIG"]),
            (&["ZIG", "wall_a"], &["ZAG"]),
            (&["wall_b", "ZAG"], &["ZAG"]),
            (&["zig", "wall_b", "ZAG"], &["ZAG"]),
            (&["ZIG", "ZAG"], &["ZAG"]),
            (&["zig", "ZAG"], &["wall_r"]),
            (&["wall0", "ZAG"], &["wall0"]),
        ],
    );
    let c = arithmetic_config(&m, a, b);
    Ok((crossing(m), c))
}

fn gcd_rules() -> Vec<(&'static [&'static str], &'static [&'static str])> {
    vec![
        (&["zig", "wall_b"], &["zag", "wall_b", "ZIG"]),
        (&["wall0", "zag"], &["wall0", "zig"]),
        (&["wall_a", "ZIG"], &["ZAG"]),
        (&["wall_b", "ZAG"], &["ZAG", "wall_a"]),
        (&["zig", "ZAG"], &["zag", "wall_b"]),
        (&["ZIG", "ZAG"], &["ZAG"]),
        (&["zig", "wall_b", "ZAG"], &["ZAG", "wall0"]),
        (&["wall0", "ZAG"], &["wall0"]),
    ]
}

/// Euclid's algorithm; halts with two `wall0` at distance `gcd(a, b)`.
pub fn build_gcd<S: ExactScalar>(a: &S, b: &S) -> Result<Built<S>, PresetError> {
    positive_pair(a, b)?;
    if a <= b {
        return Err(PresetError::Precondition(format!("expected a > b, got a = {a}, b = {b}")));
    }
    let signals = unit_speed_signals(&[
        ("zig", 1),
        ("ZIG", 1),
        ("wall0", 0),
        ("wall_a", 0),
        ("wall_b", 0),
        ("zag", -1),
        ("ZAG", -1),
    ]);
    let m = machine_from(&signals, &gcd_rules());
    let c = place(&m, &[("wall0", S::zero()), ("zig", S::zero()), ("wall_b", b.clone()), ("wall_a", a.clone())]);
    Ok((m, c))
}

/// The gcd machine with right-moving signals at speed `φ`, started from
/// `start` so that it computes on `(1, φ - 1)` from time 1 on. Never halts.
pub fn build_gcd_phi() -> Built<Quadratic> {
    let phi = Quadratic::phi();
    let one = Quadratic::from_int(1);
    let zero = Quadratic::zero();
    let mut signals = vec![("start", phi.clone()), ("zig", phi.clone()), ("ZIG", phi.clone())];
    signals.extend([("wall0", zero.clone()), ("wall_a", zero.clone()), ("wall_b", zero.clone())]);
    signals.extend([("zag", -one.clone()), ("ZAG", -one.clone())]);
    let mut rules = gcd_rules();
    rules.push((&["start", "zag"], &["zag", "wall_b"]));
    let m = machine_from(&signals, &rules);
    let c = place(&m, &[("wall0", zero.clone()), ("start", zero), ("zag", one.clone()), ("wall_a", one)]);
    (m, c)
}

/// Reads the result encoded as the distance between two walls.
///
/// Machines with a `wall_r` signal designate it as the result wall: the
/// value is its distance to the single `wall0`, and other stationary
/// leftovers are ignored. Otherwise the final state must hold exactly two
/// stationary signals, one of which is a `wall0`. A lone `wall0` (an empty
/// result) is read as 0 by [`geometric_result`]. Two walls at the same
/// point are an error.
pub fn read_encoded_value<S: ExactScalar>(state: &RunState<S>, machine: &SignalMachine<S>) -> Result<S, PresetError> {
    let listing = || {
        let parts: Vec<String> =
            state.sites.iter().map(|s| format!("{}@{}", machine.format_set(&s.signals), s.position)).collect();
        parts.join(" ")
    };
    let moving = state.sites.iter().any(|s| s.signals.iter().any(|&id| !machine.speed(id).is_zero()));
    let walls: Vec<(SignalId, &S)> = state
        .sites
        .iter()
        .flat_map(|s| s.signals.iter().map(move |&id| (id, &s.position)))
        .filter(|(id, _)| machine.speed(*id).is_zero())
        .collect();
    let origin = machine.signal_by_name("wall0");
    if let (Some(result), false) = (machine.signal_by_name("wall_r"), moving) {
        let at = |id| walls.iter().filter(|(w, _)| *w == id).map(|(_, x)| *x).collect::<Vec<_>>();
        let (Some(o), r) = (origin, at(result)) else { return Err(PresetError::Ambiguous(listing())) };
        if let ([x0], [xr]) = (at(o).as_slice(), r.as_slice()) {
            let width = (*xr).clone() - *x0;
            return if width.is_zero() { Err(PresetError::ZeroWidth) } else { Ok(width) };
        }
    }
    if moving || walls.len() != 2 || !walls.iter().any(|(id, _)| Some(*id) == origin) {
        return Err(PresetError::Ambiguous(listing()));
    }
    let width = walls[1].1.clone() - walls[0].1;
    if width.is_zero() {
        return Err(PresetError::ZeroWidth);
    }
    Ok(width)
}

/// Runs a preset to quiescence and reads its result.
pub fn geometric_result<S: ExactScalar>(
    machine: &SignalMachine<S>,
    config: &InitialConfiguration<S>,
) -> Result<S, PresetError> {
    let d = run(machine, config, &RunLimits::events(DEFAULT_EVENT_BUDGET));
    match &d.halt {
        HaltReason::Quiescent => {}
        HaltReason::EventLimit => return Err(PresetError::Budget(DEFAULT_EVENT_BUDGET)),
        other => return Err(PresetError::Halted(format!("{other:?}"))),
    }
    let wall0 = machine.signal_by_name("wall0");
    let only_origin = d.final_state.sites.len() == 1
        && d.final_state.sites[0].signals.len() == 1
        && d.final_state.sites[0].signals.first().copied() == wall0;
    if only_origin {
        return Ok(S::zero());
    }
    read_encoded_value(&d.final_state, machine)
}

/// Widths `(a_n, b_n)` at each restart of the gcd machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WallStep<S> {
    pub step: usize,
    pub time: S,
    pub a: S,
    pub b: S,
}

/// Restarts are the post-event configurations made of exactly `wall0` and
/// `zig` together at the origin, then `wall_b`, then `wall_a`.
pub fn wall_trace<S: ExactScalar>(diagram: &SpaceTimeDiagram<S>) -> Vec<WallStep<S>> {
    let m = &diagram.machine;
    let id = |n: &str| m.signal_by_name(n);
    let (Some(w0), Some(zig), Some(wa), Some(wb)) = (id("wall0"), id("zig"), id("wall_a"), id("wall_b")) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for st in diagram.sampled_states() {
        let s = &st.sites;
        let shaped = s.len() == 3
            && s[0].signals == [w0, zig].into_iter().collect()
            && s[1].signals == [wb].into_iter().collect()
            && s[2].signals == [wa].into_iter().collect();
        if shaped {
            out.push(WallStep {
                step: out.len(),
                time: st.time.clone(),
                a: s[2].position.clone() - &s[0].position,
                b: s[1].position.clone() - &s[0].position,
            });
        }
    }
    out
}

/// `1/ν₁ + 1/ν₂`, the duration of a unit back-and-forth between walls.
pub fn back_and_forth_time<S: ExactScalar>(right_speed: &S, left_speed: &S) -> S {
    let one = S::one();
    one.checked_div(right_speed).expect("nonzero speed")
        + one.checked_div(&left_speed.abs_value()).expect("nonzero speed")
}

/// Convenience: the subtraction, modulo and gcd presets over rationals.
pub fn rational(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        let (m, c) = build_sm4::<Rational>();
        assert!(m.validate().is_empty());
        assert!(c.validate(&m).is_empty());
        for (m, c) in [
            build_subtraction(&rational(11, 1), &rational(3, 1)).unwrap(),
            build_modulo(&rational(11, 1), &rational(3, 1)).unwrap(),
            build_gcd(&rational(8, 1), &rational(3, 1)).unwrap(),
        ] {
            assert!(m.validate().is_empty(), "{:?}", m.validate());
            assert!(c.validate(&m).is_empty());
        }
        let (m, c) = build_gcd_phi();
        assert!(m.validate().is_empty());
        assert!(c.validate(&m).is_empty());
        assert_eq!(m.len(), 8);
        assert_eq!(m.rules().len(), 9);
    }

    #[test]
    fn preconditions() {
        assert!(build_subtraction(&rational(3, 1), &rational(3, 1)).is_err());
        assert!(build_gcd(&rational(2, 1), &rational(3, 1)).is_err());
        assert!(build_modulo(&rational(0, 1), &rational(3, 1)).is_err());
        assert!(build_modulo(&rational(2, 1), &rational(3, 1)).is_err());
        assert!(build_modulo(&rational(3, 1), &rational(3, 1)).is_err());
        assert!(build_sm2_support::<Rational>(2, 1, &Arrangement::Custom(vec![true])).is_err());
    }

    #[test]
    fn arithmetic_results() {
        let r = |m: Built<Rational>| geometric_result(&m.0, &m.1).unwrap();
        assert_eq!(r(build_subtraction(&rational(11, 1), &rational(3, 1)).unwrap()), rational(8, 1));
        assert_eq!(r(build_modulo(&rational(11, 1), &rational(3, 1)).unwrap()), rational(2, 1));
        assert_eq!(r(build_modulo(&rational(6, 1), &rational(3, 1)).unwrap()), rational(0, 1));
        assert_eq!(r(build_modulo(&rational(9, 2), &rational(3, 2)).unwrap()), rational(0, 1));
        assert_eq!(r(build_gcd(&rational(8, 1), &rational(3, 1)).unwrap()), rational(1, 1));
        assert_eq!(r(build_gcd(&rational(4, 1), &rational(2, 1)).unwrap()), rational(2, 1));
    }

    #[test]
    fn subtraction_below_twice_b_keeps_wall_b() {
        let (m, c) = build_subtraction(&rational(29, 3), &rational(19, 2)).unwrap();
        let d = run(&m, &c, &RunLimits::events(100));
        let wb = m.signal_by_name("wall_b").unwrap();
        assert!(d.final_state.sites.iter().any(|s| s.signals.contains(&wb)));
        assert_eq!(read_encoded_value(&d.final_state, &m).unwrap(), rational(1, 6));
    }

    #[test]
    fn gcd_trace_of_eight_and_three() {
        let (m, c) = build_gcd(&rational(8, 1), &rational(3, 1)).unwrap();
        let d = run(&m, &c, &RunLimits::events(1000));
        let pairs: Vec<(Rational, Rational)> = wall_trace(&d).into_iter().map(|w| (w.a, w.b)).collect();
        assert_eq!(
            pairs,
            vec![(rational(8, 1), rational(3, 1)), (rational(3, 1), rational(2, 1)), (rational(2, 1), rational(1, 1))]
        );
    }

    #[test]
    fn lone_walls_at_one_point_are_zero_width() {
        let (m, _) = build_modulo(&rational(6, 1), &rational(3, 1)).unwrap();
        let w0 = m.signal_by_name("wall0").unwrap();
        let wr = m.signal_by_name("wall_r").unwrap();
        let st =
            RunState::initial(&InitialConfiguration::from_placements([(w0, rational(0, 1)), (wr, rational(0, 1))]));
        assert_eq!(read_encoded_value(&st, &m), Err(PresetError::ZeroWidth));
        let st = RunState::initial(&InitialConfiguration::from_placements([(w0, rational(0, 1))]));
        assert!(matches!(read_encoded_value(&st, &m), Err(PresetError::Ambiguous(_))));
    }
}
