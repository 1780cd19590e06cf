use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use proptest::prelude::*;

use sigmach::analysis::{detect_contraction, detect_periodicity, events_contained};
use sigmach::corpus::{affine_map, case_rng, random_configuration, scheduler_state, three_speed_case, total_machine};
use sigmach::format::{parse_machine, print_machine};
use sigmach::machine::{
    apply_affine_to_machine, classify, normalize_speeds, support_configuration, support_machine, AffineMap,
};
use sigmach::mesh::{mesh_configuration, mesh_machine, MeshSpec, StripSpec};
use sigmach::presets::{build_gcd, build_gcd_phi, build_sm4, wall_trace};
use sigmach::scalar::{euclid_trace, rational_gcd};
use sigmach::simulator::{
    advance, brute_force_next_collision, next_collision_delta, run, HaltReason, RunLimits, RunState,
};
use sigmach::{ExactScalar, FieldContext, InitialConfiguration, Quadratic, Rational, Site};

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn rational() -> impl Strategy<Value = Rational> {
    (-60i64..=60, 1i64..=12).prop_map(|(n, d)| q(n, d))
}

fn positive_rational() -> impl Strategy<Value = Rational> {
    (1i64..=60, 1i64..=12).prop_map(|(n, d)| q(n, d))
}

fn radicand() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![2u64, 3, 5, 6, 7, 10, 13])
}

fn quadratic_triple() -> impl Strategy<Value = (Quadratic, Quadratic, Quadratic)> {
    (radicand(), rational(), rational(), rational(), rational(), rational(), rational()).prop_map(
        |(d, a, b, c, e, f, g)| {
            let field = FieldContext::new(d);
            (field.scalar(a, b), field.scalar(c, e), field.scalar(f, g))
        },
    )
}

/// Sign of `a + b√d` from integer square roots: with both parts scaled to
/// integers `X + Y√d`, `|Y|√d` lies strictly between `s` and `s + 1`.
fn sign_oracle(a: &Rational, b: &Rational, d: u64) -> i8 {
    let x = a.numer() * b.denom();
    let y = b.numer() * a.denom();
    let sgn = |v: &BigInt| match v.sign() {
        num_bigint::Sign::Minus => -1i8,
        num_bigint::Sign::NoSign => 0,
        num_bigint::Sign::Plus => 1,
    };
    if y.is_zero() {
        return sgn(&x);
    }
    let s = (&y * &y * BigInt::from(d)).sqrt();
    let (lo, hi) = if sgn(&y) > 0 { (&x + &s, &x + &s + 1) } else { (&x - &s - 1, &x - &s) };
    if lo >= BigInt::zero() {
        1
    } else {
        debug_assert!(hi <= BigInt::zero());
        -1
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn quadratic_field_axioms((x, y, z) in quadratic_triple()) {
        prop_assert_eq!((x.clone() + &y) + &z, x.clone() + (y.clone() + &z));
        prop_assert_eq!(x.clone() * &y, y.clone() * &x);
        prop_assert_eq!(x.clone() * (y.clone() + &z), x.clone() * &y + x.clone() * &z);
        prop_assert_eq!(x.clone() - &x, Quadratic::zero());
        if !x.is_zero() {
            let inv = Quadratic::one().checked_div(&x).unwrap();
            prop_assert_eq!(inv * &x, Quadratic::one());
        } else {
            prop_assert!(Quadratic::one().checked_div(&x).is_err());
        }
    }

    #[test]
    fn quadratic_sign_matches_integer_oracle(a in rational(), b in rational(), d in radicand()) {
        let x = FieldContext::new(d).scalar(a.clone(), b.clone());
        prop_assert_eq!(x.sign(), sign_oracle(&a, &b, d));
        prop_assert_eq!(x.signum(), x.sign());
        let y = FieldContext::new(d).scalar(a.clone(), b.clone() + q(1, 7));
        prop_assert!(x < y);
    }

    #[test]
    fn rational_gcd_has_coprime_integer_cofactors(x in positive_rational(), y in positive_rational()) {
        let g = rational_gcd(&x, &y).unwrap();
        let (u, v) = (x.clone() / &g, y.clone() / &g);
        prop_assert!(u.is_integer() && v.is_integer());
        prop_assert!(num_integer::Integer::gcd(u.numer(), v.numer()).is_one());
    }

    #[test]
    fn euclid_on_rationals_ends_at_rational_gcd(x in positive_rational(), y in positive_rational()) {
        let (a, b) = if x >= y { (x, y) } else { (y, x) };
        let trace = euclid_trace(&a, &b, 10_000).unwrap();
        let last = trace.last().unwrap();
        prop_assert!(last.remainder.is_zero());
        prop_assert_eq!(last.b.clone(), rational_gcd(&a, &b).unwrap());
        for s in &trace {
            prop_assert!(s.remainder >= Rational::zero() && s.remainder < s.b);
            prop_assert_eq!(s.a.clone(), s.b.clone() * Rational::from_integer(s.quotient.clone()) + &s.remainder);
        }
    }

    #[test]
    fn rational_gcd_machine_halts_with_the_gcd(x in positive_rational(), y in positive_rational()) {
        prop_assume!(x != y);
        let (a, b) = if x > y { (x, y) } else { (y, x) };
        let (m, c) = build_gcd(&a, &b).unwrap();
        let d = run(&m, &c, &RunLimits::events(20_000));
        prop_assert_eq!(&d.halt, &HaltReason::Quiescent);
        let trace = wall_trace(&d);
        let reference = euclid_trace(&a, &b, 10_000).unwrap();
        let widths: Vec<_> = trace.iter().map(|w| (w.a.clone(), w.b.clone())).collect();
        let steps: Vec<_> = reference.iter().map(|s| (s.a.clone(), s.b.clone())).collect();
        prop_assert_eq!(widths, steps);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn affine_maps_preserve_validity_and_commensurability(seed in any::<u64>(), speeds in 2usize..=4) {
        let mut rng = case_rng(seed, 0);
        let m = total_machine::<Rational>(&mut rng, speeds);
        let c = random_configuration(&mut rng, &m, 5);
        let map = affine_map::<Rational>(&mut rng);
        let t = apply_affine_to_machine(&m, &map);
        prop_assert!(t.validate().is_empty());
        prop_assert_eq!(classify(&t, &c), classify(&m, &c));
        let back = AffineMap::new(
            Rational::one() / map.ratio(),
            -(map.offset().clone() / map.ratio()),
        ).unwrap();
        prop_assert_eq!(apply_affine_to_machine(&t, &back), m);
    }

    #[test]
    fn quadratic_affine_images_stay_rational_like(seed in any::<u64>(), d in radicand()) {
        let mut rng = case_rng(seed, 1);
        let m = total_machine::<Quadratic>(&mut rng, 3);
        let sqrt = FieldContext::new(d).sqrt();
        let map = AffineMap::new(sqrt.clone(), sqrt - Quadratic::from_int(1)).unwrap();
        let t = apply_affine_to_machine(&m, &map);
        let c = InitialConfiguration::<Quadratic>::empty();
        prop_assert!(classify(&t, &c).rational_like_machine);
        prop_assert!(!classify(&t, &c).rational);
        prop_assert!(t.validate().is_empty());
    }

    #[test]
    fn support_machine_is_idempotent(seed in any::<u64>(), speeds in 2usize..=4) {
        let m = total_machine::<Rational>(&mut case_rng(seed, 2), speeds);
        let (s, projection) = support_machine(&m);
        prop_assert_eq!(s.len(), speeds);
        prop_assert_eq!(s.speed_count(), m.speed_count());
        for (id, &p) in projection.iter().enumerate() {
            prop_assert_eq!(m.speed(id), s.speed(p));
        }
        let (s2, identity) = support_machine(&s);
        prop_assert_eq!(&s2, &s);
        prop_assert_eq!(identity, (0..s.len()).collect::<Vec<_>>());
    }

    #[test]
    fn normalized_three_speed_machines_have_rational_nu(seed in any::<u64>()) {
        let (m, c) = three_speed_case::<Rational>(&mut case_rng(seed, 3), 6);
        let (n, c2, map) = normalize_speeds(&m, &c).unwrap();
        prop_assert_eq!(&c2, &c);
        let speeds = n.distinct_speeds();
        prop_assert_eq!(&speeds[..2], &[-Rational::one(), Rational::zero()][..]);
        prop_assert!(speeds[2] > Rational::zero());
        for s in m.signals() {
            prop_assert_eq!(n.speed(s.id), &map.apply(m.speed(s.id)));
        }
    }

    #[test]
    fn format_round_trips(seed in any::<u64>(), speeds in 2usize..=4) {
        let mut rng = case_rng(seed, 4);
        let m = total_machine::<Rational>(&mut rng, speeds);
        let c = random_configuration(&mut rng, &m, 6);
        let text = print_machine(&m, &c);
        let (m2, c2) = parse_machine::<Rational>(&text).unwrap();
        prop_assert_eq!(&m2, &m);
        prop_assert_eq!(&c2, &c);
        prop_assert_eq!(print_machine(&m2, &c2), text);
    }

    #[test]
    fn event_times_never_decrease(seed in any::<u64>(), speeds in 2usize..=3) {
        let mut rng = case_rng(seed, 5);
        let m = total_machine::<Rational>(&mut rng, speeds);
        let c = random_configuration(&mut rng, &m, 6);
        let d = run(&m, &c, &RunLimits { max_events: 300, max_time: Some(q(8, 1)) });
        for pair in d.events.windows(2) {
            prop_assert!(pair[0].time <= pair[1].time);
            prop_assert_eq!(pair[0].index + 1, pair[1].index);
            if pair[0].time == pair[1].time {
                prop_assert!(pair[0].position < pair[1].position);
            }
        }
    }

    #[test]
    fn rational_machines_stay_rational_in_the_quadratic_type(seed in any::<u64>()) {
        let mut rng = case_rng(seed, 6);
        let (m, c) = three_speed_case::<Quadratic>(&mut rng, 6);
        let d = run(&m, &c, &RunLimits { max_events: 200, max_time: Some(Quadratic::from_int(6)) });
        for e in &d.events {
            prop_assert!(e.position.irrational_part().is_zero());
            prop_assert!(e.time.irrational_part().is_zero());
        }
        let mr = m.map_speeds(|v| v.rational_value().unwrap());
        let cr = InitialConfiguration::from_placements(
            c.placements().into_iter().map(|(id, x)| (id, x.rational_value().unwrap())),
        );
        let dr = run(&mr, &cr, &RunLimits { max_events: 200, max_time: Some(q(6, 1)) });
        let as_pairs = |xs: Vec<(Rational, Rational)>| xs;
        prop_assert_eq!(
            as_pairs(d.events.iter().map(|e| (e.position.rational_value().unwrap(), e.time.rational_value().unwrap())).collect()),
            dr.events.iter().map(|e| (e.position.clone(), e.time.clone())).collect::<Vec<_>>()
        );
    }

    #[test]
    fn scheduler_agrees_with_brute_force(seed in any::<u64>(), max_signals in 2usize..=12) {
        let (m, state) = scheduler_state::<Rational>(&mut case_rng(seed, 7), max_signals);
        prop_assert_eq!(next_collision_delta(&state, &m), brute_force_next_collision(&state, &m));
    }

    #[test]
    fn support_run_contains_every_event(seed in any::<u64>(), speeds in 2usize..=3) {
        let mut rng = case_rng(seed, 8);
        let m = total_machine::<Rational>(&mut rng, speeds);
        let c = random_configuration(&mut rng, &m, 5);
        let (sm, projection) = support_machine(&m);
        let sc = support_configuration(&c, &projection);
        let limits = RunLimits { max_events: 150, max_time: Some(q(6, 1)) };
        prop_assert!(events_contained(&run(&m, &c, &limits), &run(&sm, &sc, &limits)));
    }

    #[test]
    fn affine_image_is_an_event_bijection(seed in any::<u64>()) {
        let mut rng = case_rng(seed, 9);
        let (m, c) = three_speed_case::<Rational>(&mut rng, 5);
        let map = affine_map::<Rational>(&mut rng);
        let horizon = q(4, 1);
        let a = run(&m, &c, &RunLimits { max_events: 2000, max_time: Some(horizon.clone()) });
        let b = run(
            &apply_affine_to_machine(&m, &map),
            &c,
            &RunLimits { max_events: 2000, max_time: Some(horizon / map.ratio()) },
        );
        let left: BTreeSet<_> = a.events.iter().map(|e| (e.position.clone(), e.time.clone(), e.incoming.clone())).collect();
        let right: BTreeSet<_> = b
            .events
            .iter()
            .map(|e| (e.position.clone() - map.offset() * &e.time, map.ratio() * &e.time, e.incoming.clone()))
            .collect();
        prop_assert_eq!(left, right);
    }
}

/// SM4 with positions scaled by `scale`, shifted by `shift`, and speeds
/// transformed by `map`: still a single accumulation.
fn sm4_variant(
    scale: &Rational,
    shift: &Rational,
    map: &AffineMap<Rational>,
) -> (sigmach::RationalMachine, InitialConfiguration<Rational>) {
    let (m, c) = build_sm4::<Rational>();
    let sites = c
        .sites()
        .iter()
        .map(|s| Site { position: s.position.clone() * scale + shift, signals: s.signals.clone() })
        .collect();
    (apply_affine_to_machine(&m, map), InitialConfiguration::from_sites(sites).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn contraction_certificates_are_sound(
        scale in (1i64..=6, 1i64..=4).prop_map(|(n, d)| q(n, d)),
        shift in rational(),
        seed in any::<u64>(),
    ) {
        let map = affine_map::<Rational>(&mut case_rng(seed, 10));
        let (m, c) = sm4_variant(&scale, &shift, &map);
        let d = run(&m, &c, &RunLimits::events(80));
        let cert = detect_contraction(&d, 32).expect("SM4 variants accumulate");
        prop_assert!(cert.ratio > Rational::zero() && cert.ratio < Rational::one());
        let series = cert.t1.clone() + (cert.t2.clone() - &cert.t1) / (Rational::one() - &cert.ratio);
        prop_assert_eq!(&series, &cert.limit_time);
        prop_assert!(d.events.iter().all(|e| e.time < cert.limit_time));
        // Every event between t1 and t2 has its image among later events.
        let later: BTreeSet<_> = d.events.iter().map(|e| (e.position.clone(), e.time.clone())).collect();
        let last = d.events.last().unwrap().time.clone();
        for e in d.events.iter().filter(|e| e.time > cert.t1 && e.time <= cert.t2) {
            let image = cert.map_point(&e.position, &e.time);
            if image.1 <= last {
                prop_assert!(later.contains(&image), "image of ({}, {}) missing", e.position, e.time);
            }
        }
        // Replaying from the configuration at t2 reproduces the same future.
        let state = d.time_index().configuration_at(&cert.t2).unwrap();
        let (next, events) = advance(&state, &m).unwrap().unwrap();
        let original: Vec<_> = d.events.iter().filter(|e| e.time > cert.t2).take(events.len()).collect();
        prop_assert_eq!(events.iter().map(|e| (&e.position, &e.time)).collect::<Vec<_>>(),
            original.iter().map(|e| (&e.position, &e.time)).collect::<Vec<_>>());
        prop_assert!(next.time > cert.t2);
    }
}

#[test]
fn golden_widths_at_least_halve_every_two_steps() {
    let trace = euclid_trace(&Quadratic::phi(), &Quadratic::one(), 40).unwrap();
    assert_eq!(trace.len(), 40);
    let half = Quadratic::from_ratio(1, 2);
    for w in trace.windows(3) {
        assert!(w[2].a <= half.clone() * &w[0].a);
        assert!(w[1].a < w[0].a);
    }
}

#[test]
fn golden_gcd_exhausts_its_budget_with_shrinking_widths() {
    let (m, c) = build_gcd_phi();
    let d = run(&m, &c, &RunLimits::events(400));
    assert_eq!(d.halt, HaltReason::EventLimit);
    let trace = wall_trace(&d);
    assert!(trace.len() > 30);
    for pair in trace.windows(2) {
        assert!(pair[1].a < pair[0].a);
        assert!(pair[1].b < pair[0].b);
        assert!(pair[1].time > pair[0].time);
    }
}

#[test]
fn periodicity_and_contraction_exclude_each_other() {
    let spec = MeshSpec::new(StripSpec::new(1, 2, q(0, 1), q(1, 1)).unwrap(), 2).unwrap();
    let horizon = spec.strip.transient() + q(4, 1) * spec.strip.expected_period();
    let d = run(&mesh_machine(spec.strip.nu()), &mesh_configuration(&spec), &RunLimits::time(horizon.clone()));
    assert!(detect_periodicity(&d, spec.extent(), &horizon).is_some());
    assert!(detect_contraction(&d, 64).is_none());

    let (m, c) = build_sm4::<Rational>();
    let d = run(&m, &c, &RunLimits::events(200));
    assert!(detect_contraction(&d, 32).is_some());
    let horizon = d.events.last().unwrap().time.clone();
    assert!(detect_periodicity(&d, (q(-1, 1), q(1, 1)), &horizon).is_none());
}

#[test]
fn replay_from_any_sampled_state_matches() {
    let (m, c) = three_speed_case::<Rational>(&mut case_rng(11, 0), 6);
    let d = run(&m, &c, &RunLimits { max_events: 200, max_time: Some(q(6, 1)) });
    let states: Vec<_> = d.sampled_states().collect();
    let mut state = RunState::initial(&c);
    for expected in states.iter().skip(1) {
        state = advance(&state, &m).unwrap().unwrap().0;
        assert_eq!(&state.sites, &expected.sites);
        assert_eq!(&state.time, &expected.time);
    }
}

#[test]
fn runs_included_in_a_mesh_inherit_its_lack_of_contraction() {
    use sigmach::analysis::diagram_included;
    use sigmach::mesh::verify_mesh_inclusion;
    for i in 0..10 {
        let (m, c) = three_speed_case::<Rational>(&mut case_rng(12, i), 6);
        let r = verify_mesh_inclusion(&m, &c, None).unwrap();
        assert!(r.included && diagram_included(&r.support_run, &r.mesh_run));
        assert!(detect_contraction(&r.mesh_run, 64).is_none());
        assert!(detect_contraction(&r.support_run, 64).is_none(), "case {i}");
    }
}
