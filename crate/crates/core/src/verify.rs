//! Seeded property suites with machine-readable reports.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;

use crate::analysis::{detect_contraction, events_contained, first_mismatch, two_speed_bound_check};
use crate::corpus::{
    affine_map, case_rng, ordered_pair, random_configuration, scheduler_state, three_speed_case, total_machine,
    two_speed_arrangement,
};
use crate::machine::{apply_affine_to_machine, support_configuration, support_machine, AffineMap, SignalMachine};
use crate::mesh::verify_mesh_inclusion;
use crate::presets::{build_gcd, build_modulo, build_sm2_support, build_subtraction, geometric_result, Arrangement};
use crate::scalar::{ExactScalar, Rational};
use crate::simulator::{brute_force_next_collision, next_collision_delta, run, Event, RunLimits};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    TwoSpeed,
    Mesh,
    Gcd,
    Affine,
    Scheduler,
    Support,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::TwoSpeed, Suite::Mesh, Suite::Gcd, Suite::Affine, Suite::Scheduler, Suite::Support];

    pub fn name(self) -> &'static str {
        match self {
            Suite::TwoSpeed => "2speed",
            Suite::Mesh => "mesh",
            Suite::Gcd => "gcd",
            Suite::Affine => "affine",
            Suite::Scheduler => "scheduler",
            Suite::Support => "support",
        }
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL.into_iter().find(|suite| suite.name() == s).ok_or_else(|| {
            format!("unknown suite `{s}` (expected one of 2speed, mesh, gcd, affine, scheduler, support)")
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    pub count: usize,
    /// Mesh suite only; defaults to transient plus three periods.
    pub horizon: Option<Rational>,
}

impl VerifyOptions {
    pub fn new(seed: u64, count: usize) -> Self {
        VerifyOptions { seed, count, horizon: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseOutcome {
    pub index: usize,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub cases: Vec<CaseOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseOutcome> {
        self.cases.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.cases {
            let status = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "suite={} seed={} case={} {status} {}", self.suite, self.seed, c.index, c.detail)?;
        }
        let ok = self.cases.iter().filter(|c| c.passed).count();
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "suite={} seed={} passed={ok}/{} {status}", self.suite, self.seed, self.cases.len())
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> VerifyReport {
    let cases = (0..opts.count)
        .map(|index| {
            let (passed, detail) = match suite {
                Suite::TwoSpeed => two_speed_case(opts.seed, index),
                Suite::Mesh => mesh_case(opts.seed, index, opts.horizon.clone()),
                Suite::Gcd => gcd_case(opts.seed, index),
                Suite::Affine => affine_case(opts.seed, index),
                Suite::Scheduler => scheduler_case(opts.seed, index),
                Suite::Support => support_case(opts.seed, index),
            };
            CaseOutcome { index, passed, detail }
        })
        .collect();
    VerifyReport { suite, seed: opts.seed, cases }
}

/// Even cases: the support machine on a random arrangement. Odd cases: an
/// arbitrary two-speed machine with total rules.
fn two_speed_case(seed: u64, index: usize) -> (bool, String) {
    let mut rng = case_rng(seed, index);
    let (m, c) = if index.is_multiple_of(2) {
        let (i, j, order) = two_speed_arrangement(&mut rng, 5, 5);
        match build_sm2_support::<Rational>(i, j, &Arrangement::Custom(order)) {
            Ok(built) => built,
            Err(e) => return (false, format!("error=\"{e}\"")),
        }
    } else {
        let m = total_machine::<Rational>(&mut rng, 2);
        let c = random_configuration(&mut rng, &m, 6);
        (m, c)
    };
    match two_speed_bound_check(&m, &c) {
        Ok(r) => (r.halted && r.count <= r.bound, format!("events={} bound={} halted={}", r.count, r.bound, r.halted)),
        Err(e) => (false, format!("error=\"{e}\"")),
    }
}

fn mesh_case(seed: u64, index: usize, horizon: Option<Rational>) -> (bool, String) {
    let (m, c) = three_speed_case::<Rational>(&mut case_rng(seed, index), 6);
    match verify_mesh_inclusion(&m, &c, horizon) {
        Ok(r) => {
            let accumulates = detect_contraction(&r.mesh_run, 64).is_some();
            let period = r
                .periodicity
                .as_ref()
                .map(|p| format!("{} transient={}", p.period, p.transient))
                .unwrap_or_else(|| "none".into());
            let detail = format!(
                "p/q={}/{} w={} k={} horizon={} included={} confined={} period={} contraction={} events={}",
                r.mesh.strip.p(),
                r.mesh.strip.q(),
                r.mesh.strip.w,
                r.mesh.k,
                r.horizon,
                r.included,
                r.confined,
                period,
                accumulates,
                r.mesh_run.events.len()
            );
            (r.passed() && !accumulates, detail)
        }
        Err(e) => (false, format!("error=\"{e}\"")),
    }
}

/// Reference values computed on numerators and denominators.
pub fn arithmetic_oracle(a: &Rational, b: &Rational) -> (Rational, Rational, Rational) {
    let den = a.denom() * b.denom();
    let an = a.numer() * b.denom();
    let bn = b.numer() * a.denom();
    let r = |n: BigInt| Rational::new(n, den.clone());
    (r(&an - &bn), r(an.mod_floor(&bn)), r(an.gcd(&bn)))
}

fn gcd_case(seed: u64, index: usize) -> (bool, String) {
    let (a, b) = ordered_pair::<Rational>(&mut case_rng(seed, index));
    let (sub, modulo, gcd) = arithmetic_oracle(&a, &b);
    let got = [build_subtraction(&a, &b), build_modulo(&a, &b), build_gcd(&a, &b)].map(|built| {
        built.map_err(|e| e.to_string()).and_then(|(m, c)| geometric_result(&m, &c).map_err(|e| e.to_string()))
    });
    let expected = [sub, modulo, gcd];
    let mut ok = true;
    let mut parts = vec![format!("a={a} b={b}")];
    for ((label, got), want) in ["sub", "mod", "gcd"].iter().zip(&got).zip(&expected) {
        match got {
            Ok(v) => {
                ok &= v == want;
                parts.push(format!("{label}={v}"));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{label}_error=\"{e}\""));
            }
        }
    }
    (ok, parts.join(" "))
}

/// `(x', t') ↦ (x' - offset·t', ratio·t')`.
pub fn pull_back<S: ExactScalar>(map: &AffineMap<S>, e: &Event<S>) -> (S, S) {
    (e.position.clone() - map.offset().clone() * &e.time, map.ratio().clone() * &e.time)
}

fn affine_case(seed: u64, index: usize) -> (bool, String) {
    let mut rng = case_rng(seed, index);
    let (m, c) = three_speed_case::<Rational>(&mut rng, 6);
    let map = affine_map::<Rational>(&mut rng);
    let horizon = Rational::from_int(6);
    let original = run(&m, &c, &RunLimits { max_events: 3000, max_time: Some(horizon.clone()) });
    let scaled = horizon.checked_div(map.ratio()).expect("positive ratio");
    let tm = apply_affine_to_machine(&m, &map);
    let transformed = run(&tm, &c, &RunLimits { max_events: 3000, max_time: Some(scaled) });
    let same_length = original.events.len() == transformed.events.len();
    let mismatch = original.events.iter().zip(&transformed.events).position(|(o, t)| {
        pull_back(&map, t) != (o.position.clone(), o.time.clone())
            || o.incoming != t.incoming
            || o.outgoing != t.outgoing
    });
    let detail = format!(
        "ratio={} offset={} events={}/{} mismatch={}",
        map.ratio(),
        map.offset(),
        original.events.len(),
        transformed.events.len(),
        mismatch.map(|i| i.to_string()).unwrap_or_else(|| "none".into())
    );
    (same_length && mismatch.is_none(), detail)
}

fn scheduler_case(seed: u64, index: usize) -> (bool, String) {
    let (m, state) = scheduler_state::<Rational>(&mut case_rng(seed, index), 12);
    let fast = next_collision_delta(&state, &m);
    let slow = brute_force_next_collision(&state, &m);
    let show = |n: &Option<_>| match n {
        Some(crate::simulator::NextCollision::<Rational> { delta, groups }) => format!("{delta}/{}", groups.len()),
        None => "none".into(),
    };
    (fast == slow, format!("signals={} scan={} brute={}", state.signal_count(), show(&fast), show(&slow)))
}

fn support_case(seed: u64, index: usize) -> (bool, String) {
    let mut rng = case_rng(seed, index);
    let speeds = 2 + index % 3;
    let m: SignalMachine<Rational> = total_machine(&mut rng, speeds);
    let c = random_configuration(&mut rng, &m, 6);
    let (sm, projection) = support_machine(&m);
    let sc = support_configuration(&c, &projection);
    let limits = RunLimits { max_events: 150, max_time: Some(Rational::from_int(6)) };
    let original = run(&m, &c, &limits);
    let support = run(&sm, &sc, &limits);
    let ok = events_contained(&original, &support);
    let detail = format!(
        "speeds={speeds} events={}/{} first_difference={}",
        original.events.len(),
        support.events.len(),
        first_mismatch(&original.events, &support.events).map(|i| i.to_string()).unwrap_or_else(|| "none".into())
    );
    (ok, detail)
}
