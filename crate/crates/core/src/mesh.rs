//! Strips, meshes, and the embedding of rational-like three-speed
//! configurations into a mesh.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::analysis::{detect_periodicity, diagram_included, PeriodicityCertificate};
use crate::machine::{
    normalize_speeds, support_configuration, support_machine, InitialConfiguration, MachineError, SignalMachine,
};
use crate::scalar::{rational_gcd, ExactScalar, ScalarError};
use crate::simulator::{run, RunLimits, SpaceTimeDiagram};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeshError {
    #[error("strip parameters must be positive: {0}")]
    Parameters(String),
    #[error("configuration needs at least two sites to embed")]
    TooFewSites,
    #[error("normalized speed {0} is irrational")]
    IrrationalSpeed(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Machine(#[from] MachineError),
}

/// Strip of width `w` starting at `x0`, for the speeds `-1, 0, p/q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripSpec<S> {
    p: BigInt,
    q: BigInt,
    pub x0: S,
    pub w: S,
}

impl<S: ExactScalar> StripSpec<S> {
    /// `p/q` is reduced to lowest terms.
    pub fn new(p: impl Into<BigInt>, q: impl Into<BigInt>, x0: S, w: S) -> Result<Self, MeshError> {
        let (p, q) = (p.into(), q.into());
        if !p.is_positive() || !q.is_positive() || !w.is_positive_value() {
            return Err(MeshError::Parameters(format!("p = {p}, q = {q}, w = {w}")));
        }
        let g = p.gcd(&q);
        Ok(StripSpec { p: p / &g, q: q / &g, x0, w })
    }

    pub fn p(&self) -> &BigInt {
        &self.p
    }

    pub fn q(&self) -> &BigInt {
        &self.q
    }

    /// The fast speed `p/q`.
    pub fn nu(&self) -> S {
        S::from_bigint(self.p.clone()).checked_div(&S::from_bigint(self.q.clone())).expect("q > 0")
    }

    fn subdivisions(&self) -> BigInt {
        &self.p + &self.q
    }

    /// Distance between consecutive `S` signals.
    pub fn step(&self) -> S {
        self.w.checked_div(&S::from_bigint(self.subdivisions())).expect("p + q > 0")
    }

    /// Onset of the regime: `q·w/(p+q)`.
    pub fn transient(&self) -> S {
        S::from_bigint(self.q.clone()) * self.step()
    }

    /// Expected period `w/p`.
    pub fn expected_period(&self) -> S {
        self.w.checked_div(&S::from_bigint(self.p.clone())).expect("p > 0")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeshSpec<S> {
    pub strip: StripSpec<S>,
    pub k: BigInt,
}

impl<S: ExactScalar> MeshSpec<S> {
    pub fn new(strip: StripSpec<S>, k: impl Into<BigInt>) -> Result<Self, MeshError> {
        let k = k.into();
        if !k.is_positive() {
            return Err(MeshError::Parameters(format!("k = {k}")));
        }
        Ok(MeshSpec { strip, k })
    }

    /// `[x0, x0 + k·w]`.
    pub fn extent(&self) -> (S, S) {
        let x0 = self.strip.x0.clone();
        let x1 = x0.clone() + S::from_bigint(self.k.clone()) * &self.strip.w;
        (x0, x1)
    }
}

/// The support machine for speeds `-1, 0, ν`: signals `L`, `S`, `R`, and
/// every set of two or more of them yields all three.
pub fn mesh_machine<S: ExactScalar>(nu: S) -> SignalMachine<S> {
    let mut m = SignalMachine::new();
    m.add_signal("L", -S::one()).expect("fresh machine");
    m.add_signal("S", S::zero()).expect("fresh machine");
    m.add_signal("R", nu).expect("fresh machine");
    let (support, _) = support_machine(&m);
    support
}

const L: usize = 0;
const S_: usize = 1;
const R: usize = 2;

fn subdivided<S: ExactScalar>(strip: &StripSpec<S>, k: &BigInt) -> InitialConfiguration<S> {
    let n = strip.subdivisions();
    let count = (k * &n).to_usize().expect("mesh size fits in memory");
    let step = strip.step();
    let mut placements = Vec::new();
    for j in 0..=count {
        let x = strip.x0.clone() + S::from_int(j as i64) * &step;
        placements.push((S_, x.clone()));
        if (BigInt::from(j) % &n).is_zero() {
            placements.push((L, x.clone()));
            placements.push((R, x));
        }
    }
    InitialConfiguration::from_placements(placements)
}

pub fn strip_configuration<S: ExactScalar>(spec: &StripSpec<S>) -> InitialConfiguration<S> {
    subdivided(spec, &BigInt::one())
}

pub fn mesh_configuration<S: ExactScalar>(spec: &MeshSpec<S>) -> InitialConfiguration<S> {
    subdivided(&spec.strip, &spec.k)
}

/// First meeting of the `R` leaving the left wall and the `L` leaving the
/// right wall.
pub fn central_collision<S: ExactScalar>(spec: &StripSpec<S>) -> (S, S) {
    let x = spec.x0.clone() + S::from_bigint(spec.p.clone()) * spec.step();
    (x, spec.transient())
}

/// Smallest mesh whose walls contain every position of `config`.
pub fn embed_in_mesh<S: ExactScalar>(
    config: &InitialConfiguration<S>,
    p: impl Into<BigInt>,
    q: impl Into<BigInt>,
) -> Result<MeshSpec<S>, MeshError> {
    let xs = config.positions();
    if xs.len() < 2 {
        return Err(MeshError::TooFewSites);
    }
    let mut w: Option<S> = None;
    for pair in xs.windows(2) {
        let gap = pair[1].clone() - &pair[0];
        w = Some(match w {
            None => gap,
            Some(g) => rational_gcd(&g, &gap)?,
        });
    }
    let w = w.expect("two sites");
    let span = xs[xs.len() - 1].clone() - &xs[0];
    let k = span.checked_div(&w)?.to_rational().expect("span is a multiple of the gcd").to_integer();
    MeshSpec::new(StripSpec::new(p, q, xs[0].clone(), w)?, k)
}

#[derive(Debug, Clone)]
pub struct MeshReport<S> {
    pub mesh: MeshSpec<S>,
    pub horizon: S,
    /// The support run is included in the mesh run.
    pub included: bool,
    /// No mesh event lies outside the mesh extent.
    pub confined: bool,
    pub periodicity: Option<PeriodicityCertificate<S>>,
    pub support_run: SpaceTimeDiagram<S>,
    pub mesh_run: SpaceTimeDiagram<S>,
}

impl<S: ExactScalar> MeshReport<S> {
    pub fn passed(&self) -> bool {
        self.included && self.confined && self.periodicity.is_some()
    }
}

/// Normalizes a three-speed machine, embeds its configuration in a mesh,
/// and checks the support run against the mesh run up to `horizon`
/// (default: transient plus three expected periods, in normalized time).
pub fn verify_mesh_inclusion<S: ExactScalar>(
    machine: &SignalMachine<S>,
    config: &InitialConfiguration<S>,
    horizon: Option<S>,
) -> Result<MeshReport<S>, MeshError> {
    let (normalized, config, _) = normalize_speeds(machine, config)?;
    let speeds = normalized.distinct_speeds();
    if speeds.len() != 3 {
        return Err(MachineError::SpeedCount(speeds.len()).into());
    }
    let nu = speeds[2].to_rational().ok_or_else(|| MeshError::IrrationalSpeed(speeds[2].to_string()))?;
    let (support, projection) = support_machine(&normalized);
    let support_config = support_configuration(&config, &projection);
    let mesh = embed_in_mesh(&support_config, nu.numer().clone(), nu.denom().clone())?;
    let horizon = horizon.unwrap_or_else(|| mesh.strip.transient() + S::from_int(3) * mesh.strip.expected_period());
    let limits = RunLimits::time(horizon.clone());
    let support_run = run(&support, &support_config, &limits);
    let mesh_machine = mesh_machine(S::from_rational(nu));
    let mesh_run = run(&mesh_machine, &mesh_configuration(&mesh), &limits);
    let (lo, hi) = mesh.extent();
    let confined = mesh_run.events.iter().all(|e| e.position >= lo && e.position <= hi);
    let included = diagram_included(&support_run, &mesh_run);
    let periodicity = detect_periodicity(&mesh_run, (lo, hi), &horizon);
    Ok(MeshReport { mesh, horizon, included, confined, periodicity, support_run, mesh_run })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Quadratic, Rational};

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn strip_positions() {
        let s = StripSpec::new(2, 3, r(0, 1), r(1, 1)).unwrap();
        let c = strip_configuration(&s);
        assert_eq!(c.positions(), (0..=5).map(|i| r(i, 5)).collect::<Vec<_>>());
        assert_eq!(c.sites()[0].signals.len(), 3);
        assert_eq!(c.sites()[5].signals.len(), 3);
        assert_eq!(c.sites()[2].signals.len(), 1);
        let s = StripSpec::new(2, 3, r(5, 1), r(10, 1)).unwrap();
        assert_eq!(strip_configuration(&s).positions(), (0..=5).map(|i| r(5 + 2 * i, 1)).collect::<Vec<_>>());
        assert_eq!(
            strip_configuration(&StripSpec::new(1, 1, r(0, 1), r(1, 1)).unwrap()).positions(),
            vec![r(0, 1), r(1, 2), r(1, 1)]
        );
        let reduced = StripSpec::new(4, 6, r(0, 1), r(1, 1)).unwrap();
        assert_eq!((reduced.p().clone(), reduced.q().clone()), (BigInt::from(2), BigInt::from(3)));
        assert!(StripSpec::new(0, 1, r(0, 1), r(1, 1)).is_err());
    }

    #[test]
    fn mesh_sizes() {
        let m = MeshSpec::new(StripSpec::new(1, 2, r(0, 1), r(1, 1)).unwrap(), 2).unwrap();
        assert_eq!(mesh_configuration(&m).sites().len(), 7);
        let one = MeshSpec::new(StripSpec::new(2, 3, r(0, 1), r(1, 1)).unwrap(), 1).unwrap();
        assert_eq!(mesh_configuration(&one), strip_configuration(&one.strip));
        let three = MeshSpec::new(StripSpec::new(2, 3, r(0, 1), r(1, 1)).unwrap(), 3).unwrap();
        let c = mesh_configuration(&three);
        assert_eq!(c.sites().len(), 16);
        assert_eq!(c.sites().iter().filter(|s| s.signals.len() == 3).count(), 4);
    }

    #[test]
    fn central_collisions() {
        assert_eq!(central_collision(&StripSpec::new(2, 3, r(0, 1), r(1, 1)).unwrap()), (r(2, 5), r(3, 5)));
        assert_eq!(central_collision(&StripSpec::new(1, 1, r(0, 1), r(1, 1)).unwrap()), (r(1, 2), r(1, 2)));
    }

    #[test]
    fn embeddings() {
        let c = InitialConfiguration::from_placements([(0, r(0, 1)), (0, r(1, 2)), (0, r(2, 1))]);
        let m = embed_in_mesh(&c, 1, 1).unwrap();
        assert_eq!((m.strip.w.clone(), m.k.clone()), (r(1, 2), BigInt::from(4)));
        let c = InitialConfiguration::from_placements([(0, r(0, 1)), (0, r(1, 1))]);
        let m = embed_in_mesh(&c, 1, 1).unwrap();
        assert_eq!((m.strip.w.clone(), m.k.clone()), (r(1, 1), BigInt::from(1)));
        let q = |s: &str| s.parse::<Quadratic>().unwrap();
        let c = InitialConfiguration::from_placements([(0, q("0")), (0, q("1")), (0, Quadratic::phi())]);
        assert!(matches!(embed_in_mesh(&c, 1, 1), Err(MeshError::Scalar(ScalarError::Incommensurate(..)))));
    }
}
