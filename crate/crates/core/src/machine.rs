//! Meta-signals, speeds, collision rules and configurations, plus the
//! machine-level transformations (affine speed maps, support machines,
//! speed normalization).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::scalar::{is_commensurate, ExactScalar, FieldContext, ScalarError};

pub type SignalId = usize;

fn ranks<S: Ord>(speeds: &[S]) -> Vec<usize> {
    let distinct: BTreeSet<&S> = speeds.iter().collect();
    speeds.iter().map(|v| distinct.range::<&S, _>(..v).count()).collect()
}

/// A set of meta-signals, ordered by id. Rule keys use this canonical form.
pub type SignalSet = BTreeSet<SignalId>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MetaSignal {
    pub name: String,
    pub id: SignalId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("duplicate signal `{0}`")]
    DuplicateSignal(String),
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
    #[error("duplicate rule for {0}")]
    DuplicateRule(String),
    #[error("expected 2 or 3 distinct speeds, found {0}")]
    SpeedCount(usize),
    #[error("affine ratio must be positive, got {0}")]
    NonPositiveRatio(String),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalMachine<S> {
    signals: Vec<MetaSignal>,
    speeds: Vec<S>,
    /// Position of each speed among the distinct speeds.
    ranks: Vec<usize>,
    rules: BTreeMap<SignalSet, SignalSet>,
    pass_through: bool,
}

impl<S: ExactScalar> Default for SignalMachine<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: ExactScalar> SignalMachine<S> {
    pub fn new() -> Self {
        SignalMachine {
            signals: Vec::new(),
            speeds: Vec::new(),
            ranks: Vec::new(),
            rules: BTreeMap::new(),
            pass_through: false,
        }
    }

    /// When set, signals meeting without a rule cross each other unchanged
    /// instead of halting the run.
    pub fn set_pass_through(&mut self, on: bool) {
        self.pass_through = on;
    }

    pub fn pass_through(&self) -> bool {
        self.pass_through
    }

    pub fn add_signal(&mut self, name: &str, speed: S) -> Result<SignalId, MachineError> {
        if self.signal_by_name(name).is_some() {
            return Err(MachineError::DuplicateSignal(name.to_string()));
        }
        let id = self.signals.len();
        self.signals.push(MetaSignal { name: name.to_string(), id });
        self.speeds.push(speed);
        self.ranks = ranks(&self.speeds);
        Ok(id)
    }

    /// Adds a rule. Speed conditions are not checked here; see [`validate`].
    pub fn add_rule<I, O>(&mut self, inputs: I, outputs: O) -> Result<(), MachineError>
    where
        I: IntoIterator<Item = SignalId>,
        O: IntoIterator<Item = SignalId>,
    {
        let inputs: SignalSet = inputs.into_iter().collect();
        let outputs: SignalSet = outputs.into_iter().collect();
        for &id in inputs.iter().chain(&outputs) {
            if id >= self.signals.len() {
                return Err(MachineError::UnknownSignal(format!("#{id}")));
            }
        }
        if self.rules.contains_key(&inputs) {
            return Err(MachineError::DuplicateRule(self.format_set(&inputs)));
        }
        self.rules.insert(inputs, outputs);
        Ok(())
    }

    /// Adds a rule by signal names.
    pub fn add_named_rule(&mut self, inputs: &[&str], outputs: &[&str]) -> Result<(), MachineError> {
        let ins = self.ids(inputs)?;
        let outs = self.ids(outputs)?;
        self.add_rule(ins, outs)
    }

    pub fn ids(&self, names: &[&str]) -> Result<Vec<SignalId>, MachineError> {
        names.iter().map(|n| self.signal_by_name(n).ok_or_else(|| MachineError::UnknownSignal(n.to_string()))).collect()
    }

    pub fn signal_by_name(&self, name: &str) -> Option<SignalId> {
        self.signals.iter().find(|s| s.name == name).map(|s| s.id)
    }

    pub fn signals(&self) -> &[MetaSignal] {
        &self.signals
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn name(&self, id: SignalId) -> &str {
        &self.signals[id].name
    }

    pub fn speed(&self, id: SignalId) -> &S {
        &self.speeds[id]
    }

    /// Index of the signal's speed in [`Self::distinct_speeds`].
    pub fn speed_rank(&self, id: SignalId) -> usize {
        self.ranks[id]
    }

    pub fn rules(&self) -> &BTreeMap<SignalSet, SignalSet> {
        &self.rules
    }

    pub fn rule(&self, inputs: &SignalSet) -> Option<&SignalSet> {
        self.rules.get(inputs)
    }

    /// Distinct speeds in increasing order.
    pub fn distinct_speeds(&self) -> Vec<S> {
        let set: BTreeSet<S> = self.speeds.iter().cloned().collect();
        set.into_iter().collect()
    }

    pub fn speed_count(&self) -> usize {
        self.distinct_speeds().len()
    }

    /// The quadratic field the speeds live in.
    pub fn field(&self) -> Result<FieldContext, ScalarError> {
        field_of(self.speeds.iter())
    }

    /// `{a,b,c}` with names in id order.
    pub fn format_set(&self, set: &SignalSet) -> String {
        let names: Vec<&str> = set.iter().map(|&id| self.name(id)).collect();
        format!("{{{}}}", names.join(","))
    }

    /// Same signals and rules, speeds replaced by `f(speed)`.
    pub fn map_speeds<T: ExactScalar>(&self, f: impl Fn(&S) -> T) -> SignalMachine<T> {
        let speeds: Vec<T> = self.speeds.iter().map(f).collect();
        SignalMachine {
            signals: self.signals.clone(),
            ranks: ranks(&speeds),
            speeds,
            rules: self.rules.clone(),
            pass_through: self.pass_through,
        }
    }

    /// Checks the machine definition; an empty list means it is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if let Err(ScalarError::MixedRadicals(a, b)) = self.field() {
            out.push(Violation::MixedRadicals(a, b));
        }
        for (inputs, outputs) in &self.rules {
            let rule = format!("{} -> {}", self.format_set(inputs), self.format_set(outputs));
            if inputs.len() < 2 {
                out.push(Violation::InputArity { rule: rule.clone() });
            }
            if let Some((a, b)) = self.speed_clash(inputs) {
                out.push(Violation::InputSpeeds { rule: rule.clone(), a, b });
            }
            if let Some((a, b)) = self.speed_clash(outputs) {
                out.push(Violation::OutputSpeeds { rule, a, b });
            }
        }
        out
    }

    /// First pair of signals in `set` sharing a speed.
    pub fn speed_clash(&self, set: &SignalSet) -> Option<(String, String)> {
        let ids: Vec<SignalId> = set.iter().copied().collect();
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                if self.speeds[a] == self.speeds[b] {
                    return Some((self.name(a).to_string(), self.name(b).to_string()));
                }
            }
        }
        None
    }
}

fn field_of<'a, S: ExactScalar>(values: impl Iterator<Item = &'a S>) -> Result<FieldContext, ScalarError> {
    let mut d = 0;
    for v in values {
        let r = v.radicand();
        if r != 0 {
            if d != 0 && d != r {
                return Err(ScalarError::MixedRadicals(d, r));
            }
            d = r;
        }
    }
    Ok(FieldContext::new(d))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    InputArity { rule: String },
    InputSpeeds { rule: String, a: String, b: String },
    OutputSpeeds { rule: String, a: String, b: String },
    MixedRadicals(u64, u64),
    Configuration(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InputArity { rule } => write!(f, "rule {rule}: input arity < 2"),
            Violation::InputSpeeds { rule, a, b } => {
                write!(f, "rule {rule}: input speeds not distinct ({a}, {b})")
            }
            Violation::OutputSpeeds { rule, a, b } => {
                write!(f, "rule {rule}: output speeds not distinct ({a}, {b})")
            }
            Violation::MixedRadicals(a, b) => write!(f, "mixed radicals sqrt({a}) and sqrt({b})"),
            Violation::Configuration(msg) => write!(f, "configuration: {msg}"),
        }
    }
}

/// A point of the line holding one or more co-located signals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Site<S> {
    pub position: S,
    pub signals: SignalSet,
}

/// A finite configuration: sites sorted by strictly increasing position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct InitialConfiguration<S> {
    sites: Vec<Site<S>>,
}

impl<S: ExactScalar> InitialConfiguration<S> {
    pub fn empty() -> Self {
        InitialConfiguration { sites: Vec::new() }
    }

    /// Builds from `(signal, position)` placements; equal positions merge.
    pub fn from_placements(placements: impl IntoIterator<Item = (SignalId, S)>) -> Self {
        let mut map: BTreeMap<S, SignalSet> = BTreeMap::new();
        for (id, x) in placements {
            map.entry(x).or_default().insert(id);
        }
        InitialConfiguration { sites: map.into_iter().map(|(position, signals)| Site { position, signals }).collect() }
    }

    /// Builds from sites, which must be nonempty and strictly increasing.
    pub fn from_sites(sites: Vec<Site<S>>) -> Result<Self, MachineError> {
        for w in sites.windows(2) {
            if w[0].position >= w[1].position {
                return Err(MachineError::InvalidConfiguration(format!(
                    "positions {} and {} out of order",
                    w[0].position, w[1].position
                )));
            }
        }
        if let Some(s) = sites.iter().find(|s| s.signals.is_empty()) {
            return Err(MachineError::InvalidConfiguration(format!("empty site at {}", s.position)));
        }
        Ok(InitialConfiguration { sites })
    }

    pub fn sites(&self) -> &[Site<S>] {
        &self.sites
    }

    pub fn into_sites(self) -> Vec<Site<S>> {
        self.sites
    }

    pub fn positions(&self) -> Vec<S> {
        self.sites.iter().map(|s| s.position.clone()).collect()
    }

    pub fn signal_count(&self) -> usize {
        self.sites.iter().map(|s| s.signals.len()).sum()
    }

    pub fn placements(&self) -> Vec<(SignalId, S)> {
        self.sites.iter().flat_map(|s| s.signals.iter().map(move |&id| (id, s.position.clone()))).collect()
    }

    /// Checks the configuration against a machine.
    pub fn validate(&self, machine: &SignalMachine<S>) -> Vec<Violation> {
        let mut out = Vec::new();
        for site in &self.sites {
            if let Some(&id) = site.signals.iter().find(|&&id| id >= machine.len()) {
                out.push(Violation::Configuration(format!("unknown signal #{id} at {}", site.position)));
                continue;
            }
            if let Some((a, b)) = machine.speed_clash(&site.signals) {
                out.push(Violation::Configuration(format!("{a} and {b} share a speed at {}", site.position)));
            }
        }
        let field = machine.field().map(|f| f.radicand()).unwrap_or(0);
        if let Some(s) =
            self.sites.iter().find(|s| s.position.radicand() != 0 && field != 0 && s.position.radicand() != field)
        {
            out.push(Violation::MixedRadicals(field, s.position.radicand()));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub speed_count: usize,
    pub rational: bool,
    pub rational_like_machine: bool,
    pub rational_like_config: bool,
}

/// Whether all pairwise differences of `values` are commensurate.
fn differences_commensurate<S: ExactScalar>(values: &[S]) -> bool {
    let Some(first) = values.first() else { return true };
    let diffs: Vec<S> = values[1..].iter().map(|v| v.clone() - first).filter(|d| !d.is_zero()).collect();
    let Some(unit) = diffs.first() else { return true };
    diffs.iter().all(|d| is_commensurate(d, unit).unwrap_or(false))
}

pub fn classify<S: ExactScalar>(machine: &SignalMachine<S>, config: &InitialConfiguration<S>) -> Classification {
    let speeds = machine.distinct_speeds();
    let positions = config.positions();
    Classification {
        speed_count: speeds.len(),
        rational: speeds.iter().chain(&positions).all(|v| v.is_rational_value()),
        rational_like_machine: differences_commensurate(&speeds),
        rational_like_config: differences_commensurate(&positions),
    }
}

/// `v ↦ ratio·v + offset` with `ratio > 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AffineMap<S> {
    ratio: S,
    offset: S,
}

impl<S: ExactScalar> AffineMap<S> {
    pub fn new(ratio: S, offset: S) -> Result<Self, MachineError> {
        if !ratio.is_positive_value() {
            return Err(MachineError::NonPositiveRatio(ratio.to_string()));
        }
        Ok(AffineMap { ratio, offset })
    }

    pub fn identity() -> Self {
        AffineMap { ratio: S::one(), offset: S::zero() }
    }

    pub fn ratio(&self) -> &S {
        &self.ratio
    }

    pub fn offset(&self) -> &S {
        &self.offset
    }

    pub fn apply(&self, v: &S) -> S {
        self.ratio.clone() * v + &self.offset
    }

    /// The `x` with `apply(x) = y`.
    pub fn preimage(&self, y: &S) -> S {
        (y.clone() - &self.offset).checked_div(&self.ratio).expect("ratio is positive")
    }

    pub fn is_identity(&self) -> bool {
        self.ratio.is_one() && self.offset.is_zero()
    }
}

pub fn apply_affine_to_machine<S: ExactScalar>(machine: &SignalMachine<S>, map: &AffineMap<S>) -> SignalMachine<S> {
    machine.map_speeds(|v| map.apply(v))
}

/// New configuration `c'` with `c'(x) = c(f(x))`: each site moves to the
/// preimage of its position.
pub fn apply_affine_to_configuration<S: ExactScalar>(
    config: &InitialConfiguration<S>,
    map: &AffineMap<S>,
) -> InitialConfiguration<S> {
    InitialConfiguration {
        sites: config
            .sites
            .iter()
            .map(|s| Site { position: map.preimage(&s.position), signals: s.signals.clone() })
            .collect(),
    }
}

/// One signal per speed class; every set of two or more outputs them all.
///
/// Returns the machine and the projection from original ids to the new ones.
/// Each class is represented by its lowest-id member and keeps its name.
pub fn support_machine<S: ExactScalar>(machine: &SignalMachine<S>) -> (SignalMachine<S>, Vec<SignalId>) {
    let mut support = SignalMachine::new();
    let mut by_speed: BTreeMap<S, SignalId> = BTreeMap::new();
    let mut projection = Vec::with_capacity(machine.len());
    for sig in machine.signals() {
        let speed = machine.speed(sig.id);
        let id = match by_speed.get(speed) {
            Some(&id) => id,
            None => {
                let id = support.add_signal(&sig.name, speed.clone()).expect("names are unique");
                by_speed.insert(speed.clone(), id);
                id
            }
        };
        projection.push(id);
    }
    let n = support.len();
    let all: SignalSet = (0..n).collect();
    if n < usize::BITS as usize {
        for mask in 0usize..(1 << n) {
            if mask.count_ones() >= 2 {
                let inputs: SignalSet = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                support.rules.insert(inputs, all.clone());
            }
        }
    }
    (support, projection)
}

pub fn support_configuration<S: ExactScalar>(
    config: &InitialConfiguration<S>,
    projection: &[SignalId],
) -> InitialConfiguration<S> {
    InitialConfiguration {
        sites: config
            .sites
            .iter()
            .map(|s| Site {
                position: s.position.clone(),
                signals: s.signals.iter().map(|&id| projection[id]).collect(),
            })
            .collect(),
    }
}

/// Maps speeds to `{0, 1}` (two speeds) or `{-1, 0, ν}` (three speeds).
///
/// The configuration is returned unchanged: a speed map alone already yields
/// an equivalent diagram, related by `(x, t) ↦ (x - offset·t, ratio·t)`.
#[allow(clippy::type_complexity)]
pub fn normalize_speeds<S: ExactScalar>(
    machine: &SignalMachine<S>,
    config: &InitialConfiguration<S>,
) -> Result<(SignalMachine<S>, InitialConfiguration<S>, AffineMap<S>), MachineError> {
    let speeds = machine.distinct_speeds();
    let map = match speeds.len() {
        2 => {
            let span = speeds[1].clone() - &speeds[0];
            let ratio = S::one().checked_div(&span)?;
            let offset = -(speeds[0].checked_div(&span)?);
            AffineMap::new(ratio, offset)?
        }
        3 => {
            let span = speeds[1].clone() - &speeds[0];
            let ratio = S::one().checked_div(&span)?;
            let offset = -(speeds[1].checked_div(&span)?);
            AffineMap::new(ratio, offset)?
        }
        n => return Err(MachineError::SpeedCount(n)),
    };
    Ok((apply_affine_to_machine(machine, &map), config.clone(), map))
}
