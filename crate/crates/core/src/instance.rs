//! Task instances: commands with usage frequencies, pairwise association
//! scores, optional tab preferences, Fitts constants, structural limits and
//! objective weights.
//!
//! Instances are read from a small JSON document (see [`parse_instance`]) and
//! are immutable afterwards; every transformation returns a new instance.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Upper end of the association score scale.
pub const MAX_SCORE: f64 = 100.0;
/// Scores at or above this make a group lead a certain cue.
pub const HIGH_SCORE: f64 = 80.0;
/// Scores at or below this carry no scent at all.
pub const LOW_SCORE: f64 = 20.0;
/// Ceiling for intermediate expectations.
pub const INTERMEDIATE_CAP: f64 = 0.95;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: duplicate command name {name:?}")]
    DuplicateName { path: String, name: String },
    #[error("{path}: association score {score} outside [0, 100]")]
    ScoreOutOfRange { path: String, score: f64 },
    #[error("{path}: negative frequency {value} for command {name:?}")]
    NegativeFrequency { path: String, name: String, value: f64 },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("all command frequencies are zero")]
    ZeroFrequencies,
    #[error("instance already contains a loner command")]
    LonerPresent,
}

impl InstanceError {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        InstanceError::Invalid { path: path.into(), message: message.into() }
    }
}

/// A selectable menu item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub id: usize,
    pub name: String,
    pub frequency: f64,
    /// 0-based index of the tab this command is conventionally expected on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preferred_tab: Option<usize>,
}

/// Symmetric matrix of pairwise association scores; the diagonal is unused.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationMatrix {
    n: usize,
    scores: Vec<f64>,
}

impl AssociationMatrix {
    pub fn new(n: usize) -> Self {
        AssociationMatrix { n, scores: vec![0.0; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.scores[i * self.n + j]
        }
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, score: f64) {
        if i != j {
            self.scores[i * self.n + j] = score;
            self.scores[j * self.n + i] = score;
        }
    }

    /// Sum of the scores of `i` with every other command.
    pub fn row_sum(&self, i: usize) -> f64 {
        (0..self.n).filter(|&j| j != i).map(|j| self.get(i, j)).sum()
    }

    /// Strictly positive entries as `(i, j, score)` with `i < j`.
    pub fn positive_pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            ((i + 1)..self.n).filter_map(move |j| {
                let s = self.get(i, j);
                (s > 0.0).then_some((i, j, s))
            })
        })
    }

    fn grown(&self) -> AssociationMatrix {
        let mut out = AssociationMatrix::new(self.n + 1);
        for (i, j, s) in self.positive_pairs() {
            out.set(i, j, s);
        }
        out
    }
}

/// Fitts' law intercept `a` (seconds) and slope `b` (seconds per bit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittsParams {
    pub a: f64,
    pub b: f64,
}

impl Default for FittsParams {
    fn default() -> Self {
        FittsParams { a: 0.2, b: 0.15 }
    }
}

impl FittsParams {
    /// Access time along one axis for a 1-based position.
    #[inline]
    pub fn axis_time(&self, index: usize) -> f64 {
        self.a + self.b * ((index + 1) as f64).log2()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralLimits {
    pub max_tabs: usize,
    pub max_groups: usize,
    pub max_rows: usize,
    pub canvas_width: f64,
    pub canvas_height: f64,
}

impl StructuralLimits {
    /// Limits that admit every layout of `n` commands.
    pub fn unbounded(n: usize) -> Self {
        let n = n.max(1);
        StructuralLimits {
            max_tabs: n,
            max_groups: n,
            max_rows: n,
            canvas_width: 1280.0,
            canvas_height: 800.0,
        }
    }

    /// Defaults for `n` commands: `ceil(log2 n) + 2` tabs, `n` rows and
    /// `max(n, tabs)` groups.
    pub fn defaults_for(n: usize, width: f64, height: f64) -> Self {
        let max_tabs = default_max_tabs(n);
        StructuralLimits {
            max_tabs,
            max_groups: n.max(max_tabs),
            max_rows: n.max(1),
            canvas_width: width,
            canvas_height: height,
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), InstanceError> {
        if self.max_tabs == 0 {
            return Err(InstanceError::invalid("$.limits.max_tabs", "must be at least 1"));
        }
        if self.max_groups < self.max_tabs {
            return Err(InstanceError::invalid(
                "$.limits.max_groups",
                format!("max_groups {} is below max_tabs {}", self.max_groups, self.max_tabs),
            ));
        }
        let needed = n.div_ceil(self.max_tabs).max(1);
        if self.max_rows < needed {
            return Err(InstanceError::invalid(
                "$.limits.max_rows",
                format!("max_rows {} cannot host {n} commands on {} tabs", self.max_rows, self.max_tabs),
            ));
        }
        if !(self.canvas_width > 0.0 && self.canvas_height > 0.0) {
            return Err(InstanceError::invalid("$.canvas", "width and height must be positive"));
        }
        Ok(())
    }
}

/// `ceil(log2 n) + 2`.
pub fn default_max_tabs(n: usize) -> usize {
    let n = n.max(1) as f64;
    n.log2().ceil() as usize + 2
}

/// Objective weights. The first three weigh the two-fold objective, the
/// rest the information-foraging objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lambdas {
    pub lambda_f: f64,
    pub lambda_c: f64,
    pub lambda_m: f64,
    pub lambda_0: f64,
    pub lambda_1: f64,
    pub lambda_2: f64,
    pub lambda_3: f64,
    pub lambda_4: f64,
}

impl Lambdas {
    fn all(&self) -> [f64; 8] {
        [
            self.lambda_f,
            self.lambda_c,
            self.lambda_m,
            self.lambda_0,
            self.lambda_1,
            self.lambda_2,
            self.lambda_3,
            self.lambda_4,
        ]
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.all().iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(InstanceError::invalid("$.lambdas", "weights must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Scent of each target `i` given a group led by `j`: `get(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationMatrix {
    n: usize,
    values: Vec<f64>,
}

impl ExpectationMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Mean over ordered off-diagonal pairs.
    pub fn off_diagonal_mean(&self) -> f64 {
        if self.n < 2 {
            return 1.0;
        }
        let mut sum = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    sum += self.get(i, j);
                }
            }
        }
        sum / (self.n * (self.n - 1)) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskInstance {
    pub commands: Vec<Command>,
    pub associations: AssociationMatrix,
    pub fitts: FittsParams,
    pub limits: StructuralLimits,
    pub lambdas: Lambdas,
    /// Id of the synthetic loner magnet, if the instance was augmented.
    pub loner_id: Option<usize>,
}

impl TaskInstance {
    /// Builds an instance with default limits and calibrated weights.
    pub fn new(
        commands: Vec<Command>,
        associations: AssociationMatrix,
        fitts: FittsParams,
    ) -> Result<Self, InstanceError> {
        let n = commands.len();
        let limits = StructuralLimits::defaults_for(n, 1280.0, 800.0);
        let mut inst = TaskInstance {
            commands,
            associations,
            fitts,
            limits,
            lambdas: Lambdas {
                lambda_f: 1.0,
                lambda_c: 1.0,
                lambda_m: 0.5,
                lambda_0: 1.0,
                lambda_1: 1.0,
                lambda_2: 1.0,
                lambda_3: 1.0,
                lambda_4: 1.0,
            },
            loner_id: None,
        };
        inst.validate()?;
        inst.lambdas = calibrate_lambdas(&inst);
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.commands.len()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.commands.iter().map(|c| c.frequency).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.commands.iter().map(|c| c.name.clone()).collect()
    }

    pub fn is_loner(&self, id: usize) -> bool {
        self.loner_id == Some(id)
    }

    /// Same instance with different limits.
    pub fn with_limits(mut self, limits: StructuralLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn with_lambdas(mut self, lambdas: Lambdas) -> Self {
        self.lambdas = lambdas;
        self
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<(), InstanceError> {
        let n = self.n();
        if n == 0 {
            return Err(InstanceError::invalid("$.commands", "at least one command is required"));
        }
        if self.associations.dim() != n {
            return Err(InstanceError::invalid(
                "$.associations",
                format!("matrix dimension {} does not match {n} commands", self.associations.dim()),
            ));
        }
        let mut names = HashSet::new();
        for (k, c) in self.commands.iter().enumerate() {
            let path = format!("$.commands[{k}]");
            if c.id != k {
                return Err(InstanceError::invalid(format!("{path}.id"), format!("expected id {k}, found {}", c.id)));
            }
            if !c.frequency.is_finite() {
                return Err(InstanceError::invalid(format!("{path}.frequency"), "frequency must be finite"));
            }
            if c.frequency < 0.0 {
                return Err(InstanceError::NegativeFrequency {
                    path: format!("{path}.frequency"),
                    name: c.name.clone(),
                    value: c.frequency,
                });
            }
            if !names.insert(c.name.as_str()) {
                return Err(InstanceError::DuplicateName { path: format!("{path}.name"), name: c.name.clone() });
            }
            if let Some(t) = c.preferred_tab {
                if t >= self.limits.max_tabs {
                    return Err(InstanceError::invalid(
                        format!("{path}.preferred_tab"),
                        format!("tab {t} is outside 0..{}", self.limits.max_tabs),
                    ));
                }
            }
        }
        if !self.commands.iter().any(|c| c.frequency > 0.0) {
            return Err(InstanceError::ZeroFrequencies);
        }
        for (i, j, s) in self.associations.positive_pairs() {
            let touches_loner = self.is_loner(i) || self.is_loner(j);
            if !s.is_finite() || (!touches_loner && s > MAX_SCORE) {
                return Err(InstanceError::ScoreOutOfRange { path: format!("$.associations[({i},{j})]"), score: s });
            }
        }
        if let Some(k) = self.loner_id {
            if k >= n {
                return Err(InstanceError::invalid("$.loner", format!("loner id {k} out of range")));
            }
        }
        self.limits.validate(n)?;
        self.lambdas.validate()
    }

    /// Content hash of the serialized instance, used to pair layouts with
    /// the instance they were optimized for.
    pub fn digest(&self) -> String {
        let text = serialize_instance(self);
        let hash = Sha256::digest(text.as_bytes());
        hex::encode(&hash[..16])
    }
}

// ---------------------------------------------------------------------------
// JSON document

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    canvas: CanvasDoc,
    #[serde(default)]
    fitts: Option<FittsParams>,
    #[serde(default)]
    limits: Option<LimitsDoc>,
    #[serde(default)]
    lambdas: Option<LambdasDoc>,
    commands: Vec<Command>,
    #[serde(default)]
    associations: Vec<AssociationDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    loner: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CanvasDoc {
    width: f64,
    height: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitsDoc {
    #[serde(default)]
    max_tabs: Option<usize>,
    #[serde(default)]
    max_groups: Option<usize>,
    #[serde(default)]
    max_rows: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LambdasDoc {
    #[serde(default)]
    lambda_f: Option<f64>,
    #[serde(default)]
    lambda_c: Option<f64>,
    #[serde(default)]
    lambda_m: Option<f64>,
    #[serde(default)]
    lambda_0: Option<f64>,
    #[serde(default)]
    lambda_1: Option<f64>,
    #[serde(default)]
    lambda_2: Option<f64>,
    #[serde(default)]
    lambda_3: Option<f64>,
    #[serde(default)]
    lambda_4: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssociationDoc {
    i: usize,
    j: usize,
    score: f64,
}

/// Parses and validates an instance document.
///
/// Association pairs are mirrored; absent pairs score 0. Missing limits take
/// their defaults and missing weights are filled in by [`calibrate_lambdas`].
pub fn parse_instance(text: &str) -> Result<TaskInstance, InstanceError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: InstanceDoc = serde_path_to_error::deserialize(de).map_err(|e| InstanceError::Schema {
        path: format!("$.{}", e.path()),
        message: e.inner().to_string(),
    })?;

    let n = doc.commands.len();
    if n == 0 {
        return Err(InstanceError::invalid("$.commands", "at least one command is required"));
    }
    let mut slots: Vec<Option<Command>> = vec![None; n];
    for (k, c) in doc.commands.iter().enumerate() {
        let path = format!("$.commands[{k}]");
        if c.id >= n {
            return Err(InstanceError::invalid(format!("{path}.id"), format!("id {} is not in 0..{n}", c.id)));
        }
        if slots[c.id].is_some() {
            return Err(InstanceError::invalid(format!("{path}.id"), format!("duplicate id {}", c.id)));
        }
        if c.frequency < 0.0 {
            return Err(InstanceError::NegativeFrequency {
                path: format!("{path}.frequency"),
                name: c.name.clone(),
                value: c.frequency,
            });
        }
        slots[c.id] = Some(c.clone());
    }
    let commands: Vec<Command> = slots.into_iter().map(|c| c.expect("ids are dense")).collect();
    let mut names = HashSet::new();
    for (k, c) in doc.commands.iter().enumerate() {
        if !names.insert(c.name.as_str()) {
            return Err(InstanceError::DuplicateName { path: format!("$.commands[{k}].name"), name: c.name.clone() });
        }
    }

    let mut associations = AssociationMatrix::new(n);
    for (k, a) in doc.associations.iter().enumerate() {
        let path = format!("$.associations[{k}]");
        if a.i >= n || a.j >= n {
            return Err(InstanceError::invalid(path, format!("pair ({}, {}) references an unknown command", a.i, a.j)));
        }
        if a.i == a.j {
            return Err(InstanceError::invalid(path, "self-association is not allowed"));
        }
        let loner_pair = doc.loner.is_some_and(|l| l == a.i || l == a.j);
        let in_range = a.score.is_finite() && a.score >= 0.0 && (loner_pair || a.score <= MAX_SCORE);
        if !in_range {
            return Err(InstanceError::ScoreOutOfRange { path: format!("{path}.score"), score: a.score });
        }
        associations.set(a.i, a.j, a.score);
    }

    let fitts = doc.fitts.unwrap_or_default();
    if !(fitts.b > 0.0 && fitts.a >= 0.0) {
        return Err(InstanceError::invalid("$.fitts", "requires a >= 0 and b > 0"));
    }
    let mut limits = StructuralLimits::defaults_for(n, doc.canvas.width, doc.canvas.height);
    let ld = doc.limits.unwrap_or_default();
    if let Some(t) = ld.max_tabs {
        limits.max_tabs = t;
        limits.max_groups = limits.max_groups.max(t);
    }
    if let Some(c) = ld.max_groups {
        limits.max_groups = c;
    }
    if let Some(r) = ld.max_rows {
        limits.max_rows = r;
    }

    let mut inst = TaskInstance {
        commands,
        associations,
        fitts,
        limits,
        lambdas: Lambdas {
            lambda_f: 1.0,
            lambda_c: 0.0,
            lambda_m: 0.0,
            lambda_0: 1.0,
            lambda_1: 0.0,
            lambda_2: 0.0,
            lambda_3: 0.0,
            lambda_4: 0.0,
        },
        loner_id: doc.loner,
    };
    inst.validate()?;

    let given = doc.lambdas.unwrap_or_default();
    let calibrated = calibrate_lambdas(&inst);
    inst.lambdas = Lambdas {
        lambda_f: given.lambda_f.unwrap_or(calibrated.lambda_f),
        lambda_c: given.lambda_c.unwrap_or(calibrated.lambda_c),
        lambda_m: given.lambda_m.unwrap_or(calibrated.lambda_m),
        lambda_0: given.lambda_0.unwrap_or(calibrated.lambda_0),
        lambda_1: given.lambda_1.unwrap_or(calibrated.lambda_1),
        lambda_2: given.lambda_2.unwrap_or(calibrated.lambda_2),
        lambda_3: given.lambda_3.unwrap_or(calibrated.lambda_3),
        lambda_4: given.lambda_4.unwrap_or(calibrated.lambda_4),
    };
    inst.lambdas.validate()?;
    Ok(inst)
}

/// Serializes an instance to the document format accepted by
/// [`parse_instance`]. Weights and limits are always written out.
pub fn serialize_instance(inst: &TaskInstance) -> String {
    let doc = InstanceDoc {
        canvas: CanvasDoc { width: inst.limits.canvas_width, height: inst.limits.canvas_height },
        fitts: Some(inst.fitts),
        limits: Some(LimitsDoc {
            max_tabs: Some(inst.limits.max_tabs),
            max_groups: Some(inst.limits.max_groups),
            max_rows: Some(inst.limits.max_rows),
        }),
        lambdas: Some(LambdasDoc {
            lambda_f: Some(inst.lambdas.lambda_f),
            lambda_c: Some(inst.lambdas.lambda_c),
            lambda_m: Some(inst.lambdas.lambda_m),
            lambda_0: Some(inst.lambdas.lambda_0),
            lambda_1: Some(inst.lambdas.lambda_1),
            lambda_2: Some(inst.lambdas.lambda_2),
            lambda_3: Some(inst.lambdas.lambda_3),
            lambda_4: Some(inst.lambdas.lambda_4),
        }),
        commands: inst.commands.clone(),
        associations: inst
            .associations
            .positive_pairs()
            .map(|(i, j, score)| AssociationDoc { i, j, score })
            .collect(),
        loner: inst.loner_id,
    };
    serde_json::to_string_pretty(&doc).expect("instance documents always serialize")
}

// ---------------------------------------------------------------------------
// Transformations

/// Scales frequencies so they sum to one.
pub fn normalize_frequencies(inst: &TaskInstance) -> Result<TaskInstance, InstanceError> {
    let total: f64 = inst.commands.iter().map(|c| c.frequency).sum();
    if !(total > 0.0) {
        return Err(InstanceError::ZeroFrequencies);
    }
    let mut out = inst.clone();
    for c in &mut out.commands {
        c.frequency /= total;
    }
    Ok(out)
}

/// Mean of the strictly positive association scores (over unordered pairs).
fn mean_positive_score(a: &AssociationMatrix) -> Option<f64> {
    let (sum, count) = a.positive_pairs().fold((0.0, 0usize), |(s, c), (_, _, v)| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Median of the strictly positive association scores (over unordered pairs).
pub fn median_positive_score(a: &AssociationMatrix) -> Option<f64> {
    let mut scores: Vec<f64> = a.positive_pairs().map(|(_, _, s)| s).collect();
    if scores.is_empty() {
        return None;
    }
    scores.sort_by(f64::total_cmp);
    let m = scores.len();
    Some(if m % 2 == 1 { scores[m / 2] } else { 0.5 * (scores[m / 2 - 1] + scores[m / 2]) })
}

/// Loner factors of every command: the largest row sum minus the command's
/// own row sum.
pub fn loner_factors(a: &AssociationMatrix) -> Vec<f64> {
    let sums: Vec<f64> = (0..a.dim()).map(|i| a.row_sum(i)).collect();
    let peak = sums.iter().copied().fold(0.0, f64::max);
    sums.iter().map(|s| peak - s).collect()
}

/// Appends the invisible loner magnet.
///
/// Its score with command `i` is the loner factor of `i` divided by `sqrt(n)`,
/// or zero when `i` has some partner scored above the mean positive score.
/// The magnet takes the smallest non-zero frequency, after which all
/// frequencies are renormalized.
pub fn augment_with_loner(inst: &TaskInstance) -> Result<TaskInstance, InstanceError> {
    if inst.loner_id.is_some() {
        return Err(InstanceError::LonerPresent);
    }
    let n = inst.n();
    let a = &inst.associations;
    let factors = loner_factors(a);
    let cutoff = mean_positive_score(a);
    let scale = (n as f64).sqrt();

    let mut grown = a.grown();
    for (i, factor) in factors.iter().enumerate() {
        let strongly_tied = cutoff.is_some_and(|m| (0..n).any(|j| j != i && a.get(i, j) > m));
        let score = if strongly_tied { 0.0 } else { factor / scale };
        grown.set(i, n, score);
    }

    let min_freq = inst
        .commands
        .iter()
        .map(|c| c.frequency)
        .filter(|f| *f > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !min_freq.is_finite() {
        return Err(InstanceError::ZeroFrequencies);
    }

    let mut commands = inst.commands.clone();
    let mut name = String::from("(loner)");
    while commands.iter().any(|c| c.name == name) {
        name.push('\'');
    }
    commands.push(Command { id: n, name, frequency: min_freq, preferred_tab: None });

    let mut limits = inst.limits;
    limits.max_rows = limits.max_rows.max((n + 1).div_ceil(limits.max_tabs));

    let out = TaskInstance {
        commands,
        associations: grown,
        fitts: inst.fitts,
        limits,
        lambdas: inst.lambdas,
        loner_id: Some(n),
    };
    normalize_frequencies(&out)
}

/// Expectation of finding target `i` in a group led by `j`.
///
/// One on the diagonal and for scores of at least 80, zero for scores of at
/// most 20; in between `min(0.95, 0.5 * score / median)` where the median is
/// taken over all strictly positive scores.
pub fn compute_expectations(inst: &TaskInstance) -> ExpectationMatrix {
    let a = &inst.associations;
    let n = a.dim();
    let median = median_positive_score(a);
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = if i == j {
                1.0
            } else {
                expectation_for_score(a.get(i, j), median.unwrap_or(1.0))
            };
        }
    }
    ExpectationMatrix { n, values }
}

/// The scoring rule behind [`compute_expectations`].
pub fn expectation_for_score(score: f64, median: f64) -> f64 {
    if score >= HIGH_SCORE {
        1.0
    } else if score <= LOW_SCORE {
        0.0
    } else {
        (0.5 * score / median).min(INTERMEDIATE_CAP)
    }
}

/// Initial weights balancing the objective terms.
///
/// Two-fold: `lambda_f = 1`, `lambda_c = 2wh / (n log2 n)` and
/// `lambda_m = lambda_c / 2`. Foraging: `lambda_0 = 1` and every other search
/// term scaled so that its typical magnitude matches a typical access time;
/// `lambda_4` costs as much as one typical false negative.
pub fn calibrate_lambdas(inst: &TaskInstance) -> Lambdas {
    let n = inst.n().max(2) as f64;
    let (w, h) = (inst.limits.canvas_width, inst.limits.canvas_height);
    let lambda_f = 1.0;
    let lambda_c = 2.0 * w * h / (n * n.log2()) * lambda_f;
    let lambda_m = lambda_c / 2.0;

    let tabs = n.log2().max(1.0);
    let per_tab = n / tabs;
    let group = per_tab.sqrt().max(2.0).min(n);
    let groups = n / group;
    let row_typ = (per_tab + 1.0) / 2.0;
    let tab_typ = (tabs + 1.0) / 2.0;
    let fitts = inst.fitts;
    let t_typ = 2.0 * fitts.a + fitts.b * ((row_typ + 1.0).log2() + (tab_typ + 1.0).log2());

    let scent = compute_expectations(inst).off_diagonal_mean();
    let alpha_typ = (group + 1.0) / 2.0;
    let sigma_typ = scent * (n - group);
    let delta_typ = (1.0 - scent) * groups;
    let ratio = |typ: f64| if typ > 1e-12 { t_typ / typ } else { 1.0 };
    let lambda_3 = ratio(delta_typ);
    let lambda_4 = if delta_typ > 1e-12 { lambda_3 * delta_typ } else { t_typ };

    Lambdas {
        lambda_f,
        lambda_c,
        lambda_m,
        lambda_0: 1.0,
        lambda_1: ratio(alpha_typ),
        lambda_2: ratio(sigma_typ),
        lambda_3,
        lambda_4,
    }
}

// ---------------------------------------------------------------------------
// Conventional tab preferences

/// Conventional homes for well-known command families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConventionalTab {
    /// Creating, opening, saving and closing documents.
    First,
    /// Clipboard commands.
    Second,
    /// Help, about and update commands.
    Last,
}

const FIRST_TAB_WORDS: &[&str] = &["new", "open", "save", "close", "create"];
const SECOND_TAB_WORDS: &[&str] = &["cut", "copy", "paste"];
const LAST_TAB_WORDS: &[&str] = &["help", "about", "update", "version"];

/// Looks up the conventional tab of a command by the words in its name.
pub fn conventional_tab(name: &str) -> Option<ConventionalTab> {
    let words: Vec<String> = name
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    let has = |list: &[&str]| words.iter().any(|w| list.contains(&w.as_str()));
    if has(LAST_TAB_WORDS) {
        Some(ConventionalTab::Last)
    } else if has(SECOND_TAB_WORDS) {
        Some(ConventionalTab::Second)
    } else if has(FIRST_TAB_WORDS) {
        Some(ConventionalTab::First)
    } else {
        None
    }
}

/// Fills in missing preferences from the naming conventions. `last_tab` is
/// the 0-based index used for [`ConventionalTab::Last`].
pub fn apply_conventional_preferences(inst: &TaskInstance, last_tab: usize) -> Result<TaskInstance, InstanceError> {
    let mut out = inst.clone();
    for c in &mut out.commands {
        if c.preferred_tab.is_some() || inst.is_loner(c.id) {
            continue;
        }
        c.preferred_tab = conventional_tab(&c.name).map(|t| match t {
            ConventionalTab::First => 0,
            ConventionalTab::Second => 1.min(last_tab),
            ConventionalTab::Last => last_tab,
        });
    }
    out.validate()?;
    Ok(out)
}

/// Replaces the frequencies listed in `overrides` (by id).
pub(crate) fn override_frequencies(
    inst: &TaskInstance,
    overrides: &BTreeMap<usize, f64>,
) -> Result<TaskInstance, InstanceError> {
    let mut out = inst.clone();
    for (&id, &f) in overrides {
        let Some(c) = out.commands.get_mut(id) else {
            return Err(InstanceError::invalid(format!("$.profile[{id}]"), format!("unknown command id {id}")));
        };
        if !f.is_finite() || f < 0.0 {
            return Err(InstanceError::NegativeFrequency {
                path: format!("$.profile[{id}]"),
                name: c.name.clone(),
                value: f,
            });
        }
        c.frequency = f;
    }
    normalize_frequencies(&out)
}
