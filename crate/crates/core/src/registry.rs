//! Task specs: what a task's answers look like, how its questions parse, and
//! which features its diagnostic consumes.
//!
//! A [`TaskSpec`] is fully declarative so that a registry can be shipped as a
//! config document. Template patterns are anchored regexes whose named capture
//! groups are the extraction roles; feature plans are ordered lists of
//! [`FeatureDescriptor`]s that the featurizer expands against train-fold
//! statistics. [`Registry::builtin`] covers twelve templated task families
//! (counting, size, distances, directions, routes, appearance order, and the
//! 2D/3D image tasks); user registries extend or override it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::AnswerKind;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("task '{task}': invalid template pattern: {message}")]
    BadPattern { task: String, message: String },
    #[error("task '{task}': scoring {scoring:?} is inconsistent with answer kind {kind}")]
    ScoringMismatch {
        task: String,
        scoring: Scoring,
        kind: AnswerKind,
    },
    #[error("task '{task}': mra thresholds must lie in (0, 1)")]
    BadThresholds { task: String },
}

/// Extraction roles a template can capture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Object,
    ObjectA,
    ObjectB,
    TargetObject,
    PositioningObject,
    OrientingObject,
    QueryingObject,
    BeginningObject,
    FacingObject,
}

impl Role {
    pub const ALL: [Role; 9] = [
        Role::Object,
        Role::ObjectA,
        Role::ObjectB,
        Role::TargetObject,
        Role::PositioningObject,
        Role::OrientingObject,
        Role::QueryingObject,
        Role::BeginningObject,
        Role::FacingObject,
    ];

    /// The capture-group / metadata key for this role.
    pub fn key(&self) -> &'static str {
        match self {
            Role::Object => "object",
            Role::ObjectA => "object_a",
            Role::ObjectB => "object_b",
            Role::TargetObject => "target_object",
            Role::PositioningObject => "positioning_object",
            Role::OrientingObject => "orienting_object",
            Role::QueryingObject => "querying_object",
            Role::BeginningObject => "beginning_object",
            Role::FacingObject => "facing_object",
        }
    }

    pub fn from_key(key: &str) -> Option<Role> {
        Role::ALL.iter().copied().find(|r| r.key() == key)
    }
}

/// How a task's option strings are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OptionContent {
    /// Options carry no extractable structure (e.g. direction labels).
    #[default]
    Plain,
    /// Each option is an object category.
    Category,
    /// Each option is a number.
    NumericValue,
    /// Each option is a comma-separated category sequence.
    Sequence,
    /// Each option is an opaque route string with numbered steps.
    Route,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scoring {
    ExactMatch,
    Mra,
}

/// One entry of a feature plan. Descriptors that mention a role read the
/// category extracted for that role; option-indexed descriptors expand to one
/// column per option slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "feature", rename_all = "kebab-case")]
pub enum FeatureDescriptor {
    /// One-hot of the category extracted for `role` (plus an unknown slot).
    CategoricalRole { role: Role },
    /// One-hot of the sample's difficulty tag.
    CategoricalDifficulty,
    /// One-hot of the sorted (object_a, object_b) pair.
    CategoricalPair,
    /// Per-option one-hot of the option's object category.
    CategoricalOptionObjects,
    /// Per-option one-hot of the option's route string.
    CategoricalOptionRoutes,
    /// Per-option one-hot of the option's category sequence.
    CategoricalOptionSequences,
    /// Number of training questions mentioning the role's category.
    ObjCount { role: Role },
    /// Mean of log ground-truth values for the role's category.
    ObjValLogMean { role: Role },
    /// Std dev of log ground-truth values for the role's category.
    ObjValLogStd { role: Role },
    /// Log-std divided by log-mean for the role's category.
    ObjValLogRatio { role: Role },
    /// Mean of log ground-truth values over the whole task.
    GlobalMeanLog,
    /// Std dev of log ground-truth values over the whole task.
    GlobalStdLog,
    /// Number of training questions mentioning the sorted object pair.
    PairCount,
    /// Mean of log ground-truth values for the sorted object pair.
    PairValLogMean,
    /// Std dev of log ground-truth values for the sorted object pair.
    PairValLogStd,
    /// Number of multiple-choice options.
    NumOptions,
    /// Per-option frequency of the option's object being the correct answer,
    /// plus the max over options.
    OptObjFreq,
    /// Per-option frequency of the (target, option) pair resolving to the
    /// option, plus the max over options.
    OptPairFreq { target: Role },
    /// Summed question-presence frequency of the given roles' categories.
    ObjFreqScore { roles: Vec<Role> },
    /// Per-option frequency of the route string being correct.
    OptRouteFreq,
    /// Number of steps in the route options.
    NumSteps,
    /// Number of options (route tasks report it separately).
    NumChoices,
    /// Per-option sequence scores: position, adjacent-pair, combinatorial-pair
    /// frequencies against ground-truth sequences, and their mean.
    SeqScores,
    /// Per-option |log(option value) - category log-mean|.
    OptDistFromObjMean { role: Role },
    /// Per-option |log(option value) - global log-mean|.
    OptDistFromGlobalMean,
    /// Question character count.
    QuestionLength,
    /// contains_{left,right,above,below,front,behind} flags plus their count.
    SpatialKeywords,
}

fn default_mra_thresholds() -> Vec<f64> {
    (0..10).map(|i| 0.50 + 0.05 * i as f64).collect()
}

fn default_true() -> bool {
    true
}

/// Declarative description of one task type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_type: String,
    pub answer_kind: AnswerKind,
    pub scoring: Scoring,
    /// Numeric answers are modeled in log space and must be positive.
    #[serde(default = "default_true")]
    pub log_space: bool,
    /// Relative-accuracy thresholds for numeric scoring.
    #[serde(default = "default_mra_thresholds")]
    pub mra_thresholds: Vec<f64>,
    /// Roles the templates must supply for a sample to count as parsed.
    #[serde(default)]
    pub roles: Vec<Role>,
    /// Anchored regexes with named capture groups, tried in order.
    #[serde(default)]
    pub template_patterns: Vec<String>,
    #[serde(default)]
    pub option_content: OptionContent,
    /// Infer a difficulty tag from the option count when metadata lacks one.
    #[serde(default)]
    pub infer_difficulty: bool,
    pub feature_plan: Vec<FeatureDescriptor>,
}

impl TaskSpec {
    /// Whether questions of this task are expected to match a template.
    pub fn is_templated(&self) -> bool {
        !self.template_patterns.is_empty()
    }

    pub fn validate(&self) -> Result<(), RegistryError> {
        let consistent = match self.answer_kind {
            AnswerKind::MultipleChoice | AnswerKind::Categorical => {
                self.scoring == Scoring::ExactMatch
            }
            AnswerKind::Numeric => self.scoring == Scoring::Mra,
        };
        if !consistent {
            return Err(RegistryError::ScoringMismatch {
                task: self.task_type.clone(),
                scoring: self.scoring,
                kind: self.answer_kind,
            });
        }
        if self.mra_thresholds.iter().any(|t| *t <= 0.0 || *t >= 1.0) {
            return Err(RegistryError::BadThresholds {
                task: self.task_type.clone(),
            });
        }
        for p in &self.template_patterns {
            regex::Regex::new(p).map_err(|e| RegistryError::BadPattern {
                task: self.task_type.clone(),
                message: e.to_string(),
            })?;
        }
        Ok(())
    }
}

/// The task-spec registry. Serializes as a versioned config document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    pub version: u32,
    tasks: BTreeMap<String, TaskSpec>,
}

pub const REGISTRY_VERSION: u32 = 1;

impl Registry {
    pub fn new(specs: Vec<TaskSpec>) -> Result<Self, RegistryError> {
        let mut tasks = BTreeMap::new();
        for spec in specs {
            spec.validate()?;
            tasks.insert(spec.task_type.clone(), spec);
        }
        Ok(Registry {
            version: REGISTRY_VERSION,
            tasks,
        })
    }

    pub fn get(&self, task_type: &str) -> Option<&TaskSpec> {
        self.tasks.get(task_type)
    }

    pub fn task_types(&self) -> impl Iterator<Item = &String> {
        self.tasks.keys()
    }

    pub fn specs(&self) -> impl Iterator<Item = &TaskSpec> {
        self.tasks.values()
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Overlay `other` on top of this registry; same-named tasks are replaced.
    pub fn extend_with(&mut self, other: Registry) {
        for (k, v) in other.tasks {
            self.tasks.insert(k, v);
        }
    }

    pub fn validate(&self) -> Result<(), RegistryError> {
        for spec in self.tasks.values() {
            spec.validate()?;
        }
        Ok(())
    }

    /// The built-in registry: twelve templated task families.
    pub fn builtin() -> Registry {
        Registry::new(builtin_specs()).expect("builtin registry is valid")
    }
}

fn numeric_spec(
    task_type: &str,
    roles: Vec<Role>,
    patterns: Vec<&str>,
    plan: Vec<FeatureDescriptor>,
) -> TaskSpec {
    TaskSpec {
        task_type: task_type.to_string(),
        answer_kind: AnswerKind::Numeric,
        scoring: Scoring::Mra,
        log_space: true,
        mra_thresholds: default_mra_thresholds(),
        roles,
        template_patterns: patterns.into_iter().map(String::from).collect(),
        option_content: OptionContent::Plain,
        infer_difficulty: false,
        feature_plan: plan,
    }
}

fn mc_spec(
    task_type: &str,
    roles: Vec<Role>,
    patterns: Vec<&str>,
    option_content: OptionContent,
    plan: Vec<FeatureDescriptor>,
) -> TaskSpec {
    TaskSpec {
        task_type: task_type.to_string(),
        answer_kind: AnswerKind::MultipleChoice,
        scoring: Scoring::ExactMatch,
        log_space: false,
        mra_thresholds: default_mra_thresholds(),
        roles,
        template_patterns: patterns.into_iter().map(String::from).collect(),
        option_content,
        infer_difficulty: false,
        feature_plan: plan,
    }
}

#[allow(clippy::vec_init_then_push)]
fn builtin_specs() -> Vec<TaskSpec> {
    use FeatureDescriptor as F;
    use Role::*;

    let mut specs = Vec::new();

    specs.push(numeric_spec(
        "object_counting",
        vec![Object],
        vec![
            r"^How many (?P<object>.+?)\(s\) are in this room\?$",
            r"^How many (?P<object>.+?)(?:s|\(s\))? (?:are|do you see) in this (?:room|scene)\?$",
        ],
        vec![
            F::CategoricalRole { role: Object },
            F::ObjCount { role: Object },
            F::ObjValLogMean { role: Object },
            F::ObjValLogStd { role: Object },
            F::GlobalMeanLog,
            F::GlobalStdLog,
        ],
    ));

    specs.push(numeric_spec(
        "object_size_estimation",
        vec![Object],
        vec![
            r"^What is the length of the longest dimension \(length, width, or height\) of the (?P<object>.+?), measured in centimeters\?$",
        ],
        vec![
            F::CategoricalRole { role: Object },
            F::ObjCount { role: Object },
            F::ObjFreqScore { roles: vec![Object] },
            F::ObjValLogMean { role: Object },
            F::ObjValLogStd { role: Object },
            F::ObjValLogRatio { role: Object },
        ],
    ));

    specs.push(numeric_spec(
        "object_abs_distance",
        vec![ObjectA, ObjectB],
        vec![
            r"^Measuring from the closest point of each object, what is the distance between the (?P<object_a>.+?) and the (?P<object_b>.+?) \(in meters\)\?$",
        ],
        vec![
            F::CategoricalPair,
            F::PairCount,
            F::PairValLogMean,
            F::PairValLogStd,
        ],
    ));

    specs.push(numeric_spec(
        "room_size_estimation",
        vec![],
        vec![r"^What is the size of this room \(in square meters\)\?"],
        vec![F::GlobalMeanLog, F::GlobalStdLog],
    ));

    specs.push(mc_spec(
        "object_rel_distance",
        vec![TargetObject],
        vec![
            r"^Measuring from the closest point of each object, which of these objects is the closest to the (?P<target_object>.+?)\?$",
            r"^Which is closer to the (?P<target_object>.+?): the .+? or the .+?\?$",
        ],
        OptionContent::Category,
        vec![
            F::CategoricalRole { role: TargetObject },
            F::CategoricalOptionObjects,
            F::OptObjFreq,
            F::OptPairFreq { target: TargetObject },
        ],
    ));

    let mut rel_direction = mc_spec(
        "object_rel_direction",
        vec![PositioningObject, OrientingObject, QueryingObject],
        vec![
            r"^If I am standing by the (?P<positioning_object>.+?) and facing the (?P<orienting_object>.+?), is the (?P<querying_object>.+?) to my .+\?$",
        ],
        OptionContent::Plain,
        vec![
            F::CategoricalDifficulty,
            F::CategoricalRole { role: PositioningObject },
            F::CategoricalRole { role: OrientingObject },
            F::CategoricalRole { role: QueryingObject },
            F::ObjFreqScore {
                roles: vec![PositioningObject, OrientingObject, QueryingObject],
            },
        ],
    );
    rel_direction.infer_difficulty = true;
    specs.push(rel_direction);

    specs.push(mc_spec(
        "route_planning",
        vec![BeginningObject, FacingObject, TargetObject],
        vec![
            r"^You are a robot beginning at the (?P<beginning_object>.+?) facing the (?P<facing_object>.+?)\. You want to navigate to the (?P<target_object>.+?)\.",
        ],
        OptionContent::Route,
        vec![
            F::CategoricalRole { role: BeginningObject },
            F::CategoricalRole { role: FacingObject },
            F::CategoricalRole { role: TargetObject },
            F::CategoricalOptionRoutes,
            F::NumSteps,
            F::NumChoices,
            F::OptRouteFreq,
            F::ObjFreqScore {
                roles: vec![BeginningObject, FacingObject, TargetObject],
            },
        ],
    ));

    specs.push(mc_spec(
        "appearance_order",
        vec![],
        vec![
            r"^What will be the first-time appearance order of the following categories in the video: (?:.+?)\?$",
        ],
        OptionContent::Sequence,
        vec![F::CategoricalOptionSequences, F::SeqScores],
    ));

    let mut count_2d = mc_spec(
        "count_2d",
        vec![Object],
        vec![
            r"^How many (?P<object>.+?)\(s\) are in the image\?$",
            r"^How many (?P<object>.+?)(?:s)? are in the image\?$",
        ],
        OptionContent::NumericValue,
        vec![
            F::CategoricalRole { role: Object },
            F::NumOptions,
            F::ObjCount { role: Object },
            F::ObjValLogMean { role: Object },
            F::ObjValLogStd { role: Object },
            F::GlobalMeanLog,
            F::GlobalStdLog,
            F::OptDistFromObjMean { role: Object },
            F::OptDistFromGlobalMean,
        ],
    );
    // MC task over numeric option values: value stats come from the correct
    // option, so the numeric tables stay in log space.
    count_2d.log_space = false;
    specs.push(count_2d);

    specs.push(mc_spec(
        "spatial_relation_2d",
        vec![ObjectA, ObjectB],
        vec![
            r"^Considering the relative positions of the (?P<object_a>.+?) and the (?P<object_b>.+?) in the image, where is the .+? located with respect to the .+?\?$",
        ],
        OptionContent::Plain,
        vec![
            F::CategoricalRole { role: ObjectA },
            F::CategoricalRole { role: ObjectB },
            F::NumOptions,
            F::ObjFreqScore { roles: vec![ObjectA, ObjectB] },
            F::PairCount,
            F::QuestionLength,
            F::SpatialKeywords,
        ],
    ));

    specs.push(mc_spec(
        "depth_3d",
        vec![ObjectA, ObjectB],
        vec![
            r"^Which of the two objects, the (?P<object_a>.+?) or the (?P<object_b>.+?), is closer to the camera\?$",
        ],
        OptionContent::Category,
        vec![
            F::CategoricalRole { role: ObjectA },
            F::CategoricalRole { role: ObjectB },
            F::NumOptions,
            F::PairCount,
            F::OptObjFreq,
        ],
    ));

    specs.push(mc_spec(
        "distance_3d",
        vec![ObjectA, ObjectB],
        vec![
            r"^Measuring from the closest point of each object, which of the two objects, the (?P<object_a>.+?) or the (?P<object_b>.+?), is closer to you\?$",
        ],
        OptionContent::Category,
        vec![
            F::CategoricalRole { role: ObjectA },
            F::CategoricalRole { role: ObjectB },
            F::NumOptions,
            F::PairCount,
            F::OptObjFreq,
        ],
    ));

    specs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_twelve_tasks() {
        let reg = Registry::builtin();
        assert_eq!(reg.len(), 12);
        assert!(reg.get("object_counting").is_some());
        assert!(reg.get("appearance_order").is_some());
        assert!(reg.get("distance_3d").is_some());
    }

    #[test]
    fn builtin_round_trips_through_json() {
        let reg = Registry::builtin();
        let json = serde_json::to_string_pretty(&reg).unwrap();
        let back: Registry = serde_json::from_str(&json).unwrap();
        assert_eq!(reg, back);
    }

    #[test]
    fn scoring_mismatch_rejected() {
        let mut spec = Registry::builtin().get("object_counting").unwrap().clone();
        spec.scoring = Scoring::ExactMatch;
        assert!(matches!(
            spec.validate(),
            Err(RegistryError::ScoringMismatch { .. })
        ));
    }

    #[test]
    fn extend_overrides_same_named_tasks() {
        let mut reg = Registry::builtin();
        let mut spec = reg.get("object_counting").unwrap().clone();
        spec.mra_thresholds = vec![0.5];
        let overlay = Registry::new(vec![spec]).unwrap();
        reg.extend_with(overlay);
        assert_eq!(reg.get("object_counting").unwrap().mra_thresholds, vec![0.5]);
        assert_eq!(reg.len(), 12);
    }

    #[test]
    fn bad_pattern_rejected() {
        let mut spec = Registry::builtin().get("object_counting").unwrap().clone();
        spec.template_patterns = vec!["(unclosed".to_string()];
        assert!(matches!(spec.validate(), Err(RegistryError::BadPattern { .. })));
    }
}
