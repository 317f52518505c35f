//! Template parsing: anchored patterns with named capture roles.
//!
//! Extraction is metadata-first: when a sample's metadata already carries a
//! role (pre-parsed object categories etc.), it wins over pattern capture.
//! A sample parses when every role declared by its task spec is resolved;
//! otherwise it is flagged unparseable and handled by the generic path.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use regex::Regex;

use crate::features::{normalize_category, pair_key, FeatureError};
use crate::model::Sample;
use crate::registry::{OptionContent, Role, TaskSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SpatialKeyword {
    Left,
    Right,
    Above,
    Below,
    Front,
    Behind,
}

impl SpatialKeyword {
    pub const ALL: [SpatialKeyword; 6] = [
        SpatialKeyword::Left,
        SpatialKeyword::Right,
        SpatialKeyword::Above,
        SpatialKeyword::Below,
        SpatialKeyword::Front,
        SpatialKeyword::Behind,
    ];

    pub fn word(&self) -> &'static str {
        match self {
            SpatialKeyword::Left => "left",
            SpatialKeyword::Right => "right",
            SpatialKeyword::Above => "above",
            SpatialKeyword::Below => "below",
            SpatialKeyword::Front => "front",
            SpatialKeyword::Behind => "behind",
        }
    }
}

/// Structured content of one multiple-choice option.
#[derive(Debug, Clone, PartialEq)]
pub enum OptionData {
    Plain(String),
    Category(String),
    Value(Option<f64>),
    Sequence(Vec<String>),
    Route(String),
}

impl OptionData {
    pub fn category(&self) -> Option<&str> {
        match self {
            OptionData::Category(c) => Some(c),
            _ => None,
        }
    }

    pub fn sequence(&self) -> Option<&[String]> {
        match self {
            OptionData::Sequence(s) => Some(s),
            _ => None,
        }
    }
}

/// A question reduced to its template roles and structural facts.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedQuestion {
    pub task_type: String,
    pub roles: BTreeMap<Role, String>,
    pub options: Vec<OptionData>,
    pub difficulty: Option<String>,
    pub num_steps: Option<u32>,
    pub num_choices: Option<u32>,
    pub spatial_keywords: BTreeSet<SpatialKeyword>,
    pub question_length: usize,
}

impl ParsedQuestion {
    pub fn role(&self, role: Role) -> Option<&str> {
        self.roles.get(&role).map(String::as_str)
    }

    /// Sorted key over the (object_a, object_b) roles.
    pub fn object_pair_key(&self) -> Option<String> {
        let a = self.role(Role::ObjectA)?;
        let b = self.role(Role::ObjectB)?;
        Some(pair_key(a, b))
    }

    /// Every category this question mentions: role values plus option
    /// categories and sequence members.
    pub fn mentioned_categories(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.roles.values().cloned().collect();
        for opt in &self.options {
            match opt {
                OptionData::Category(c) => {
                    out.insert(c.clone());
                }
                OptionData::Sequence(seq) => out.extend(seq.iter().cloned()),
                _ => {}
            }
        }
        out
    }
}

fn step_count_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+\.").expect("static regex"))
}

fn word_re(word: &str) -> Regex {
    Regex::new(&format!(r"\b{word}\b")).expect("static regex")
}

fn spatial_res() -> &'static Vec<(SpatialKeyword, Regex)> {
    static RES: OnceLock<Vec<(SpatialKeyword, Regex)>> = OnceLock::new();
    RES.get_or_init(|| {
        SpatialKeyword::ALL
            .iter()
            .map(|k| (*k, word_re(k.word())))
            .collect()
    })
}

/// Compiled patterns for one task spec. Compile once, parse many.
pub struct TemplateParser<'a> {
    spec: &'a TaskSpec,
    patterns: Vec<Regex>,
}

impl<'a> TemplateParser<'a> {
    pub fn new(spec: &'a TaskSpec) -> Result<Self, FeatureError> {
        let patterns = spec
            .template_patterns
            .iter()
            .map(|p| Regex::new(p).map_err(|e| FeatureError::Pattern(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TemplateParser { spec, patterns })
    }

    pub fn parse(&self, sample: &Sample) -> Result<ParsedQuestion, FeatureError> {
        let mut roles: BTreeMap<Role, String> = BTreeMap::new();

        // Metadata wins over pattern extraction.
        if let Some(meta) = &sample.metadata {
            for role in &self.spec.roles {
                if let Some(v) = meta.get(role.key()) {
                    roles.insert(*role, normalize_category(v));
                }
            }
        }

        let mut pattern_matched = false;
        for re in &self.patterns {
            if let Some(caps) = re.captures(&sample.question) {
                pattern_matched = true;
                for role in &self.spec.roles {
                    if roles.contains_key(role) {
                        continue;
                    }
                    if let Some(m) = caps.name(role.key()) {
                        roles.insert(*role, normalize_category(m.as_str()));
                    }
                }
                break;
            }
        }

        let roles_complete = self.spec.roles.iter().all(|r| roles.contains_key(r));
        // Zero-role templated tasks still require a pattern match; tasks whose
        // roles are fully covered by metadata parse without one.
        let parsed = if self.spec.roles.is_empty() {
            !self.spec.is_templated() || pattern_matched
        } else {
            roles_complete
        };
        if !parsed {
            return Err(FeatureError::Unparseable {
                id: sample.id.clone(),
                task_type: sample.task_type.clone(),
            });
        }

        let options = parse_options(sample, self.spec.option_content);
        let num_choices = sample.options.as_ref().map(|o| o.len() as u32);
        let num_steps = options.iter().find_map(|o| match o {
            OptionData::Route(r) => Some(step_count_re().find_iter(r).count() as u32),
            _ => None,
        });

        let difficulty = sample
            .metadata
            .as_ref()
            .and_then(|m| m.get("difficulty"))
            .map(|d| normalize_category(d))
            .or_else(|| {
                if self.spec.infer_difficulty {
                    Some(
                        match sample.option_count() {
                            2 => "easy",
                            3 => "medium",
                            4 => "hard",
                            _ => "other",
                        }
                        .to_string(),
                    )
                } else {
                    None
                }
            });

        let lower = sample.question.to_lowercase();
        let spatial_keywords = spatial_res()
            .iter()
            .filter(|(_, re)| re.is_match(&lower))
            .map(|(k, _)| *k)
            .collect();

        Ok(ParsedQuestion {
            task_type: sample.task_type.clone(),
            roles,
            options,
            difficulty,
            num_steps,
            num_choices,
            spatial_keywords,
            question_length: sample.question.chars().count(),
        })
    }
}

fn parse_options(sample: &Sample, content: OptionContent) -> Vec<OptionData> {
    let Some(options) = &sample.options else {
        return Vec::new();
    };
    options
        .iter()
        .map(|o| match content {
            OptionContent::Plain => OptionData::Plain(o.trim().to_string()),
            OptionContent::Category => OptionData::Category(normalize_category(o)),
            OptionContent::NumericValue => OptionData::Value(o.trim().parse::<f64>().ok()),
            OptionContent::Sequence => OptionData::Sequence(
                o.split(',')
                    .map(normalize_category)
                    .filter(|s| !s.is_empty())
                    .collect(),
            ),
            OptionContent::Route => OptionData::Route(o.trim().to_string()),
        })
        .collect()
}

/// One-shot parse; compiles the spec's patterns each call. Prefer
/// [`TemplateParser`] in loops.
pub fn parse_template(sample: &Sample, spec: &TaskSpec) -> Result<ParsedQuestion, FeatureError> {
    TemplateParser::new(spec)?.parse(sample)
}
