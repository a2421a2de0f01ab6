//! STPA bookkeeping: losses, hazards, system-level constraints and unsafe
//! control action (UCA) definitions, linked by id.
//!
//! Models are plain data. [`validate_model`] reports every broken link or
//! duplicate id as a [`Violation`] instead of failing, so a reviewer sees the
//! full list at once. Models load from and save to TOML:
//!
//! ```toml
//! [[losses]]
//! id = "L-1"
//! description = "Death or injury of a person"
//!
//! [[hazards]]
//! id = "H-1"
//! description = "..."
//! linked_losses = ["L-1"]
//!
//! [[constraints]]
//! id = "SC-1"
//! description = "..."
//! linked_hazards = ["H-1"]
//!
//! [[uca_definitions]]
//! id = "UCA-1"
//! control_action = "Obstacle Avoidance"
//! category = "NotProviding"
//! description = "..."
//! linked_hazards = ["H-1"]
//! ```

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum StpaError {
    #[error("unknown hazard id `{0}`")]
    UnknownId(String),
    #[error("failed to read model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse model: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("failed to serialize model: {0}")]
    Serialize(#[from] toml::ser::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Loss {
    pub id: String,
    pub description: String,
}

/// A system state that leads to one or more losses in a worst-case environment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hazard {
    pub id: String,
    pub description: String,
    pub linked_losses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemConstraint {
    pub id: String,
    pub description: String,
    pub linked_hazards: Vec<String>,
}

/// The four ways a control action can be unsafe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UcaCategory {
    /// Not providing the action causes a hazard.
    NotProviding,
    /// Providing the action causes a hazard.
    ProvidingCausesHazard,
    /// Too early, too late, or out of order.
    WrongTiming,
    /// Stopped too soon or applied too long (includes wrong magnitude).
    WrongDuration,
}

impl UcaCategory {
    pub const ALL: [UcaCategory; 4] = [
        UcaCategory::NotProviding,
        UcaCategory::ProvidingCausesHazard,
        UcaCategory::WrongTiming,
        UcaCategory::WrongDuration,
    ];

    pub fn label(self) -> &'static str {
        match self {
            UcaCategory::NotProviding => "Not Providing Causes Hazard",
            UcaCategory::ProvidingCausesHazard => "Providing Causes Hazard",
            UcaCategory::WrongTiming => "Too Early, Too Late, Out of Order",
            UcaCategory::WrongDuration => "Stopped Too Soon, Applied Too Long",
        }
    }

    /// Position in [`UcaCategory::ALL`]; used to index tally arrays.
    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UcaDefinition {
    pub id: String,
    pub control_action: String,
    pub category: UcaCategory,
    pub description: String,
    pub linked_hazards: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StpaModel {
    #[serde(default)]
    pub losses: Vec<Loss>,
    #[serde(default)]
    pub hazards: Vec<Hazard>,
    #[serde(default)]
    pub constraints: Vec<SystemConstraint>,
    #[serde(default)]
    pub uca_definitions: Vec<UcaDefinition>,
}

/// Which collection an entity lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntityKind {
    Loss,
    Hazard,
    Constraint,
    Uca,
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityKind::Loss => "loss",
            EntityKind::Hazard => "hazard",
            EntityKind::Constraint => "constraint",
            EntityKind::Uca => "UCA",
        })
    }
}

/// One problem found by [`validate_model`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    DuplicateId { kind: EntityKind, id: String },
    EmptyDescription { kind: EntityKind, id: String },
    EmptyLinks { kind: EntityKind, id: String },
    DanglingLink { kind: EntityKind, id: String, target: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId { kind, id } => write!(f, "duplicate {kind} id `{id}`"),
            Violation::EmptyDescription { kind, id } => {
                write!(f, "{kind} `{id}` has an empty description")
            }
            Violation::EmptyLinks { kind, id } => write!(f, "{kind} `{id}` has no links"),
            Violation::DanglingLink { kind, id, target } => {
                write!(f, "{kind} `{id}` links to unknown id `{target}`")
            }
        }
    }
}

/// Checks ids and cross-references. An empty result means the model is valid.
pub fn validate_model(model: &StpaModel) -> Vec<Violation> {
    let mut violations = Vec::new();

    let loss_ids = collect_ids(EntityKind::Loss, model.losses.iter().map(|l| (&l.id, &l.description)), &mut violations);
    let hazard_ids =
        collect_ids(EntityKind::Hazard, model.hazards.iter().map(|h| (&h.id, &h.description)), &mut violations);
    collect_ids(EntityKind::Constraint, model.constraints.iter().map(|c| (&c.id, &c.description)), &mut violations);
    collect_ids(EntityKind::Uca, model.uca_definitions.iter().map(|u| (&u.id, &u.description)), &mut violations);

    for hazard in &model.hazards {
        check_links(EntityKind::Hazard, &hazard.id, &hazard.linked_losses, &loss_ids, &mut violations);
    }
    for constraint in &model.constraints {
        check_links(EntityKind::Constraint, &constraint.id, &constraint.linked_hazards, &hazard_ids, &mut violations);
    }
    for uca in &model.uca_definitions {
        check_links(EntityKind::Uca, &uca.id, &uca.linked_hazards, &hazard_ids, &mut violations);
    }
    violations
}

fn collect_ids<'a>(
    kind: EntityKind,
    entries: impl Iterator<Item = (&'a String, &'a String)>,
    violations: &mut Vec<Violation>,
) -> HashSet<&'a str> {
    let mut seen = HashSet::new();
    let mut reported = HashSet::new();
    for (id, description) in entries {
        if !seen.insert(id.as_str()) && reported.insert(id.as_str()) {
            violations.push(Violation::DuplicateId { kind, id: id.clone() });
        }
        if description.trim().is_empty() {
            violations.push(Violation::EmptyDescription { kind, id: id.clone() });
        }
    }
    seen
}

fn check_links(kind: EntityKind, id: &str, links: &[String], known: &HashSet<&str>, violations: &mut Vec<Violation>) {
    if links.is_empty() {
        violations.push(Violation::EmptyLinks { kind, id: id.to_owned() });
    }
    for target in links {
        if !known.contains(target.as_str()) {
            violations.push(Violation::DanglingLink { kind, id: id.to_owned(), target: target.clone() });
        }
    }
}

/// Everything connected to one hazard: losses upstream, constraints and UCAs
/// downstream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub hazard: String,
    pub losses: Vec<String>,
    pub constraints: Vec<String>,
    pub ucas: Vec<String>,
}

pub fn trace(model: &StpaModel, hazard_id: &str) -> Result<TraceRecord, StpaError> {
    let hazard = model.hazard(hazard_id).ok_or_else(|| StpaError::UnknownId(hazard_id.to_owned()))?;
    let links_here = |links: &[String]| links.iter().any(|h| h == hazard_id);
    Ok(TraceRecord {
        hazard: hazard.id.clone(),
        losses: hazard.linked_losses.clone(),
        constraints: model.constraints.iter().filter(|c| links_here(&c.linked_hazards)).map(|c| c.id.clone()).collect(),
        ucas: model.uca_definitions.iter().filter(|u| links_here(&u.linked_hazards)).map(|u| u.id.clone()).collect(),
    })
}

impl StpaModel {
    pub fn hazard(&self, id: &str) -> Option<&Hazard> {
        self.hazards.iter().find(|h| h.id == id)
    }

    pub fn uca(&self, id: &str) -> Option<&UcaDefinition> {
        self.uca_definitions.iter().find(|u| u.id == id)
    }

    /// The first UCA definition of the given category, if any.
    pub fn uca_for(&self, category: UcaCategory) -> Option<&UcaDefinition> {
        self.uca_definitions.iter().find(|u| u.category == category)
    }

    /// Hazards linked from the given UCA ids, deduplicated and sorted.
    pub fn hazards_of<'a>(&self, uca_ids: impl IntoIterator<Item = &'a str>) -> Vec<String> {
        let mut out = BTreeSet::new();
        for id in uca_ids {
            if let Some(uca) = self.uca(id) {
                out.extend(uca.linked_hazards.iter().cloned());
            }
        }
        out.into_iter().collect()
    }

    pub fn from_toml_str(text: &str) -> Result<Self, StpaError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml_string(&self) -> Result<String, StpaError> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StpaError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), StpaError> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }
}

/// The drone package-delivery case study: four losses, three hazards, two
/// system-level constraints and four obstacle-avoidance UCAs.
///
/// Hazard-to-loss links are assigned here, not taken from the source
/// analysis: H-1 -> {L-1, L-2, L-3}, H-2 -> {L-4}, H-3 -> {L-3, L-4}.
/// Edit the model file to change them.
pub fn default_drone_model() -> StpaModel {
    fn ids(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| (*s).to_owned()).collect()
    }
    let loss = |id: &str, description: &str| Loss { id: id.into(), description: description.into() };
    let hazard = |id: &str, description: &str, losses: &[&str]| Hazard {
        id: id.into(),
        description: description.into(),
        linked_losses: ids(losses),
    };
    let uca = |id: &str, category, description: &str, hazards: &[&str]| UcaDefinition {
        id: id.into(),
        control_action: "Obstacle Avoidance".into(),
        category,
        description: description.into(),
        linked_hazards: ids(hazards),
    };

    StpaModel {
        losses: vec![
            loss("L-1", "Death or injury of a person"),
            loss("L-2", "Property damage"),
            loss("L-3", "Drone is damaged or destroyed"),
            loss("L-4", "Loss of mission objective"),
        ],
        hazards: vec![
            hazard(
                "H-1",
                "Drone violates minimum separation from obstacles (environmental or other aircraft)",
                &["L-1", "L-2", "L-3"],
            ),
            hazard("H-2", "Drone fails to reach target destination", &["L-4"]),
            hazard("H-3", "Drone fails to recover from excessive maneuver", &["L-3", "L-4"]),
        ],
        constraints: vec![
            SystemConstraint {
                id: "SC-1".into(),
                description: "Drone must satisfy a minimum separation of 0.25m from obstacles encountered".into(),
                linked_hazards: ids(&["H-1"]),
            },
            SystemConstraint {
                id: "SC-2".into(),
                description: "If the drone violates minimum separation, then the violation must be \
                              detected and measures taken to prevent collision"
                    .into(),
                linked_hazards: ids(&["H-1"]),
            },
        ],
        uca_definitions: vec![
            uca(
                "UCA-1",
                UcaCategory::NotProviding,
                "RL agent fails to provide Obstacle Avoidance control action when approaching \
                 critical environmental obstacles",
                &["H-1"],
            ),
            uca(
                "UCA-2",
                UcaCategory::ProvidingCausesHazard,
                "RL agent provides Obstacle Avoidance control action when no obstacle is present",
                &["H-3"],
            ),
            uca(
                "UCA-3",
                UcaCategory::WrongTiming,
                "RL agent fails to provide Obstacle Avoidance control action with sufficient time \
                 to safely avoid the obstacle",
                &["H-1"],
            ),
            uca(
                "UCA-4",
                UcaCategory::WrongDuration,
                "RL agent fails to apply the Obstacle Avoidance action with sufficient magnitude \
                 to avoid obstacles with safe distance",
                &["H-1"],
            ),
        ],
    }
}
