use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while parsing a skill directory.
#[derive(Debug, Error)]
pub enum SkillError {
    /// The directory exists but holds no `SKILL.md`.
    #[error("not a skill package: {0} has no SKILL.md")]
    NotASkill(PathBuf),

    /// The frontmatter block is missing, unterminated, or not a flat
    /// string-to-scalar map with a non-empty `name`.
    #[error("malformed frontmatter in {path}: {reason}")]
    MalformedFrontmatter { path: PathBuf, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SkillError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

/// Errors raised while loading or running a simulation scenario.
#[derive(Debug, Error)]
pub enum ScenarioError {
    /// A fence command invoked a script that has no declared behavior.
    #[error("undeclared script behavior for '{0}'")]
    UndeclaredScript(String),

    /// A fence command could not be interpreted by the simulator.
    #[error("unsupported command '{0}': no builtin or declared behavior")]
    UnsupportedCommand(String),

    /// A behavior referenced a workspace file that does not exist.
    #[error("workspace file '{0}' not found")]
    MissingWorkspaceFile(String),

    /// A behavior addressed a slide or line outside the deck.
    #[error("behavior out of range: {0}")]
    BehaviorOutOfRange(String),

    #[error("scenario file {path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error(transparent)]
    Skill(#[from] SkillError),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
