use std::fmt;

use thiserror::Error;

use crate::source::Pos;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeErrorKind {
    #[error("assignment to `{var}` needs ownership 1, but it has `{ty}`")]
    OwnershipInsufficient { var: String, ty: String },
    #[error("{0}")]
    SplitUnderivable(String),
    #[error("lifetime `{0}` cannot end while shorter lifetimes are live")]
    LifetimeNotMinimal(String),
    #[error("{0}")]
    LifetimeOrderViolation(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("{0}")]
    ArityMismatch(String),
    #[error("call to `{f}` needs `{lhs} < {rhs}`, which does not hold here")]
    CallOrderNotEntailed { f: String, lhs: String, rhs: String },
    #[error("{0}")]
    ScopeEscape(String),
    #[error(
        "the {branch} branch does not reach the environment the other branch reaches: {detail}"
    )]
    BranchEnvMismatch {
        branch: &'static str,
        detail: String,
    },
    #[error("{0}")]
    PostEnvMismatch(String),
    #[error("`{var}` has type `{ty}`, expected {expected}")]
    KindMismatch {
        var: String,
        ty: String,
        expected: &'static str,
    },
    #[error("`{0}` is not available here (its lifetime has ended)")]
    UnavailableVariable(String),
    #[error("{0}")]
    AnnotationRequired(String),
    #[error("lifetime `{0}` is not live here")]
    UnknownLifetime(String),
    #[error("`{0}` is passed twice in one call")]
    DuplicateArgument(String),
    #[error("argument `{var}` has type `{actual}`, but `{f}` expects `{expected}`")]
    ArgumentMismatch {
        f: String,
        var: String,
        actual: String,
        expected: String,
    },
}

impl TypeErrorKind {
    pub fn code(&self) -> &'static str {
        use TypeErrorKind::*;
        match self {
            OwnershipInsufficient { .. } => "E0101",
            SplitUnderivable(_) => "E0102",
            LifetimeNotMinimal(_) => "E0103",
            LifetimeOrderViolation(_) => "E0104",
            UnknownFunction(_) => "E0105",
            ArityMismatch(_) => "E0106",
            CallOrderNotEntailed { .. } => "E0107",
            ScopeEscape(_) => "E0108",
            BranchEnvMismatch { .. } => "E0109",
            PostEnvMismatch(_) => "E0110",
            KindMismatch { .. } => "E0111",
            UnavailableVariable(_) => "E0112",
            AnnotationRequired(_) => "E0113",
            UnknownLifetime(_) => "E0114",
            DuplicateArgument(_) => "E0115",
            ArgumentMismatch { .. } => "E0116",
        }
    }

    pub fn name(&self) -> &'static str {
        use TypeErrorKind::*;
        match self {
            OwnershipInsufficient { .. } => "OwnershipInsufficient",
            SplitUnderivable(_) => "SplitUnderivable",
            LifetimeNotMinimal(_) => "LifetimeNotMinimal",
            LifetimeOrderViolation(_) => "LifetimeOrderViolation",
            UnknownFunction(_) => "UnknownFunction",
            ArityMismatch(_) => "ArityMismatch",
            CallOrderNotEntailed { .. } => "CallOrderNotEntailed",
            ScopeEscape(_) => "ScopeEscape",
            BranchEnvMismatch { .. } => "BranchEnvMismatch",
            PostEnvMismatch(_) => "PostEnvMismatch",
            KindMismatch { .. } => "KindMismatch",
            UnavailableVariable(_) => "UnavailableVariable",
            AnnotationRequired(_) => "AnnotationRequired",
            UnknownLifetime(_) => "UnknownLifetime",
            DuplicateArgument(_) => "DuplicateArgument",
            ArgumentMismatch { .. } => "ArgumentMismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct TypeError {
    pub pos: Pos,
    pub kind: TypeErrorKind,
}

impl TypeError {
    pub fn new(pos: Pos, kind: TypeErrorKind) -> Self {
        TypeError { pos, kind }
    }

    pub fn code(&self) -> &'static str {
        self.kind.code()
    }

    /// `file:line:col: error[CODE]: message`
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{}: error[{}]: {}", self.pos, self.code(), self.kind)
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.kind)
    }
}

/// Non-fatal remarks attached to a checked program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub pos: Pos,
    pub message: String,
}

impl Warning {
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{}: warning: {}", self.pos, self.message)
    }
}
