use thiserror::Error;

/// Component of a conserved state that failed an admissibility check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateComponent {
    Density,
    InternalEnergy,
    Temperature,
}

impl std::fmt::Display for StateComponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            StateComponent::Density => "density",
            StateComponent::InternalEnergy => "internal energy",
            StateComponent::Temperature => "temperature",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tableau: {0}")]
    InvalidTableau(String),

    #[error("tableau is {found}, analysis requires {required}")]
    WrongTableauKind {
        required: &'static str,
        found: String,
    },

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("singular stage solve at stage {stage}: 1 - a_ii z2 = 0")]
    SingularStage { stage: usize },

    #[error("inadmissible state: {component} = {value:e}")]
    Inadmissible {
        component: StateComponent,
        value: f64,
    },

    #[error("inadmissible moments at stage {stage}, cell {cell}: {component} = {value:e}")]
    InadmissibleStage {
        stage: usize,
        cell: usize,
        component: StateComponent,
        value: f64,
    },

    #[error("inadmissible cell average in cell {cell}: {component} = {value:e}")]
    InadmissibleCell {
        cell: usize,
        component: StateComponent,
        value: f64,
    },

    #[error("Maxwellian parameters must be positive (rho = {rho:e}, T = {temperature:e})")]
    MaxwellianDomain { rho: f64, temperature: f64 },

    #[error("discrete Maxwellian moment matching did not converge (residual {residual:e})")]
    MomentMatch { residual: f64 },

    #[error("negative value {value:e} where a nonnegative one is required (index {index})")]
    Negative { index: usize, value: f64 },

    #[error("negative distribution value {value:e} at stage {stage}, cell {cell}, velocity {node}")]
    PositivityViolated {
        stage: usize,
        cell: usize,
        node: usize,
        value: f64,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
