use crawler_core::oscillator::OscillatorError;
use crawler_core::plant::PlantError;
use crawler_core::world::WorldError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Oscillator(#[from] OscillatorError),
    #[error("record version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("record checksum mismatch")]
    ChecksumMismatch,
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("replay diverged at tick {0}")]
    ReplayDiverged(u64),
    #[error("session halted after a collision")]
    Halted,
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;
