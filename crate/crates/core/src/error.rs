use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("radius must be non-negative, got {0}")]
    NegativeRadius(f64),

    #[error("invalid IVP problem: {0}")]
    InvalidIvp(String),

    #[error("IVP step size underflow at r = {r} (h = {h:e})")]
    StepUnderflow { r: f64, h: f64 },

    #[error("nonlinearity returned a non-finite value at r = {r} (phi = {phi})")]
    NonlinearityFailure { r: f64, phi: f64 },

    #[error("disjointness violated: bumps {first} and {second} overlap (centre distance {distance}, radii sum {radii})")]
    Overlap {
        first: usize,
        second: usize,
        distance: f64,
        radii: f64,
    },

    #[error("bump {index} support escapes B_R: |q| + rho = {reach} >= R = {radius}")]
    SupportEscapes { index: usize, reach: f64, radius: f64 },

    #[error("invalid flow spec: {0}")]
    InvalidSpec(String),

    #[error("invalid imported field: {0}")]
    InvalidImport(String),

    #[error("empty grid")]
    EmptyGrid,

    #[error("invalid spectral grid: {0}")]
    InvalidGrid(String),

    #[error("vorticity mean {mean:e} exceeds tolerance {tolerance:e}")]
    NonzeroMean { mean: f64, tolerance: f64 },

    #[error("CFL violation: courant number {courant} > 1")]
    CflViolation { courant: f64 },

    #[error("instability: non-finite vorticity at step {step} (t = {time})")]
    Instability { step: usize, time: f64 },

    #[error("r_max {r_max} exceeds field extent {extent}")]
    OutOfExtent { r_max: f64, extent: f64 },

    #[error("interval too thin: width {width} < {minimum}")]
    IntervalTooThin { width: f64, minimum: f64 },

    #[error("region is empty after gradient filtering")]
    EmptyRegion,

    #[error("invalid analysis parameter: {0}")]
    InvalidAnalysis(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed grid file {path}: {reason}")]
    GridFormat { path: PathBuf, reason: String },

    #[error("malformed table {path}: {reason}")]
    TableFormat { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
