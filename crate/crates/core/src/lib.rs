pub mod cli;
pub mod error;
pub mod extension;
pub mod ground;
pub mod instance;
pub mod matroids;
pub mod mcg;
pub mod oracles;
pub mod pipeline;
pub mod prob;
pub mod rounding;
pub mod split;
pub mod vector;
pub mod verify;
