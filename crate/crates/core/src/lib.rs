//! Functional-region inference from geo-tagged check-in records.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`ingest`]: parse check-in CSV, map raw demand tags onto the six
//!    canonical categories, bin points onto a square grid, drop duplicates.
//! 2. [`matrix`]: count check-ins into a region × (demand, hour) matrix with
//!    6 · 24 = 144 columns.
//! 3. [`lra`]: singular value decomposition, rank-r truncation and the
//!    rank-selection diagnostics (spectrum, reconstruction error, energy).
//! 4. [`ustas`]: paired spatial/temporal singular vectors and the joint
//!    region/demand embedding `U·√S`, `V·√S`.
//! 5. [`clustering`]: spherical (cosine) K-means over region embeddings,
//!    Dunn / Davies–Bouldin / Silhouette validity, cluster characterization.
//! 6. [`urbanform`]: standard deviational ellipse and concentric-zone
//!    cluster proportions.
//!
//! [`synth`] generates cities with planted archetypes for verification.
//! [`io`] holds the file formats used by the CLI, and [`cli`] is the
//! `urban-lra` command-line front end.

pub mod cli;
pub mod clustering;
pub mod error;
pub mod ingest;
pub mod io;
pub mod linalg;
pub mod lra;
pub mod matrix;
pub mod synth;
pub mod urbanform;
pub mod ustas;

pub use error::{Error, Result};
pub use linalg::Mat;
