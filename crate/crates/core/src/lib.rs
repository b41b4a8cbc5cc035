pub mod error;
pub mod exterior;
pub mod geometry;
pub mod mixed;
pub mod poly;
pub mod random;
pub mod spectral;
pub mod sphere;
pub mod sum;
pub mod valuation;

pub use error::{Error, Result};
pub use nalgebra;
pub use exterior::{OneOneForm, PQForm, TimorinReport, TimorinSummary};
pub use geometry::{Body, BodySpec, HarmonicTerm, Regularity, SupportJet, TangentFrame};
pub use mixed::MixedVolumes;
pub use sphere::SphereGrid;
pub use spectral::{SpectralParams, SpectralRow};
pub use random::HrFamily;
pub use valuation::{Certificate, FormalValuation, Generator, HrOptions, HrReport, PrimitivityReport, SignatureReport};

/// Library version, recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
