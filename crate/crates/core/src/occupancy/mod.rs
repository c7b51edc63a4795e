//! Sector occupancy: per-flight sector intervals, minute buckets, per-sector
//! counts and the message-order uncertainty measure.

pub mod correlate;
pub mod counts;
pub mod store;
pub mod uncertainty;

pub use correlate::{
    actual_departure, bucketize_intervals, correlate_flight, Correlation, CorrelationConfig,
    CorrelationStatus, SectorInterval,
};
pub use counts::{reduce_sector_counts, BucketCount, FlightOccupancy, SectorCountSeries};
pub use store::{PiError, PiStore};
pub use uncertainty::{compute_uncertainty, ConfusionCase, UncertaintyAssessment, UncertaintyLevel};

use crate::prep::document::FlightDocument;

/// Correlates a document, fills its buckets and returns the DMS-A record.
pub fn occupy(doc: &mut FlightDocument, cfg: &CorrelationConfig) -> FlightOccupancy {
    let correlation = correlate_flight(doc, cfg);
    let assessment = compute_uncertainty(doc);
    doc.dms_buckets = bucketize_intervals(&correlation.intervals, doc.track.as_ref());
    FlightOccupancy {
        flight_ref: doc.flight_ref.clone(),
        status: correlation.status,
        level: assessment.level,
        cases: assessment.cases.into_iter().collect(),
        intervals: correlation.intervals,
        buckets: doc.dms_buckets.clone(),
    }
}
