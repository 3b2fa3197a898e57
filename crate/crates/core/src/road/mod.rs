//! Piecewise line/arc reference lines, two-lane roads and junction topology.
//!
//! Every other part of the toolkit consumes these types. Lane numbering
//! follows the OpenDRIVE convention: center lane 0, left lane +1, right
//! lane −1. Elevation is identically zero.

mod geometry;
mod network;
mod validate;

use thiserror::Error;

pub use geometry::{normalize_angle, segment_end_pose, GeomSegment, Pose2D, SegmentKind, Vec2};
pub use network::{
    check_offset, lane_boundaries, sample_centerline, sample_stations, CenterlineSample, ContactPoint, ElementType, Junction,
    JunctionConnection, LaneBoundaries, LaneLink, LaneSide, Road, RoadLink, RoadNetwork, TrafficRule,
};
pub use validate::{validate_network, validate_network_with, Rule, ValidationReport, Violation, GENERATED_TOLERANCE, PARSED_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoadError {
    #[error("invalid segment: {0}")]
    InvalidSegment(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
