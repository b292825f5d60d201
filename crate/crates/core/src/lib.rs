//! Communication fabrics for pipelined CNN inference on computational-memory
//! core arrays.
//!
//! * [`fabric`] builds prism fabrics (chained complete unit graphs) and 2D meshes.
//! * [`netgraph`] turns layer-level descriptions into consolidated DAGs.
//! * [`mapper`] colors a net onto a fabric and routes what does not fit.
//! * [`metrics`] measures stage latency and link bandwidth and compares fabrics.
//! * [`casestudy`] lays a mapping out on a physical core grid.

pub mod casestudy;
pub mod error;
pub mod fabric;
pub mod graph;
pub mod mapper;
pub mod metrics;
pub mod netgraph;

pub use error::{Error, Result};
pub use fabric::{build_kpp, build_mesh, Fabric, FabricKind, MeshShape};
pub use graph::UGraph;
pub use mapper::{h_color, verify_homomorphism, Failure, FailureReason, Mapping, Outcome, Strategy};
pub use metrics::{link_bandwidth, stage_latency, MetricsReport};
pub use netgraph::{consolidate, parse_archspec, ArchSpec, NetGraph};
