//! Pipeline-stage latency and normalized link bandwidth of a mapping.
//!
//! Bandwidth is kept as an exact fraction of `C_max` channel units per
//! cycle; multiply by `C_max * bits_act / T` for absolute numbers.

mod compare;
mod sim;
mod svg;

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fabric::Fabric;
use crate::mapper::Mapping;
use crate::netgraph::NetGraph;

pub use compare::{
    compare, mesh_aspects, ComparisonJson, ComparisonRow, ComparisonRowJson, ComparisonSummary, ComparisonTable,
    FabricGroup, GroupRatio, GroupRatioJson, MeshAspect, NetworkSource, StudyParams,
};
pub use sim::{simulate_pipeline, SimResult};
pub use svg::comparison_svg;

/// Undirected fabric link, smaller id first.
pub type Link = (usize, usize);

pub fn link(u: usize, v: usize) -> Link {
    (u.min(v), u.max(v))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricsReport {
    pub network: String,
    pub fabric: String,
    pub stage_latency_cycles: usize,
    pub max_link_bandwidth_norm: Ratio<u64>,
    /// Largest single flow on any link, i.e. the busiest physical channel.
    pub max_channel_bandwidth_norm: Ratio<u64>,
    pub per_link_bandwidth: BTreeMap<Link, Ratio<u64>>,
    pub total_links_used: usize,
    pub total_fabric_links: usize,
    pub c_max: u32,
}

impl MetricsReport {
    /// Busiest link in Gbps for `bits_act`-bit activations and a compute
    /// cycle of `cycle_ns` nanoseconds.
    pub fn max_link_gbps(&self, bits_act: u32, cycle_ns: f64) -> f64 {
        to_f64(self.max_link_bandwidth_norm) * f64::from(self.c_max) * f64::from(bits_act) / cycle_ns
    }

    pub fn max_channel_gbps(&self, bits_act: u32, cycle_ns: f64) -> f64 {
        to_f64(self.max_channel_bandwidth_norm) * f64::from(self.c_max) * f64::from(bits_act) / cycle_ns
    }

    pub fn to_json(&self) -> MetricsReportJson {
        MetricsReportJson {
            network: self.network.clone(),
            fabric: self.fabric.clone(),
            stage_latency_cycles: self.stage_latency_cycles,
            max_link_bandwidth_norm: RatioJson::from(self.max_link_bandwidth_norm),
            max_channel_bandwidth_norm: RatioJson::from(self.max_channel_bandwidth_norm),
            per_link_bandwidth: self
                .per_link_bandwidth
                .iter()
                .map(|(&(u, v), &r)| LinkLoadJson {
                    link: [u, v],
                    load: RatioJson::from(r),
                })
                .collect(),
            total_links_used: self.total_links_used,
            total_fabric_links: self.total_fabric_links,
            c_max: self.c_max,
        }
    }
}

pub fn to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioJson {
    pub exact: String,
    pub value: f64,
}

impl From<Ratio<u64>> for RatioJson {
    fn from(r: Ratio<u64>) -> Self {
        RatioJson {
            exact: if *r.denom() == 1 {
                r.numer().to_string()
            } else {
                format!("{}/{}", r.numer(), r.denom())
            },
            value: to_f64(r),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkLoadJson {
    pub link: [usize; 2],
    pub load: RatioJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReportJson {
    pub network: String,
    pub fabric: String,
    pub stage_latency_cycles: usize,
    pub max_link_bandwidth_norm: RatioJson,
    pub max_channel_bandwidth_norm: RatioJson,
    pub per_link_bandwidth: Vec<LinkLoadJson>,
    pub total_links_used: usize,
    pub total_fabric_links: usize,
    pub c_max: u32,
}

fn check_routed(net: &NetGraph, mapping: &Mapping) -> Result<()> {
    let routed = mapping.routes.len() == net.edge_count()
        && mapping.assignment.len() == net.vertex_count()
        && mapping
            .routes
            .iter()
            .zip(&net.edges)
            .all(|(r, e)| r.edge == (e.src, e.dst) && !r.path.is_empty());
    if routed {
        Ok(())
    } else {
        Err(Error::InvalidState(format!("mapping of {} is not routed", net.name)))
    }
}

/// Cycles per pipeline wave: the longest route, and at least one cycle.
pub fn stage_latency(net: &NetGraph, mapping: &Mapping) -> Result<usize> {
    check_routed(net, mapping)?;
    Ok(mapping.max_route_len().max(1))
}

/// Per-link traffic of one wave in channel units, and the largest single
/// flow crossing each link.
pub(crate) fn link_loads(net: &NetGraph, mapping: &Mapping) -> BTreeMap<Link, (u64, u64)> {
    let mut loads: BTreeMap<Link, (u64, u64)> = BTreeMap::new();
    for (r, e) in mapping.routes.iter().zip(&net.edges) {
        let widest = e.flows.iter().map(|f| u64::from(f.channels)).max().unwrap_or(0);
        for w in r.path.windows(2) {
            let slot = loads.entry(link(w[0], w[1])).or_default();
            slot.0 += e.payload();
            slot.1 = slot.1.max(widest);
        }
    }
    loads
}

/// Normalized per-link bandwidth: the payload of every routed net edge
/// crossing a link, summed, divided by `c_max`.
pub fn link_bandwidth(net: &NetGraph, fabric: &Fabric, mapping: &Mapping, c_max: u32) -> Result<MetricsReport> {
    if c_max == 0 {
        return Err(invalid("c_max must be positive"));
    }
    check_routed(net, mapping)?;
    let c = u64::from(c_max);
    let loads = link_loads(net, mapping);
    let per_link: BTreeMap<Link, Ratio<u64>> = loads.iter().map(|(&l, &(sum, _))| (l, Ratio::new(sum, c))).collect();
    let max_link = per_link
        .values()
        .copied()
        .max()
        .unwrap_or_else(|| Ratio::from_integer(0));
    let max_channel = loads
        .values()
        .map(|&(_, widest)| Ratio::new(widest, c))
        .max()
        .unwrap_or_else(|| Ratio::from_integer(0));
    Ok(MetricsReport {
        network: net.name.clone(),
        fabric: fabric.descriptor(),
        stage_latency_cycles: stage_latency(net, mapping)?,
        max_link_bandwidth_norm: max_link,
        max_channel_bandwidth_norm: max_channel,
        total_links_used: per_link.values().filter(|r| **r > Ratio::from_integer(0)).count(),
        per_link_bandwidth: per_link,
        total_fabric_links: fabric.edge_count(),
        c_max,
    })
}

/// Closed-form bound `k + k * step(ceil((d - n) / (n - 2)))` for a dense block
/// of `d` layers on a fabric of `K_n` units, with `step(x) = 0` for `x <= 0`
/// and 1 otherwise.
pub fn densenet_bandwidth_bound(k: u64, d: usize, n: usize) -> Result<u64> {
    if d == 0 || n < 4 {
        return Err(invalid("need d >= 1 and n >= 4"));
    }
    let overflow = d.saturating_sub(n).div_ceil(n - 2);
    Ok(k + if overflow > 0 { k } else { 0 })
}

/// Load that grows with the forwarding depth: `k * (1 + ceil((d - n) / (n - 2)))`
/// once the block no longer fits one unit.
pub fn densenet_forwarding_load(k: u64, d: usize, n: usize) -> Result<u64> {
    if d == 0 || n < 4 {
        return Err(invalid("need d >= 1 and n >= 4"));
    }
    Ok(k * (1 + d.saturating_sub(n).div_ceil(n - 2) as u64))
}
