//! Cycle-stepped pipeline simulator.
//!
//! Every core emits one wave of activations at a time. A wave travels each
//! routed edge one link per cycle. A core emits wave `w + 1` once its wave
//! `w` transfers have all arrived and its own inputs of wave `w + 1` are in.

use std::collections::BTreeMap;

use num_rational::Ratio;

use super::{link, Link};
use crate::error::{invalid, Result};
use crate::mapper::Mapping;
use crate::netgraph::NetGraph;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimResult {
    pub waves: usize,
    pub cycles: usize,
    /// Cycles between the last two waves emitted by the slowest core.
    pub steady_state_latency: usize,
    /// Channel units carried per link over the whole run.
    pub per_link_traffic: BTreeMap<Link, u64>,
}

impl SimResult {
    /// Traffic per wave in `c_max` units.
    pub fn normalized_traffic(&self, c_max: u32) -> BTreeMap<Link, Ratio<u64>> {
        let d = self.waves as u64 * u64::from(c_max);
        self.per_link_traffic
            .iter()
            .map(|(&l, &t)| (l, Ratio::new(t, d)))
            .collect()
    }
}

struct Packet {
    edge: usize,
    wave: usize,
    hop: usize,
}

pub fn simulate_pipeline(net: &NetGraph, mapping: &Mapping, num_waves: usize) -> Result<SimResult> {
    if num_waves == 0 {
        return Err(invalid("need at least one wave"));
    }
    if mapping.routes.len() != net.edge_count() {
        return Err(invalid("mapping is not routed"));
    }
    let n = net.vertex_count();
    let mut out_edges = vec![Vec::new(); n];
    let mut in_edges = vec![Vec::new(); n];
    for (i, e) in net.edges.iter().enumerate() {
        out_edges[e.src].push(i);
        in_edges[e.dst].push(i);
    }
    // delivered[edge] = waves that reached the destination so far
    let mut delivered = vec![0usize; net.edge_count()];
    let mut emitted = vec![0usize; n];
    let mut emit_cycle: Vec<Vec<usize>> = vec![Vec::with_capacity(num_waves); n];
    let mut in_flight: Vec<Packet> = Vec::new();
    let mut traffic: BTreeMap<Link, u64> = BTreeMap::new();
    let mut cycle = 0;
    loop {
        let done = emitted.iter().all(|&w| w == num_waves) && in_flight.is_empty();
        if done {
            break;
        }
        for v in 0..n {
            let w = emitted[v];
            if w == num_waves {
                continue;
            }
            let sends_done = out_edges[v].iter().all(|&e| delivered[e] == w);
            let inputs_in = in_edges[v].iter().all(|&e| delivered[e] > w);
            if sends_done && inputs_in {
                emitted[v] += 1;
                emit_cycle[v].push(cycle);
                in_flight.extend(out_edges[v].iter().map(|&edge| Packet { edge, wave: w, hop: 0 }));
            }
        }
        in_flight.retain_mut(|p| {
            let path = &mapping.routes[p.edge].path;
            traffic
                .entry(link(path[p.hop], path[p.hop + 1]))
                .and_modify(|t| *t += net.edges[p.edge].payload())
                .or_insert(net.edges[p.edge].payload());
            p.hop += 1;
            if p.hop + 1 == path.len() {
                debug_assert_eq!(delivered[p.edge], p.wave);
                delivered[p.edge] += 1;
                false
            } else {
                true
            }
        });
        cycle += 1;
    }
    let steady_state_latency = if num_waves >= 2 {
        emit_cycle
            .iter()
            .map(|c| c[num_waves - 1] - c[num_waves - 2])
            .max()
            .unwrap_or(1)
    } else {
        mapping.max_route_len().max(1)
    };
    Ok(SimResult {
        waves: num_waves,
        cycles: cycle,
        steady_state_latency,
        per_link_traffic: traffic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fabric::{build_kpp, build_mesh, MeshShape};
    use crate::mapper::{h_color, route_edges, Strategy, DEFAULT_BUDGET};
    use crate::metrics::link_bandwidth;
    use crate::netgraph::{consolidate, gen_feedforward};

    #[test]
    fn homomorphic_path_runs_one_cycle_per_wave() {
        let net = consolidate(&gen_feedforward(6, 8).unwrap()).unwrap();
        let f = build_kpp(6, 8).unwrap();
        let m = h_color(&net, &f, Strategy::Auto, DEFAULT_BUDGET).unwrap().unwrap();
        let s = simulate_pipeline(&net, &m, 100).unwrap();
        assert_eq!(s.steady_state_latency, 1);
        let r = link_bandwidth(&net, &f, &m, 8).unwrap();
        assert_eq!(s.normalized_traffic(8), r.per_link_bandwidth);
    }

    #[test]
    fn three_hop_route_takes_three_cycles() {
        let net = consolidate(&gen_feedforward(2, 8).unwrap()).unwrap();
        let f = build_mesh(MeshShape::new(1, 4).unwrap());
        let m = route_edges(&net, &f, &[0, 3], Strategy::Greedy).unwrap();
        let s = simulate_pipeline(&net, &m, 20).unwrap();
        assert_eq!(s.steady_state_latency, 3);
        assert_eq!(s.per_link_traffic.len(), 3);
        assert!(s.per_link_traffic.values().all(|&t| t == 20 * 8));
        assert!(simulate_pipeline(&net, &m, 0).is_err());
    }
}
