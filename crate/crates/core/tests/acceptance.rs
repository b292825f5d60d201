//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when a criterion fails that is not listed in `KNOWN_GAPS`.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;

use num_rational::Ratio;
use prismfab::casestudy::{estimate_physical, place_on_grid, ArrowClass, PhysicalParams};
use prismfab::fabric::{build_kpp, build_mesh, unit_complete_graph};
use prismfab::mapper::{
    connector_colorable, h_color, place_and_route, rail_prefix_uncolored_neighbors, strategy_backtrack, FailureReason,
    Strategy, DEFAULT_BUDGET,
};
use prismfab::metrics::{
    compare, densenet_bandwidth_bound, densenet_forwarding_load, link_bandwidth, mesh_aspects, simulate_pipeline,
    to_f64, FabricGroup, NetworkSource, StudyParams,
};
use prismfab::netgraph::{
    consolidate, densenet201, gen_densenet_with, gen_feedforward, gen_inception, gen_resnet, parse_archspec,
    DenseConfig, DenseRepr, InceptionVersion,
};
use prismfab::{verify_homomorphism, Fabric, NetGraph, UGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that cannot hold as stated; see the decisions ledger.
const KNOWN_GAPS: &[u32] = &[5];

const TOL: f64 = 0.15;

struct Verdict {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn within(value: f64, target: f64) -> bool {
    (value - target).abs() <= TOL * target
}

// 1 ------------------------------------------------------------------------

/// Chain of `m` K6 units assembled by hand from graph primitives.
fn chained_k6(m: usize) -> UGraph {
    let k6 = unit_complete_graph(6).unwrap();
    let mut g = UGraph::new();
    for j in 0..m {
        g = g.disjoint_union(k6.graph(), 6 * j).unwrap();
    }
    // survivor id of rail position p
    let survivor = |p: usize| if p < 6 { p } else { 6 * ((p - 4) / 2) + 4 + (p % 2) };
    for j in 1..m {
        for k in 0..4 {
            g = g.identify(survivor(2 * j + k), 6 * j + k).unwrap();
        }
    }
    let order: Vec<usize> = (0..4 + 2 * m).map(survivor).collect();
    g.compact(&order).unwrap()
}

fn construction() -> Verdict {
    let mut bad = Vec::new();
    let mut sizes = 0;
    for n in (6..=60).step_by(2) {
        sizes += 1;
        let f = build_kpp(6, n).unwrap();
        let m = (n - 6).div_ceil(2) + 1;
        let oracle = chained_k6(m);
        let p1 = f.graph().vertices().all(|v| {
            f.units()
                .iter()
                .any(|u| u.contains(&v) && u.iter().all(|&a| u.iter().all(|&b| a == b || f.has_link(a, b))))
        });
        let ok = f.prism_count() == Some(m)
            && f.edge_count() == 15 + 9 * (m - 1)
            && f.graph().edges() == oracle.edges()
            && f.graph().edges().into_iter().collect::<BTreeSet<_>>() == common::kpp_edges_by_windows(6, n)
            && p1;
        if !ok {
            bad.push(n);
        }
    }
    Verdict {
        id: 1,
        title: "construction correctness",
        pass: bad.is_empty(),
        detail: format!("{sizes} sizes N=6..60, M/edges/P1/oracle exact; mismatches at {bad:?}"),
    }
}

// 2 ------------------------------------------------------------------------

fn homomorphisms() -> Verdict {
    let mut fixed: Vec<NetGraph> = [20, 32, 44]
        .iter()
        .map(|&d| consolidate(&gen_resnet(d).unwrap()).unwrap())
        .collect();
    fixed.push(consolidate(&gen_inception(InceptionVersion::V4).unwrap()).unwrap());
    fixed.push(consolidate(&gen_feedforward(8, 64).unwrap()).unwrap());
    let mut checked = 0;
    let mut bad = Vec::new();
    for unit in [6, 8] {
        let (_, dense) = densenet201(DenseRepr::Hybrid { unit_size: unit }).unwrap();
        for net in fixed.iter().chain(std::iter::once(&dense)) {
            let f = build_kpp(unit, net.vertex_count().max(unit)).unwrap();
            checked += 1;
            let ok = match h_color(net, &f, Strategy::Auto, DEFAULT_BUDGET).unwrap() {
                Ok(m) => m.is_homomorphism && verify_homomorphism(net, &f, &m.assignment),
                Err(_) => false,
            };
            if !ok {
                bad.push(format!("{} on {}", net.name, f.descriptor()));
            }
        }
    }
    Verdict {
        id: 2,
        title: "homomorphisms on 5PP and 7PP",
        pass: bad.is_empty(),
        detail: format!("{checked} net/fabric pairs verified independently; failures {bad:?}"),
    }
}

// 3 ------------------------------------------------------------------------

/// Structure of vertices `lo..hi` of `net`, renumbered from zero.
fn excerpt(net: &NetGraph, lo: usize, hi: usize) -> NetGraph {
    let mut text = String::new();
    for v in lo..hi {
        text += &format!("layer v{} channels=8 stride=1\n", v - lo);
    }
    for e in net.edges.iter().filter(|e| e.src >= lo && e.dst < hi) {
        text += &format!("link v{} -> v{}\n", e.src - lo, e.dst - lo);
    }
    consolidate(&parse_archspec(&text).unwrap()).unwrap()
}

/// First 12-vertex window with no homomorphism into a 12-core 3PP, proven by
/// exhaustive search.
fn impossible_window(net: &NetGraph) -> Option<(usize, u64)> {
    let f = build_kpp(4, 12).unwrap();
    (0..=net.vertex_count().saturating_sub(12)).find_map(|lo| {
        let ex = excerpt(net, lo, lo + 12);
        match strategy_backtrack(&ex, &f, DEFAULT_BUDGET).unwrap() {
            Err(fail) if fail.reason == FailureReason::Impossible => Some((lo, fail.expansions)),
            _ => None,
        }
    })
}

fn negative_results(table: &prismfab::metrics::ComparisonTable) -> Verdict {
    let candidates = [
        consolidate(&gen_resnet(32).unwrap()).unwrap(),
        densenet201(DenseRepr::Hybrid { unit_size: 6 }).unwrap().1,
        consolidate(&gen_inception(InceptionVersion::V4).unwrap()).unwrap(),
    ];
    let mut found = Vec::new();
    for net in &candidates {
        if let Some((lo, exp)) = impossible_window(net) {
            found.push(format!(
                "{}[{lo}..{}] impossible after {exp} expansions",
                net.name,
                lo + 12
            ));
        }
    }
    let lat = |n: &str| table.best_latency(n, FabricGroup::Mesh).unwrap_or(0);
    let (resnet, dense, incep, alex) = (lat("resnet32"), lat("densenet201"), lat("inception-v4"), lat("alexnet"));
    let mesh_ok = resnet > 1 && incep > 1 && alex == 1 && dense == 1;
    Verdict {
        id: 3,
        title: "negative results",
        pass: !found.is_empty() && mesh_ok,
        detail: format!(
            "3PP excerpts: {}; best mesh latency resnet32={resnet} inception-v4={incep} alexnet={alex} densenet201(path)={dense}",
            if found.is_empty() { "none".to_string() } else { found.join(", ") }
        ),
    }
}

// 4 ------------------------------------------------------------------------

fn ratios(table: &prismfab::metrics::ComparisonTable) -> Verdict {
    let (p5, p7, mesh) = (
        FabricGroup::Kpp { unit_size: 6 },
        FabricGroup::Kpp { unit_size: 8 },
        FabricGroup::Mesh,
    );
    let s = table.summary(p5);
    let bw = |g| table.best_bandwidth("densenet201", g).map(to_f64).unwrap_or(f64::NAN);
    let dense_7 = bw(p5) / bw(p7);
    let links_7 = s.group(p7).and_then(|g| g.links).map(to_f64).unwrap_or(f64::NAN);
    let dense_mesh = bw(mesh) / bw(p5);
    let links_mesh = 1.0 / s.group(mesh).and_then(|g| g.links).map(to_f64).unwrap_or(f64::NAN);
    let best = s.best_latency_improvement();
    let best_v = best.as_ref().map_or(0.0, |b| to_f64(b.2));
    let mesh_best = s.group(mesh).and_then(|g| {
        g.latency
            .iter()
            .max_by_key(|(_, &r)| r)
            .map(|(n, &r)| (n.clone(), to_f64(r)))
    });
    let checks = [
        within(dense_7, 1.5),
        within(links_7, 1.44),
        within(dense_mesh, 4.0),
        within(links_mesh, 2.31),
        best_v >= 5.0,
    ];
    Verdict {
        id: 4,
        title: "quantitative ratios",
        pass: checks.iter().all(|&c| c),
        detail: format!(
            "densenet bw 5PP/7PP={dense_7:.4} (1.5), links 7PP/5PP={links_7:.4} (1.44), densenet bw mesh/5PP={dense_mesh:.4} (4), \
             links 5PP/mesh={links_mesh:.4} (2.31), best latency gain={best_v:.2}x on {} (>=5), \
             against the best mesh {}; tol ±15%",
            best.map_or("-".into(), |b| format!("{} {}", b.0, b.1)),
            mesh_best.map_or("-".into(), |(n, r)| format!("{r:.2}x on {n}"))
        ),
    }
}

// 5 ------------------------------------------------------------------------

fn dense_bound() -> Verdict {
    let cfg = DenseConfig {
        growth_rate: 32,
        stem: false,
    };
    let mut violations = Vec::new();
    let mut tight = Vec::new();
    let mut ramp_exact = true;
    for n in [4, 6, 8] {
        let mut equal = 0;
        let mut first_violation = None;
        let mut count = 0;
        for d in 2..=64 {
            let (_, g) = gen_densenet_with(&[d], DenseRepr::Hybrid { unit_size: n }, cfg).unwrap();
            let f = build_kpp(n, d.max(n)).unwrap();
            let m = h_color(&g, &f, Strategy::Auto, DEFAULT_BUDGET).unwrap().unwrap();
            let measured = link_bandwidth(&g, &f, &m, 32).unwrap().max_link_bandwidth_norm;
            let bound = Ratio::from_integer(densenet_bandwidth_bound(1, d, n).unwrap());
            ramp_exact &= measured == Ratio::from_integer(densenet_forwarding_load(1, d, n).unwrap());
            if measured == bound {
                equal += 1;
            }
            if measured > bound {
                count += 1;
                first_violation.get_or_insert((d, measured));
            }
        }
        tight.push(format!("n={n}: {equal} tight"));
        if let Some((d, got)) = first_violation {
            violations.push(format!("n={n}: {count} over bound, first d={d} load {got}k > 2k"));
        }
    }
    Verdict {
        id: 5,
        title: "dense block bandwidth bound",
        pass: violations.is_empty(),
        detail: format!(
            "{}; {}; measured load equals k*(1+ceil((d-n)/(n-2))) for every d: {ramp_exact}",
            tight.join(", "),
            if violations.is_empty() {
                "no violations".to_string()
            } else {
                violations.join(", ")
            }
        ),
    }
}

// 6 ------------------------------------------------------------------------

fn simulator(nets: &[NetworkSource], groups: &[FabricGroup]) -> Verdict {
    let mut cells = 0;
    let mut bad = Vec::new();
    for src in nets {
        for &g in groups {
            let net = src.instantiate(g).unwrap();
            let fabrics: Vec<Fabric> = match g {
                FabricGroup::Kpp { unit_size } => {
                    vec![build_kpp(unit_size, net.vertex_count().max(unit_size)).unwrap()]
                }
                FabricGroup::Mesh => mesh_aspects(net.vertex_count())
                    .into_iter()
                    .map(|(_, s)| build_mesh(s))
                    .collect(),
            };
            for f in fabrics {
                cells += 1;
                let m = place_and_route(&net, &f, Strategy::Auto, DEFAULT_BUDGET).unwrap();
                let r = link_bandwidth(&net, &f, &m, net.c_max()).unwrap();
                let sim = simulate_pipeline(&net, &m, 8).unwrap();
                let traffic_ok = sim
                    .normalized_traffic(net.c_max())
                    .iter()
                    .all(|(l, v)| r.per_link_bandwidth.get(l) == Some(v))
                    && r.per_link_bandwidth.iter().all(|(l, v)| {
                        *v == Ratio::from_integer(0) || sim.normalized_traffic(net.c_max()).get(l) == Some(v)
                    });
                if sim.steady_state_latency != r.stage_latency_cycles || !traffic_ok {
                    bad.push(format!("{} on {}", net.name, f.descriptor()));
                }
            }
        }
    }
    Verdict {
        id: 6,
        title: "simulator equals analytic metrics",
        pass: bad.is_empty(),
        detail: format!("{cells} mappings, latency and per-link traffic exact; mismatches {bad:?}"),
    }
}

// 7 ------------------------------------------------------------------------

fn case_study() -> Verdict {
    let net = consolidate(&gen_resnet(32).unwrap()).unwrap();
    let fabric = build_kpp(6, 40).unwrap();
    let m = h_color(&net, &fabric, Strategy::Auto, DEFAULT_BUDGET).unwrap().unwrap();
    let p = place_on_grid(&net, &fabric, &m, 4, 10)
        .unwrap()
        .with_params(PhysicalParams::default());
    let est = estimate_physical(&p, &net).unwrap();
    let orange = p
        .arrow_counts()
        .get(&ArrowClass::ResampledResidualOrange)
        .copied()
        .unwrap_or(0);
    let homo = verify_homomorphism(&net, &fabric, &m.assignment);
    Verdict {
        id: 7,
        title: "case study ResNet-32 on 4x10",
        pass: homo && (est.max_gbps - 5.12).abs() < 1e-9 && orange == 2,
        detail: format!(
            "homomorphic={homo}, max link {:.4} Gbps (5.12), resampled-residual transitions {orange} (2)",
            est.max_gbps
        ),
    }
}

// 8 ------------------------------------------------------------------------

fn random_connected(rng: &mut ChaCha8Rng, n: usize) -> UGraph {
    let mut g = UGraph::with_vertices(n);
    for v in 1..n {
        g.add_edge(v, rng.gen_range(0..v));
    }
    for _ in 0..rng.gen_range(0..=2 * n) {
        g.add_edge(rng.gen_range(0..n), rng.gen_range(0..n));
    }
    g
}

fn net_from_pairs(n: usize, pairs: &[(usize, usize)]) -> NetGraph {
    let mut text = String::new();
    for i in 0..n {
        text += &format!("layer v{i} channels=8 stride=1\n");
    }
    for &(a, b) in pairs {
        text += &format!("link v{a} -> v{b}\n");
    }
    consolidate(&parse_archspec(&text).unwrap()).unwrap()
}

fn property_suites() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let f5 = build_kpp(6, 60).unwrap();
    let p1 = (1..=40).all(|len| rail_prefix_uncolored_neighbors(&f5, len) >= if len % 2 == 1 { 5 } else { 4 });
    let p2 = (1..=40).all(|len| {
        (1..=5usize.min(len)).all(|m| {
            (1..=6 - m).all(|n| {
                let got = connector_colorable(&f5, len, m, n);
                if m + n <= 5 {
                    got
                } else {
                    got == (m % 2 == len % 2)
                }
            })
        })
    });

    let mut identify_ok = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=12);
        let mut g = UGraph::with_vertices(n);
        for _ in 0..rng.gen_range(0..=3 * n) {
            g.add_edge(rng.gen_range(0..n), rng.gen_range(0..n));
        }
        let u = rng.gen_range(0..n);
        let v = (u + rng.gen_range(1..n)) % n;
        let h = g.identify(u, v).unwrap();
        if h.is_simple() && !h.contains(v) && h.vertex_count() == n - 1 {
            identify_ok += 1;
        }
    }

    // all nets on up to 5 vertices against small fabrics, then random pairs
    // up to 10 x 12
    let mut fabrics: Vec<UGraph> = vec![
        build_kpp(4, 6).unwrap().graph().clone(),
        build_kpp(4, 8).unwrap().graph().clone(),
        build_kpp(6, 6).unwrap().graph().clone(),
        build_mesh(prismfab::MeshShape::new(2, 3).unwrap()).graph().clone(),
        build_mesh(prismfab::MeshShape::new(3, 3).unwrap()).graph().clone(),
    ];
    fabrics.extend((0..5).map(|_| {
        let n = rng.gen_range(5..=8);
        random_connected(&mut rng, n)
    }));
    let mut agree = 0;
    let mut disagree = 0;
    let mut impossible = 0;
    let check = |net: &NetGraph, g: &UGraph, agree: &mut usize, disagree: &mut usize, impossible: &mut usize| {
        let f = Fabric::custom(g.clone()).unwrap();
        let oracle = common::brute_force_homomorphism(net.vertex_count(), &net.edge_pairs(), g).is_some();
        let verdict = match strategy_backtrack(net, &f, DEFAULT_BUDGET).unwrap() {
            Ok(m) => Some(verify_homomorphism(net, &f, &m.assignment)),
            Err(fail) if fail.reason == FailureReason::Impossible => Some(false),
            Err(_) => None,
        };
        if verdict == Some(oracle) {
            *agree += 1;
            *impossible += usize::from(!oracle);
        } else {
            *disagree += 1;
        }
    };
    for n in 2..=5 {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        for mask in 0u32..1 << pairs.len() {
            let chosen: Vec<_> = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &p)| p)
                .collect();
            let net = net_from_pairs(n, &chosen);
            for g in fabrics.iter().filter(|g| g.vertex_count() >= n) {
                check(&net, g, &mut agree, &mut disagree, &mut impossible);
            }
        }
    }
    for _ in 0..400 {
        let fv = rng.gen_range(2..=12);
        let g = random_connected(&mut rng, fv);
        let nv = rng.gen_range(2..=fv.min(10));
        let pairs: Vec<_> = (0..rng.gen_range(0..=2 * nv))
            .map(|_| (rng.gen_range(0..nv), rng.gen_range(0..nv)))
            .filter(|(a, b)| a < b)
            .collect();
        check(
            &net_from_pairs(nv, &pairs),
            &g,
            &mut agree,
            &mut disagree,
            &mut impossible,
        );
    }

    Verdict {
        id: 8,
        title: "property suites",
        pass: p1 && p2 && identify_ok == 1000 && disagree == 0,
        detail: format!(
            "P1 prefixes 1..40: {p1}, P2 all K_m,n m+n<=6: {p2}, identification simple {identify_ok}/1000, \
             backtracker vs brute force {agree} agree ({impossible} impossible) / {disagree} disagree"
        ),
    }
}

fn main() -> ExitCode {
    let nets = NetworkSource::study_networks().unwrap();
    let groups = [
        FabricGroup::Kpp { unit_size: 4 },
        FabricGroup::Kpp { unit_size: 6 },
        FabricGroup::Kpp { unit_size: 8 },
        FabricGroup::Mesh,
    ];
    let table = compare(&nets, &groups, StudyParams::default()).unwrap();

    let verdicts = [
        construction(),
        homomorphisms(),
        negative_results(&table),
        ratios(&table),
        dense_bound(),
        simulator(&nets, &groups),
        case_study(),
        property_suites(),
    ];
    let mut unexpected = 0;
    for v in &verdicts {
        let tag = match (v.pass, KNOWN_GAPS.contains(&v.id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known gap)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("[{tag}] criterion {}: {} | {}", v.id, v.title, v.detail);
    }
    if unexpected > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
