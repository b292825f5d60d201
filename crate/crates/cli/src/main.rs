use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use prismfab::casestudy::{estimate_physical, place_on_grid, PhysicalParams};
use prismfab::fabric::{build_kpp, build_mesh, fabric_stats, parse_fabric_descriptor, Fabric, MeshShape};
use prismfab::mapper::{complete_and_route, h_color, Strategy, DEFAULT_BUDGET};
use prismfab::metrics::{
    compare, comparison_svg, link_bandwidth, to_f64, ComparisonTable, FabricGroup, NetworkSource, StudyParams,
};
use prismfab::netgraph::{
    alexnet, consolidate, gen_feedforward, gen_inception, gen_resnet, parse_archspec, DenseConfig, DenseRepr,
};
use prismfab::{FabricKind, NetGraph};

#[derive(Parser, Debug)]
#[command(name = "prismfab", version, about = "Prism fabrics for pipelined CNN inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Output {
    /// Directory for generated files
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a fabric and write JSON, DOT and statistics
    Topo {
        #[arg(long, value_enum)]
        kind: TopoKind,
        /// Unit graph size for prism fabrics
        #[arg(long, default_value_t = 6)]
        unit: usize,
        #[arg(long)]
        cores: Option<usize>,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Export a consolidated network graph
    Net {
        /// resnet32, densenet201, inception_v4, alexnet, feedforward8, @file.arch
        #[arg(long)]
        net: String,
        /// Dense representation: complete, path or hybrid:<unit>
        #[arg(long, default_value = "hybrid:6")]
        repr: String,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        output: Output,
    },
    /// Map a network onto a fabric
    Map {
        #[arg(long)]
        net: String,
        /// kpp<unit>:<cores|auto> or mesh:<rows>x<cols> or mesh:auto
        #[arg(long)]
        fabric: String,
        #[arg(long, default_value = "auto")]
        strategy: String,
        /// Backtracking node-expansion budget, e.g. 1e6
        #[arg(long, env = "PRISMFAB_BUDGET", value_parser = parse_budget, default_value = "10000000")]
        budget: u64,
        /// Report a failed coloring instead of routing a best-effort placement
        #[arg(long)]
        no_route: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Compare fabrics on the study networks
    Compare {
        #[arg(long, value_enum, default_value_t = Preset::Study)]
        preset: Preset,
        #[arg(long, default_value_t = 8)]
        bits: u32,
        #[arg(long, default_value_t = 100.0)]
        cycle_ns: f64,
        #[arg(long, env = "PRISMFAB_BUDGET", value_parser = parse_budget, default_value = "10000000")]
        budget: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Lay ResNet-32 out on a core grid
    Casestudy {
        #[arg(long, default_value_t = 4)]
        rows: usize,
        #[arg(long, default_value_t = 10)]
        cols: usize,
        #[arg(long, default_value_t = 8)]
        bits: u32,
        #[arg(long, default_value_t = 100.0)]
        cycle_ns: f64,
        #[arg(long, default_value_t = 576)]
        crossbar: u32,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum TopoKind {
    Kpp,
    Mesh,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Dot,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Preset {
    Study,
}

fn parse_budget(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v as u64),
        _ => Err(format!("not a budget: `{s}`")),
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn json<T: serde::Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn parse_repr(s: &str) -> Result<DenseRepr> {
    Ok(match s {
        "complete" => DenseRepr::Complete,
        "path" => DenseRepr::Path,
        _ => match s.strip_prefix("hybrid:") {
            Some(u) => DenseRepr::Hybrid {
                unit_size: u.parse().with_context(|| format!("bad unit size in `{s}`"))?,
            },
            None => bail!("unknown dense representation `{s}`"),
        },
    })
}

fn network_source(name: &str) -> Result<NetworkSource> {
    if let Some(path) = name.strip_prefix('@') {
        let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        let spec = parse_archspec(&text).with_context(|| format!("parsing {path}"))?;
        return Ok(NetworkSource::Fixed(consolidate(&spec)?));
    }
    let lower = name.to_ascii_lowercase();
    if lower == "densenet201" {
        return Ok(NetworkSource::Dense {
            name: "densenet201".into(),
            block_sizes: vec![6, 12, 48, 32],
            config: DenseConfig::default(),
        });
    }
    let spec = if lower == "alexnet" {
        alexnet()
    } else if let Some(v) = lower.strip_prefix("inception_") {
        gen_inception(v.parse()?)?
    } else if let Some(d) = lower.strip_prefix("resnet") {
        gen_resnet(d.parse().with_context(|| format!("bad resnet depth in `{name}`"))?)?
    } else if let Some(n) = lower.strip_prefix("feedforward") {
        gen_feedforward(n.parse().with_context(|| format!("bad layer count in `{name}`"))?, 64)?
    } else {
        bail!("unknown network `{name}`");
    };
    Ok(NetworkSource::Fixed(consolidate(&spec)?))
}

fn group_of(f: &Fabric) -> FabricGroup {
    match f.kind() {
        FabricKind::Kpp { unit_size } => FabricGroup::Kpp { unit_size },
        _ => FabricGroup::Mesh,
    }
}

fn cmd_topo(
    kind: TopoKind,
    unit: usize,
    cores: Option<usize>,
    rows: Option<usize>,
    cols: Option<usize>,
    out: &Path,
) -> Result<()> {
    let fabric = match kind {
        TopoKind::Kpp => build_kpp(unit, cores.context("--cores is required for prism fabrics")?)?,
        TopoKind::Mesh => build_mesh(MeshShape::new(
            rows.context("--rows is required for meshes")?,
            cols.context("--cols is required for meshes")?,
        )?),
    };
    let stats = fabric_stats(&fabric);
    write(out, "fabric.json", &json(&fabric.to_json())?)?;
    write(out, "fabric.dot", &fabric.to_dot())?;
    write(out, "stats.json", &json(&stats)?)?;
    println!(
        "{}: {} vertices, {} edges, degree {}..{}, diameter {}",
        fabric.descriptor(),
        stats.vertex_count,
        stats.edge_count,
        stats.min_degree,
        stats.max_degree,
        stats.diameter
    );
    Ok(())
}

fn net_graph(name: &str, repr: DenseRepr) -> Result<NetGraph> {
    match network_source(name)? {
        NetworkSource::Fixed(g) => Ok(g),
        NetworkSource::Dense {
            name,
            block_sizes,
            config,
        } => {
            let (_, mut g) = prismfab::netgraph::gen_densenet_with(&block_sizes, repr, config)?;
            g.name = name;
            Ok(g)
        }
    }
}

fn cmd_net(name: &str, repr: &str, format: Format, out: &Path) -> Result<()> {
    let g = net_graph(name, parse_repr(repr)?)?;
    match format {
        Format::Json => write(out, "net.json", &json(&g.to_json())?)?,
        Format::Dot => write(out, "net.dot", &g.to_dot())?,
    }
    println!("{}: {} vertices, {} edges", g.name, g.vertex_count(), g.edge_count());
    Ok(())
}

fn cmd_map(net: &str, fabric: &str, strategy: &str, budget: u64, no_route: bool, out: &Path) -> Result<u8> {
    let strategy: Strategy = strategy.parse()?;
    let source = network_source(net)?;
    let size = source.instantiate(FabricGroup::Mesh)?.vertex_count();
    let fabric = parse_fabric_descriptor(fabric, size)?;
    let net = source.instantiate(group_of(&fabric))?;
    let outcome = match h_color(&net, &fabric, strategy, budget) {
        Ok(o) => o,
        Err(prismfab::Error::StrategyNotApplicable(msg)) => {
            eprintln!("strategy {strategy} not applicable: {msg}");
            return Ok(3);
        }
        Err(e) => return Err(e.into()),
    };
    let mapping = match outcome {
        Ok(m) => m,
        Err(failure) => {
            write(out, "failure.json", &json(&failure)?)?;
            eprintln!("{}: {failure}", net.name);
            if no_route {
                return Ok(3);
            }
            match complete_and_route(&net, &fabric, &failure.colored_prefix) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("{e}");
                    return Ok(3);
                }
            }
        }
    };
    let report = link_bandwidth(&net, &fabric, &mapping, net.c_max())?;
    write(out, "mapping.json", &json(&mapping.to_json())?)?;
    write(out, "metrics.json", &json(&report.to_json())?)?;
    println!(
        "{} on {}: strategy {}, homomorphism {}, stage latency {} cycles, max link bandwidth {:.4}",
        net.name,
        fabric.descriptor(),
        mapping.strategy_used,
        mapping.is_homomorphism,
        report.stage_latency_cycles,
        to_f64(report.max_link_bandwidth_norm)
    );
    Ok(if mapping.is_homomorphism { 0 } else { 2 })
}

fn comparison_csv(table: &ComparisonTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "network",
        "group",
        "fabric",
        "strategy",
        "homomorphism",
        "stage_latency_cycles",
        "max_link_bandwidth_norm",
        "max_link_bandwidth_value",
        "total_links_used",
        "total_fabric_links",
        "error",
    ])?;
    for r in &table.rows {
        let rep = r.report.as_ref();
        w.write_record([
            r.network.clone(),
            r.group.to_string(),
            r.fabric.clone(),
            r.strategy.map(|s| s.to_string()).unwrap_or_default(),
            r.is_homomorphism.to_string(),
            rep.map(|m| m.stage_latency_cycles.to_string()).unwrap_or_default(),
            rep.map(|m| m.max_link_bandwidth_norm.to_string()).unwrap_or_default(),
            rep.map(|m| format!("{:.6}", to_f64(m.max_link_bandwidth_norm)))
                .unwrap_or_default(),
            rep.map(|m| m.total_links_used.to_string()).unwrap_or_default(),
            rep.map(|m| m.total_fabric_links.to_string()).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn cmd_compare(bits: u32, cycle_ns: f64, budget: u64, out: &Path) -> Result<()> {
    let nets = NetworkSource::study_networks()?;
    let groups = [
        FabricGroup::Kpp { unit_size: 4 },
        FabricGroup::Kpp { unit_size: 6 },
        FabricGroup::Kpp { unit_size: 8 },
        FabricGroup::Mesh,
    ];
    let reference = groups[1];
    let table = compare(
        &nets,
        &groups,
        StudyParams {
            bits_act: bits,
            cycle_ns,
            budget,
        },
    )?;
    write(out, "comparison.json", &json(&table.to_json(reference))?)?;
    write(out, "comparison.csv", &comparison_csv(&table)?)?;
    write(out, "comparison.svg", &comparison_svg(&table))?;

    println!("{:<14} {:>6} {:>8} {:>10}", "network", "fabric", "latency", "bandwidth");
    for n in &table.networks {
        for &g in &groups {
            println!(
                "{:<14} {:>6} {:>8} {:>10}",
                n,
                g.to_string(),
                table.best_latency(n, g).map_or("-".into(), |l| l.to_string()),
                table
                    .best_bandwidth(n, g)
                    .map_or("-".into(), |b| format!("{:.3}", to_f64(b)))
            );
        }
    }
    let summary = table.summary(reference);
    for g in &summary.ratios {
        let links = g.links.map_or("-".into(), |l| format!("{:.3}", to_f64(l)));
        println!("{} vs {reference}: links {links}", g.group);
    }
    if let Some((net, group, r)) = summary.best_latency_improvement() {
        println!("best latency improvement: {:.2}x ({net} on {group})", to_f64(r));
    }
    Ok(())
}

fn cmd_casestudy(rows: usize, cols: usize, params: PhysicalParams, out: &Path) -> Result<()> {
    let net = consolidate(&gen_resnet(32)?)?;
    if rows * cols < net.vertex_count() {
        bail!(
            "grid too small: {rows}x{cols} has {} cores, resnet32 needs {}",
            rows * cols,
            net.vertex_count()
        );
    }
    let fabric = build_kpp(6, rows * cols)?;
    let mapping = match h_color(&net, &fabric, Strategy::Auto, DEFAULT_BUDGET)? {
        Ok(m) => m,
        Err(f) => bail!("resnet32 could not be colored onto {}: {f}", fabric.descriptor()),
    };
    let placement = place_on_grid(&net, &fabric, &mapping, rows, cols)?.with_params(params);
    let est = estimate_physical(&placement, &net)?;
    write(out, "placement.json", &(placement.to_json_string() + "\n"))?;
    write(out, "placement.svg", &placement.to_svg())?;
    write(out, "physical.json", &json(&est)?)?;
    for w in &est.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "resnet32 on {rows}x{cols}: {} cores used, max link {:.2} Gbps",
        placement.assigned_cells(),
        est.max_gbps
    );
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Topo {
            kind,
            unit,
            cores,
            rows,
            cols,
            output,
        } => cmd_topo(kind, unit, cores, rows, cols, &output.out).map(|_| 0),
        Command::Net {
            net,
            repr,
            format,
            output,
        } => cmd_net(&net, &repr, format, &output.out).map(|_| 0),
        Command::Map {
            net,
            fabric,
            strategy,
            budget,
            no_route,
            output,
        } => cmd_map(&net, &fabric, &strategy, budget, no_route, &output.out),
        Command::Compare {
            preset: Preset::Study,
            bits,
            cycle_ns,
            budget,
            output,
        } => cmd_compare(bits, cycle_ns, budget, &output.out).map(|_| 0),
        Command::Casestudy {
            rows,
            cols,
            bits,
            cycle_ns,
            crossbar,
            output,
        } => cmd_casestudy(
            rows,
            cols,
            PhysicalParams {
                crossbar_dim: crossbar,
                cycle_ns,
                bits_act: bits,
            },
            &output.out,
        )
        .map(|_| 0),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
