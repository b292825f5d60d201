//! Built-in network generators.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{
    consolidate, ArchBuilder, ArchSpec, ConnKind, DenseRepr, EdgeOrigin, EdgeSet, Family, Flow, InceptionVersion,
    LayerSpec, NetGraph, Preproc,
};
use crate::error::{invalid, Result};
use crate::fabric::kpp_rail_adjacent;

/// Plain chain `conv1 -> conv2 -> ...`.
pub fn gen_feedforward(num_layers: usize, channels: u32) -> Result<ArchSpec> {
    if num_layers == 0 {
        return Err(invalid("a feedforward network needs at least one layer"));
    }
    let mut b = ArchBuilder::new(format!("feedforward-{num_layers}"), Family::Feedforward);
    for i in 1..=num_layers {
        b.conv(&format!("conv{i}"), channels, 1);
        if i > 1 {
            b.link(&format!("conv{}", i - 1), &format!("conv{i}"));
        }
    }
    b.build()
}

/// AlexNet as eight conv-equivalent layers; the fully connected layers are
/// treated as 1x1 convolutions.
pub fn alexnet() -> ArchSpec {
    const LAYERS: [(u32, u32, u32); 8] = [
        (96, 11, 2),
        (256, 5, 1),
        (384, 3, 1),
        (384, 3, 1),
        (256, 3, 1),
        (4096, 1, 1),
        (4096, 1, 1),
        (1000, 1, 1),
    ];
    let mut b = ArchBuilder::new("alexnet", Family::Feedforward);
    for (i, &(ch, kernel, stride)) in LAYERS.iter().enumerate() {
        b.layer(LayerSpec {
            kernel,
            ..LayerSpec::conv(format!("conv{}", i + 1), ch, stride)
        });
        if i > 0 {
            b.link(&format!("conv{i}"), &format!("conv{}", i + 1));
        }
    }
    b.build().expect("static network is valid")
}

/// CIFAR ResNet of depth `6k + 2`: a stem convolution and three stages of
/// `k` basic blocks with 16, 32 and 64 channels. The first block of the
/// second and third stage halves the resolution; its skip connection goes
/// through a resampling layer.
pub fn gen_resnet(depth: usize) -> Result<ArchSpec> {
    if depth < 8 || depth % 6 != 2 {
        return Err(invalid(format!("resnet depth must be 6k+2 with k >= 1, got {depth}")));
    }
    let k = (depth - 2) / 6;
    let mut b = ArchBuilder::new(format!("resnet{depth}"), Family::Resnet);
    b.conv("conv1", 16, 1);
    let mut x = "conv1".to_string();
    for stage in 1..=3u32 {
        let ch = 16 << (stage - 1);
        for block in 1..=k {
            let a = format!("s{stage}b{block}a");
            let c = format!("s{stage}b{block}b");
            let down = stage > 1 && block == 1;
            b.conv(&a, ch, if down { 2 } else { 1 });
            b.conv(&c, ch, 1);
            b.link(&x, &a).link(&a, &c);
            if down {
                let r = format!("s{stage}r");
                b.layer(LayerSpec {
                    kernel: 1,
                    preproc: Some(Preproc::Resample),
                    ..LayerSpec::conv(r.clone(), ch, 2)
                });
                b.connect(&x, &r, ConnKind::Residual);
                b.connect(&r, &c, ConnKind::Residual);
            } else {
                b.connect(&x, &c, ConnKind::Residual);
            }
            x = c;
        }
    }
    b.build()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseConfig {
    /// Channels produced by every layer, including stem and transitions.
    pub growth_rate: u32,
    /// Prepend a stem convolution that joins the first block.
    pub stem: bool,
}

impl Default for DenseConfig {
    fn default() -> Self {
        DenseConfig {
            growth_rate: 32,
            stem: true,
        }
    }
}

/// Dense network with the given block sizes and the default configuration.
pub fn gen_densenet(block_sizes: &[usize], repr: DenseRepr) -> Result<(ArchSpec, NetGraph)> {
    gen_densenet_with(block_sizes, repr, DenseConfig::default())
}

/// Dense blocks separated by transition layers. Every layer of a block sees
/// the outputs of all earlier layers of the block, of the transition (or
/// stem) in front of it, and feeds the transition behind it; a transition
/// therefore belongs to two dense groups.
pub fn gen_densenet_with(block_sizes: &[usize], repr: DenseRepr, config: DenseConfig) -> Result<(ArchSpec, NetGraph)> {
    if block_sizes.is_empty() || block_sizes.contains(&0) {
        return Err(invalid("densenet needs a non-empty list of non-empty blocks"));
    }
    if let DenseRepr::Hybrid { unit_size } = repr {
        if unit_size < 4 || unit_size % 2 != 0 {
            return Err(invalid(format!(
                "hybrid unit size must be even and >= 4, got {unit_size}"
            )));
        }
    }
    let k = config.growth_rate;
    let mut b = ArchBuilder::new(
        format!(
            "densenet-{}",
            block_sizes
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("-")
        ),
        Family::Densenet,
    );
    let mut groups: Vec<Vec<String>> = Vec::new();
    let mut current: Vec<String> = Vec::new();
    if config.stem {
        b.conv("conv0", k, 2);
        current.push("conv0".into());
    }
    for (i, &size) in block_sizes.iter().enumerate() {
        for j in 1..=size {
            let name = format!("d{}l{j}", i + 1);
            b.conv(&name, k, 1);
            current.push(name);
        }
        if i + 1 < block_sizes.len() {
            let t = format!("t{}", i + 1);
            b.layer(LayerSpec {
                kernel: 1,
                preproc: Some(Preproc::Pool(2)),
                ..LayerSpec::conv(t.clone(), k, 1)
            });
            current.push(t.clone());
            groups.push(std::mem::replace(&mut current, vec![t]));
        }
    }
    groups.push(current);
    for g in &groups {
        for (j, dst) in g.iter().enumerate() {
            for src in &g[..j] {
                b.connect(src, dst, ConnKind::ConcatMember);
            }
        }
    }
    let arch = b.build()?;
    let complete = consolidate(&arch)?;

    let index = arch.layer_index();
    let ids: Vec<Vec<usize>> = groups
        .iter()
        .map(|g| {
            g.iter()
                .map(|n| complete.vertex_by_name(n).map_or(index[n.as_str()], |v| v.id))
                .collect()
        })
        .collect();
    let edges = match repr {
        DenseRepr::Complete => complete.edges.clone(),
        DenseRepr::Path => path_edges(&ids, k),
        DenseRepr::Hybrid { unit_size } => hybrid_edges(&ids, k, unit_size),
    };
    let net = NetGraph {
        dense_repr: Some(repr),
        edges,
        ..complete
    };
    Ok((arch, net))
}

fn concat_flow(source: usize, channels: u32, origin: EdgeOrigin, consumers: BTreeSet<usize>) -> Flow {
    Flow {
        source,
        channels,
        origin,
        consumers,
    }
}

fn path_edges(groups: &[Vec<usize>], k: u32) -> Vec<super::NetEdge> {
    let mut edges = EdgeSet::default();
    for g in groups {
        for j in 1..g.len() {
            let later: BTreeSet<usize> = g[j..].iter().copied().collect();
            for &src in &g[..j] {
                let origin = if src == g[j - 1] {
                    EdgeOrigin::Concat
                } else {
                    EdgeOrigin::Hop
                };
                edges.add(g[j - 1], g[j], concat_flow(src, k, origin, later.clone()));
            }
        }
    }
    edges.into_edges()
}

/// Members adjacent on the rail talk directly; the output of an older member
/// that is out of reach is forwarded by the least loaded adjacent member
/// that already holds it.
fn hybrid_edges(groups: &[Vec<usize>], k: u32, unit: usize) -> Vec<super::NetEdge> {
    let mut edges = EdgeSet::default();
    let mut load = std::collections::BTreeMap::<(usize, usize), u64>::new();
    for g in groups {
        for (j, &dst) in g.iter().enumerate() {
            let relays: Vec<usize> = g[..j]
                .iter()
                .copied()
                .filter(|&c| kpp_rail_adjacent(unit, c, dst))
                .collect();
            for &src in &g[..j] {
                if relays.contains(&src) {
                    edges.add(src, dst, concat_flow(src, k, EdgeOrigin::Concat, BTreeSet::from([dst])));
                    *load.entry((src, dst)).or_default() += u64::from(k);
                    continue;
                }
                let carrier = relays
                    .iter()
                    .copied()
                    .filter(|&c| c > src)
                    .min_by_key(|&c| (load.get(&(c, dst)).copied().unwrap_or(0), c))
                    .expect("the immediate predecessor is always adjacent");
                edges.add(
                    carrier,
                    dst,
                    concat_flow(src, k, EdgeOrigin::Hop, BTreeSet::from([dst])),
                );
                *load.entry((carrier, dst)).or_default() += u64::from(k);
            }
        }
    }
    edges.into_edges()
}

/// DenseNet-201: blocks of 6, 12, 48 and 32 layers, growth rate 32.
pub fn densenet201(repr: DenseRepr) -> Result<(ArchSpec, NetGraph)> {
    gen_densenet(&[6, 12, 48, 32], repr)
}

/// One Inception-style block: an optional trunk chain followed by parallel
/// branch chains. Without branches the trunk tail is the block output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockShape {
    pub name: String,
    pub trunk: usize,
    pub branches: Vec<usize>,
    pub channels: u32,
}

impl BlockShape {
    fn new(name: impl Into<String>, trunk: usize, branches: &[usize], channels: u32) -> Self {
        BlockShape {
            name: name.into(),
            trunk,
            branches: branches.to_vec(),
            channels,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.trunk + self.branches.iter().sum::<usize>()
    }
}

fn repeat(out: &mut Vec<BlockShape>, prefix: &str, count: usize, branches: &[usize], channels: u32) {
    for i in 1..=count {
        out.push(BlockShape::new(format!("{prefix}{i}"), 0, branches, channels));
    }
}

fn v4_stem(out: &mut Vec<BlockShape>) {
    out.push(BlockShape::new("stem1", 3, &[1, 1], 64));
    out.push(BlockShape::new("stem2", 0, &[2, 4], 96));
}

fn resnet_body(out: &mut Vec<BlockShape>) {
    repeat(out, "a", 5, &[1, 2, 3], 128);
    out.push(BlockShape::new("ra", 0, &[1, 3], 384));
    repeat(out, "b", 10, &[1, 3], 192);
    out.push(BlockShape::new("rb", 0, &[2, 2, 3], 288));
    repeat(out, "c", 5, &[1, 3], 256);
}

/// Block sequence of each Inception version. Branch lengths count conv
/// layers only; pooling-only branches are absorbed into their consumers.
pub fn inception_blocks(version: InceptionVersion) -> Vec<BlockShape> {
    let mut out = Vec::new();
    match version {
        InceptionVersion::V1 => {
            out.push(BlockShape::new("stem", 3, &[], 192));
            repeat(&mut out, "m", 9, &[1, 2, 2, 1], 128);
        }
        InceptionVersion::V2 => {
            out.push(BlockShape::new("stem", 3, &[], 192));
            repeat(&mut out, "m", 10, &[1, 2, 3, 1], 128);
        }
        InceptionVersion::V3 => {
            out.push(BlockShape::new("stem", 5, &[], 192));
            repeat(&mut out, "a", 3, &[1, 2, 3, 1], 96);
            out.push(BlockShape::new("ra", 0, &[1, 3], 384));
            repeat(&mut out, "b", 4, &[1, 3, 5, 1], 192);
            out.push(BlockShape::new("rb", 0, &[2, 4], 320));
            repeat(&mut out, "c", 2, &[1, 2, 3, 1], 384);
        }
        InceptionVersion::V4 => {
            v4_stem(&mut out);
            repeat(&mut out, "a", 4, &[1, 1, 2, 3], 96);
            out.push(BlockShape::new("ra", 0, &[1, 3], 384));
            repeat(&mut out, "b", 7, &[1, 1, 3, 5], 128);
            out.push(BlockShape::new("rb", 0, &[2, 4], 192));
            repeat(&mut out, "c", 2, &[1, 2, 3, 3], 256);
        }
        InceptionVersion::ResnetV1 => {
            out.push(BlockShape::new("stem", 5, &[], 192));
            resnet_body(&mut out);
        }
        InceptionVersion::ResnetV2 => {
            v4_stem(&mut out);
            resnet_body(&mut out);
        }
    }
    out
}

/// Inception network built from [`inception_blocks`]: consecutive blocks
/// are joined by a concatenation from every output of one block into every
/// input of the next, and a final layer consumes the last block.
pub fn gen_inception(version: InceptionVersion) -> Result<ArchSpec> {
    let blocks = inception_blocks(version);
    let mut b = ArchBuilder::new(format!("inception-{}", version.as_str()), Family::Inception(version));
    let mut prev_tails: Vec<String> = Vec::new();
    for blk in &blocks {
        let mut heads = Vec::new();
        let mut tails = Vec::new();
        let mut last: Option<String> = None;
        for t in 1..=blk.trunk {
            let name = format!("{}_t{t}", blk.name);
            b.conv(&name, blk.channels, if t == 1 { 2 } else { 1 });
            match &last {
                Some(p) => {
                    b.link(p, &name);
                }
                None => heads.push(name.clone()),
            }
            last = Some(name);
        }
        for (i, &len) in blk.branches.iter().enumerate() {
            let mut prev = last.clone();
            for j in 1..=len {
                let name = format!("{}_b{}_{j}", blk.name, i + 1);
                b.conv(&name, blk.channels, 1);
                match &prev {
                    Some(p) => {
                        b.link(p, &name);
                    }
                    None => heads.push(name.clone()),
                }
                prev = Some(name);
            }
            tails.extend(prev.filter(|_| len > 0));
        }
        if blk.branches.is_empty() {
            tails.extend(last);
        }
        if !prev_tails.is_empty() {
            b.concat(&prev_tails, &heads);
        }
        prev_tails = tails;
    }
    b.conv("final", 1536, 1);
    b.concat(&prev_tails, &["final".to_string()]);
    b.build()
}
