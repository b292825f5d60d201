//! Declarative CNN description prior to consolidation, and its line-oriented
//! text format:
//!
//! ```text
//! # comment
//! network tiny
//! layer conv1 channels=16 stride=1
//! layer conv2 channels=32 stride=2 kernel=3 pool=2
//! layer res1 channels=32 stride=2 resample
//! link conv1 -> conv2
//! link conv1 -> res1 residual
//! concat {conv1 conv2} -> {conv3 conv4}
//! hop conv1 via conv2
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preproc {
    Pool(u32),
    ResidualAdd,
    Resample,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub out_channels: u32,
    pub stride: u32,
    /// Kernel edge length; only used for memory estimates and display.
    pub kernel: u32,
    pub preproc: Option<Preproc>,
}

impl LayerSpec {
    pub fn conv(name: impl Into<String>, out_channels: u32, stride: u32) -> Self {
        LayerSpec {
            name: name.into(),
            out_channels,
            stride,
            kernel: 3,
            preproc: None,
        }
    }

    pub fn is_resampler(&self) -> bool {
        self.preproc == Some(Preproc::Resample)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnKind {
    Feedforward,
    Residual,
    ConcatMember,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connection {
    pub src: String,
    pub dst: String,
    pub kind: ConnKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcatGroup {
    pub sources: Vec<String>,
    pub sinks: Vec<String>,
}

/// Explicit hop carrier for the output of a short parallel branch.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopOverride {
    pub from: String,
    pub via: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InceptionVersion {
    V1,
    V2,
    V3,
    V4,
    ResnetV1,
    ResnetV2,
}

impl InceptionVersion {
    pub const ALL: [InceptionVersion; 6] = [Self::V1, Self::V2, Self::V3, Self::V4, Self::ResnetV1, Self::ResnetV2];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::V1 => "v1",
            Self::V2 => "v2",
            Self::V3 => "v3",
            Self::V4 => "v4",
            Self::ResnetV1 => "resnet_v1",
            Self::ResnetV2 => "resnet_v2",
        }
    }
}

impl std::str::FromStr for InceptionVersion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "v1" => Self::V1,
            "v2" => Self::V2,
            "v3" => Self::V3,
            "v4" => Self::V4,
            "resnet_v1" => Self::ResnetV1,
            "resnet_v2" => Self::ResnetV2,
            _ => return Err(invalid(format!("unsupported inception version `{s}`"))),
        })
    }
}

/// Architecture family, used to pick a constructive mapping strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Feedforward,
    Resnet,
    Densenet,
    Inception(InceptionVersion),
    Custom,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub name: String,
    pub family: Family,
    pub layers: Vec<LayerSpec>,
    pub connections: Vec<Connection>,
    pub concat_groups: Vec<ConcatGroup>,
    pub hop_overrides: Vec<HopOverride>,
}

impl ArchSpec {
    pub fn layer_index(&self) -> BTreeMap<&str, usize> {
        self.layers
            .iter()
            .enumerate()
            .map(|(i, l)| (l.name.as_str(), i))
            .collect()
    }

    /// Checks names, endpoints, layer parameters and acyclicity.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for l in &self.layers {
            if !seen.insert(l.name.as_str()) {
                return Err(invalid(format!("duplicate layer `{}`", l.name)));
            }
            if l.out_channels == 0 {
                return Err(invalid(format!("layer `{}` has zero channels", l.name)));
            }
            if !(1..=2).contains(&l.stride) {
                return Err(invalid(format!("layer `{}` has stride {}", l.name, l.stride)));
            }
        }
        let index = self.layer_index();
        let lookup = |name: &str| {
            index.get(name).copied().ok_or_else(|| Error::UnknownLayer {
                name: name.to_string(),
                line: 0,
            })
        };
        let mut succ = vec![Vec::new(); self.layers.len()];
        for c in &self.connections {
            succ[lookup(&c.src)?].push(lookup(&c.dst)?);
        }
        for g in &self.concat_groups {
            if g.sources.is_empty() || g.sinks.is_empty() {
                return Err(invalid("concat group with an empty side"));
            }
            for s in &g.sources {
                for t in &g.sinks {
                    succ[lookup(s)?].push(lookup(t)?);
                }
            }
        }
        for h in &self.hop_overrides {
            lookup(&h.from)?;
            lookup(&h.via)?;
        }
        if let Some(v) = find_cycle(&succ) {
            return Err(Error::Cycle(self.layers[v].name.clone()));
        }
        Ok(())
    }

    /// Renders the spec in the text format accepted by [`parse_archspec`].
    pub fn to_text(&self) -> String {
        let mut out = format!("network {}\n", self.name);
        for l in &self.layers {
            out.push_str(&format!(
                "layer {} channels={} stride={} kernel={}",
                l.name, l.out_channels, l.stride, l.kernel
            ));
            match l.preproc {
                Some(Preproc::Pool(k)) => out.push_str(&format!(" pool={k}")),
                Some(Preproc::Resample) => out.push_str(" resample"),
                _ => {}
            }
            out.push('\n');
        }
        for c in &self.connections {
            let tag = match c.kind {
                ConnKind::Feedforward => "",
                ConnKind::Residual => " residual",
                ConnKind::ConcatMember => " concat",
            };
            out.push_str(&format!("link {} -> {}{}\n", c.src, c.dst, tag));
        }
        for g in &self.concat_groups {
            out.push_str(&format!(
                "concat {{{}}} -> {{{}}}\n",
                g.sources.join(" "),
                g.sinks.join(" ")
            ));
        }
        for h in &self.hop_overrides {
            out.push_str(&format!("hop {} via {}\n", h.from, h.via));
        }
        out
    }
}

/// Returns a vertex on a directed cycle, if any.
fn find_cycle(succ: &[Vec<usize>]) -> Option<usize> {
    let n = succ.len();
    let mut indeg = vec![0usize; n];
    for s in succ {
        for &t in s {
            indeg[t] += 1;
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut done = 0;
    while let Some(v) = stack.pop() {
        done += 1;
        for &t in &succ[v] {
            indeg[t] -= 1;
            if indeg[t] == 0 {
                stack.push(t);
            }
        }
    }
    (done < n).then(|| (0..n).find(|&v| indeg[v] > 0).unwrap_or(0))
}

/// Incremental construction used by the generators.
#[derive(Debug)]
pub struct ArchBuilder {
    spec: ArchSpec,
}

impl ArchBuilder {
    pub fn new(name: impl Into<String>, family: Family) -> Self {
        ArchBuilder {
            spec: ArchSpec {
                name: name.into(),
                family,
                layers: Vec::new(),
                connections: Vec::new(),
                concat_groups: Vec::new(),
                hop_overrides: Vec::new(),
            },
        }
    }

    pub fn layer(&mut self, layer: LayerSpec) -> &mut Self {
        self.spec.layers.push(layer);
        self
    }

    pub fn conv(&mut self, name: &str, channels: u32, stride: u32) -> &mut Self {
        self.layer(LayerSpec::conv(name, channels, stride))
    }

    pub fn connect(&mut self, src: &str, dst: &str, kind: ConnKind) -> &mut Self {
        self.spec.connections.push(Connection {
            src: src.to_string(),
            dst: dst.to_string(),
            kind,
        });
        self
    }

    pub fn link(&mut self, src: &str, dst: &str) -> &mut Self {
        self.connect(src, dst, ConnKind::Feedforward)
    }

    pub fn concat(&mut self, sources: &[String], sinks: &[String]) -> &mut Self {
        self.spec.concat_groups.push(ConcatGroup {
            sources: sources.to_vec(),
            sinks: sinks.to_vec(),
        });
        self
    }

    pub fn build(self) -> Result<ArchSpec> {
        self.spec.validate()?;
        Ok(self.spec)
    }
}

/// Parses the text format documented at module level.
pub fn parse_archspec(text: &str) -> Result<ArchSpec> {
    let mut name = String::from("custom");
    let mut layers = Vec::new();
    let mut connections = Vec::new();
    let mut concat_groups = Vec::new();
    let mut hop_overrides = Vec::new();
    // name -> (line, column) of every reference, checked once all layers are known
    let mut refs: Vec<(String, usize)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(line);
        let Some((first, col0)) = tokens.first().cloned() else {
            continue;
        };
        let syntax = |column: usize, message: String| Error::Syntax {
            line: line_no,
            column,
            message,
        };
        match first.as_str() {
            "network" => {
                let (n, _) = tokens
                    .get(1)
                    .ok_or_else(|| syntax(col0, "missing network name".into()))?;
                name = n.clone();
            }
            "layer" => {
                let (lname, _) = tokens.get(1).ok_or_else(|| syntax(col0, "missing layer name".into()))?;
                let mut layer = LayerSpec::conv(lname.clone(), 0, 0);
                let (mut channels, mut stride) = (None, None);
                let mut kernel_set = false;
                for (tok, col) in &tokens[2..] {
                    let (key, value) = match tok.split_once('=') {
                        Some((k, v)) => (k, Some(v)),
                        None => (tok.as_str(), None),
                    };
                    let int = || -> Result<u32> {
                        value
                            .and_then(|v| v.parse().ok())
                            .ok_or_else(|| syntax(*col, format!("expected integer in `{tok}`")))
                    };
                    let set_pre = |layer: &mut LayerSpec, p: Preproc| {
                        if layer.preproc.is_some() {
                            Err(syntax(*col, "layer has more than one preprocessing step".into()))
                        } else {
                            layer.preproc = Some(p);
                            Ok(())
                        }
                    };
                    match key {
                        "channels" => channels = Some(int()?),
                        "stride" => stride = Some(int()?),
                        "kernel" => {
                            layer.kernel = int()?;
                            kernel_set = true;
                        }
                        "pool" => set_pre(&mut layer, Preproc::Pool(int()?))?,
                        "resample" if value.is_none() => set_pre(&mut layer, Preproc::Resample)?,
                        _ => return Err(syntax(*col, format!("unknown layer attribute `{tok}`"))),
                    }
                }
                layer.out_channels = channels.ok_or_else(|| syntax(col0, "layer without channels=".into()))?;
                layer.stride = stride.ok_or_else(|| syntax(col0, "layer without stride=".into()))?;
                if layer.is_resampler() && !kernel_set {
                    layer.kernel = 1;
                }
                if layer.out_channels == 0 {
                    return Err(syntax(col0, "channels must be >= 1".into()));
                }
                if !(1..=2).contains(&layer.stride) {
                    return Err(syntax(col0, "stride must be 1 or 2".into()));
                }
                layers.push(layer);
            }
            "link" => {
                let arrow = tokens.get(2).map(|t| t.0.as_str());
                if tokens.len() < 4 || arrow != Some("->") {
                    return Err(syntax(col0, "expected `link <src> -> <dst> [residual|concat]`".into()));
                }
                let kind = match tokens.get(4).map(|t| t.0.as_str()) {
                    None => ConnKind::Feedforward,
                    Some("residual") => ConnKind::Residual,
                    Some("concat") => ConnKind::ConcatMember,
                    Some(other) => return Err(syntax(tokens[4].1, format!("unknown link tag `{other}`"))),
                };
                let (src, dst) = (tokens[1].0.clone(), tokens[3].0.clone());
                refs.push((src.clone(), line_no));
                refs.push((dst.clone(), line_no));
                connections.push(Connection { src, dst, kind });
            }
            "concat" => {
                let body = line.trim_start().strip_prefix("concat").unwrap_or("");
                let (lhs, rhs) = body
                    .split_once("->")
                    .ok_or_else(|| syntax(col0, "expected `concat {..} -> {..}`".into()))?;
                let group = |side: &str| -> Result<Vec<String>> {
                    let inner = side
                        .trim()
                        .strip_prefix('{')
                        .and_then(|s| s.strip_suffix('}'))
                        .ok_or_else(|| syntax(col0, "concat sides must be braced lists".into()))?;
                    let names: Vec<String> = inner
                        .split(|c: char| c.is_whitespace() || c == ',')
                        .filter(|s| !s.is_empty())
                        .map(str::to_string)
                        .collect();
                    if names.is_empty() {
                        return Err(syntax(col0, "empty concat side".into()));
                    }
                    Ok(names)
                };
                let (sources, sinks) = (group(lhs)?, group(rhs)?);
                refs.extend(sources.iter().chain(&sinks).map(|n| (n.clone(), line_no)));
                concat_groups.push(ConcatGroup { sources, sinks });
            }
            "hop" => {
                if tokens.len() != 4 || tokens[2].0 != "via" {
                    return Err(syntax(col0, "expected `hop <layer> via <layer>`".into()));
                }
                refs.push((tokens[1].0.clone(), line_no));
                refs.push((tokens[3].0.clone(), line_no));
                hop_overrides.push(HopOverride {
                    from: tokens[1].0.clone(),
                    via: tokens[3].0.clone(),
                });
            }
            other => return Err(syntax(col0, format!("unknown statement `{other}`"))),
        }
    }

    let known: BTreeSet<&str> = layers.iter().map(|l: &LayerSpec| l.name.as_str()).collect();
    if let Some((name, line)) = refs.iter().find(|(n, _)| !known.contains(n.as_str())) {
        return Err(Error::UnknownLayer {
            name: name.clone(),
            line: *line,
        });
    }
    let spec = ArchSpec {
        name,
        family: Family::Custom,
        layers,
        connections,
        concat_groups,
        hop_overrides,
    };
    spec.validate()?;
    Ok(spec)
}

/// Whitespace tokens with their 1-based columns.
fn tokenize(line: &str) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((line[s..i].to_string(), line[..s].chars().count() + 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((line[s..].to_string(), line[..s].chars().count() + 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = "\
# three layers
layer a channels=16 stride=1
layer b channels=16 stride=1
layer c channels=32 stride=2   # downsample
link a -> b
link b -> c
";

    #[test]
    fn parses_chain() {
        let spec = parse_archspec(CHAIN).unwrap();
        assert_eq!(spec.layers.len(), 3);
        assert_eq!(spec.connections.len(), 2);
        assert!(spec.connections.iter().all(|c| c.kind == ConnKind::Feedforward));
    }

    #[test]
    fn parses_concat_group() {
        let text = "layer A channels=8 stride=1\nlayer B channels=8 stride=1\nlayer C channels=8 stride=1\nconcat {A B} -> {C}\n";
        let spec = parse_archspec(text).unwrap();
        assert_eq!(spec.concat_groups.len(), 1);
        assert_eq!(spec.concat_groups[0].sources, ["A", "B"]);
    }

    #[test]
    fn dangling_reference() {
        let err = parse_archspec("layer a channels=1 stride=1\nlink a -> z\n").unwrap_err();
        assert_eq!(
            err,
            Error::UnknownLayer {
                name: "z".into(),
                line: 2
            }
        );
        assert!(err.to_string().contains("unknown layer"));
    }

    #[test]
    fn cycle_detected() {
        let text = "layer a channels=1 stride=1\nlayer b channels=1 stride=1\nlink a -> b\nlink b -> a\n";
        assert!(matches!(parse_archspec(text), Err(Error::Cycle(_))));
    }

    #[test]
    fn syntax_error_location() {
        let err = parse_archspec("layer a channels=1 stride=1\n  layer b chanels=1 stride=1\n").unwrap_err();
        assert_eq!(
            err,
            Error::Syntax {
                line: 2,
                column: 11,
                message: "unknown layer attribute `chanels=1`".into()
            }
        );
        assert!(matches!(
            parse_archspec("fuse a b\n"),
            Err(Error::Syntax { line: 1, column: 1, .. })
        ));
    }

    #[test]
    fn text_roundtrip() {
        let text = "network t\nlayer a channels=4 stride=1 pool=3\nlayer r channels=4 stride=2 resample\nlayer b channels=4 stride=1\nlink a -> b\nlink a -> r residual\nlink r -> b residual\n";
        let spec = parse_archspec(text).unwrap();
        assert_eq!(spec.layers[1].kernel, 1);
        assert_eq!(parse_archspec(&spec.to_text()).unwrap(), spec);
    }
}
