//! SVG and DOT drawings of spatially embedded networks.

use std::fmt::Write as _;
use std::str::FromStr;

use modnet_core::mlp::{NeuronId, SpatialMlp};
use modnet_core::modules::Partition;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Svg,
    Dot,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Svg => "svg",
            Format::Dot => "dot",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svg" => Ok(Format::Svg),
            "dot" => Ok(Format::Dot),
            _ => Err(Error::Format(s.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderStyle {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    /// Stroke width per unit of `|w|`.
    pub line_scale: f64,
    pub positive: String,
    pub negative: String,
    /// Community colours, cycled when there are more communities.
    pub palette: Vec<String>,
    /// Fill for neurons without a community.
    pub neutral: String,
    pub node_radius: f64,
    pub input_labels: bool,
    pub output_labels: bool,
}

impl Default for RenderStyle {
    fn default() -> Self {
        let palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#bcbd22", "#17becf"];
        Self {
            width: 800.0,
            height: 600.0,
            margin: 60.0,
            line_scale: 2.0,
            positive: "#3b6fb6".into(),
            negative: "#d1453b".into(),
            palette: palette.iter().map(|s| s.to_string()).collect(),
            neutral: "#b0b0b0".into(),
            node_radius: 5.0,
            input_labels: true,
            output_labels: true,
        }
    }
}

impl RenderStyle {
    pub fn validate(&self) -> Result<()> {
        if !(self.line_scale > 0.0 && self.line_scale.is_finite()) {
            return Err(Error::Invalid("line scale must be positive".into()));
        }
        if !(self.width > 2.0 * self.margin && self.height > 2.0 * self.margin && self.margin >= 0.0) {
            return Err(Error::Invalid("canvas must be larger than twice the margin".into()));
        }
        if self.palette.is_empty() {
            return Err(Error::Invalid("palette must not be empty".into()));
        }
        Ok(())
    }
}

/// Names drawn next to input and output neurons.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Labels {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

struct Layout<'a> {
    net: &'a SpatialMlp,
    style: &'a RenderStyle,
}

impl Layout<'_> {
    fn pos(&self, id: NeuronId) -> (f64, f64) {
        let s = self.style;
        let n = self.net.sizes()[id.layer] as f64;
        let x = s.margin + (self.net.x(id) + 0.5 / n) * (s.width - 2.0 * s.margin);
        let layers = self.net.sizes().len();
        let frac = if layers > 1 { id.layer as f64 / (layers - 1) as f64 } else { 0.0 };
        (x, s.height - s.margin - frac * (s.height - 2.0 * s.margin))
    }

    fn edges(&self) -> Vec<(NeuronId, NeuronId, f64)> {
        let mut out = Vec::new();
        for l in 0..self.net.depth() {
            let cols = self.net.sizes()[l + 1];
            for (k, (&w, &live)) in self.net.weights(l).iter().zip(self.net.weight_mask(l)).enumerate() {
                if live && w != 0.0 {
                    out.push((NeuronId::new(l, k / cols), NeuronId::new(l + 1, k % cols), w));
                }
            }
        }
        out
    }

    fn fill(&self, id: NeuronId, partition: Option<&Partition>) -> &str {
        match partition.and_then(|p| p.label_of(id)) {
            Some(c) => &self.style.palette[c % self.style.palette.len()],
            None => &self.style.neutral,
        }
    }

    fn edge_colour(&self, w: f64) -> &str {
        if w > 0.0 {
            &self.style.positive
        } else {
            &self.style.negative
        }
    }
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Draws `net`, colouring neurons by community when a partition is given.
/// `comment` is embedded verbatim (sanitised) so files carry their
/// provenance. Identical inputs give identical bytes.
pub fn render(
    net: &SpatialMlp,
    partition: Option<&Partition>,
    style: &RenderStyle,
    labels: &Labels,
    format: Format,
    comment: &str,
) -> Result<Vec<u8>> {
    style.validate()?;
    let layout = Layout { net, style };
    let text = match format {
        Format::Svg => svg(&layout, partition, labels, comment),
        Format::Dot => dot(&layout, partition, labels, comment),
    };
    Ok(text.into_bytes())
}

fn label_for<'a>(net: &SpatialMlp, style: &RenderStyle, labels: &'a Labels, id: NeuronId) -> Option<&'a str> {
    if id.layer == 0 && style.input_labels {
        labels.inputs.get(id.index).map(String::as_str)
    } else if id.layer + 1 == net.sizes().len() && style.output_labels {
        labels.outputs.get(id.index).map(String::as_str)
    } else {
        None
    }
}

fn svg(layout: &Layout<'_>, partition: Option<&Partition>, labels: &Labels, comment: &str) -> String {
    let (net, s) = (layout.net, layout.style);
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<!-- {} -->", comment.replace("--", "- -"));
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">",
        s.width, s.height, s.width, s.height
    );
    out.push_str("<g stroke-linecap=\"round\">\n");
    for (a, b, w) in layout.edges() {
        let ((x1, y1), (x2, y2)) = (layout.pos(a), layout.pos(b));
        let _ = writeln!(
            out,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"{}\" stroke-width=\"{:.3}\"/>",
            layout.edge_colour(w),
            s.line_scale * w.abs()
        );
    }
    out.push_str("</g>\n<g stroke=\"#333333\" stroke-width=\"0.8\">\n");
    for id in net.neurons() {
        let (x, y) = layout.pos(id);
        let fill = if net.is_neuron_live(id) { layout.fill(id, partition) } else { "none" };
        let _ = writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{:.2}\" fill=\"{fill}\"/>", s.node_radius);
    }
    out.push_str("</g>\n<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#222222\" text-anchor=\"middle\">\n");
    for id in net.neurons() {
        if let Some(text) = label_for(net, s, labels, id) {
            let (x, y) = layout.pos(id);
            let dy = if id.layer == 0 { s.node_radius + 14.0 } else { -(s.node_radius + 6.0) };
            let _ = writeln!(out, "<text x=\"{x:.2}\" y=\"{:.2}\">{}</text>", y + dy, escape_xml(text));
        }
    }
    out.push_str("</g>\n</svg>\n");
    out
}

fn node_name(id: NeuronId) -> String {
    format!("n{}_{}", id.layer, id.index)
}

fn dot(layout: &Layout<'_>, partition: Option<&Partition>, labels: &Labels, comment: &str) -> String {
    let (net, s) = (layout.net, layout.style);
    let mut out = String::new();
    let _ = writeln!(out, "/* {} */", comment.replace("*/", "* /"));
    out.push_str("graph network {\n");
    out.push_str("  graph [splines=false, outputorder=edgesfirst];\n");
    out.push_str("  node [shape=circle, style=filled, fixedsize=true, fontsize=8, color=\"#333333\"];\n");
    // Graphviz points, y growing upwards.
    let scale = 72.0 / 96.0;
    let size = format!("{:.2}", 2.0 * s.node_radius / 96.0);
    for id in net.neurons() {
        let (x, y) = layout.pos(id);
        let fill = if net.is_neuron_live(id) { layout.fill(id, partition) } else { "#ffffff" };
        let label = label_for(net, s, labels, id).unwrap_or("").replace('\\', "\\\\").replace('"', "\\\"");
        let _ = writeln!(
            out,
            "  {} [pos=\"{:.2},{:.2}!\", width={size}, fillcolor=\"{fill}\", xlabel=\"{label}\", label=\"\"];",
            node_name(id),
            x * scale,
            (s.height - y) * scale
        );
    }
    for (a, b, w) in layout.edges() {
        let _ = writeln!(
            out,
            "  {} -- {} [color=\"{}\", penwidth={:.3}];",
            node_name(a),
            node_name(b),
            layout.edge_colour(w),
            s.line_scale * w.abs()
        );
    }
    out.push_str("}\n");
    out
}
