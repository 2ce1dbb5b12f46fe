//! Partitions with their modularity report on disk.

use modnet_core::mlp::NeuronId;
use modnet_core::modules::{Method, ModularityReport, Partition};
use serde::{Deserialize, Serialize};

use crate::artifact::{Artifact, Provenance};
use crate::error::{Error, Result};

pub const PARTITION: &str = "partition";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportData {
    pub isolation: f64,
    pub ari: f64,
    pub q: f64,
    pub score: f64,
    pub communities: usize,
    pub per_community: Vec<f64>,
}

impl From<&ModularityReport> for ReportData {
    fn from(r: &ModularityReport) -> Self {
        Self {
            isolation: r.isolation,
            ari: r.ari,
            q: r.q,
            score: r.score,
            communities: r.communities,
            per_community: r.per_community.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionBody {
    pub method: String,
    pub detect_seed: u64,
    /// Content hash of the checkpoint the partition describes.
    pub checkpoint: String,
    /// `("layer:index", label)` in neuron order.
    pub assignments: Vec<(String, usize)>,
    pub unassigned: Vec<String>,
    pub report: ReportData,
}

pub type PartitionFile = Artifact<PartitionBody>;

impl PartitionBody {
    pub fn new(method: Method, detect_seed: u64, checkpoint: &str, p: &Partition, r: &ModularityReport) -> Self {
        Self {
            method: method.name().into(),
            detect_seed,
            checkpoint: checkpoint.into(),
            assignments: p.nodes().iter().zip(p.labels()).map(|(n, &l)| (n.to_string(), l)).collect(),
            unassigned: p.unassigned().iter().map(|n| n.to_string()).collect(),
            report: r.into(),
        }
    }

    pub fn partition(&self) -> Result<Partition> {
        let parse = |s: &str| s.parse::<NeuronId>().map_err(|_| Error::Invalid(format!("bad neuron id `{s}`")));
        let mut nodes = Vec::with_capacity(self.assignments.len());
        let mut labels = Vec::with_capacity(self.assignments.len());
        for (id, l) in &self.assignments {
            nodes.push(parse(id)?);
            labels.push(*l);
        }
        let unassigned = self.unassigned.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?;
        Ok(Partition::new(nodes, labels, unassigned)?)
    }
}

pub fn partition_artifact(body: PartitionBody, provenance: Provenance) -> PartitionFile {
    Artifact::new(PARTITION, provenance, body)
}
