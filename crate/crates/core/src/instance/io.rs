use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Instance, InstanceError, TaskSpec, WorkerSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    version: u32,
    tasks: Vec<TaskSpec>,
    workers: Vec<WorkerSpec>,
    edges: Vec<[usize; 2]>,
    num_features: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    horizon: Option<u32>,
}

impl Instance {
    pub fn to_json_string(&self) -> String {
        let file = InstanceFile {
            version: SCHEMA_VERSION,
            tasks: self.tasks.clone(),
            workers: self.workers.clone(),
            edges: self.edges.iter().map(|&(i, j)| [i, j]).collect(),
            num_features: self.num_features,
            horizon: self.horizon,
        };
        serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
    }

    pub fn from_json_str(s: &str) -> Result<Self, InstanceError> {
        let file: InstanceFile = serde_json::from_str(s).map_err(|e| InstanceError::Schema(e.to_string()))?;
        if file.version != SCHEMA_VERSION {
            return Err(InstanceError::Schema(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                file.version
            )));
        }
        Ok(Instance::new(
            file.tasks,
            file.workers,
            file.edges.into_iter().map(|[i, j]| (i, j)).collect(),
            file.num_features,
            file.horizon,
        ))
    }
}

pub fn save_json(instance: &Instance, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    let mut s = instance.to_json_string();
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn load_json(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    let s = fs::read_to_string(path)?;
    Instance::from_json_str(&s)
}
