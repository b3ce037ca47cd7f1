use serde::{Deserialize, Serialize};

use crate::data::{DatasetManifest, FeatureCache};
use crate::error::{Error, Result};
use crate::tasks::{RunOptions, TaskRun, TaskSpec};
use crate::upstream::Upstream;

/// Two equally sized layer sets whose concatenated features are compared.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrationSpec {
    pub layer_sets: [Vec<usize>; 2],
    pub best_layer: usize,
}

impl IntegrationSpec {
    /// (0, 1, best) against (best−1, best, best+1); the window around the best
    /// layer is shifted inward when it touches either end of the stack.
    pub fn around_best(best_layer: usize, num_layers: usize) -> Result<Self> {
        if num_layers < 3 {
            return Err(Error::Config(format!("integration needs 3 layers, upstream has {num_layers}")));
        }
        if best_layer >= num_layers {
            return Err(Error::LayerOutOfRange {
                index: best_layer,
                num_layers,
            });
        }
        let centre = best_layer.clamp(1, num_layers - 2);
        let spec = IntegrationSpec {
            layer_sets: [vec![0, 1, best_layer], vec![centre - 1, centre, centre + 1]],
            best_layer,
        };
        spec.validate(num_layers)?;
        Ok(spec)
    }

    pub fn validate(&self, num_layers: usize) -> Result<()> {
        let [a, b] = &self.layer_sets;
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::Config(format!(
                "layer sets must have equal, non-zero arity ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        for &i in a.iter().chain(b) {
            if i >= num_layers {
                return Err(Error::LayerOutOfRange { index: i, num_layers });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IntegrationOutcome {
    pub spec: IntegrationSpec,
    pub runs: [TaskRun; 2],
    /// Trainable downstream parameters of each setting.
    pub head_parameters: [usize; 2],
}

impl IntegrationOutcome {
    pub fn values(&self) -> [f64; 2] {
        [self.runs[0].result.value, self.runs[1].result.value]
    }

    pub fn table_tsv(&self) -> String {
        let mut out = String::from("upstream\ttask\tlayers\tmetric\tvalue\n");
        for run in &self.runs {
            let r = &run.result;
            let layers: Vec<String> = r.layers.iter().flatten().map(|l| l.to_string()).collect();
            out.push_str(&format!(
                "{}\t{}\t({})\t{}\t{}\n",
                r.upstream,
                r.task,
                layers.join(","),
                r.metric_name,
                r.value
            ));
        }
        out
    }
}

/// Trains the task once per layer set with concatenated features and an
/// otherwise identical protocol.
pub fn integrate_layers(
    task: TaskSpec,
    upstream: &dyn Upstream,
    manifest: &DatasetManifest,
    cache: Option<FeatureCache>,
    integration: &IntegrationSpec,
    opts: &RunOptions,
) -> Result<IntegrationOutcome> {
    integration.validate(upstream.spec().num_layers)?;
    let run = |set: &Vec<usize>| {
        let opts = RunOptions {
            layer_selection: Some(set.clone()),
            ..opts.clone()
        };
        task.run(upstream, manifest, cache.clone(), &opts)
    };
    let first = run(&integration.layer_sets[0])?;
    let second = run(&integration.layer_sets[1])?;
    let count = |r: &TaskRun| r.probes[0].head.num_parameters() + r.probes[0].layer_weights.len();
    let head_parameters = [count(&first), count(&second)];
    assert_eq!(
        head_parameters[0], head_parameters[1],
        "integration settings must have equal downstream parameter counts"
    );
    Ok(IntegrationOutcome {
        spec: integration.clone(),
        runs: [first, second],
        head_parameters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sets() {
        let s = IntegrationSpec::around_best(12, 13).unwrap();
        assert_eq!(s.layer_sets, [vec![0, 1, 12], vec![10, 11, 12]]);
        let s = IntegrationSpec::around_best(8, 13).unwrap();
        assert_eq!(s.layer_sets, [vec![0, 1, 8], vec![7, 8, 9]]);
        let s = IntegrationSpec::around_best(0, 13).unwrap();
        assert_eq!(s.layer_sets[1], vec![0, 1, 2]);
    }

    #[test]
    fn unequal_or_out_of_range_sets() {
        let s = IntegrationSpec {
            layer_sets: [vec![0, 1], vec![2, 3, 4]],
            best_layer: 3,
        };
        assert!(s.validate(13).is_err());
        let s = IntegrationSpec {
            layer_sets: [vec![0, 1, 13], vec![2, 3, 4]],
            best_layer: 3,
        };
        assert!(matches!(s.validate(13), Err(Error::LayerOutOfRange { .. })));
    }
}
