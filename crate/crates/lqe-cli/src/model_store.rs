//! Versioned JSON persistence for trained models.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use lqe_core::learn::TrainedModel;

use crate::CliError;

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    model: TrainedModel,
}

pub fn save_model(path: &Path, model: &TrainedModel) -> Result<(), CliError> {
    let doc = ModelDocument { format_version: FORMAT_VERSION, model: model.clone() };
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<TrainedModel, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let doc: ModelDocument = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if doc.format_version != FORMAT_VERSION {
        return Err(CliError::Data(format!(
            "{}: unsupported model format version {}",
            path.display(),
            doc.format_version
        )));
    }
    Ok(doc.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lqe_core::featurize::LinkClass::{Bad, Good};
    use lqe_core::learn::{fit, FeatureMatrix, Hyperparams, ModelKind};

    #[test]
    fn models_round_trip_with_identical_predictions() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let x = FeatureMatrix::from_rows(refs.into_iter()).unwrap();
        let y: Vec<_> = (0..20).map(|i| if i < 10 { Bad } else { Good }).collect();
        let dir = tempfile::tempdir().unwrap();
        for kind in ModelKind::ALL {
            let mut hp = Hyperparams::with_seed(3);
            hp.forest.n_trees = 5;
            let model = fit(kind, &hp, &x, &y).unwrap();
            let path = dir.path().join(format!("{kind}.json"));
            save_model(&path, &model).unwrap();
            let loaded = load_model(&path).unwrap();
            assert_eq!(loaded.predict(&x).unwrap(), model.predict(&x).unwrap(), "{kind}");
        }
    }

    #[test]
    fn wrong_version_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        std::fs::write(&path, r#"{"format_version": 99, "model": {}}"#).unwrap();
        assert!(load_model(&path).is_err());
    }
}
