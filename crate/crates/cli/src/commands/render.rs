use std::path::Path;

use survgp_core::tree::TreeFormat;

use crate::error::{CliError, Result};
use crate::io::read_json;
use crate::model::ModelFile;

/// Renders every member (or only `member`) in complexity order.
pub fn render_model(
    model: &ModelFile,
    format: TreeFormat,
    member: Option<usize>,
) -> Result<String> {
    let mut members: Vec<_> = model
        .members
        .iter()
        .filter(|m| member.is_none_or(|id| m.id == id))
        .collect();
    if members.is_empty() {
        return Err(CliError::Usage(format!(
            "no member {}",
            member.unwrap_or_default()
        )));
    }
    members.sort_by_key(|m| (m.complexity, m.id));
    let mut out = String::new();
    for m in members {
        let tree = m.tree.to_tree()?;
        let body = tree.render(format, &model.covariates);
        match format {
            TreeFormat::Text => {
                out.push_str(&format!(
                    "# member {} complexity {} ibs {}\n{}",
                    m.id, m.complexity, m.fitness_ibs, body
                ));
                if !body.ends_with('\n') {
                    out.push('\n');
                }
                out.push('\n');
            }
            TreeFormat::Dot => {
                out.push_str(&format!(
                    "// member {} complexity {}\n{}",
                    m.id, m.complexity, body
                ));
                if !body.ends_with('\n') {
                    out.push('\n');
                }
            }
        }
    }
    Ok(out)
}

pub fn render(model_path: &Path, format: &str, member: Option<usize>) -> Result<String> {
    let format: TreeFormat = format
        .parse()
        .map_err(|e: survgp_core::Error| CliError::Usage(e.to_string()))?;
    let model: ModelFile = read_json(model_path)?;
    render_model(&model, format, member)
}
