use std::path::{Path, PathBuf};

use serde::Serialize;
use survgp_core::xor::{generate_xor_survival, XorParams};

use crate::config::XorSpec;
use crate::error::Result;
use crate::io::{write_dataset, write_json};
use crate::model::{TOOLKIT, VERSION};

#[derive(Serialize)]
struct Sidecar<'a> {
    toolkit: &'a str,
    version: &'a str,
    generator: &'a str,
    params: XorSpec,
    seed: u64,
    /// Upper bounds of the uniform censoring times per distribution.
    censor_bounds: (f64, f64),
    columns: [&'a str; 5],
}

/// Sidecar path next to a data file: `xor.csv` gets `xor.csv.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the XOR cohort to `out` (columns x0, x1, time, event, group,
/// where group is the ground-truth cell id) and its JSON sidecar.
pub fn synth(params: &XorParams, out: &Path) -> Result<()> {
    let data = generate_xor_survival(params)?;
    let groups: Vec<String> = data.cells.iter().map(|c| c.id().to_string()).collect();
    write_dataset(out, &data.dataset, Some(("group", &groups)))?;
    let sidecar = Sidecar {
        toolkit: TOOLKIT,
        version: VERSION,
        generator: "xor",
        params: XorSpec::from_params(params),
        seed: params.seed,
        censor_bounds: data.censor_bounds,
        columns: ["x0", "x1", "time", "event", "group"],
    };
    write_json(&sidecar_path(out), &sidecar)?;
    log::info!("wrote {} patients to {}", params.n, out.display());
    Ok(())
}
