//! `pptm keygen`: initialize a deployment and write each role's material
//! to its own file.

use std::path::{Path, PathBuf};

use clap::Args;
use pptm::entities::TaState;

use crate::CliError;

#[derive(Args)]
pub struct KeygenArgs {
    /// Output directory (created if missing).
    #[arg(long, default_value = "material")]
    pub out: PathBuf,

    /// How many vehicles to register.
    #[arg(long, default_value_t = 1)]
    pub vehicles: usize,

    /// Identity of the roadside unit.
    #[arg(long, default_value = "rsu-1")]
    pub rsu_id: String,
}

pub fn run(args: &KeygenArgs, seed: Option<u64>, config: Option<&Path>) -> Result<(), CliError> {
    let config = crate::load_config(config)?;
    let seed = seed.unwrap_or(0);

    let mut ta = TaState::init(config, seed)
        .map_err(|e| CliError::input(format!("initialization failed: {e}")))?;
    let rsu = ta
        .register_rsu(args.rsu_id.as_bytes())
        .map_err(|e| CliError::input(format!("RSU registration failed: {e}")))?;

    std::fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("rsu.json"), &rsu)?;

    for vi in 0..args.vehicles {
        let material = ta
            .register_vehicle(&format!("vehicle-{vi:03}"), args.rsu_id.as_bytes())
            .map_err(|e| CliError::input(format!("vehicle registration failed: {e}")))?;
        write_json(&args.out.join(format!("vehicle-{vi:03}.json")), &material)?;
    }

    let sp = ta
        .sp_material(args.rsu_id.as_bytes())
        .map_err(|e| CliError::input(format!("{e}")))?;
    write_json(&args.out.join("sp.json"), &sp)?;

    println!(
        "wrote material for 1 RSU, {} vehicle(s) and the service provider to {}",
        args.vehicles,
        args.out.display()
    );
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::input(format!("serialize: {e}")))?;
    bytes.push(b'\n');
    std::fs::write(path, bytes)?;
    Ok(())
}
