//! Resolving a TOML run configuration with command-line style overrides.

use rbf_mem::config::{Overrides, RunConfig};

const CONFIG: &str = r#"
seed = 42
reps = 200

[rbf]
rho = 0.5

[simulate]
preset = "s1-weak"
n_primary = 12
"#;

fn main() -> rbf_mem::Result<()> {
    let cfg = RunConfig::parse(CONFIG)?;
    let scenario = cfg.scenario(&Overrides::default())?;
    println!("from file: {}", serde_json::to_string_pretty(&scenario)?);

    let flags = Overrides {
        reps: Some(20),
        a: Some(0.5),
        width: Some(4),
        ..Overrides::default()
    };
    let scenario = cfg.scenario(&flags)?;
    let settings = cfg.settings(&flags);
    println!(
        "\nwith flags: reps {}, a {}, rho {}, width {}, out {}",
        scenario.reps,
        scenario.rbf.a,
        scenario.rbf.rho,
        settings.width,
        settings.out.display()
    );
    Ok(())
}
