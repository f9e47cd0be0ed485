//! Writes a preset to a scenario file, edits it and reads it back.

use epictrl::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut scenario = Scenario::preset("italy-2020")?;
    scenario.name = "italy-2020-lambda8".into();
    scenario.weights.lambda2 = 8.0;

    let path = std::env::temp_dir().join("italy-2020-lambda8.toml");
    scenario.save(&path)?;
    println!("{}:\n{}", path.display(), std::fs::read_to_string(&path)?);
    assert_eq!(Scenario::load(&path)?, scenario);

    let broken = std::fs::read_to_string(&path)?.replace("u_max = 0.135", "u_max = 0.3");
    match Scenario::from_toml_str(&broken) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected edit: {e}"),
    }
    match Scenario::preset("spain-2020") {
        Ok(_) => println!("unexpectedly found"),
        Err(e) => println!("{e}"),
    }
    Ok(())
}
