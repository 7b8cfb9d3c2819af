//! Runs the tri-bump candidate search and writes fixtures/tri_bump.json.

use desitter_core::fixtures::search_tri_bump;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fx = search_tri_bump()?;
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tri_bump.json");
    std::fs::write(&path, serde_json::to_string_pretty(&fx)? + "\n")?;
    println!("{}: ratio {:.3}, out {:e} +- {:e}", path.display(), fx.ratio, fx.out.value.re, fx.out.error);
    Ok(())
}
