//! Rewrites the bundled profile, surface and trace CSVs from their generators.

use splitedge::problem::bundled;

fn main() -> std::io::Result<()> {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    std::fs::write(
        root.join("profiles/vgg19_synthetic.csv"),
        bundled::profile().to_csv_string(),
    )?;
    std::fs::write(
        root.join("surfaces/vgg19_synthetic.csv"),
        bundled::surface().to_csv_string(),
    )?;
    std::fs::write(
        root.join("traces/outdoor_synthetic.csv"),
        bundled::trace().to_csv_string(),
    )?;
    Ok(())
}
