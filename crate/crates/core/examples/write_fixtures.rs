//! Regenerates the files under `fixtures/`.
//!
//! ```text
//! cargo run -p splinter-core --example write_fixtures
//! ```

use std::fs;
use std::path::Path;

use splinter::synthetic;

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("synthetic_corpus.txt"), synthetic::templatic_corpus())?;
    fs::write(
        dir.join("lexical_decisions.csv"),
        synthetic::lexical_decision_csv(7),
    )?;
    Ok(())
}
