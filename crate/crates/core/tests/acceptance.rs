//! Runs the eleven acceptance criteria and prints one line per criterion.
//! Exits nonzero if any criterion fails.

use kmfix::suite::run_all;

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let results = run_all(dir.path());
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
