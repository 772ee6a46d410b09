//! Interrupt a persisted run, resume it, and rebuild its report from disk.

use evalnet::config::load_config;
use evalnet::engine::RunControl;
use evalnet::session::{load_report, resume_run, start_run};
use evalnet::store::RunStore;

fn main() {
    let config = load_config(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/star.toml").as_ref()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let store = RunStore::new(dir.path());

    let mut s = start_run(&store, &config, "demo", false, &RunControl::halt_after_rounds(25)).unwrap();
    let mut passes = 1;
    while s.run.interrupted {
        s = resume_run(&store, "demo", Some(&config), false, &RunControl::halt_after_rounds(25)).unwrap();
        passes += 1;
    }
    println!("finished after {passes} passes");
    for id in store.list().unwrap() {
        println!("stored run {id}");
    }
    print!("{}", load_report(&store, "demo").unwrap().render_table());
}
