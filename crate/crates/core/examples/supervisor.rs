//! Supervisor verdicts on clean, duplicate, malformed and miscalibrated
//! interviewer output.

use std::collections::BTreeSet;

use evalnet::engine::supervise;
use evalnet::tasks::{parse_material, render_malformed, render_material, Generator, TaskId};

fn main() {
    let gen = Generator::default();
    let task = TaskId::ArithOper;
    let ideal = gen.procedural_material(task, 2, 11).unwrap();
    let build = |text: &str| parse_material(task, text).and_then(|m| gen.build(task, 2, 1, 11, m, "gen", 0));

    let clean = build(&render_material(&ideal)).unwrap();
    let v = supervise(Ok(&clean), &BTreeSet::new(), 3, gen.params(), None);
    println!("clean:        {:?}", v.category);

    let seen = BTreeSet::from([clean.query.hash()]);
    let v = supervise(Ok(&clean), &seen, 3, gen.params(), None);
    println!("duplicate:    {:?}", v.category);

    let bad = build(&render_malformed(&ideal));
    let v = supervise(bad.as_ref(), &BTreeSet::new(), 3, gen.params(), None);
    println!("malformed:    {:?}", v.category);

    let wrong = gen.miscalibrated(&ideal, 11).unwrap();
    let qa = build(&render_material(&wrong)).unwrap();
    let v = supervise(Ok(&qa), &BTreeSet::new(), 3, gen.params(), None);
    println!(
        "miscalibrated: {:?}, claimed {} corrected to {}",
        v.category,
        v.usable().unwrap().provenance.claimed.as_ref().unwrap().render(),
        v.usable().unwrap().truth.render()
    );
}
