//! Generate a question per task at a few levels and check the ideal answer.

use evalnet::tasks::{parse_answer, render_answer, verify, Generator, TaskId, VerifyContext};

fn main() {
    let gen = Generator::default();
    let ctx = VerifyContext::new(gen.params());
    for task in [
        TaskId::ArithOper,
        TaskId::Btt,
        TaskId::SpsNode,
        TaskId::Sp,
        TaskId::StuMask,
    ] {
        for level in [1, 3] {
            let qa = gen.procedural(task, level, 1, 7).unwrap();
            let good = parse_answer(task, &render_answer(&qa, true)).unwrap();
            let bad = parse_answer(task, &render_answer(&qa, false)).unwrap();
            println!(
                "{task} level {level} (variable {:.2}): ideal {} / wrong {}",
                gen.params().variable(task, level),
                verify(&qa, &good, &ctx).unwrap(),
                verify(&qa, &bad, &ctx).unwrap(),
            );
        }
    }
    let qa = gen.procedural(TaskId::ArithScale, 2, 1, 3).unwrap();
    println!("\n{}\ntruth: {}", qa.query.text, qa.truth.render());
}
