//! Talk to a code runner over the length-prefixed JSON protocol.
//!
//! Usage: sandbox_runner [PROGRAM [ARGS...]]; defaults to the test fixture.

use evalnet::sandbox::{CodeRunner, ExecRequest, ProcessRunner};

fn main() {
    let mut args: Vec<String> = std::env::args().skip(1).collect();
    let program = if args.is_empty() {
        args.push(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/fake_runner.py").into());
        "python3".to_string()
    } else {
        args.remove(0)
    };
    let runner = ProcessRunner::new(program, args, 1);
    for code in ["print(sum(range(10)))", "raise SystemExit(3)", "while True: pass"] {
        match runner.execute(&ExecRequest::new(code, 500, 128)) {
            Ok(out) => println!("{code:?}: {:?} {:?}", out.status, out.stdout.trim()),
            Err(e) => println!("{code:?}: {e}"),
        }
    }
}
