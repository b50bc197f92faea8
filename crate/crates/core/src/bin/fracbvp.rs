use std::io::{self, Write};
use std::panic;
use std::process;

fn main() {
    let code = panic::catch_unwind(|| {
        let stdout = io::stdout();
        let stderr = io::stderr();
        let mut out = io::BufWriter::new(stdout.lock());
        let mut err = stderr.lock();
        let code = fracbvp::cli::run(std::env::args_os(), &mut out, &mut err);
        if out.flush().is_err() {
            return fracbvp::cli::EXIT_USAGE;
        }
        code
    })
    .unwrap_or(fracbvp::cli::EXIT_NUMERICAL);
    process::exit(code);
}
