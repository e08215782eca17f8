use std::process::ExitCode;

fn main() -> ExitCode {
    hdrinterp::cli::run_from(std::env::args_os())
}
