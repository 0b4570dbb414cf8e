use std::process::ExitCode;

fn main() -> ExitCode {
    lcsurv::cli::run(std::env::args_os())
}
