use std::process::ExitCode;

fn main() -> ExitCode {
    uniradar::cli::main_with_args(std::env::args_os())
}
