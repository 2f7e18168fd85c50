use std::process::ExitCode;

fn main() -> ExitCode {
    facewall::cli::main(std::env::args_os())
}
