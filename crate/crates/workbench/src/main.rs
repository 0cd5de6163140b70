use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(workbench::cli::run(std::env::args_os()))
}
