use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(ptrmt_cli::main_with(std::env::args_os()))
}
