use std::process::ExitCode;

fn main() -> ExitCode {
    flat_tori::cli::main()
}
