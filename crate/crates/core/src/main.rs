use std::process::ExitCode;

fn main() -> ExitCode {
    kinetic_bte::cli::main_entry()
}
