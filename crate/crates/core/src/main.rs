fn main() -> std::process::ExitCode {
    ankle_shared::cli::main_entry()
}
