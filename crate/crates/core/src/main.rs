fn main() {
    std::process::exit(seizure_acs_core::cli::main_with_args(std::env::args_os()));
}
