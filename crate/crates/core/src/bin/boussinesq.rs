fn main() {
    std::process::exit(boussinesq_core::cli::run_cli(std::env::args_os()));
}
