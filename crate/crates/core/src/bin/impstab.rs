fn main() {
    std::process::exit(impstab::cli::run_from(std::env::args_os()));
}
