fn main() {
    std::process::exit(stkg_cli::run_from(std::env::args_os()));
}
