fn main() {
    std::process::exit(wrts_cli::run(std::env::args_os()));
}
