fn main() {
    std::process::exit(scarn_cli::run(std::env::args_os()));
}
