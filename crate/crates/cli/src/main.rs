fn main() {
    std::process::exit(activehne_cli::run_cli(std::env::args_os()));
}
