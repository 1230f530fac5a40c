fn main() {
    std::process::exit(pfifo_cli::run_cli(std::env::args_os()));
}
