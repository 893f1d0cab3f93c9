fn main() {
    std::process::exit(fswt_cli::run(std::env::args_os()));
}
