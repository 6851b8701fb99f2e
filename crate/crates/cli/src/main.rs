fn main() {
    std::process::exit(asymconj_cli::run(std::env::args_os()));
}
