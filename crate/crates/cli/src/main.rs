fn main() {
    std::process::exit(parsvd_cli::run(std::env::args_os()));
}
