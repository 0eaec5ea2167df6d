fn main() {
    std::process::exit(qsvd::cli::run(std::env::args_os()));
}
