fn main() {
    std::process::exit(covclust::cli::parse_and_dispatch(std::env::args_os()));
}
