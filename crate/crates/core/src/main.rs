fn main() {
    std::process::exit(rrf_green::cli::run(std::env::args_os()));
}
