fn main() {
    std::process::exit(hypotorus::cli::run(std::env::args_os()));
}
