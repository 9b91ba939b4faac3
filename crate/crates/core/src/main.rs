fn main() {
    std::process::exit(survowl::cli::run(std::env::args_os()));
}
