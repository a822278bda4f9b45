fn main() {
    std::process::exit(tandem::cli::run(std::env::args_os()));
}
