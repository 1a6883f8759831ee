fn main() {
    std::process::exit(btweave::cli::run(std::env::args_os()));
}
