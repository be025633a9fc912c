fn main() {
    std::process::exit(tlsheat::cli::run(std::env::args_os()));
}
