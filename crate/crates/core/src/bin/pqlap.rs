fn main() {
    std::process::exit(pqlap::cli::run(std::env::args_os()));
}
