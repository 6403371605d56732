fn main() {
    std::process::exit(degenlap::cli::run(std::env::args_os()));
}
