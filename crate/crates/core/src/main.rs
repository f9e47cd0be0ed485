fn main() {
    std::process::exit(epictrl::cli::run(std::env::args_os()));
}
