fn main() {
    std::process::exit(motifscan::cli::run(std::env::args_os()));
}
