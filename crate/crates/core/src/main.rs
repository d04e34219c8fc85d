fn main() {
    std::process::exit(polyrefine::cli::run(std::env::args_os()));
}
