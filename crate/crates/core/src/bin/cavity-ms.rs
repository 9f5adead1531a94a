fn main() {
    std::process::exit(cavity_ms::harness::cli::run(std::env::args_os()));
}
