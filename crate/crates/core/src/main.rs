fn main() {
    std::process::exit(rfr_kit::cli::app::run(std::env::args_os()));
}
