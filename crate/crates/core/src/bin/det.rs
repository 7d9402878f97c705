fn main() {
    std::process::exit(det_core::cli::cli_main(std::env::args_os()));
}
