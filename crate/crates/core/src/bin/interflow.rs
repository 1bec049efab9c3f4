fn main() {
    interflow::cli::init_logging();
    std::process::exit(interflow::cli::dispatch(std::env::args_os()));
}
