fn main() {
    std::process::exit(charged_capillarity::cli::run(std::env::args_os()));
}
