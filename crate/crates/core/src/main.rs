fn main() {
    std::process::exit(frontwave::cli::main_with_args(std::env::args_os()));
}
