fn main() {
    std::process::exit(purify::cli::main_with_args(std::env::args_os()));
}
