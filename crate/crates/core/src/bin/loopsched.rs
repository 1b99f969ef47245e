fn main() {
    std::process::exit(loopsched::cli::main_with_args(std::env::args_os()));
}
