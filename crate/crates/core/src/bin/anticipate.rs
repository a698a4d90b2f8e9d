fn main() {
    std::process::exit(anticipation::cli::main_with_args(std::env::args_os()));
}
