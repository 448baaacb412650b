fn main() {
    std::process::exit(predsens::cli::main_with_args(std::env::args_os()));
}
