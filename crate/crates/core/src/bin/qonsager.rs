fn main() {
    std::process::exit(qonsager::cli::main_with_args(std::env::args_os()));
}
