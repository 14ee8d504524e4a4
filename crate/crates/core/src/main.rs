fn main() {
    std::process::exit(tness::cli::main_with_args(std::env::args_os()));
}
