fn main() {
    std::process::exit(aggsense::cli::main_with_args(std::env::args_os()));
}
