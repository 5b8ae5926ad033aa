fn main() {
    std::process::exit(semiwave::cli::main_with_args(std::env::args_os()));
}
