fn main() {
    std::process::exit(equivar::cli::main_with_args(std::env::args_os()));
}
