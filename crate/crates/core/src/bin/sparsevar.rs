fn main() {
    std::process::exit(sparsevar::cli::main_with_args(std::env::args_os()));
}
