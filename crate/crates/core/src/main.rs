fn main() {
    std::process::exit(mcal::cli::main_with_args(std::env::args_os()));
}
