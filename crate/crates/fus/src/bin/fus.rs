fn main() {
    std::process::exit(fus::cli::main_with_args(std::env::args_os()));
}
