fn main() {
    std::process::exit(spinrestrict::cli::main_with_args(std::env::args_os()));
}
