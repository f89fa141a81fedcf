fn main() {
    std::process::exit(optoread::cli::main_with_args(std::env::args_os()));
}
