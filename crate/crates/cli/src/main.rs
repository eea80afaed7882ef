fn main() {
    std::process::exit(evoimage_cli::main_with_args(std::env::args_os()));
}
