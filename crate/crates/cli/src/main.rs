fn main() {
    std::process::exit(blmlab_cli::main_with_args(std::env::args_os()));
}
