fn main() {
    std::process::exit(steplab_cli::main_with_args(std::env::args_os()));
}
