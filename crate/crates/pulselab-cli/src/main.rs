fn main() {
    std::process::exit(pulselab_cli::main_with_args(std::env::args_os()));
}
