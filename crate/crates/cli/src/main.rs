fn main() {
    std::process::exit(grover_sta_cli::main_with_args(std::env::args_os()));
}
