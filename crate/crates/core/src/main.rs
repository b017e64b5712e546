fn main() {
    std::process::exit(aporbit::cli::main_with_args(std::env::args_os()));
}
