fn main() {
    std::process::exit(osf_cli::main_with_args(std::env::args_os()));
}
