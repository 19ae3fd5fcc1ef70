fn main() {
    std::process::exit(satstream_cli::main_with_args(std::env::args_os()));
}
