fn main() {
    std::process::exit(dmverify::cli::main_with_args(std::env::args_os()));
}
