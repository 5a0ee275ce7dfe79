fn main() {
    std::process::exit(condclt::cli::main_with_args(std::env::args_os()));
}
