fn main() {
    std::process::exit(stqp::cli::main_with(std::env::args_os()));
}
