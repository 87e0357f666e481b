fn main() {
    std::process::exit(secreq::cli::main_with_args(std::env::args_os()));
}
