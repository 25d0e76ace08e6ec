fn main() {
    std::process::exit(fqsvt::cli::main_with(std::env::args_os()));
}
