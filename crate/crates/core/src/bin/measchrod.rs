fn main() {
    std::process::exit(measchrod::cli::main_with(std::env::args_os()));
}
