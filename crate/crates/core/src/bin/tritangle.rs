fn main() {
    std::process::exit(tritangle::cli::main_with(std::env::args_os()));
}
