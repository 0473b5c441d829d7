fn main() {
    std::process::exit(sarop::cli::run(std::env::args_os()));
}
