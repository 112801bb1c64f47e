fn main() {
    std::process::exit(wikiscan::cli::main());
}
