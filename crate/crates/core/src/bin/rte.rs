fn main() {
    std::process::exit(rte::cli::main());
}
