fn main() {
    std::process::exit(huls::cli::main());
}
