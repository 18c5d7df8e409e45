fn main() {
    std::process::exit(cautious::cli::run());
}
