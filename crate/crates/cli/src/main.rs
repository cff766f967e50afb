fn main() {
    std::process::exit(permsym_cli::run());
}
