fn main() {
    std::process::exit(forme_cli::main_entry());
}
