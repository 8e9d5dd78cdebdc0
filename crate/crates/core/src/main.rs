fn main() {
    std::process::exit(tate_core::cli::main_entry());
}
