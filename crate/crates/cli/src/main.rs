fn main() {
    std::process::exit(duetwoz_cli::main_with(std::env::args_os()));
}
