fn main() {
    std::process::exit(treegrad::cli::main_with(std::env::args_os()));
}
