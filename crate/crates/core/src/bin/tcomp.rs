fn main() {
    std::process::exit(tcomp::cli::main(std::env::args_os()));
}
