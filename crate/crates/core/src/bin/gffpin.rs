fn main() {
    std::process::exit(gffpin::cli::main_with(std::env::args_os()));
}
