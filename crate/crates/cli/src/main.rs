fn main() {
    std::process::exit(xconv::run(std::env::args_os()));
}
