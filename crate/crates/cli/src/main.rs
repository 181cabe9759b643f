fn main() {
    std::process::exit(trapforge::run(std::env::args_os()));
}
