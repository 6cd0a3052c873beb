fn main() {
    std::process::exit(bmopt_cli::run(std::env::args_os()));
}
