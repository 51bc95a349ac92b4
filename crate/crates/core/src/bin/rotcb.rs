fn main() {
    std::process::exit(rotcb::harness::cli::run(std::env::args_os()));
}
