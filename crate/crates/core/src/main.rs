fn main() {
    std::process::exit(covsent::cli::run(std::env::args_os()));
}
