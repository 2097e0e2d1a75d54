fn main() {
    std::process::exit(thermoait::cli::run(std::env::args_os()));
}
