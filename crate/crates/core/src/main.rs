fn main() {
    std::process::exit(consumption_duality::cli::run(std::env::args_os()));
}
