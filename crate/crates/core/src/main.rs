fn main() {
    std::process::exit(crowdcode::cli::run(std::env::args_os()));
}
