fn main() {
    std::process::exit(mfhawkes::cli::run(std::env::args_os()));
}
