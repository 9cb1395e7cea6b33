fn main() {
    std::process::exit(rjmlt::cli::dispatch(std::env::args_os()));
}
