fn main() {
    std::process::exit(coarse_lp_cli::dispatch(std::env::args_os()));
}
