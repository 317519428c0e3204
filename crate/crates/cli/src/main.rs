fn main() {
    std::process::exit(medsim_cli::run(std::env::args_os()));
}
