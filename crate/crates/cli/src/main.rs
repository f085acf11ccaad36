fn main() {
    std::process::exit(taxelsim_cli::run_command(std::env::args_os()));
}
