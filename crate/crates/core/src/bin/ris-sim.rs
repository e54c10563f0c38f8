fn main() {
    std::process::exit(ris_sim::harness::cli_main(std::env::args_os()));
}
