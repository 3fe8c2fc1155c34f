fn main() {
    std::process::exit(qbag_bench::cli_main(std::env::args_os()));
}
