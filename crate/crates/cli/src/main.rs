fn main() {
    std::process::exit(sirc_mfg::run(std::env::args_os()));
}
