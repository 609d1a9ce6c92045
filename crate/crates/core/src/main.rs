fn main() {
    std::process::exit(listdec::cli::run(std::env::args_os()));
}
