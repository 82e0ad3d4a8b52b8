use meta3dseg::cli;

fn main() {
    std::process::exit(cli::run());
}
