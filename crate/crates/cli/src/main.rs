use clap::Parser;

fn main() {
    let cli = levelset_cli::Cli::parse();
    let code = levelset_cli::run(cli);
    std::process::exit(code as i32);
}
