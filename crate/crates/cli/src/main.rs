use clap::error::ErrorKind;
use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EVEX_LOG", "warn")).init();
    let cli = match evolime::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            std::process::exit(code);
        }
    };
    if let Err(e) = evolime::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
