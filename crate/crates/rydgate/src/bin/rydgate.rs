use clap::Parser;
use rydgate::cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(threads) = std::env::var("RYDGATE_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    let mut stdout = std::io::stdout();
    if let Err(err) = run(&cli, &mut stdout) {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
