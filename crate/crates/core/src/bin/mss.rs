fn main() {
    if let Err(e) = mss::cli::run(std::env::args()) {
        match e {
            mss::cli::CliError::Usage(msg) => {
                eprint!("{msg}");
                std::process::exit(2);
            }
            other => {
                eprintln!("error: {other}");
                std::process::exit(1);
            }
        }
    }
}
