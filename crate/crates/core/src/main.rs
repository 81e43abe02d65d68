use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CROWDLENS_LOG_LEVEL", "warn")).init();
    let quit = Arc::new(AtomicBool::new(false));
    let q = quit.clone();
    if let Err(e) = ctrlc::set_handler(move || q.store(true, Ordering::SeqCst)) {
        log::warn!("cannot install Ctrl-C handler: {e}");
    }
    std::process::exit(crowdlens::cli::run_cli(std::env::args_os(), quit));
}
