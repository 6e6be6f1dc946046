fn main() {
    eprintln!("eds: command-line interface not wired yet");
    std::process::exit(64);
}
