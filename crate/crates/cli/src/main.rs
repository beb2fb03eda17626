use std::io;

fn main() {
    let code = fraclab_cli::dispatch(std::env::args_os(), &mut io::stdin().lock(), &mut io::stdout().lock(), &mut io::stderr().lock());
    std::process::exit(code);
}
