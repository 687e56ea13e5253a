fn main() {
    std::process::exit(jacobi_jost::harness::main_with_args(std::env::args_os()));
}
