#include "hiersumm_cli.hpp"

int main(int argc, char** argv) { return hiersumm::cli::run_cli(argc, argv); }
