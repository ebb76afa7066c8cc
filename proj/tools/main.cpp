#include "cli.hpp"

int main(int argc, char** argv) { return lapinv::cli::run(argc, argv); }
