#include "thetapow/cli.hpp"

int main(int argc, char** argv) { return thetapow::cli::run(argc, argv); }
