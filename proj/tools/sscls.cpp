#include "sscls/cli.hpp"

int main(int argc, char** argv) { return sscls::cli::run(argc, argv); }
