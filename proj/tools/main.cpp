#include "nilrand/cli.hpp"

int main(int argc, char** argv) { return nilrand::cli::run(argc, argv); }
