#include "cli.hpp"

int main(int argc, char** argv) { return scopekit::cli::run(argc, argv); }
