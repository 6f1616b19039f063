#include "cli.hpp"

int main(int argc, char** argv) { return polyfit::cli::run(argc, argv); }
