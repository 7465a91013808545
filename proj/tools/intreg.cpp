#include "intreg/cli.hpp"

int main(int argc, char** argv) { return intreg::cli::run(argc, argv); }
