#include "chantseg/cli.hpp"

int main(int argc, char** argv) { return chantseg::cli::run(argc, argv); }
