#include "reciprosim/cli.hpp"

int main(int argc, char** argv) { return reciprosim::cli::run(argc, argv); }
