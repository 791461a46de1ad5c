#include "lesionbench/cli.hpp"

int main(int argc, char** argv) { return lesionbench::cli::dispatch(argc, argv); }
