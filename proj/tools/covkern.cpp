#include "covkern/cli.hpp"

int main(int argc, char** argv) { return covkern::cli::dispatch(argc, argv); }
