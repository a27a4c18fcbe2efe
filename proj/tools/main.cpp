#include "gazeaug/cli.hpp"

int main(int argc, char** argv) { return gazeaug::cli::dispatch(argc, argv); }
