#include "qvs/cli.hpp"

int main(int argc, char** argv) { return qvs::cli::dispatch(argc, argv); }
