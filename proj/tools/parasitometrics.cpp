#include "parasitometrics/cli.hpp"

int main(int argc, char** argv) { return parasitometrics::cli::run(argc, argv); }
