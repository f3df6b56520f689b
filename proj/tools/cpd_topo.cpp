#include "cpdtopo/cli.hpp"

int main(int argc, char** argv) { return cpdtopo::cli_main(argc, argv); }
