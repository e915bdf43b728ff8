#include "porecat/cli.hpp"

int main(int argc, char** argv) { return porecat::cli_main(argc, argv); }
