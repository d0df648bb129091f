#include "nodulelink/cli.hpp"

int main(int argc, char** argv) { return nodulelink::run_cli(argc, argv); }
