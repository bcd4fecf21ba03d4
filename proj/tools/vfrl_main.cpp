#include "vfrl/harness.hpp"

int main(int argc, char** argv) { return vfrl::run_cli(argc, argv); }
